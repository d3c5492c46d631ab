//! The lambda = 1 factorization `H / xi = A^dag A - chi2^2 mu^2` with
//! `A = chi1 Jx - i chi2 Jy + i chi2 mu`.

use lmg_core::linalg::{self, c, I};
use lmg_core::lmg::{self, LmgParams};
use lmg_core::spinops::{self, Spin};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(rng: &mut ChaCha8Rng) -> (LmgParams, f64) {
    let n = rng.random_range(4..=12);
    let spin = Spin::from_particles(n);
    let chi2 = rng.random_range(0.3..2.0);
    let chi1 = chi2 * rng.random_range(0.0..0.9);
    let projections: Vec<f64> = spin.projections().collect();
    let m = projections[rng.random_range(0..projections.len())];
    let p = LmgParams {
        xi: rng.random_range(0.2..2.0),
        lambda: 1.0,
        mu: 0.0,
        chi1,
        chi2,
        spin,
    };
    (p, m)
}

#[test]
fn factorization_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let (mut p, m) = draw(&mut rng);
        p.mu = m;
        let ops = spinops::build_spin_ops(p.spin);
        let a = ops.jx.matrix() * c(p.chi1) - ops.jy.matrix() * (I * p.chi2)
            + linalg::identity(p.spin.dim()) * (I * (p.chi2 * p.mu));
        let rhs = (a.adjoint() * &a - linalg::identity(p.spin.dim()) * c(p.chi2 * p.chi2 * p.mu * p.mu)) * c(p.xi);
        let h = lmg::build_hamiltonian(&p).unwrap();
        assert!(linalg::max_abs(&(h.matrix() - rhs)) < 1e-11 * linalg::max_abs(h.matrix()));
    }
}

#[test]
fn kernel_state_is_exact_at_kernel_mu() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let (mut p, m) = draw(&mut rng);
        p.mu = lmg::kernel_mu(m, p.chi1, p.chi2).unwrap();
        let psi = lmg::susy_ground_state(&p, m).unwrap();
        let j = p.spin.value();
        assert!(lmg::susy_residual(&p, &psi).unwrap() <= 1e-10 * (p.chi1 + p.chi2) * j);
        let spec = lmg::spectrum(&lmg::build_hamiltonian(&p).unwrap()).unwrap();
        let e0 = -p.xi * p.chi2 * p.chi2 * p.mu * p.mu;
        assert!((spec.ground_energy() - e0).abs() <= 1e-9 * e0.abs().max(p.xi * p.chi2 * p.chi2));
        // The ground level can be degenerate for |m| > 0; test the projection.
        let ground: Vec<usize> = (0..p.spin.dim())
            .filter(|&k| (spec.eigenvalues[k] - spec.eigenvalues[0]).abs() < 1e-9 * p.xi * p.chi2 * p.chi2)
            .collect();
        let weight: f64 = ground.iter().map(|&k| spec.eigenstate(k).fidelity(&psi).unwrap()).sum();
        assert!(weight >= 1.0 - 1e-10, "weight {weight}");
    }
}

#[test]
fn mu_zero_kernel_matches_eigensolver_and_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let (p, _) = draw(&mut rng);
        let m = if p.spin.is_integer() { 0.0 } else { 0.5 };
        if m != 0.0 {
            continue;
        }
        let psi = lmg::susy_ground_state(&p, 0.0).unwrap();
        let spec = lmg::spectrum(&lmg::build_hamiltonian(&p).unwrap()).unwrap();
        assert!(spec.ground_state().fidelity(&psi).unwrap() >= 1.0 - 1e-10);
        let mult = spec.multiplicities();
        assert_eq!(mult.iter().filter(|&&k| k == 1).count(), 1);
    }
}

#[test]
fn fixed_mu_equal_m_is_not_a_kernel() {
    // With mu = m != 0 and chi1 != 0 the separated state is no zero mode:
    // the ground energy lies above -xi chi2^2 m^2.
    let p = LmgParams {
        xi: 1.0,
        lambda: 1.0,
        mu: 1.0,
        chi1: 0.3,
        chi2: 1.0,
        spin: Spin::from_particles(4),
    };
    let psi = lmg::susy_ground_state(&p, 1.0).unwrap();
    assert!(lmg::susy_residual(&p, &psi).unwrap() > 1e-2);
    let e0 = lmg::spectrum(&lmg::build_hamiltonian(&p).unwrap()).unwrap().ground_energy();
    assert!((e0 + 0.999089).abs() < 1e-6, "{e0}");
}

#[test]
fn chi1_zero_ground_state_is_y_dicke_state() {
    for (n, m) in [(4usize, 1.0), (5, 1.5), (6, -2.0)] {
        let p = LmgParams {
            xi: 0.7,
            lambda: 1.0,
            mu: m,
            chi1: 0.0,
            chi2: 1.1,
            spin: Spin::from_particles(n),
        };
        let psi = lmg::susy_ground_state(&p, m).unwrap();
        let y = spinops::dicke_y_state(p.spin, m).unwrap();
        assert!((psi.fidelity(&y).unwrap() - 1.0).abs() < 1e-14);
        let e0 = lmg::spectrum(&lmg::build_hamiltonian(&p).unwrap()).unwrap().ground_energy();
        assert!((e0 + 0.7 * 1.21 * m * m).abs() < 1e-12);
    }
}
