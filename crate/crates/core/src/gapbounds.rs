//! Lower bounds on the ground-state gap of the LMG Hamiltonian (μ = 0).
//!
//! The trial space is spanned by `|m_y = 0>` and the extremal Dicke state
//! that is the ground state of the `chi1 = chi2` end, `|m_z = -sign(xi lambda) J>`.
//! The two are not orthogonal, so optimization solves a 2x2 generalized
//! eigenproblem.

use nalgebra::{Cholesky, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::lmg::{self, LmgParams};
use crate::spinops::{self, DickeBasis, Spin, StateVector};

/// Safety inflation applied to `A`.
pub const A_INFLATION: f64 = 1.01;
/// Relative variance below which the trial is treated as an exact eigenstate.
pub const EXACT_VARIANCE: f64 = 1e-24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialState {
    /// Coefficient of `|m_y = 0>`.
    pub alpha1: C64,
    /// Coefficient of the extremal `|m_z>` state.
    pub alpha2: C64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrialChoice {
    Fixed(TrialState),
    Optimize,
}

#[derive(Clone, Debug)]
pub struct VariationalResult {
    pub mean: f64,
    pub variance: f64,
    pub trial: TrialState,
    pub state: StateVector,
}

/// Projection of the extremal trial component.
pub fn extremal_projection(p: &LmgParams) -> f64 {
    let s = if p.xi * p.lambda >= 0.0 { -1.0 } else { 1.0 };
    s * p.spin.value()
}

fn check_domain(p: &LmgParams) -> Result<()> {
    p.validate()?;
    if p.mu != 0.0 {
        return Err(Error::Domain("gap bounds are defined for mu = 0 only".into()));
    }
    if !p.spin.is_integer() || p.spin.twice() == 0 {
        return Err(Error::Domain(format!(
            "trial component |m_y=0> needs an even particle number >= 2, got N = {}",
            p.spin.particles()
        )));
    }
    Ok(())
}

fn components(p: &LmgParams) -> Result<(StateVector, StateVector)> {
    let u = spinops::dicke_y_state(p.spin, 0.0)?;
    let v = spinops::dicke_z_state(p.spin, extremal_projection(p))?;
    Ok((u, v))
}

impl TrialState {
    pub fn state(&self, p: &LmgParams) -> Result<StateVector> {
        check_domain(p)?;
        let (u, v) = components(p)?;
        let amps = u.amplitudes() * self.alpha1 + v.amplitudes() * self.alpha2;
        StateVector::new(DickeBasis::z(p.spin), amps)
    }
}

/// `(<H>, <(H - <H>)^2>)` for a normalized state.
pub fn moments(h: &linalg::CMatrix, psi: &StateVector) -> (f64, f64) {
    let x = psi.amplitudes();
    let hx = h * x;
    let mean = x.dotc(&hx).re;
    let var = (hx - x * C64::new(mean, 0.0)).norm_squared();
    (mean, var)
}

pub fn variational_energy(p: &LmgParams, choice: TrialChoice) -> Result<VariationalResult> {
    check_domain(p)?;
    let h = lmg::hamiltonian_matrix(p);
    let trial = match choice {
        TrialChoice::Fixed(t) => t,
        TrialChoice::Optimize => optimal_trial(p, &h)?,
    };
    let state = trial.state(p)?;
    let (mean, variance) = moments(&h, &state);
    Ok(VariationalResult {
        mean,
        variance,
        trial,
        state,
    })
}

fn optimal_trial(p: &LmgParams, h: &linalg::CMatrix) -> Result<TrialState> {
    let (u, v) = components(p)?;
    let (u, v) = (u.amplitudes(), v.amplitudes());
    let (hu, hv) = (h * u, h * v);
    let s12 = u.dotc(v);
    let overlap = Matrix2::new(C64::new(1.0, 0.0), s12, s12.conj(), C64::new(1.0, 0.0));
    let hm = Matrix2::new(u.dotc(&hu), u.dotc(&hv), v.dotc(&hu), v.dotc(&hv));
    let chol = Cholesky::new(overlap).ok_or_else(|| Error::NonFinite("trial components are parallel".into()))?;
    let l = chol.l();
    let l_inv = l
        .try_inverse()
        .ok_or_else(|| Error::NonFinite("singular trial overlap".into()))?;
    let reduced = l_inv * hm * l_inv.adjoint();
    let reduced = linalg::CMatrix::from_fn(2, 2, |i, j| reduced[(i, j)]);
    let eig = linalg::eigh(&reduced);
    let y = Vector2::new(eig.vectors[(0, 0)], eig.vectors[(1, 0)]);
    let coeffs = l_inv.adjoint() * y;
    // Fix the global phase so the dominant coefficient is real and positive.
    let lead = if coeffs[0].norm() >= coeffs[1].norm() { coeffs[0] } else { coeffs[1] };
    let phase = lead.conj() / lead.norm();
    Ok(TrialState {
        alpha1: coeffs[0] * phase,
        alpha2: coeffs[1] * phase,
    })
}

/// `mean - var / (e1 - mean)`.
pub fn temple_lower_bound(mean: f64, var: f64, e1: f64) -> Result<f64> {
    if !(e1 > mean) {
        return Err(Error::InapplicableBound(format!(
            "Temple's formula needs E1 > <H> (E1 = {e1}, <H> = {mean})"
        )));
    }
    Ok(mean - var / (e1 - mean))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterlacingResult {
    pub n: usize,
    pub e1_n: f64,
    pub e0_n_minus_2: f64,
    /// `E1(N) - E0(N-2)`.
    pub margin: f64,
    pub holds: bool,
}

fn exact_levels(p: &LmgParams, n: usize) -> Result<Vec<f64>> {
    let q = p.with_spin(Spin::from_particles(n));
    Ok(lmg::spectrum(&lmg::build_hamiltonian(&q)?)?.eigenvalues)
}

fn check_even(n: usize, min: usize) -> Result<()> {
    if n % 2 != 0 || n < min {
        return Err(Error::InvalidParameter(format!("need an even N >= {min}, got {n}")));
    }
    Ok(())
}

/// Tests `E1(N) >= E0(N-2)`, both sides at maximal `J`. The spin stored in
/// `p` is ignored.
pub fn interlacing_check(p: &LmgParams, n: usize) -> Result<InterlacingResult> {
    check_even(n, 4)?;
    let e1_n = exact_levels(p, n)?[1];
    let e0_n_minus_2 = exact_levels(p, n - 2)?[0];
    let margin = e1_n - e0_n_minus_2;
    // Absolute slack for round-off in the two diagonalizations.
    let slack = 1e-10 * e1_n.abs().max(e0_n_minus_2.abs()).max(1.0);
    Ok(InterlacingResult {
        n,
        e1_n,
        e0_n_minus_2,
        margin,
        holds: margin >= -slack,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapBoundResult {
    pub n: usize,
    /// `<H>` of the optimized trial at `N`, `N-2`, `N-4`.
    pub mean_h: [f64; 3],
    /// `<dH^2>` of the optimized trial at `N`, `N-2`, `N-4`.
    pub var_h: [f64; 3],
    /// Temple bound on `E0(N)` using the exact `E1(N)`.
    pub temple_bound: Option<f64>,
    /// Temple bound on `E0(N)` with `E1(N)` replaced by `E0(N-2)`.
    pub temple_bound_interlaced: Option<f64>,
    /// `var_N / ((<H>_{N-2} - <H>_N)(<H>_{N-4} - <H>_{N-2}))`, before inflation.
    pub a_raw: f64,
    /// `a_raw` times [`A_INFLATION`]; this is the value fed to the bound.
    pub a: f64,
    /// Lower bound on `dE(N) / (<H>_{N-2} - <H>_N)` when valid.
    pub iterated_bound: Option<f64>,
    pub exact_e0: f64,
    pub exact_gap: f64,
    /// `dE(N) / (<H>_{N-2} - <H>_N)` from the eigensolver; round-off noise
    /// when the denominator vanishes, see [`GapBoundResult::bound_holds`].
    pub exact_ratio: f64,
    pub valid: bool,
}

impl GapBoundResult {
    /// `<H>_{N-2} - <H>_N`.
    pub fn d1(&self) -> f64 {
        self.mean_h[1] - self.mean_h[0]
    }

    /// Checks `dE(N) >= bound (<H>_{N-2} - <H>_N)`, the bound multiplied out
    /// so that it stays meaningful when the difference vanishes (exact trial
    /// at `chi1 = 0`). `None` when no bound was produced.
    pub fn bound_holds(&self, rtol: f64) -> Option<bool> {
        let y = self.iterated_bound?;
        let scale = self.exact_gap.abs().max(self.d1().abs()).max(f64::MIN_POSITIVE);
        Some(y * self.d1() <= self.exact_gap + rtol * scale)
    }
}

pub fn iterated_gap_bound(p: &LmgParams, n: usize) -> Result<GapBoundResult> {
    check_even(n, 6)?;
    let mut mean_h = [0.0; 3];
    let mut var_h = [0.0; 3];
    for (k, nk) in [n, n - 2, n - 4].into_iter().enumerate() {
        let v = variational_energy(&p.with_spin(Spin::from_particles(nk)), TrialChoice::Optimize)?;
        mean_h[k] = v.mean;
        var_h[k] = v.variance;
    }
    let levels = exact_levels(p, n)?;
    let exact_e0 = levels[0];
    let exact_gap = levels[1] - levels[0];
    let e0_n_minus_2 = exact_levels(p, n - 2)?[0];

    let d1 = mean_h[1] - mean_h[0];
    let d2 = mean_h[2] - mean_h[1];
    let exact_ratio = exact_gap / d1;
    let scale = mean_h.iter().fold(p.xi.abs() * (p.chi1 * p.chi1 + p.chi2 * p.chi2), |a, m| a.max(m.abs()));
    let (a_raw, a, iterated_bound, valid) = if var_h[0] <= EXACT_VARIANCE * scale * scale {
        (0.0, 0.0, Some(1.0), true)
    } else if d1 > 0.0 && d2 > 0.0 {
        let a_raw = var_h[0] / (d1 * d2);
        let a = A_INFLATION * a_raw;
        if 4.0 * a < 1.0 {
            (a_raw, a, Some(0.5 * (1.0 + (1.0 - 4.0 * a).sqrt())), true)
        } else {
            (a_raw, a, None, false)
        }
    } else {
        (f64::INFINITY, f64::INFINITY, None, false)
    };

    Ok(GapBoundResult {
        n,
        mean_h,
        var_h,
        temple_bound: temple_lower_bound(mean_h[0], var_h[0], levels[1]).ok(),
        temple_bound_interlaced: temple_lower_bound(mean_h[0], var_h[0], e0_n_minus_2).ok(),
        a_raw,
        a,
        iterated_bound,
        exact_e0,
        exact_gap,
        exact_ratio,
        valid,
    })
}

/// Path `chi1 / chi2` in `[0, 1]` at fixed `xi`, `lambda`, `chi2`, `mu = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaFamily {
    pub xi: f64,
    pub lambda: f64,
    pub chi2: f64,
    /// Number of evenly spaced ratio points including both ends.
    #[serde(default = "default_ratio_points")]
    pub ratio_points: usize,
}

fn default_ratio_points() -> usize {
    101
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaRow {
    pub n: usize,
    pub min_gap: f64,
    pub argmin_ratio: f64,
    /// `min_gap / (|lambda xi| chi2^2)`.
    pub beta: f64,
    /// `max (<H>_{N-2} - <H>_N) / (|lambda xi| max chi1 chi2)` over the path.
    pub variational_beta: f64,
}

impl BetaFamily {
    pub fn params(&self, ratio: f64, n: usize) -> LmgParams {
        LmgParams {
            xi: self.xi,
            lambda: self.lambda,
            mu: 0.0,
            chi1: ratio * self.chi2,
            chi2: self.chi2,
            spin: Spin::from_particles(n),
        }
    }

    pub fn ratios(&self) -> Vec<f64> {
        let k = self.ratio_points.max(2);
        (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
    }
}

pub fn beta_estimate(family: &BetaFamily, ns: &[usize]) -> Result<Vec<BetaRow>> {
    ns.iter().map(|&n| beta_row(family, n)).collect()
}

fn beta_row(family: &BetaFamily, n: usize) -> Result<BetaRow> {
    check_even(n, 4)?;
    let scale = (family.lambda * family.xi).abs();
    let mut best = (f64::INFINITY, 0.0);
    let mut d1_max = f64::NEG_INFINITY;
    for r in family.ratios() {
        let p = family.params(r, n);
        let levels = exact_levels(&p, n)?;
        let gap = levels[1] - levels[0];
        if gap < best.0 {
            best = (gap, r);
        }
        let hn = variational_energy(&p, TrialChoice::Optimize)?.mean;
        let hn2 = variational_energy(&p.with_spin(Spin::from_particles(n - 2)), TrialChoice::Optimize)?.mean;
        d1_max = d1_max.max(hn2 - hn);
    }
    let chi2sq = family.chi2 * family.chi2;
    Ok(BetaRow {
        n,
        min_gap: best.0,
        argmin_ratio: best.1,
        beta: best.0 / (scale * chi2sq),
        variational_beta: d1_max / (scale * chi2sq),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, chi1: f64) -> LmgParams {
        LmgParams {
            xi: 1.0,
            lambda: 1.0,
            mu: 0.0,
            chi1,
            chi2: 1.0,
            spin: Spin::from_particles(n),
        }
    }

    #[test]
    fn chi1_zero_trial_is_exact() {
        let v = variational_energy(&params(6, 0.0), TrialChoice::Optimize).unwrap();
        assert!(v.mean.abs() < 1e-12);
        assert!(v.variance.abs() < 1e-12);
        assert!(v.trial.alpha1.norm() > 0.999);
    }

    #[test]
    fn optimized_energy_is_an_upper_bound() {
        let p = params(4, 0.5);
        let v = variational_energy(&p, TrialChoice::Optimize).unwrap();
        let e0 = lmg::spectrum(&lmg::build_hamiltonian(&p).unwrap()).unwrap().eigenvalues[0];
        assert!(v.mean >= e0 - 1e-12);
        for t in [
            TrialState { alpha1: C64::new(1.0, 0.0), alpha2: C64::new(0.0, 0.0) },
            TrialState { alpha1: C64::new(0.0, 0.0), alpha2: C64::new(1.0, 0.0) },
        ] {
            let pure = variational_energy(&p, TrialChoice::Fixed(t)).unwrap();
            assert!(v.mean <= pure.mean + 1e-12);
        }
    }

    #[test]
    fn diagonal_end_prefers_extremal_component() {
        let p = LmgParams { lambda: 2.0, ..params(6, 1.0) };
        let v = variational_energy(&p, TrialChoice::Optimize).unwrap();
        let (u, e) = components(&p).unwrap();
        assert!(e.fidelity(&v.state).unwrap() > u.fidelity(&v.state).unwrap());
        assert!(e.fidelity(&v.state).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn odd_particle_number_rejected() {
        assert!(variational_energy(&params(5, 0.3), TrialChoice::Optimize).is_err());
        let mu = LmgParams { mu: 1.0, ..params(4, 0.3) };
        assert!(matches!(variational_energy(&mu, TrialChoice::Optimize), Err(Error::Domain(_))));
    }

    #[test]
    fn temple_cases() {
        assert_eq!(temple_lower_bound(-1.5, 0.0, 2.0).unwrap(), -1.5);
        assert!((temple_lower_bound(0.0, 1.0, 2.0).unwrap() + 0.5).abs() < 1e-15);
        assert!(matches!(temple_lower_bound(1.0, 0.1, 1.0), Err(Error::InapplicableBound(_))));
    }

    #[test]
    fn temple_sandwich_mid_path() {
        let p = params(4, 0.5);
        let v = variational_energy(&p, TrialChoice::Optimize).unwrap();
        let levels = exact_levels(&p, 4).unwrap();
        let lower = temple_lower_bound(v.mean, v.variance, levels[1]).unwrap();
        assert!(lower <= levels[0] + 1e-12 && levels[0] <= v.mean + 1e-12);
        // For lambda = 1 the surrogate E0(N-2) sits below <H>; at lambda = 3 it does not.
        assert!(temple_lower_bound(v.mean, v.variance, exact_levels(&p, 2).unwrap()[0]).is_err());
        let q = LmgParams { lambda: 3.0, ..p };
        let v = variational_energy(&q, TrialChoice::Optimize).unwrap();
        let e0 = exact_levels(&q, 4).unwrap()[0];
        let lower2 = temple_lower_bound(v.mean, v.variance, exact_levels(&q, 2).unwrap()[0]).unwrap();
        assert!(lower2 <= e0 + 1e-12 && e0 <= v.mean + 1e-12);
    }

    #[test]
    fn interlacing_diagonal_closed_form() {
        let p = LmgParams { lambda: 3.0, ..params(8, 1.0) };
        let r = interlacing_check(&p, 8).unwrap();
        let e1 = {
            let mut e = lmg::diagonal_limit_energies(1.0, 3.0, 1.0, Spin::from_particles(8));
            e.sort_by(f64::total_cmp);
            e[1]
        };
        let e0 = lmg::diagonal_limit_energies(1.0, 3.0, 1.0, Spin::from_particles(6))
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!((r.margin - (e1 - e0)).abs() < 1e-10);
        assert!(r.holds);
    }

    #[test]
    fn iterated_bound_exact_trial() {
        let r = iterated_gap_bound(&params(8, 0.0), 8).unwrap();
        assert!(r.valid);
        assert_eq!(r.a, 0.0);
        assert_eq!(r.iterated_bound, Some(1.0));
        // Every E0(N) is zero here, so the ratio itself is 0/0.
        assert!(r.d1().abs() < 1e-12);
        assert_eq!(r.bound_holds(1e-9), Some(true));
    }

    #[test]
    fn iterated_bound_requires_six() {
        assert!(iterated_gap_bound(&params(4, 0.2), 4).is_err());
    }

    #[test]
    fn beta_scales_with_chi2() {
        let f = BetaFamily { xi: 1.0, lambda: 1.0, chi2: 1.0, ratio_points: 21 };
        let g = BetaFamily { chi2: 2.0, ..f.clone() };
        let a = beta_estimate(&f, &[6]).unwrap()[0];
        let b = beta_estimate(&g, &[6]).unwrap()[0];
        assert!((b.min_gap - 4.0 * a.min_gap).abs() < 1e-10 * b.min_gap);
        assert!((a.beta - b.beta).abs() < 1e-10);
    }
}
