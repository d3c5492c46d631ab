//! The generalized Lipkin-Meshkov-Glick Hamiltonian
//!
//! ```text
//! H = xi * [ lambda chi1 chi2 Jz + chi1^2 Jx^2 + chi2^2 Jy^2 - 2 mu chi2^2 Jy ]
//! ```
//!
//! The linear `Jy` term carries a minus sign. With that sign, and `lambda = 1`,
//! the Hamiltonian factorizes exactly as
//! `H / xi = A^dagger A - chi2^2 mu^2` with
//! `A = chi1 Jx - i chi2 Jy + i chi2 mu`, and the `chi1 -> 0` ground state of
//! `Jy^2 - 2 m Jy` is `|m_y = m>`. Flipping the sign of `mu` converts to the
//! opposite convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64, I};
use crate::spinops::{self, DickeBasis, Operator, Spin, StateVector};

/// Parameters of the generalized LMG Hamiltonian.
///
/// `chi1` may be negative: the tanh pulse pair crosses `Omega1 = Omega2`,
/// after which `chi1 = Omega1 - Omega2` changes sign.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmgParams {
    pub xi: f64,
    pub lambda: f64,
    #[serde(default)]
    pub mu: f64,
    pub chi1: f64,
    pub chi2: f64,
    /// Total spin `J`.
    #[serde(rename = "j")]
    pub spin: Spin,
}

impl LmgParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("xi", self.xi),
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("chi1", self.chi1),
            ("chi2", self.chi2),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        if self.chi2 < 0.0 {
            return Err(Error::InvalidParameter("chi2 must be non-negative".into()));
        }
        if self.chi1 == 0.0 && self.chi2 == 0.0 {
            return Err(Error::InvalidParameter("chi1 and chi2 are both zero".into()));
        }
        Ok(())
    }

    pub fn with_spin(mut self, spin: Spin) -> Self {
        self.spin = spin;
        self
    }

    pub fn particles(&self) -> usize {
        self.spin.particles()
    }
}

/// Dense matrix of `H` in the z-basis without parameter validation.
pub(crate) fn hamiltonian_matrix(p: &LmgParams) -> CMatrix {
    let ops = spinops::build_spin_ops(p.spin);
    let (jx, jy, jz) = (ops.jx.matrix(), ops.jy.matrix(), ops.jz.matrix());
    let h = jz * c(p.lambda * p.chi1 * p.chi2)
        + jx * jx * c(p.chi1 * p.chi1)
        + jy * jy * c(p.chi2 * p.chi2)
        - jy * c(2.0 * p.mu * p.chi2 * p.chi2);
    h * c(p.xi)
}

pub fn build_hamiltonian(p: &LmgParams) -> Result<Operator> {
    p.validate()?;
    Operator::new(DickeBasis::z(p.spin), hamiltonian_matrix(p))
}

/// Closed-form `chi1 = chi2 = chi`, `mu = 0` spectrum, in basis order:
/// `xi chi^2 [lambda m - m^2 + J(J+1)]`.
pub fn diagonal_limit_energies(xi: f64, lambda: f64, chi: f64, spin: Spin) -> Vec<f64> {
    let j = spin.value();
    spin.projections()
        .map(|m| xi * chi * chi * (lambda * m - m * m + j * (j + 1.0)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub basis: DickeBasis,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
    /// `E1 - E0`; zero for a one-dimensional space.
    pub gap: f64,
    /// Consecutive levels closer than `1e-8 (Emax - Emin)` share a group.
    pub degeneracy_groups: Vec<Vec<usize>>,
}

impl SpectrumResult {
    pub fn eigenstate(&self, k: usize) -> StateVector {
        StateVector::new(self.basis, self.eigenvectors.column(k).into_owned()).expect("normalized eigenvector")
    }

    pub fn ground_state(&self) -> StateVector {
        self.eigenstate(0)
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Multiplicity of each degeneracy group, in ascending energy order.
    pub fn multiplicities(&self) -> Vec<usize> {
        self.degeneracy_groups.iter().map(Vec::len).collect()
    }
}

pub const DEGENERACY_RTOL: f64 = 1e-8;

pub fn spectrum(h: &Operator) -> Result<SpectrumResult> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian {
            defect: linalg::hermiticity_defect(h.matrix()),
        });
    }
    let basis = match h.basis() {
        spinops::Basis::Dicke(b) => b,
        other => return Err(Error::BasisMismatch(format!("spectrum expects a Dicke basis, got {other:?}"))),
    };
    let eig = linalg::eigh(h.matrix());
    let values = eig.values;
    let range = values.last().unwrap() - values[0];
    let tol = DEGENERACY_RTOL * range;
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..values.len() {
        if values[k] - values[k - 1] <= tol {
            groups.last_mut().unwrap().push(k);
        } else {
            groups.push(vec![k]);
        }
    }
    let gap = if values.len() > 1 { values[1] - values[0] } else { 0.0 };
    Ok(SpectrumResult {
        basis,
        eigenvalues: values,
        eigenvectors: eig.vectors,
        gap,
        degeneracy_groups: groups,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransferCase {
    /// `xi < 0`, `mu = 0`: ends in the y-GHZ superposition.
    I,
    /// `xi > 0`, `mu = 0`, odd `N`: ends in the `m_y = +-1/2` superposition.
    II,
    /// `xi > 0`, `mu = 0`, even `N`: ends in `|m_y = 0>`.
    III,
    /// `xi > 0`, `mu = m != 0`: ends in `|m_y = m>`.
    IV,
}

/// Separable initial state `|m_z = +-J>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremal {
    Up,
    Down,
}

impl Extremal {
    pub fn projection(self, spin: Spin) -> f64 {
        match self {
            Extremal::Up => spin.value(),
            Extremal::Down => -spin.value(),
        }
    }

    pub fn state(self, spin: Spin) -> StateVector {
        spinops::dicke_z_state(spin, self.projection(spin)).expect("extremal projection")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseLabel {
    pub case: TransferCase,
    pub spin: Spin,
    pub initial: Extremal,
    /// Target projection for case IV.
    pub m: Option<f64>,
    /// Set when `|lambda|` is below the adiabaticity threshold for the case.
    pub warning: Option<String>,
}

impl CaseLabel {
    pub fn initial_state(&self) -> StateVector {
        self.initial.state(self.spin)
    }
}

pub fn classify_case(p: &LmgParams) -> Result<CaseLabel> {
    let spin = p.spin;
    let n = spin.particles();
    if p.xi == 0.0 || !p.xi.is_finite() {
        return Err(Error::UnsupportedCase("xi must be non-zero".into()));
    }
    if p.lambda == 0.0 {
        return Err(Error::UnsupportedCase(
            "lambda = 0 leaves the initial state degenerate between m_z = +J and -J".into(),
        ));
    }
    // In the chi1 = chi2 limit the diagonal energy xi (lambda m - m^2) is
    // minimized at m = sign(lambda) J for xi < 0 (if |lambda| >= N) and at
    // m = -sign(lambda) J for xi > 0.
    let lambda_up = p.lambda > 0.0;
    let initial = if (p.xi < 0.0) == lambda_up { Extremal::Up } else { Extremal::Down };
    let (case, threshold) = if p.mu == 0.0 {
        if p.xi < 0.0 {
            (TransferCase::I, n as f64)
        } else if n % 2 == 1 {
            (TransferCase::II, 1.0)
        } else {
            (TransferCase::III, 1.0)
        }
    } else {
        if p.xi < 0.0 {
            return Err(Error::UnsupportedCase("xi < 0 with mu != 0".into()));
        }
        if !spin.allows(p.mu) {
            return Err(Error::UnsupportedCase(format!(
                "mu = {} is not a projection of J = {spin}",
                p.mu
            )));
        }
        (TransferCase::IV, 1.0)
    };
    let warning = (p.lambda.abs() < threshold).then(|| {
        format!(
            "|lambda| = {} is below {threshold} for case {case:?}; the transfer may not be adiabatic or the initial state not separable",
            p.lambda.abs()
        )
    });
    Ok(CaseLabel {
        case,
        spin,
        initial,
        m: (case == TransferCase::IV).then_some(p.mu),
        warning,
    })
}

/// `(|m_y=+J> + phase |m_y=-J>)/sqrt2`.
pub fn ghz_y_state(spin: Spin, phase: C64) -> Result<StateVector> {
    let j = spin.value();
    let up = spinops::dicke_y_state(spin, j)?;
    let down = spinops::dicke_y_state(spin, -j)?;
    StateVector::new(DickeBasis::z(spin), up.amplitudes() + down.amplitudes() * phase)
}

/// Relative phase `s` such that `(|m_y=+1/2> + s |m_y=-1/2>)/sqrt2` has the
/// parity of `initial`.
pub fn half_pair_phase(spin: Spin, initial: Extremal) -> Result<C64> {
    let plus = spinops::dicke_y_state(spin, 0.5)?;
    let minus = spinops::dicke_y_state(spin, -0.5)?;
    let p = spinops::parity(spin);
    let flipped = StateVector::from_raw(plus.basis(), p.apply(&plus)?);
    // P|+1/2> = c |-1/2>
    let cphase = minus.overlap(&flipped)?;
    let p0 = spinops::parity_of(&initial.state(spin), 0.0).expect("extremal states have definite parity");
    Ok(cphase * p0)
}

pub fn target_state(label: &CaseLabel) -> Result<StateVector> {
    let spin = label.spin;
    let n = spin.particles();
    match label.case {
        TransferCase::I => ghz_y_state(spin, C64::from_polar(1.0, std::f64::consts::PI * spin.value())),
        TransferCase::II => {
            if n % 2 == 0 {
                return Err(Error::InvalidParameter("case II needs an odd number of spins".into()));
            }
            let s = half_pair_phase(spin, label.initial)?;
            let plus = spinops::dicke_y_state(spin, 0.5)?;
            let minus = spinops::dicke_y_state(spin, -0.5)?;
            StateVector::new(DickeBasis::z(spin), plus.amplitudes() + minus.amplitudes() * s)
        }
        TransferCase::III => {
            if n % 2 == 1 {
                return Err(Error::InvalidParameter("case III needs an even number of spins".into()));
            }
            spinops::dicke_y_state(spin, 0.0)
        }
        TransferCase::IV => {
            let m = label
                .m
                .ok_or_else(|| Error::InvalidParameter("case IV needs a target projection m".into()))?;
            spinops::dicke_y_state(spin, m)
        }
    }
}

/// `gamma` with `tanh(gamma) = chi1 / chi2`.
pub fn susy_gamma(chi1: f64, chi2: f64) -> Result<f64> {
    if !(chi2 > 0.0) || chi1.abs() >= chi2 {
        return Err(Error::Domain(format!(
            "tanh(gamma) = chi1/chi2 needs |chi1| < chi2 (chi1 = {chi1}, chi2 = {chi2})"
        )));
    }
    Ok((chi1 / chi2).atanh())
}

/// Linear weight `mu` at which `exp(-gamma Jz)|m_y = m>` is annihilated by
/// `A = chi1 Jx - i chi2 Jy + i chi2 mu`: `mu = m sqrt(1 - (chi1/chi2)^2)`.
///
/// Only for `m = 0` or `chi1 = 0` does this coincide with `mu = m`.
pub fn kernel_mu(m: f64, chi1: f64, chi2: f64) -> Result<f64> {
    let g = susy_gamma(chi1, chi2)?;
    Ok(m / g.cosh())
}

/// `N exp(-gamma Jz) |m_y = m>` with `tanh(gamma) = chi1/chi2`, applied as
/// a diagonal scaling in the z-basis.
///
/// This is the zero mode of the factorized Hamiltonian whenever
/// `p.mu == kernel_mu(m, chi1, chi2)`; [`susy_residual`] measures how far a
/// given state is from it.
pub fn susy_ground_state(p: &LmgParams, m: f64) -> Result<StateVector> {
    p.validate()?;
    if (p.lambda - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("SUSY factorization needs lambda = 1, got {}", p.lambda)));
    }
    if !(p.xi > 0.0) {
        return Err(Error::Domain("SUSY ground state needs xi > 0".into()));
    }
    let gamma = susy_gamma(p.chi1, p.chi2)?;
    let y = spinops::dicke_y_state(p.spin, m)?;
    let scaled = CVector::from_iterator(
        p.spin.dim(),
        y.amplitudes()
            .iter()
            .zip(p.spin.projections())
            .map(|(a, mz)| a * c((-gamma * mz).exp())),
    );
    StateVector::new(DickeBasis::z(p.spin), scaled)
}

/// `||(chi1 Jx - i chi2 Jy + i chi2 mu)|psi>||`.
pub fn susy_residual(p: &LmgParams, state: &StateVector) -> Result<f64> {
    let ops = spinops::build_spin_ops(p.spin);
    let a = ops.jx.matrix() * c(p.chi1) - ops.jy.matrix() * (I * p.chi2)
        + linalg::identity(p.spin.dim()) * (I * (p.chi2 * p.mu));
    let a = Operator::new(DickeBasis::z(p.spin), a)?;
    Ok(a.apply(state)?.norm())
}
