//! Collective angular-momentum operators on the symmetric `J = N/2` sector.
//!
//! Basis vectors are ordered by ascending projection, `m = -J, ..., +J`, so
//! index `k` carries `m = k - J`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iontrap::ProductBasis;
use crate::linalg::{self, c, CMatrix, CVector, C64, I};

/// Total spin, stored as the integer `2J`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub fn from_twice(twice: u32) -> Self {
        Spin { twice }
    }

    /// Maximal spin of `n` spin-1/2 particles.
    pub fn from_particles(n: usize) -> Self {
        Spin { twice: n as u32 }
    }

    pub fn new(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !twice.is_finite() || twice < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "total spin {j} is not a non-negative half-integer"
            )));
        }
        Ok(Spin {
            twice: twice.round() as u32,
        })
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    /// Number of spin-1/2 particles `N = 2J`.
    pub fn particles(self) -> usize {
        self.twice as usize
    }

    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// Projections in basis order.
    pub fn projections(self) -> impl Iterator<Item = f64> {
        let j = self.value();
        (0..self.dim()).map(move |k| k as f64 - j)
    }

    /// Basis index of projection `m`.
    pub fn index_of(self, m: f64) -> Result<usize> {
        let k = m + self.value();
        if !k.is_finite() || (k - k.round()).abs() > 1e-9 || k.round() < 0.0 || k.round() as usize >= self.dim() {
            return Err(Error::InvalidParameter(format!(
                "m = {m} is not an allowed projection for J = {}",
                self.value()
            )));
        }
        Ok(k.round() as usize)
    }

    /// Whether `m` is one of `-J, -J+1, ..., J`.
    pub fn allows(self, m: f64) -> bool {
        self.index_of(m).is_ok()
    }
}

impl TryFrom<f64> for Spin {
    type Error = Error;
    fn try_from(j: f64) -> Result<Self> {
        Spin::new(j)
    }
}

impl From<Spin> for f64 {
    fn from(s: Spin) -> f64 {
        s.value()
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Axis whose component is diagonal in a Dicke basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Z,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DickeBasis {
    pub spin: Spin,
    pub axis: Axis,
}

impl DickeBasis {
    pub fn z(spin: Spin) -> Self {
        DickeBasis { spin, axis: Axis::Z }
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }
}

/// Tag carried by every operator and state so that mismatches are caught.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Dicke(DickeBasis),
    Product(ProductBasis),
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Dicke(b) => b.dim(),
            Basis::Product(p) => p.dim(),
        }
    }
}

impl From<DickeBasis> for Basis {
    fn from(b: DickeBasis) -> Self {
        Basis::Dicke(b)
    }
}

/// Dense complex square matrix over a tagged basis.
#[derive(Clone, Debug)]
pub struct Operator {
    basis: Basis,
    matrix: CMatrix,
    hermitian: bool,
}

impl Operator {
    pub fn new(basis: impl Into<Basis>, matrix: CMatrix) -> Result<Self> {
        let basis = basis.into();
        if !matrix.is_square() || matrix.nrows() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                actual: matrix.nrows(),
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("operator entries".into()));
        }
        let hermitian = linalg::is_hermitian(&matrix);
        Ok(Operator {
            basis,
            matrix,
            hermitian,
        })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `A |psi>`, not normalized.
    pub fn apply(&self, state: &StateVector) -> Result<CVector> {
        check_basis(self.basis, state.basis)?;
        Ok(&self.matrix * &state.amplitudes)
    }
}

/// Normalized amplitude vector over a tagged basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    basis: Basis,
    amplitudes: CVector,
}

impl StateVector {
    /// Normalizes `amplitudes`; a zero vector is rejected.
    pub fn new(basis: impl Into<Basis>, amplitudes: CVector) -> Result<Self> {
        let basis = basis.into();
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                actual: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite("state amplitudes".into()));
        }
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        Ok(StateVector {
            basis,
            amplitudes: amplitudes / c(norm),
        })
    }

    /// Basis vector `k`.
    pub fn basis_state(basis: impl Into<Basis>, k: usize) -> Result<Self> {
        let basis = basis.into();
        if k >= basis.dim() {
            return Err(Error::InvalidParameter(format!(
                "basis index {k} out of range for dimension {}",
                basis.dim()
            )));
        }
        let mut v = CVector::zeros(basis.dim());
        v[k] = c(1.0);
        Ok(StateVector { basis, amplitudes: v })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> Result<C64> {
        check_basis(self.basis, other.basis)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    /// Wraps an already evolved vector without renormalizing it.
    pub(crate) fn from_raw(basis: Basis, amplitudes: CVector) -> Self {
        StateVector { basis, amplitudes }
    }
}

pub(crate) fn check_basis(a: Basis, b: Basis) -> Result<()> {
    if a != b {
        return Err(Error::BasisMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

/// `Jx`, `Jy`, `Jz` in the z-basis.
#[derive(Clone, Debug)]
pub struct SpinOps {
    pub spin: Spin,
    pub jx: Operator,
    pub jy: Operator,
    pub jz: Operator,
}

/// Raising operator `J+` in the z-basis: `<m+1|J+|m> = sqrt(J(J+1) - m(m+1))`.
pub fn raising(spin: Spin) -> CMatrix {
    let j = spin.value();
    let d = spin.dim();
    let mut jp = CMatrix::zeros(d, d);
    for (k, m) in spin.projections().enumerate().take(d - 1) {
        jp[(k + 1, k)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt());
    }
    jp
}

pub fn build_spin_ops(spin: Spin) -> SpinOps {
    let basis = DickeBasis::z(spin);
    let jp = raising(spin);
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * c(0.5);
    let jy = (&jp - &jm) * (-0.5 * I);
    let jz = CMatrix::from_diagonal(&CVector::from_iterator(spin.dim(), spin.projections().map(c)));
    // Entries are finite and square by construction.
    let op = |m: CMatrix| Operator::new(basis, m).expect("spin operator construction");
    SpinOps {
        spin,
        jx: op(jx),
        jy: op(jy),
        jz: op(jz),
    }
}

/// Unitary whose column `k` is `|m_y = k - J>` written in the z-basis.
///
/// Phase convention: in each column the component of largest modulus is real
/// and positive; components within `1e-10` of the maximum count as ties and
/// the lowest z-index among them is used.
pub fn y_eigenbasis(spin: Spin) -> Operator {
    let ops = build_spin_ops(spin);
    let eig = linalg::eigh(ops.jy.matrix());
    let mut u = eig.vectors;
    for mut col in u.column_iter_mut() {
        let max = col.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
        let pivot = col
            .iter()
            .position(|z| z.norm() >= max - 1e-10)
            .expect("non-empty column");
        let phase = col[pivot].conj() / c(col[pivot].norm());
        col *= phase;
    }
    Operator::new(DickeBasis::z(spin), u).expect("finite eigenvectors")
}

/// `|m_z = m>`.
pub fn dicke_z_state(spin: Spin, m: f64) -> Result<StateVector> {
    StateVector::basis_state(DickeBasis::z(spin), spin.index_of(m)?)
}

/// `|m_y = m>` in the z-basis, phase fixed by [`y_eigenbasis`].
pub fn dicke_y_state(spin: Spin, m: f64) -> Result<StateVector> {
    let k = spin.index_of(m)?;
    let u = y_eigenbasis(spin);
    StateVector::new(DickeBasis::z(spin), u.matrix().column(k).into_owned())
}

/// `<psi|A|psi>`.
pub fn expectation(state: &StateVector, op: &Operator) -> Result<C64> {
    let applied = op.apply(state)?;
    let value = state.amplitudes.dotc(&applied);
    Ok(if op.is_hermitian() { c(value.re) } else { value })
}

/// Spin-flip parity `exp(i pi (Jz + J))`, diagonal with entries `(-1)^k`.
pub fn parity(spin: Spin) -> Operator {
    let d = spin.dim();
    let diag = CVector::from_iterator(d, (0..d).map(|k| c(if k % 2 == 0 { 1.0 } else { -1.0 })));
    Operator::new(DickeBasis::z(spin), CMatrix::from_diagonal(&diag)).expect("parity operator")
}

/// Parity eigenvalue (`+1` or `-1`) of `state`, if it has a definite one.
pub fn parity_of(state: &StateVector, tol: f64) -> Option<f64> {
    let (mut even, mut odd) = (0.0, 0.0);
    for (k, z) in state.amplitudes.iter().enumerate() {
        if k % 2 == 0 {
            even += z.norm_sqr();
        } else {
            odd += z.norm_sqr();
        }
    }
    if odd <= tol {
        Some(1.0)
    } else if even <= tol {
        Some(-1.0)
    } else {
        None
    }
}

/// Probability in the sector of parity `sign`.
pub fn parity_weight(state: &StateVector, sign: f64) -> f64 {
    state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(k, _)| (if k % 2 == 0 { 1.0 } else { -1.0 }) == sign)
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let ops = build_spin_ops(Spin::new(0.5).unwrap());
        let h = c(0.5);
        let z = c(0.0);
        assert!(close(ops.jx.matrix(), &CMatrix::from_row_slice(2, 2, &[z, h, h, z]), 1e-15));
        // Rows and columns run m = -1/2, +1/2.
        assert!(close(
            ops.jy.matrix(),
            &CMatrix::from_row_slice(2, 2, &[z, I * 0.5, -I * 0.5, z]),
            1e-15
        ));
        assert!(close(ops.jz.matrix(), &CMatrix::from_row_slice(2, 2, &[-h, z, z, h]), 1e-15));
        assert!(ops.jx.is_hermitian() && ops.jy.is_hermitian() && ops.jz.is_hermitian());
    }

    #[test]
    fn rejects_non_half_integer_spin() {
        assert!(Spin::new(0.3).is_err());
        assert!(Spin::new(-1.0).is_err());
        assert_eq!(Spin::new(2.5).unwrap().dim(), 6);
    }

    #[test]
    fn y_state_spin_half() {
        let s = Spin::new(0.5).unwrap();
        let up = dicke_y_state(s, 0.5).unwrap();
        // (1, i)/sqrt2 in (down, up) order up to the fixed phase: the modulus is
        // tied, so the down component is made real positive.
        let a = up.amplitudes();
        assert!((a[0] - c(std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-12);
        assert!((a[1] + I * std::f64::consts::FRAC_1_SQRT_2).norm() < 1e-12);
        let ops = build_spin_ops(s);
        assert!((expectation(&up, &ops.jy).unwrap().re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn y_eigenbasis_diagonalizes_jy_for_j2() {
        let s = Spin::new(2.0).unwrap();
        let u = y_eigenbasis(s);
        let ops = build_spin_ops(s);
        let d = u.matrix().adjoint() * ops.jy.matrix() * u.matrix();
        let expected = CMatrix::from_diagonal(&CVector::from_iterator(5, s.projections().map(c)));
        assert!(close(&d, &expected, 1e-10));
    }

    #[test]
    fn y_eigenbasis_matches_rotated_z_states() {
        // exp(-i pi/2 Jx) maps |m_z> onto a Jy eigenstate; compare up to phase.
        let s = Spin::new(2.0).unwrap();
        let ops = build_spin_ops(s);
        let r = linalg::unitary_exp(ops.jx.matrix(), std::f64::consts::FRAC_PI_2);
        let u = y_eigenbasis(s);
        for k in 0..s.dim() {
            let rotated = r.column(k);
            let jy_expect = rotated.dotc(&(ops.jy.matrix() * rotated)).re;
            let target = s.index_of(jy_expect).unwrap();
            let overlap = u.matrix().column(target).dotc(&rotated).norm();
            assert!((overlap - 1.0).abs() < 1e-10, "k={k} overlap={overlap}");
        }
    }

    #[test]
    fn y_eigenbasis_is_deterministic() {
        let s = Spin::new(7.5).unwrap();
        assert_eq!(y_eigenbasis(s).matrix(), y_eigenbasis(s).matrix());
    }

    #[test]
    fn expectation_examples() {
        let s = Spin::new(3.0).unwrap();
        let ops = build_spin_ops(s);
        let top = dicke_z_state(s, 3.0).unwrap();
        assert!((expectation(&top, &ops.jz).unwrap() - c(3.0)).norm() < 1e-14);
        let y1 = dicke_y_state(s, 1.0).unwrap();
        assert!((expectation(&y1, &ops.jy).unwrap() - c(1.0)).norm() < 1e-12);
        let y0 = dicke_y_state(s, 0.0).unwrap();
        let jy2 = Operator::new(DickeBasis::z(s), ops.jy.matrix() * ops.jy.matrix()).unwrap();
        assert!(expectation(&y0, &jy2).unwrap().norm() < 1e-12);
    }

    #[test]
    fn expectation_rejects_basis_mismatch() {
        let a = dicke_z_state(Spin::new(1.0).unwrap(), 0.0).unwrap();
        let ops = build_spin_ops(Spin::new(2.0).unwrap());
        assert!(matches!(expectation(&a, &ops.jz), Err(Error::DimensionMismatch { .. }) | Err(Error::BasisMismatch(_))));
    }

    proptest! {
        #[test]
        fn su2_algebra_holds(twice in 0u32..=50) {
            let s = Spin::from_twice(twice);
            let ops = build_spin_ops(s);
            let (x, y, z) = (ops.jx.matrix(), ops.jy.matrix(), ops.jz.matrix());
            prop_assert!(close(&linalg::commutator(x, y), &(z * I), 1e-12));
            prop_assert!(close(&linalg::commutator(y, z), &(x * I), 1e-12));
            prop_assert!(close(&linalg::commutator(z, x), &(y * I), 1e-12));
            let j = s.value();
            let casimir = x * x + y * y + z * z;
            prop_assert!(close(&casimir, &(linalg::identity(s.dim()) * c(j * (j + 1.0))), 1e-12));
        }

        #[test]
        fn parity_flips_transverse_components(twice in 0u32..=50) {
            let s = Spin::from_twice(twice);
            let ops = build_spin_ops(s);
            let p = parity(s);
            let pm = p.matrix();
            let flip_x = pm * ops.jx.matrix() * pm.adjoint();
            let flip_y = pm * ops.jy.matrix() * pm.adjoint();
            prop_assert!(close(&flip_x, &(-ops.jx.matrix()), 1e-12));
            prop_assert!(close(&flip_y, &(-ops.jy.matrix()), 1e-12));
        }
    }
}
