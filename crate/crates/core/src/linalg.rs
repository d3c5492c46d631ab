//! Small dense complex linear algebra used throughout the crate.
//!
//! Every matrix here is at most a few hundred rows, so everything is dense
//! and built on `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max |a_ij - conj(a_ji)|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &CMatrix) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = max_abs(m);
    hermiticity_defect(m) <= 1e-12 * scale.max(f64::MIN_POSITIVE)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` belongs to `values[k]`.
    pub vectors: CMatrix,
}

pub fn eigh(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    // Symmetrize so that round-off in the input cannot leak into the solver.
    let sym = CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    HermitianEigen { values, vectors }
}

impl HermitianEigen {
    /// `exp(-i t H) psi` using the stored decomposition.
    pub fn evolve(&self, psi: &CVector, t: f64) -> CVector {
        let mut coeffs = self.vectors.ad_mul(psi);
        for (k, z) in coeffs.iter_mut().enumerate() {
            *z *= C64::from_polar(1.0, -self.values[k] * t);
        }
        &self.vectors * coeffs
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, e| acc.max(e.abs()))
    }
}

/// The unitary `exp(-i t H)` for Hermitian `H`.
pub fn unitary_exp(h: &CMatrix, t: f64) -> CMatrix {
    let eig = eigh(h);
    let n = h.nrows();
    let phases = CMatrix::from_diagonal(&CVector::from_iterator(
        n,
        eig.values.iter().map(|e| C64::from_polar(1.0, -e * t)),
    ));
    &eig.vectors * phases * eig.vectors.adjoint()
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorts_ascending() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[c(3.0), c(0.0), c(0.0), c(0.0), c(-1.0), I, c(0.0), -I, c(2.0)],
        );
        let eig = eigh(&m);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..3 {
            let v = eig.vectors.column(k);
            let r = &m * v - v * c(eig.values[k]);
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_exp_is_unitary() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.3), C64::new(0.1, 0.4), C64::new(0.1, -0.4), c(-1.2)]);
        let u = unitary_exp(&m, 2.7);
        let err = (u.adjoint() * &u - identity(2)).norm();
        assert!(err < 1e-13);
    }

    #[test]
    fn hermiticity_detects_defect() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert!(!is_hermitian(&m));
        assert!(is_hermitian(&(m.clone() + m.adjoint())));
    }
}
