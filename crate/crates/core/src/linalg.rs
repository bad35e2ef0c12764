//! Dense complex matrices at small fixed dimension, plus projector utilities.
//!
//! Everything here is immutable after construction. Matrices are row-major
//! `N x N` grids of [`Complex64`]; `N` is expected to stay at desk scale
//! (at most 64), so every algorithm is the plain dense one.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default tolerance for structural predicates (hermiticity, orthogonality, ...).
pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest Hilbert-space dimension accepted by scenario loading.
pub const MAX_DIM: usize = 64;

pub type ComplexScalar = Complex64;

/// Square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        Self::identity(dim).scale(Complex64::new(s, 0.0))
    }

    /// Builds a matrix from row-major rows. Every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Empty("matrix rows"));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { dim, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = Complex64::new(*d, 0.0);
        }
        m
    }

    /// `|u><v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                found: v.len(),
            });
        }
        let dim = u.len();
        let mut data = Vec::with_capacity(dim * dim);
        for a in u {
            for b in v {
                data.push(a * b.conj());
            }
        }
        Ok(Matrix { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(self.data[j * n + i].conj());
            }
        }
        Matrix { dim: n, data }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// `Tr(self * other^dagger)`, computed entrywise without forming the product.
    pub fn trace_with_adjoint(&self, other: &Matrix) -> Complex64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn hermitian_residual(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        Matrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&adj.data)
                .map(|(a, b)| (a + b) * 0.5)
                .collect(),
        }
    }

    pub fn commutator(&self, other: &Matrix) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum())
            .collect()
    }

    fn check_same_dim(&self, other: &Matrix) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let out = &mut data[i * n..(i + 1) * n];
                for (o, b) in out.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Matrix { dim: n, data }
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormalizes `vectors` with modified Gram-Schmidt, running the
/// projection sweep twice per vector.
pub fn orthonormalize(vectors: &[Vec<Complex64>], tol: f64) -> Result<Vec<Vec<Complex64>>> {
    let dim = vectors.first().ok_or(Error::Empty("vectors"))?.len();
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        let scale = norm(v);
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let n = norm(&w);
        if !(n > tol * scale.max(1.0)) {
            return Err(Error::DependentVectors { index });
        }
        basis.push(w.into_iter().map(|x| x / n).collect());
    }
    Ok(basis)
}

/// Hermitian idempotent matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: Matrix,
    rank: usize,
}

impl Projector {
    /// Validates `matrix` as an orthogonal projector within `tol`.
    pub fn new(matrix: Matrix, tol: f64) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::NotAProjector("non-finite entries".into()));
        }
        let herm = matrix.hermitian_residual();
        if herm > tol {
            return Err(Error::NotAProjector(format!(
                "hermiticity residual {herm:.3e}"
            )));
        }
        let idem = (&matrix * &matrix).max_abs_diff(&matrix);
        if idem > tol {
            return Err(Error::NotAProjector(format!(
                "idempotency residual {idem:.3e}"
            )));
        }
        let tr = matrix.trace();
        if tr.im.abs() > tol {
            return Err(Error::NotAProjector(format!("complex trace {tr}")));
        }
        Ok(Self::from_matrix_unchecked(matrix))
    }

    /// Wraps a matrix known to be a projector up to rounding (products of
    /// commuting projectors, complements, sums of orthogonal members).
    pub(crate) fn from_matrix_unchecked(matrix: Matrix) -> Self {
        let rank = matrix.trace().re.round().max(0.0) as usize;
        Projector { matrix, rank }
    }

    pub fn identity(dim: usize) -> Self {
        Projector {
            matrix: Matrix::identity(dim),
            rank: dim,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Projector {
            matrix: Matrix::zeros(dim),
            rank: 0,
        }
    }

    /// Projector onto the coordinate axes listed in `axes`.
    pub fn coordinate(dim: usize, axes: &[usize]) -> Self {
        let mut diag = vec![0.0; dim];
        for &a in axes {
            diag[a] = 1.0;
        }
        Self::from_matrix_unchecked(Matrix::from_diagonal(&diag))
    }

    /// Orthogonal projector onto the span of `vectors`.
    pub fn from_vectors(vectors: &[Vec<Complex64>], tol: f64) -> Result<Self> {
        let basis = orthonormalize(vectors, tol)?;
        let dim = basis[0].len();
        let mut m = Matrix::zeros(dim);
        for q in &basis {
            m = &m + &Matrix::outer(q, q)?;
        }
        Ok(Projector {
            matrix: m.hermitian_part(),
            rank: basis.len(),
        })
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.rank == 0
    }

    /// `1 - P`.
    pub fn complement(&self) -> Self {
        let dim = self.dim();
        Projector {
            matrix: &Matrix::identity(dim) - &self.matrix,
            rank: dim - self.rank,
        }
    }

    /// True iff `max |PQ| <= tol`.
    pub fn orthogonal(&self, other: &Projector, tol: f64) -> Result<bool> {
        self.matrix.check_same_dim(&other.matrix)?;
        Ok((&self.matrix * &other.matrix).max_abs() <= tol)
    }

    /// Subspace order: true iff `QP = P` within `tol`.
    pub fn leq(&self, other: &Projector, tol: f64) -> Result<bool> {
        self.matrix.check_same_dim(&other.matrix)?;
        Ok((&other.matrix * &self.matrix).max_abs_diff(&self.matrix) <= tol)
    }

    pub fn commutes(&self, other: &Projector, tol: f64) -> Result<bool> {
        self.matrix.check_same_dim(&other.matrix)?;
        Ok(self.matrix.commutator(&other.matrix).max_abs() <= tol)
    }

    /// Product of two projectors that are known to commute.
    pub(crate) fn commuting_product(&self, other: &Projector) -> Self {
        Self::from_matrix_unchecked((&self.matrix * &other.matrix).hermitian_part())
    }

    /// Sum of mutually orthogonal projectors.
    pub(crate) fn orthogonal_sum<'a>(
        dim: usize,
        parts: impl IntoIterator<Item = &'a Projector>,
    ) -> Self {
        let mut m = Matrix::zeros(dim);
        for p in parts {
            m = &m + &p.matrix;
        }
        Self::from_matrix_unchecked(m)
    }

    pub fn approx_eq(&self, other: &Projector, tol: f64) -> bool {
        self.dim() == other.dim() && self.matrix.max_abs_diff(&other.matrix) <= tol
    }

    /// Hermiticity and idempotency residuals.
    pub fn residuals(&self) -> (f64, f64) {
        (
            self.matrix.hermitian_residual(),
            (&self.matrix * &self.matrix).max_abs_diff(&self.matrix),
        )
    }
}

/// Density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix);

impl DensityMatrix {
    /// `(1/N) * identity`.
    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(Matrix::scaled_identity(dim, 1.0 / dim as f64))
    }

    pub fn new(matrix: Matrix, tol: f64) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::InvalidDensity("non-finite entries".into()));
        }
        let herm = matrix.hermitian_residual();
        if herm > tol {
            return Err(Error::InvalidDensity(format!(
                "hermiticity residual {herm:.3e}"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        if !is_positive_semidefinite(&matrix, tol) {
            return Err(Error::InvalidDensity("not positive semidefinite".into()));
        }
        Ok(DensityMatrix(matrix.hermitian_part()))
    }

    /// Pure state `|v><v|` (normalizes `v`).
    pub fn pure(v: &[Complex64]) -> Result<Self> {
        let n = norm(v);
        if !(n > 0.0) {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        let u: Vec<Complex64> = v.iter().map(|x| x / n).collect();
        Ok(DensityMatrix(Matrix::outer(&u, &u)?))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }
}

/// Cholesky attempt on `A + tol * 1`; succeeds iff `A` is PSD up to `tol`.
fn is_positive_semidefinite(a: &Matrix, tol: f64) -> bool {
    let n = a.dim;
    let shifted = &a.hermitian_part() + &Matrix::scaled_identity(n, tol);
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = shifted.get(j, j).re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[j * n + j] = Complex64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut s = shifted.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / d;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn basis(dim: usize, i: usize) -> Vec<Complex64> {
        let mut v = vec![c(0.0); dim];
        v[i] = c(1.0);
        v
    }

    #[test]
    fn projector_onto_first_axis() {
        let p = Projector::from_vectors(&[basis(2, 0)], DEFAULT_TOL).unwrap();
        assert_eq!(p.rank(), 1);
        assert!(p.approx_eq(&Projector::coordinate(2, &[0]), 1e-15));
    }

    #[test]
    fn full_basis_spans_identity() {
        let vs: Vec<_> = (0..4).map(|i| basis(4, i)).collect();
        let p = Projector::from_vectors(&vs, DEFAULT_TOL).unwrap();
        assert_eq!(p.rank(), 4);
        assert!(p.approx_eq(&Projector::identity(4), 1e-15));
    }

    #[test]
    fn uniform_vector_projector_has_third_entries() {
        // vv^dagger with v = (1,1,1)/sqrt(3): every entry is 1/3.
        let p = Projector::from_vectors(&[vec![c(1.0); 3]], DEFAULT_TOL).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((p.matrix().get(i, j) - c(1.0 / 3.0)).norm() < 1e-15);
            }
        }
        assert_eq!(p.rank(), 1);
    }

    #[test]
    fn dependent_and_mismatched_vectors() {
        let v = vec![c(1.0), c(2.0)];
        let w = vec![c(2.0), c(4.0)];
        assert_eq!(
            Projector::from_vectors(&[v.clone(), w], DEFAULT_TOL),
            Err(Error::DependentVectors { index: 1 })
        );
        assert!(matches!(
            Projector::from_vectors(&[v, vec![c(1.0)]], DEFAULT_TOL),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Projector::from_vectors(&[], DEFAULT_TOL),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn complement_cases() {
        assert!(Projector::identity(3)
            .complement()
            .approx_eq(&Projector::zero(3), 0.0));
        assert!(Projector::zero(3)
            .complement()
            .approx_eq(&Projector::identity(3), 0.0));
        let p = Projector::coordinate(3, &[0]).complement();
        assert!(p.approx_eq(&Projector::coordinate(3, &[1, 2]), 0.0));
        assert_eq!(p.rank(), 2);
    }

    #[test]
    fn orthogonality() {
        let a = Projector::coordinate(2, &[0]);
        let b = Projector::coordinate(2, &[1]);
        assert!(a.orthogonal(&b, DEFAULT_TOL).unwrap());
        assert!(!a.orthogonal(&a, DEFAULT_TOL).unwrap());
        let s = 0.5f64.sqrt();
        let u = Projector::from_vectors(&[vec![c(s), c(s)]], DEFAULT_TOL).unwrap();
        let v = Projector::from_vectors(&[vec![c(s), c(-s)]], DEFAULT_TOL).unwrap();
        assert!(u.orthogonal(&v, DEFAULT_TOL).unwrap());
        assert!(matches!(
            a.orthogonal(&Projector::zero(3), DEFAULT_TOL),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn subspace_order() {
        let p = Projector::coordinate(3, &[0]);
        assert!(Projector::zero(3).leq(&p, DEFAULT_TOL).unwrap());
        assert!(p.leq(&Projector::identity(3), DEFAULT_TOL).unwrap());
        assert!(p.leq(&Projector::coordinate(3, &[0, 1]), DEFAULT_TOL).unwrap());
        assert!(!p.leq(&Projector::coordinate(3, &[1, 2]), DEFAULT_TOL).unwrap());
    }

    #[test]
    fn commutation() {
        let p = Projector::coordinate(2, &[0]);
        assert!(p.commutes(&Projector::identity(2), DEFAULT_TOL).unwrap());
        assert!(p
            .commutes(&Projector::coordinate(2, &[1]), DEFAULT_TOL)
            .unwrap());
        // P = diag(1,0), Q = [[1,1],[1,1]]/2: PQ - QP = [[0,1/2],[-1/2,0]].
        let q = Projector::from_vectors(&[vec![c(1.0), c(1.0)]], DEFAULT_TOL).unwrap();
        let comm = p.matrix().commutator(q.matrix());
        assert!((comm.get(0, 1) - c(0.5)).norm() < 1e-15);
        assert!((comm.get(1, 0) - c(-0.5)).norm() < 1e-15);
        assert!(!p.commutes(&q, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn projector_validation_rejects_non_projectors() {
        let m = Matrix::from_diagonal(&[1.0, 0.5]);
        assert!(matches!(
            Projector::new(m, DEFAULT_TOL),
            Err(Error::NotAProjector(_))
        ));
        let m = Matrix::from_rows(&[vec![c(0.0), c(1.0)], vec![c(0.0), c(0.0)]]).unwrap();
        assert!(matches!(
            Projector::new(m, DEFAULT_TOL),
            Err(Error::NotAProjector(_))
        ));
        let ok = Projector::new(Matrix::from_diagonal(&[1.0, 0.0, 1.0]), DEFAULT_TOL).unwrap();
        assert_eq!(ok.rank(), 2);
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(Matrix::from_diagonal(&[0.5, 0.5]), DEFAULT_TOL).is_ok());
        assert!(DensityMatrix::new(Matrix::from_diagonal(&[1.5, -0.5]), DEFAULT_TOL).is_err());
        assert!(DensityMatrix::new(Matrix::from_diagonal(&[0.5, 0.4]), DEFAULT_TOL).is_err());
        let rho = DensityMatrix::maximally_mixed(4);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
        let pure = DensityMatrix::pure(&[c(1.0), c(1.0)]).unwrap();
        assert!(DensityMatrix::new(pure.matrix().clone(), DEFAULT_TOL).is_ok());
    }
}
