//! Dense complex linear algebra for discrimination problems.
//!
//! Everything downstream works with operators on small Hilbert spaces
//! (dimensions up to a few dozen, Kronecker products capped at
//! [`DEFAULT_DIM_CAP`]), so the representation is deliberately simple: a
//! row-major dense [`ComplexMatrix`], a validated [`HermitianOperator`]
//! wrapper, and an orthonormal-column [`SubspaceBasis`].  Eigenproblems are
//! solved by the cyclic Jacobi method in [`eig`], and all subspace
//! operations (kernels, supports, sums, intersections) reduce to
//! eigendecompositions of projectors in [`subspace`].

mod eig;
mod subspace;

pub use eig::{eig_hermitian, eigvals_hermitian, EigenDecomposition};
pub use subspace::{
    kernel_basis, orthogonal_complement, projector_distance, subspace_contains, subspace_equal,
    subspace_intersection, subspace_sum, support_basis,
};

use num_complex::Complex64;
use std::fmt;
use std::ops::{Index, IndexMut};
use thiserror::Error;

/// Default cap on the dimension of Kronecker-product results.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Entrywise tolerance for Hermiticity checks, scaled by `max(1, |H|_max)`.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Entrywise tolerance for orthonormality of basis columns.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Errors raised by matrix construction and subspace operations.
#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("matrix is not Hermitian (max deviation {deviation:.3e}, tolerance {tolerance:.3e})")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("result dimension {dim} exceeds cap {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },
    #[error("basis columns are not orthonormal (max deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    EigNoConvergence { sweeps: usize },
    #[error("operation requires a non-empty list of operands")]
    EmptyList,
}

/// Numerical thresholds shared by rank decisions, PSD checks and subspace
/// comparisons.
///
/// * `rank_tol`: an eigenvalue of a PSD operator counts as zero when it is
///   below `rank_tol * lambda_max`.
/// * `psd_tol`: an operator passes the PSD check when its minimum eigenvalue
///   is at least `-psd_tol * max(1, lambda_max)`.
/// * `subspace_eq_tol`: two subspaces are equal when their projectors differ
///   by at most this much in Frobenius norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    pub rank_tol: f64,
    pub psd_tol: f64,
    pub subspace_eq_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            rank_tol: 1e-9,
            psd_tol: 1e-9,
            subspace_eq_tol: 1e-8,
        }
    }
}

/// Dense row-major complex matrix.
///
/// Zero-column (or zero-row) matrices are allowed so that rank-zero bases
/// have a uniform representation.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from a row-major closure.
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut m = ComplexMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from rows of `(re, im)` pairs.
    pub fn from_rows(rows: &[Vec<(f64, f64)>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
        }
        Ok(ComplexMatrix::from_fn(r, c, |i, j| {
            Complex64::new(rows[i][j].0, rows[i][j].1)
        }))
    }

    /// Column vector from complex entries.
    pub fn column(entries: &[Complex64]) -> Self {
        ComplexMatrix::from_fn(entries.len(), 1, |i, _| entries[i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conjugate(&self) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik.re == 0.0 && aik.im == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Maximum entrywise deviation from Hermiticity, `|A - A^dag|_max`.
    pub fn hermitian_deviation(&self) -> f64 {
        assert!(self.is_square());
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            dev = dev.max(self[(i, i)].im.abs() * 2.0);
            for j in (i + 1)..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product with the default dimension cap.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    kron_with_cap(a, b, DEFAULT_DIM_CAP)
}

/// Kronecker product `a (x) b`, rejecting results larger than `cap` in either
/// dimension.
pub fn kron_with_cap(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    cap: usize,
) -> Result<ComplexMatrix, LinalgError> {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    let dim = rows.max(cols);
    if dim > cap {
        return Err(LinalgError::DimensionCapExceeded { dim, cap });
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ia in 0..a.rows() {
        for ja in 0..a.cols() {
            let f = a[(ia, ja)];
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            for ib in 0..b.rows() {
                for jb in 0..b.cols() {
                    out[(ia * b.rows() + ib, ja * b.cols() + jb)] = f * b[(ib, jb)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of a list, left to right.
pub fn kron_all(
    factors: &[&ComplexMatrix],
    cap: usize,
) -> Result<ComplexMatrix, LinalgError> {
    let (first, rest) = factors.split_first().ok_or(LinalgError::EmptyList)?;
    let mut acc = (*first).clone();
    for f in rest {
        acc = kron_with_cap(&acc, f, cap)?;
    }
    Ok(acc)
}

/// A validated Hermitian operator.
///
/// Construction checks squareness, finiteness and Hermiticity (entrywise
/// deviation at most [`HERMITICITY_TOL`] scaled by `max(1, |H|_max)`), then
/// stores the exactly symmetrized matrix `(H + H^dag)/2` so every consumer
/// sees a bitwise-Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, LinalgError> {
        if !matrix.is_square() {
            return Err(LinalgError::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        if !matrix.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let tolerance = HERMITICITY_TOL * matrix.max_abs_entry().max(1.0);
        let deviation = matrix.hermitian_deviation();
        if deviation > tolerance {
            return Err(LinalgError::NotHermitian {
                deviation,
                tolerance,
            });
        }
        Ok(Self::symmetrize_unchecked(matrix))
    }

    /// Wraps `(M + M^dag)/2` without a Hermiticity check.  Used for results
    /// of arithmetic that is Hermitian up to rounding.
    pub fn symmetrize(matrix: ComplexMatrix) -> Result<Self, LinalgError> {
        if !matrix.is_square() {
            return Err(LinalgError::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        if !matrix.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self::symmetrize_unchecked(matrix))
    }

    fn symmetrize_unchecked(matrix: ComplexMatrix) -> Self {
        let n = matrix.rows();
        let mut sym = matrix;
        for i in 0..n {
            sym[(i, i)] = Complex64::new(sym[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let avg = (sym[(i, j)] + sym[(j, i)].conj()) * 0.5;
                sym[(i, j)] = avg;
                sym[(j, i)] = avg.conj();
            }
        }
        HermitianOperator { matrix: sym }
    }

    pub fn zero(dim: usize) -> Self {
        HermitianOperator {
            matrix: ComplexMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    /// Rank-one projector `|v><v| / <v|v>` onto the span of `v`.
    pub fn projector_onto(v: &[Complex64]) -> Result<Self, LinalgError> {
        let norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr <= 0.0 || !norm_sqr.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let d = v.len();
        let m = ComplexMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj() / norm_sqr);
        Ok(HermitianOperator { matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn add(&self, other: &Self) -> Self {
        HermitianOperator {
            matrix: self.matrix.add(&other.matrix),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        HermitianOperator {
            matrix: self.matrix.sub(&other.matrix),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        HermitianOperator {
            matrix: self.matrix.scale_real(factor),
        }
    }

    /// Real inner product `Tr(self * other)` of two Hermitian operators.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let mut acc = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let a = self.matrix[(i, j)];
                let b = other.matrix[(j, i)];
                acc += a.re * b.re - a.im * b.im;
            }
        }
        acc
    }

    /// Conjugation `B^dag * self * B` for a rectangular `B`.
    pub fn conjugate_with(&self, b: &ComplexMatrix) -> Self {
        let m = b.adjoint().mul(&self.matrix).mul(b);
        HermitianOperator::symmetrize_unchecked(m)
    }
}

/// Kronecker product of Hermitian operators (Hermitian again).
pub fn kron_hermitian(
    a: &HermitianOperator,
    b: &HermitianOperator,
    cap: usize,
) -> Result<HermitianOperator, LinalgError> {
    let m = kron_with_cap(a.matrix(), b.matrix(), cap)?;
    HermitianOperator::symmetrize(m)
}

/// An orthonormal set of columns spanning a subspace of `C^ambient_dim`.
///
/// `rank == 0` (no columns) represents the zero subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    columns: ComplexMatrix,
}

impl SubspaceBasis {
    pub fn new(ambient_dim: usize, columns: ComplexMatrix) -> Result<Self, LinalgError> {
        if columns.rows() != ambient_dim {
            return Err(LinalgError::DimensionMismatch {
                expected: ambient_dim,
                found: columns.rows(),
            });
        }
        if !columns.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let gram = columns.adjoint().mul(&columns);
        let dev = gram.max_abs_diff(&ComplexMatrix::identity(columns.cols()));
        if dev > ORTHONORMALITY_TOL {
            return Err(LinalgError::NotOrthonormal { deviation: dev });
        }
        Ok(SubspaceBasis {
            ambient_dim,
            columns,
        })
    }

    /// The whole space `C^d`.
    pub fn full(dim: usize) -> Self {
        SubspaceBasis {
            ambient_dim: dim,
            columns: ComplexMatrix::identity(dim),
        }
    }

    /// The zero subspace of `C^d`.
    pub fn empty(dim: usize) -> Self {
        SubspaceBasis {
            ambient_dim: dim,
            columns: ComplexMatrix::zeros(dim, 0),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.columns.cols()
    }

    pub fn columns(&self) -> &ComplexMatrix {
        &self.columns
    }

    /// Orthogonal projector `B * B^dag` onto the subspace.
    pub fn projector(&self) -> HermitianOperator {
        if self.rank() == 0 {
            return HermitianOperator::zero(self.ambient_dim);
        }
        let p = self.columns.mul(&self.columns.adjoint());
        HermitianOperator::symmetrize(p).expect("projector of finite basis is finite")
    }
}

/// Kronecker product of bases: orthonormal columns spanning the tensor
/// product of the two subspaces.
pub fn kron_basis(
    a: &SubspaceBasis,
    b: &SubspaceBasis,
    cap: usize,
) -> Result<SubspaceBasis, LinalgError> {
    let ambient = a.ambient_dim() * b.ambient_dim();
    if ambient > cap {
        return Err(LinalgError::DimensionCapExceeded { dim: ambient, cap });
    }
    if a.rank() == 0 || b.rank() == 0 {
        return Ok(SubspaceBasis::empty(ambient));
    }
    let cols = kron_with_cap(a.columns(), b.columns(), cap)?;
    SubspaceBasis::new(ambient, cols)
}

/// Outcome of a positive-semidefiniteness check.
#[derive(Debug, Clone, Copy)]
pub struct PsdVerdict {
    pub psd: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

/// Checks `H >= -psd_tol * max(1, lambda_max)` on the spectrum.
pub fn is_psd(h: &HermitianOperator, tol: &ToleranceConfig) -> Result<PsdVerdict, LinalgError> {
    if h.dim() == 0 {
        return Ok(PsdVerdict {
            psd: true,
            min_eigenvalue: 0.0,
            max_eigenvalue: 0.0,
        });
    }
    let values = eigvals_hermitian(h)?;
    let max_eigenvalue = values[0];
    let min_eigenvalue = values[values.len() - 1];
    Ok(PsdVerdict {
        psd: min_eigenvalue >= -tol.psd_tol * max_eigenvalue.max(1.0),
        min_eigenvalue,
        max_eigenvalue,
    })
}

/// Trace norm `sum_i |lambda_i|` of a Hermitian operator.
pub fn trace_norm(h: &HermitianOperator) -> Result<f64, LinalgError> {
    Ok(eigvals_hermitian(h)?.iter().map(|v| v.abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_and_indexing() {
        let m = ComplexMatrix::identity(3);
        assert_eq!(m[(0, 0)], c(1.0, 0.0));
        assert_eq!(m[(0, 1)], c(0.0, 0.0));
        assert_eq!(m.trace(), c(3.0, 0.0));
    }

    #[test]
    fn matmul_matches_hand_computation() {
        let a = ComplexMatrix::from_rows(&[
            vec![(1.0, 0.0), (0.0, 1.0)],
            vec![(0.0, 0.0), (2.0, 0.0)],
        ])
        .unwrap();
        let b = ComplexMatrix::from_rows(&[
            vec![(0.0, 0.0), (1.0, 0.0)],
            vec![(1.0, 0.0), (0.0, 0.0)],
        ])
        .unwrap();
        let p = a.mul(&b);
        assert_eq!(p[(0, 0)], c(0.0, 1.0));
        assert_eq!(p[(0, 1)], c(1.0, 0.0));
        assert_eq!(p[(1, 0)], c(2.0, 0.0));
        assert_eq!(p[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn adjoint_conjugates_and_transposes() {
        let a = ComplexMatrix::from_rows(&[
            vec![(1.0, 2.0), (3.0, 4.0)],
            vec![(5.0, 6.0), (7.0, 8.0)],
        ])
        .unwrap();
        let ad = a.adjoint();
        assert_eq!(ad[(0, 1)], c(5.0, -6.0));
        assert_eq!(ad[(1, 0)], c(3.0, -4.0));
    }

    #[test]
    fn kron_dimensions_and_entries() {
        let a = ComplexMatrix::from_rows(&[vec![(1.0, 0.0), (2.0, 0.0)]]).unwrap();
        let b = ComplexMatrix::from_rows(&[vec![(0.0, 1.0)], vec![(3.0, 0.0)]]).unwrap();
        let k = kron(&a, &b).unwrap();
        assert_eq!((k.rows(), k.cols()), (2, 2));
        assert_eq!(k[(0, 0)], c(0.0, 1.0));
        assert_eq!(k[(1, 1)], c(6.0, 0.0));
    }

    #[test]
    fn kron_respects_cap() {
        let a = ComplexMatrix::identity(100);
        let err = kron_with_cap(&a, &a, 4096).unwrap_err();
        assert!(matches!(
            err,
            LinalgError::DimensionCapExceeded { dim: 10000, cap: 4096 }
        ));
    }

    #[test]
    fn hermitian_rejects_asymmetry() {
        let m = ComplexMatrix::from_rows(&[
            vec![(1.0, 0.0), (0.5, 0.0)],
            vec![(0.4, 0.0), (1.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(
            HermitianOperator::new(m),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn hermitian_accepts_and_symmetrizes_roundoff() {
        let eps = 1e-14;
        let m = ComplexMatrix::from_rows(&[
            vec![(1.0, 0.0), (0.5, eps)],
            vec![(0.5, 0.0), (2.0, 0.0)],
        ])
        .unwrap();
        let h = HermitianOperator::new(m).unwrap();
        assert_eq!(h.matrix().hermitian_deviation(), 0.0);
    }

    #[test]
    fn hermitian_rejects_non_finite() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 0)] = c(f64::NAN, 0.0);
        assert!(matches!(
            HermitianOperator::new(m),
            Err(LinalgError::NonFinite)
        ));
    }

    #[test]
    fn inner_product_is_real_trace() {
        let a = HermitianOperator::new(
            ComplexMatrix::from_rows(&[
                vec![(1.0, 0.0), (0.0, 1.0)],
                vec![(0.0, -1.0), (2.0, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let b = HermitianOperator::new(
            ComplexMatrix::from_rows(&[
                vec![(0.5, 0.0), (0.0, -2.0)],
                vec![(0.0, 2.0), (1.0, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let direct = a.matrix().mul(b.matrix()).trace();
        assert!((a.inner(&b) - direct.re).abs() < 1e-12);
        assert!(direct.im.abs() < 1e-12);
    }

    #[test]
    fn subspace_basis_requires_orthonormal_columns() {
        let cols = ComplexMatrix::from_rows(&[
            vec![(1.0, 0.0), (1.0, 0.0)],
            vec![(0.0, 0.0), (0.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(
            SubspaceBasis::new(2, cols),
            Err(LinalgError::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn empty_basis_has_zero_projector() {
        let b = SubspaceBasis::empty(3);
        assert_eq!(b.rank(), 0);
        assert_eq!(b.projector().matrix().max_abs_entry(), 0.0);
    }

    #[test]
    fn trace_norm_of_weighted_state_difference() {
        // (|0><0| - |+><+|)/2 has eigenvalues +-1/(2 sqrt(2)), so the trace
        // norm is 1/sqrt(2).
        let zero = HermitianOperator::projector_onto(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let plus = HermitianOperator::projector_onto(&[
            c(1.0 / 2f64.sqrt(), 0.0),
            c(1.0 / 2f64.sqrt(), 0.0),
        ])
        .unwrap();
        let diff = zero.sub(&plus).scale(0.5);
        let tn = trace_norm(&diff).unwrap();
        assert!((tn - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn psd_verdict_flags_negative_eigenvalue() {
        let tol = ToleranceConfig::default();
        let m = ComplexMatrix::from_rows(&[
            vec![(1.0, 0.0), (0.0, 0.0)],
            vec![(0.0, 0.0), (-1e-3, 0.0)],
        ])
        .unwrap();
        let h = HermitianOperator::new(m).unwrap();
        let verdict = is_psd(&h, &tol).unwrap();
        assert!(!verdict.psd);
        assert!((verdict.min_eigenvalue + 1e-3).abs() < 1e-12);
    }

    #[test]
    fn psd_verdict_tolerates_tiny_negativity() {
        let tol = ToleranceConfig::default();
        let m = ComplexMatrix::from_rows(&[
            vec![(1.0, 0.0), (0.0, 0.0)],
            vec![(0.0, 0.0), (-1e-12, 0.0)],
        ])
        .unwrap();
        let h = HermitianOperator::new(m).unwrap();
        assert!(is_psd(&h, &tol).unwrap().psd);
    }
}
