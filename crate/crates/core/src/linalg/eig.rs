//! Cyclic Jacobi eigensolver for Hermitian matrices.
//!
//! Each sweep annihilates every off-diagonal entry once with a complex
//! plane rotation.  For an entry `a_pq = r e^{i phi}` the rotation
//!
//! ```text
//! U[p][p] = c      U[p][q] = s e^{i phi}
//! U[q][p] = -s e^{-i phi}      U[q][q] = c
//! ```
//!
//! with `tan(theta) = t`, `c = 1/sqrt(1+t^2)`, `s = t c` and `t` the
//! smaller-magnitude root of `t^2 + 2 tau t - 1 = 0`,
//! `tau = (a_qq - a_pp) / (2r)`, zeroes the `(p, q)` entry of `U^dag A U`
//! while moving the diagonal by `-t r` and `+t r`.  The accumulated
//! rotations converge quadratically to the eigenvector matrix.
//!
//! Output is deterministic: eigenvalues are sorted in descending order with
//! a stable permutation, and each eigenvector is rescaled so its first
//! component of modulus above `1e-12` is real and positive.

use super::{ComplexMatrix, HermitianOperator, LinalgError};
use num_complex::Complex64;

const MAX_SWEEPS: usize = 100;
const PHASE_PIVOT_TOL: f64 = 1e-12;

/// Eigenvalues (descending) and matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// Rebuilds `V diag(lambda) V^dag`, mainly for residual checks.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)].conj())
                .sum()
        })
    }
}

/// Full eigendecomposition of a Hermitian operator.
pub fn eig_hermitian(h: &HermitianOperator) -> Result<EigenDecomposition, LinalgError> {
    jacobi(h, true)
}

/// Eigenvalues only (descending), skipping eigenvector accumulation.
pub fn eigvals_hermitian(h: &HermitianOperator) -> Result<Vec<f64>, LinalgError> {
    Ok(jacobi(h, false)?.eigenvalues)
}

fn jacobi(h: &HermitianOperator, want_vectors: bool) -> Result<EigenDecomposition, LinalgError> {
    let n = h.dim();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let mut a: Vec<Complex64> = h.matrix().data().to_vec();
    let mut v: Vec<Complex64> = identity_data(if want_vectors { n } else { 0 });
    let scale = h.matrix().frobenius_norm().max(1.0);
    let off_target = 1e-15 * scale;

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let off = off_diagonal_norm(&a, n);
        if off <= off_target {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, n, p, q, want_vectors);
            }
        }
        sweeps += 1;
    }
    if !converged && off_diagonal_norm(&a, n) > off_target {
        return Err(LinalgError::EigNoConvergence { sweeps });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let values: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).expect("finite eigenvalues"));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = if want_vectors {
        let mut m = ComplexMatrix::zeros(n, n);
        for (new_col, &old_col) in order.iter().enumerate() {
            let phase = column_phase(&v, n, old_col);
            for row in 0..n {
                m[(row, new_col)] = v[row * n + old_col] * phase;
            }
        }
        m
    } else {
        ComplexMatrix::zeros(0, 0)
    };

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn identity_data(n: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }
    v
}

fn off_diagonal_norm(a: &[Complex64], n: usize) -> f64 {
    let mut acc = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            acc += 2.0 * a[p * n + q].norm_sqr();
        }
    }
    acc.sqrt()
}

fn rotate(
    a: &mut [Complex64],
    v: &mut [Complex64],
    n: usize,
    p: usize,
    q: usize,
    want_vectors: bool,
) {
    let apq = a[p * n + q];
    let r = apq.norm();
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    // Skip rotations that cannot move the diagonal at this precision.
    if r <= f64::EPSILON * 1e-2 * (app.abs() + aqq.abs()).max(f64::MIN_POSITIVE) {
        a[p * n + q] = Complex64::new(0.0, 0.0);
        a[q * n + p] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase = apq / r;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        1.0 / (tau - (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let s_phase = phase * s;

    // Rows p and q: A := U^dag A.
    for i in 0..n {
        let api = a[p * n + i];
        let aqi = a[q * n + i];
        a[p * n + i] = api * c - aqi * s_phase;
        a[q * n + i] = api * s_phase.conj() + aqi * c;
    }
    // Columns p and q: A := A U.
    for i in 0..n {
        let aip = a[i * n + p];
        let aiq = a[i * n + q];
        a[i * n + p] = aip * c - aiq * s_phase.conj();
        a[i * n + q] = aip * s_phase + aiq * c;
    }
    // Exact values on the rotated 2x2 block.
    a[p * n + p] = Complex64::new(app - t * r, 0.0);
    a[q * n + q] = Complex64::new(aqq + t * r, 0.0);
    a[p * n + q] = Complex64::new(0.0, 0.0);
    a[q * n + p] = Complex64::new(0.0, 0.0);

    if want_vectors {
        for i in 0..n {
            let vip = v[i * n + p];
            let viq = v[i * n + q];
            v[i * n + p] = vip * c - viq * s_phase.conj();
            v[i * n + q] = vip * s_phase + viq * c;
        }
    }
}

/// Unit-modulus factor making the first sizable component real positive.
fn column_phase(v: &[Complex64], n: usize, col: usize) -> Complex64 {
    for row in 0..n {
        let z = v[row * n + col];
        let m = z.norm();
        if m > PHASE_PIVOT_TOL {
            return z.conj() / m;
        }
    }
    Complex64::new(1.0, 0.0)
}
