//! Dense real kernels used by the interior-point solver.
//!
//! All matrices are square, row-major `Vec<f64>` slices.  Symmetric inputs
//! are stored in full so products need no triangle bookkeeping.

/// `out = a * b` for square matrices of side `n`.
pub fn mat_mul(n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for i in 0..n {
        let arow = &a[i * n..(i + 1) * n];
        let orow = &mut out[i * n..(i + 1) * n];
        for (k, &aik) in arow.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            for j in 0..n {
                orow[j] += aik * brow[j];
            }
        }
    }
}

/// In-place symmetrization `m = (m + m^T)/2`.
pub fn symmetrize(n: usize, m: &mut [f64]) {
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite
/// matrix, or `None` when the matrix is not numerically PD.
pub fn cholesky(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let dj = d.sqrt();
        l[j * n + j] = dj;
        for i in (j + 1)..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / dj;
        }
    }
    Some(l)
}

/// Solves `L x = rhs` in place (forward substitution).
pub fn solve_lower(n: usize, l: &[f64], rhs: &mut [f64]) {
    for i in 0..n {
        let mut v = rhs[i];
        for k in 0..i {
            v -= l[i * n + k] * rhs[k];
        }
        rhs[i] = v / l[i * n + i];
    }
}

/// Solves `L^T x = rhs` in place (backward substitution).
pub fn solve_lower_transpose(n: usize, l: &[f64], rhs: &mut [f64]) {
    for i in (0..n).rev() {
        let mut v = rhs[i];
        for k in (i + 1)..n {
            v -= l[k * n + i] * rhs[k];
        }
        rhs[i] = v / l[i * n + i];
    }
}

/// Solves `A x = rhs` in place given the Cholesky factor of `A`.
pub fn chol_solve(n: usize, l: &[f64], rhs: &mut [f64]) {
    solve_lower(n, l, rhs);
    solve_lower_transpose(n, l, rhs);
}

/// Inverse of a symmetric positive-definite matrix from its Cholesky
/// factor: solves for each unit vector.
pub fn invert_from_cholesky(n: usize, l: &[f64]) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.fill(0.0);
        col[j] = 1.0;
        chol_solve(n, l, &mut col);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    symmetrize(n, &mut inv);
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_roundtrip() {
        let n = 3;
        // A = B B^T with B lower triangular, so A is PD.
        let a = vec![4.0, 2.0, 0.0, 2.0, 5.0, 1.0, 0.0, 1.0, 3.0];
        let l = cholesky(n, &a).unwrap();
        let mut recon = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                recon[i * n + j] = (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum();
            }
        }
        for (x, y) in recon.iter().zip(&a) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky(2, &a).is_none());
    }

    #[test]
    fn solve_matches_inverse() {
        let n = 3;
        let a = vec![4.0, 2.0, 0.0, 2.0, 5.0, 1.0, 0.0, 1.0, 3.0];
        let l = cholesky(n, &a).unwrap();
        let inv = invert_from_cholesky(n, &l);
        let mut prod = vec![0.0; n * n];
        mat_mul(n, &a, &inv, &mut prod);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i * n + j] - expect).abs() < 1e-12);
            }
        }
    }
}
