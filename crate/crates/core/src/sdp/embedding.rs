//! Complex-to-real embedding and the Hermitian constraint basis.
//!
//! `embed(H) = [[Re H, -Im H], [Im H, Re H]]` maps a `d x d` Hermitian
//! operator to a `2d x 2d` real symmetric matrix, preserving PSD and
//! doubling trace inner products: `Tr(embed(A) embed(B)) = 2 Tr(A B)`.
//! Program assembly therefore uses halved coefficients throughout so the
//! embedded program computes the same inner products as the complex one.
//!
//! Equality constraints on embedded blocks only need `d^2` real scalar
//! equations, one per element of the Hermitian basis
//!
//! ```text
//! H_a in { E_pp }  u  { E_pq + E_qp : p < q }  u  { i E_pq - i E_qp : p < q }
//! ```
//!
//! rather than `2d(2d+1)/2`: any symmetric solution can be averaged with
//! its conjugation by `J = [[0, -I], [I, 0]]` without changing objective,
//! PSD-ness, or these constraints, and the averaged matrix is an embedded
//! Hermitian operator.  Indexing: `a < d` is diagonal `E_aa`; after that
//! pairs `(p, q)` in lexicographic order contribute the real element at
//! `d + 2*pair` and the imaginary element at `d + 2*pair + 1`.

use super::{SdpError, SparseSym, SymMatrix};
use crate::linalg::{ComplexMatrix, HermitianOperator, LinalgError};
use num_complex::Complex64;

/// Real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]`.
pub fn embed_complex(h: &HermitianOperator) -> SymMatrix {
    let d = h.dim();
    let n = 2 * d;
    let mut data = vec![0.0; n * n];
    for i in 0..d {
        for j in 0..d {
            let z = h.matrix()[(i, j)];
            data[i * n + j] = z.re;
            data[(d + i) * n + (d + j)] = z.re;
            data[i * n + (d + j)] = -z.im;
            data[(d + i) * n + j] = z.im;
        }
    }
    SymMatrix::from_raw(n, data)
}

/// Inverse of [`embed_complex`] up to symmetrization: averages the two real
/// diagonal blocks and antisymmetrizes the imaginary part, cancelling the
/// doubled-multiplicity noise of embedded solutions.
pub fn unembed_hermitian(m: &SymMatrix) -> Result<HermitianOperator, SdpError> {
    let n = m.dim();
    if n % 2 != 0 {
        return Err(SdpError::OddDimension { dim: n });
    }
    let d = n / 2;
    let mut out = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let re = 0.5 * (m.get(i, j) + m.get(d + i, d + j));
            let im = 0.5 * (m.get(d + i, j) - m.get(i, d + j));
            out[(i, j)] = Complex64::new(re, im);
        }
    }
    HermitianOperator::symmetrize(out).map_err(|e| match e {
        LinalgError::NonFinite => SdpError::NonFinite,
        _ => SdpError::NonFinite,
    })
}

/// Half-scaled sparse embedding `(1/2) embed(G)` of a dense Hermitian
/// operator, used for objective coefficients of embedded programs.
pub fn embed_half_sparse(h: &HermitianOperator) -> SparseSym {
    let d = h.dim();
    let n = 2 * d;
    let mut entries: Vec<(u32, u32, f64)> = Vec::new();
    let mut push = |i: usize, j: usize, v: f64| {
        if v != 0.0 && i <= j {
            entries.push((i as u32, j as u32, 0.5 * v));
        }
    };
    for i in 0..d {
        for j in 0..d {
            let z = h.matrix()[(i, j)];
            push(i, j, z.re);
            push(d + i, d + j, z.re);
            push(i, d + j, -z.im);
            push(d + i, j, z.im);
        }
    }
    entries.sort_by_key(|&(i, j, _)| (i, j));
    SparseSym::new(n, &entries.iter().map(|&(i, j, v)| (i as usize, j as usize, v)).collect::<Vec<_>>())
        .expect("entries are in range and finite")
}

/// Number of Hermitian basis elements for dimension `d`.
pub fn hermitian_basis_len(d: usize) -> usize {
    d * d
}

enum BasisElem {
    Diag(usize),
    Real(usize, usize),
    Imag(usize, usize),
}

fn basis_elem(d: usize, a: usize) -> BasisElem {
    debug_assert!(a < d * d);
    if a < d {
        return BasisElem::Diag(a);
    }
    let rest = a - d;
    let pair = rest / 2;
    // Pair index -> (p, q), p < q, lexicographic.
    let mut p = 0;
    let mut acc = 0;
    while acc + (d - 1 - p) <= pair {
        acc += d - 1 - p;
        p += 1;
    }
    let q = p + 1 + (pair - acc);
    if rest % 2 == 0 {
        BasisElem::Real(p, q)
    } else {
        BasisElem::Imag(p, q)
    }
}

/// `(1/2) embed(H_a)` as a sparse coefficient on the embedded `2d` block.
pub fn hermitian_basis_coeff(d: usize, a: usize) -> SparseSym {
    let raw: Vec<(usize, usize, f64)> = match basis_elem(d, a) {
        BasisElem::Diag(p) => vec![(p, p, 0.5), (d + p, d + p, 0.5)],
        BasisElem::Real(p, q) => vec![(p, q, 0.5), (d + p, d + q, 0.5)],
        BasisElem::Imag(p, q) => vec![(p, d + q, -0.5), (q, d + p, 0.5)],
    };
    SparseSym::new(2 * d, &raw).expect("basis entries are in range")
}

/// `Tr(H_a G)` for Hermitian `G`; the right-hand side of basis constraints.
pub fn hermitian_basis_inner(d: usize, a: usize, g: &HermitianOperator) -> f64 {
    debug_assert_eq!(g.dim(), d);
    match basis_elem(d, a) {
        BasisElem::Diag(p) => g.matrix()[(p, p)].re,
        BasisElem::Real(p, q) => 2.0 * g.matrix()[(p, q)].re,
        BasisElem::Imag(p, q) => 2.0 * g.matrix()[(p, q)].im,
    }
}

/// Conjugation `B^dag H_a B` of a basis element, as a Hermitian operator on
/// the column space of `B`; used to restrict constraints to subspaces.
pub fn hermitian_basis_conjugated(d: usize, a: usize, b: &ComplexMatrix) -> HermitianOperator {
    debug_assert_eq!(b.rows(), d);
    let r = b.cols();
    let m = match basis_elem(d, a) {
        BasisElem::Diag(p) => ComplexMatrix::from_fn(r, r, |x, y| b[(p, x)].conj() * b[(p, y)]),
        BasisElem::Real(p, q) => ComplexMatrix::from_fn(r, r, |x, y| {
            b[(p, x)].conj() * b[(q, y)] + b[(q, x)].conj() * b[(p, y)]
        }),
        BasisElem::Imag(p, q) => {
            let i = Complex64::new(0.0, 1.0);
            ComplexMatrix::from_fn(r, r, |x, y| {
                i * (b[(p, x)].conj() * b[(q, y)] - b[(q, x)].conj() * b[(p, y)])
            })
        }
    };
    HermitianOperator::symmetrize(m).expect("conjugated basis element is finite")
}

/// Reconstructs `sum_a y_a H_a` from constraint multipliers.
pub fn hermitian_from_multipliers(d: usize, y: &[f64]) -> HermitianOperator {
    debug_assert_eq!(y.len(), d * d);
    let mut m = ComplexMatrix::zeros(d, d);
    for (a, &ya) in y.iter().enumerate() {
        if ya == 0.0 {
            continue;
        }
        match basis_elem(d, a) {
            BasisElem::Diag(p) => m[(p, p)] += Complex64::new(ya, 0.0),
            BasisElem::Real(p, q) => {
                m[(p, q)] += Complex64::new(ya, 0.0);
                m[(q, p)] += Complex64::new(ya, 0.0);
            }
            BasisElem::Imag(p, q) => {
                m[(p, q)] += Complex64::new(0.0, ya);
                m[(q, p)] += Complex64::new(0.0, -ya);
            }
        }
    }
    HermitianOperator::symmetrize(m).expect("finite multipliers")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::dense;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn test_hermitian(d: usize, seed: usize) -> HermitianOperator {
        let m = ComplexMatrix::from_fn(d, d, |i, j| {
            let re = (((i * 31 + j * 17 + seed * 7) % 23) as f64 - 11.0) / 23.0;
            let im = if i == j {
                0.0
            } else {
                (((i * 13 + j * 29 + seed * 3) % 19) as f64 - 9.0) / 19.0
            };
            c(re, im)
        });
        let sym = m.add(&m.adjoint()).scale_real(0.5);
        HermitianOperator::new(sym).unwrap()
    }

    #[test]
    fn embed_identity() {
        let e = embed_complex(&HermitianOperator::identity(3));
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(e.get(i, j), expect);
            }
        }
    }

    #[test]
    fn embed_pauli_y_matches_hand_expansion() {
        let sy = HermitianOperator::new(
            ComplexMatrix::from_rows(&[
                vec![(0.0, 0.0), (0.0, -1.0)],
                vec![(0.0, 1.0), (0.0, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let e = embed_complex(&sy);
        let expect = [
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(e.get(i, j), expect[i][j]);
            }
        }
    }

    #[test]
    fn trace_doubling_identity() {
        for seed in 0..5 {
            let a = test_hermitian(4, seed);
            let b = test_hermitian(4, seed + 11);
            let ea = embed_complex(&a);
            let eb = embed_complex(&b);
            let mut prod = vec![0.0; 64];
            dense::mat_mul(8, ea.data(), eb.data(), &mut prod);
            let tr_embedded: f64 = (0..8).map(|i| prod[i * 8 + i]).sum();
            assert!((tr_embedded - 2.0 * a.inner(&b)).abs() < 1e-12);
        }
    }

    #[test]
    fn embed_preserves_psd_both_ways() {
        // PSD input: Cholesky of embed + tiny ridge succeeds.
        let psd = {
            let g = test_hermitian(3, 2);
            let m = g.matrix().mul(&g.matrix().adjoint());
            HermitianOperator::new(m).unwrap()
        };
        let mut shifted = embed_complex(&psd).data().to_vec();
        for i in 0..6 {
            shifted[i * 6 + i] += 1e-12;
        }
        assert!(dense::cholesky(6, &shifted).is_some());
        // Indefinite input: embedding stays indefinite.
        let indef = HermitianOperator::new(
            ComplexMatrix::from_rows(&[
                vec![(1.0, 0.0), (0.0, 0.0)],
                vec![(0.0, 0.0), (-1.0, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        assert!(dense::cholesky(4, embed_complex(&indef).data()).is_none());
    }

    #[test]
    fn unembed_inverts_embed() {
        let h = test_hermitian(4, 9);
        let back = unembed_hermitian(&embed_complex(&h)).unwrap();
        assert!(back.matrix().max_abs_diff(h.matrix()) < 1e-15);
    }

    #[test]
    fn basis_enumeration_is_complete_and_consistent() {
        let d = 4;
        let g = test_hermitian(d, 5);
        let eg = embed_complex(&g);
        for a in 0..hermitian_basis_len(d) {
            // <(1/2) embed(H_a), embed(G)> must equal Tr(H_a G).
            let coeff = hermitian_basis_coeff(d, a);
            let lhs = coeff.inner(eg.data());
            let rhs = hermitian_basis_inner(d, a, &g);
            assert!(
                (lhs - rhs).abs() < 1e-12,
                "basis element {a}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn multiplier_reconstruction_matches_basis_inner() {
        let d = 3;
        let y: Vec<f64> = (0..d * d).map(|a| (a as f64 - 3.5) / 4.0).collect();
        let z = hermitian_from_multipliers(d, &y);
        // <H_a, Z> = y_a * |H_a|^2 with |H_a|^2 = 1 (diagonal) or 2 (pairs).
        for a in 0..d * d {
            let norm_sq = if a < d { 1.0 } else { 2.0 };
            let got = hermitian_basis_inner(d, a, &z);
            assert!((got - y[a] * norm_sq).abs() < 1e-13);
        }
    }

    #[test]
    fn conjugated_basis_matches_direct_product() {
        let d = 3;
        let b = ComplexMatrix::from_rows(&[
            vec![(1.0 / 2f64.sqrt(), 0.0), (0.0, 0.0)],
            vec![(0.0, 1.0 / 2f64.sqrt()), (0.0, 0.0)],
            vec![(0.0, 0.0), (1.0, 0.0)],
        ])
        .unwrap();
        for a in 0..hermitian_basis_len(d) {
            let direct = {
                let ha = {
                    let mut y = vec![0.0; d * d];
                    y[a] = 1.0;
                    hermitian_from_multipliers(d, &y)
                };
                ha.conjugate_with(&b)
            };
            let fast = hermitian_basis_conjugated(d, a, &b);
            assert!(fast.matrix().max_abs_diff(direct.matrix()) < 1e-13);
        }
    }
}
