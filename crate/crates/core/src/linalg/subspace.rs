//! Subspace algebra through projector eigendecompositions.
//!
//! Kernels and supports of PSD operators come from eigenvalue thresholding
//! at `rank_tol * lambda_max`.  Sums of subspaces are supports of summed
//! projectors, and intersections use the orthocomplement identity
//! `(V_1 cap ... cap V_n)^perp = V_1^perp + ... + V_n^perp`, so every
//! operation returns an orthonormal basis produced by the same eigensolver
//! and is deterministic for identical inputs.

use super::eig::eig_hermitian;
use super::{
    is_psd, ComplexMatrix, HermitianOperator, LinalgError, SubspaceBasis, ToleranceConfig,
};

/// Orthonormal basis of the kernel (eigenvalues below `rank_tol * lambda_max`)
/// of a PSD operator.
pub fn kernel_basis(
    h: &HermitianOperator,
    tol: &ToleranceConfig,
) -> Result<SubspaceBasis, LinalgError> {
    split_spectrum(h, tol).map(|(kernel, _)| kernel)
}

/// Orthonormal basis of the support (range) of a PSD operator.
pub fn support_basis(
    h: &HermitianOperator,
    tol: &ToleranceConfig,
) -> Result<SubspaceBasis, LinalgError> {
    split_spectrum(h, tol).map(|(_, support)| support)
}

fn split_spectrum(
    h: &HermitianOperator,
    tol: &ToleranceConfig,
) -> Result<(SubspaceBasis, SubspaceBasis), LinalgError> {
    let verdict = is_psd(h, tol)?;
    if !verdict.psd {
        return Err(LinalgError::NotPositiveSemidefinite {
            min_eigenvalue: verdict.min_eigenvalue,
        });
    }
    let dec = eig_hermitian(h)?;
    let n = h.dim();
    let lambda_max = dec.eigenvalues.first().copied().unwrap_or(0.0);
    // Eigenvalues are sorted descending, so the support is a prefix of the
    // columns and the kernel is the complementary suffix.
    let rank = if lambda_max <= 0.0 {
        0
    } else {
        let threshold = tol.rank_tol * lambda_max;
        dec.eigenvalues.iter().take_while(|&&v| v >= threshold).count()
    };
    let support = select_columns(&dec.eigenvectors, 0, rank, n)?;
    let kernel = select_columns(&dec.eigenvectors, rank, n, n)?;
    Ok((kernel, support))
}

fn select_columns(
    m: &ComplexMatrix,
    from: usize,
    to: usize,
    ambient: usize,
) -> Result<SubspaceBasis, LinalgError> {
    if to == from {
        return Ok(SubspaceBasis::empty(ambient));
    }
    let cols = ComplexMatrix::from_fn(ambient, to - from, |i, j| m[(i, from + j)]);
    SubspaceBasis::new(ambient, cols)
}

/// Orthogonal complement of a subspace.
///
/// Works on the projector spectrum: eigenvalues of a projector cluster at 0
/// and 1, so the split threshold is fixed at 1/2 and independent of
/// `rank_tol`.
pub fn orthogonal_complement(basis: &SubspaceBasis) -> Result<SubspaceBasis, LinalgError> {
    let d = basis.ambient_dim();
    if basis.rank() == 0 {
        return Ok(SubspaceBasis::full(d));
    }
    if basis.rank() == d {
        return Ok(SubspaceBasis::empty(d));
    }
    let dec = eig_hermitian(&basis.projector())?;
    let inside = dec.eigenvalues.iter().take_while(|&&v| v >= 0.5).count();
    select_columns(&dec.eigenvectors, inside, d, d)
}

/// Span of the union of subspaces, as the support of the summed projectors.
pub fn subspace_sum(
    bases: &[SubspaceBasis],
    tol: &ToleranceConfig,
) -> Result<SubspaceBasis, LinalgError> {
    let first = bases.first().ok_or(LinalgError::EmptyList)?;
    let d = first.ambient_dim();
    let mut acc = HermitianOperator::zero(d);
    for b in bases {
        if b.ambient_dim() != d {
            return Err(LinalgError::DimensionMismatch {
                expected: d,
                found: b.ambient_dim(),
            });
        }
        acc = acc.add(&b.projector());
    }
    support_basis(&acc, tol)
}

/// Intersection of subspaces via complement of the summed complements.
pub fn subspace_intersection(
    bases: &[SubspaceBasis],
    tol: &ToleranceConfig,
) -> Result<SubspaceBasis, LinalgError> {
    if bases.is_empty() {
        return Err(LinalgError::EmptyList);
    }
    let complements: Vec<SubspaceBasis> = bases
        .iter()
        .map(orthogonal_complement)
        .collect::<Result<_, _>>()?;
    let d = bases[0].ambient_dim();
    for b in bases {
        if b.ambient_dim() != d {
            return Err(LinalgError::DimensionMismatch {
                expected: d,
                found: b.ambient_dim(),
            });
        }
    }
    orthogonal_complement(&subspace_sum(&complements, tol)?)
}

/// Frobenius distance between the projectors of two subspaces.
pub fn projector_distance(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<f64, LinalgError> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.ambient_dim(),
            found: b.ambient_dim(),
        });
    }
    Ok(a.projector()
        .matrix()
        .sub(b.projector().matrix())
        .frobenius_norm())
}

/// Whether two subspaces are equal within `subspace_eq_tol`.
pub fn subspace_equal(
    a: &SubspaceBasis,
    b: &SubspaceBasis,
    tol: &ToleranceConfig,
) -> Result<bool, LinalgError> {
    Ok(projector_distance(a, b)? <= tol.subspace_eq_tol)
}

/// Whether `inner` is contained in `outer` within `subspace_eq_tol`,
/// measured as `|(I - P_outer) P_inner|_F`.
pub fn subspace_contains(
    outer: &SubspaceBasis,
    inner: &SubspaceBasis,
    tol: &ToleranceConfig,
) -> Result<bool, LinalgError> {
    if outer.ambient_dim() != inner.ambient_dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: outer.ambient_dim(),
            found: inner.ambient_dim(),
        });
    }
    let d = outer.ambient_dim();
    let residual = ComplexMatrix::identity(d)
        .sub(outer.projector().matrix())
        .mul(inner.projector().matrix());
    Ok(residual.frobenius_norm() <= tol.subspace_eq_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn rank_one(v: &[Complex64]) -> HermitianOperator {
        HermitianOperator::projector_onto(v).unwrap()
    }

    #[test]
    fn kernel_and_support_of_rank_one_projector() {
        let h = rank_one(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let kernel = kernel_basis(&h, &tol()).unwrap();
        let support = support_basis(&h, &tol()).unwrap();
        assert_eq!(kernel.rank(), 2);
        assert_eq!(support.rank(), 1);
        assert!((support.columns()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        // Kernel and support projectors sum to the identity.
        let sum = kernel.projector().add(&support.projector());
        assert!(
            sum.matrix().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12
        );
    }

    #[test]
    fn kernel_of_zero_operator_is_everything() {
        let h = HermitianOperator::zero(4);
        let kernel = kernel_basis(&h, &tol()).unwrap();
        assert_eq!(kernel.rank(), 4);
        assert_eq!(support_basis(&h, &tol()).unwrap().rank(), 0);
    }

    #[test]
    fn kernel_rejects_indefinite_operator() {
        let m = ComplexMatrix::from_rows(&[
            vec![(1.0, 0.0), (0.0, 0.0)],
            vec![(0.0, 0.0), (-1.0, 0.0)],
        ])
        .unwrap();
        let h = HermitianOperator::new(m).unwrap();
        assert!(matches!(
            kernel_basis(&h, &tol()),
            Err(LinalgError::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn complement_of_complement_is_identity_map() {
        let h = rank_one(&[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]);
        let s = support_basis(&h, &tol()).unwrap();
        let cc = orthogonal_complement(&orthogonal_complement(&s).unwrap()).unwrap();
        assert!(subspace_equal(&s, &cc, &tol()).unwrap());
    }

    #[test]
    fn intersection_of_two_planes_in_three_dims() {
        // span{e0, e1} cap span{e1, e2} = span{e1}.
        let e0 = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let e1 = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        let e2 = [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let p01 = rank_one(&e0).add(&rank_one(&e1));
        let p12 = rank_one(&e1).add(&rank_one(&e2));
        let a = support_basis(&p01, &tol()).unwrap();
        let b = support_basis(&p12, &tol()).unwrap();
        let cap = subspace_intersection(&[a, b], &tol()).unwrap();
        assert_eq!(cap.rank(), 1);
        let expected = support_basis(&rank_one(&e1), &tol()).unwrap();
        assert!(subspace_equal(&cap, &expected, &tol()).unwrap());
    }

    #[test]
    fn intersection_is_order_invariant() {
        let a = support_basis(
            &rank_one(&[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
            &tol(),
        )
        .unwrap();
        let b = SubspaceBasis::full(3);
        let ab = subspace_intersection(&[a.clone(), b.clone()], &tol()).unwrap();
        let ba = subspace_intersection(&[b, a.clone()], &tol()).unwrap();
        assert!(subspace_equal(&ab, &ba, &tol()).unwrap());
        assert!(subspace_equal(&ab, &a, &tol()).unwrap());
    }

    #[test]
    fn sum_of_disjoint_lines_is_a_plane() {
        let a = support_basis(&rank_one(&[c(1.0, 0.0), c(0.0, 0.0)]), &tol()).unwrap();
        let b = support_basis(&rank_one(&[c(0.0, 0.0), c(0.0, 1.0)]), &tol()).unwrap();
        let s = subspace_sum(&[a, b], &tol()).unwrap();
        assert_eq!(s.rank(), 2);
    }

    #[test]
    fn containment_detects_proper_subspace() {
        let line = support_basis(&rank_one(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]), &tol())
            .unwrap();
        let full = SubspaceBasis::full(3);
        assert!(subspace_contains(&full, &line, &tol()).unwrap());
        assert!(!subspace_contains(&line, &full, &tol()).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = SubspaceBasis::full(2);
        let b = SubspaceBasis::full(3);
        assert!(subspace_equal(&a, &b, &tol()).is_err());
        assert!(subspace_intersection(&[a, b], &tol()).is_err());
    }

    #[test]
    fn empty_list_is_an_error() {
        assert!(matches!(
            subspace_intersection(&[], &tol()),
            Err(LinalgError::EmptyList)
        ));
        assert!(matches!(
            subspace_sum(&[], &tol()),
            Err(LinalgError::EmptyList)
        ));
    }
}
