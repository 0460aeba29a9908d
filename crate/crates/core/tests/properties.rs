//! Randomized property tests for the algebraic identities the solvers
//! rely on.  Each case is generated from a proptest-supplied seed through
//! the crate's own deterministic generators, so failures shrink to a
//! reproducible seed.

use proptest::prelude::*;
use rand::Rng;

use seqdisc_core::linalg::{
    eig_hermitian, is_psd, kernel_basis, kron_basis, kron_hermitian, orthogonal_complement,
    projector_distance, subspace_intersection, subspace_sum, support_basis, ComplexMatrix,
    SubspaceBasis, ToleranceConfig,
};
use seqdisc_core::sample::{
    random_density, random_ensemble, random_hermitian, random_priors, random_subspace,
    random_unitary, rng_from_seed,
};
use seqdisc_core::{
    solve_min_error, Ensemble, SequenceEnsemble, SolverOptions, WeightedState,
};

fn frobenius(m: &ComplexMatrix) -> f64 {
    m.data().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// `ker(H)` and `supp(H)` are orthogonal complements: their projectors
    /// sum to the identity.
    #[test]
    fn kernel_and_support_partition_the_space(seed in any::<u64>(), dim in 1usize..=6) {
        let mut rng = rng_from_seed(seed);
        let tol = ToleranceConfig::default();
        let rank = rng.random_range(1..=dim);
        let h = random_density(dim, rank, &mut rng);
        let kernel = kernel_basis(&h, &tol).unwrap();
        let support = support_basis(&h, &tol).unwrap();
        prop_assert_eq!(kernel.rank() + support.rank(), dim);
        let sum = kernel.projector().add(&support.projector());
        let dev = sum.matrix().max_abs_diff(&ComplexMatrix::identity(dim));
        prop_assert!(dev < 1e-9, "projector sum deviates by {dev}");
    }

    /// Intersection does not depend on argument order.
    #[test]
    fn intersection_is_order_invariant(seed in any::<u64>(), dim in 2usize..=6) {
        let mut rng = rng_from_seed(seed);
        let tol = ToleranceConfig::default();
        let a = random_subspace(dim, rng.random_range(1..=dim), &mut rng);
        let b = random_subspace(dim, rng.random_range(1..=dim), &mut rng);
        let c = random_subspace(dim, rng.random_range(1..=dim), &mut rng);
        let abc = subspace_intersection(&[a.clone(), b.clone(), c.clone()], &tol).unwrap();
        let cba = subspace_intersection(&[c, b, a], &tol).unwrap();
        let dist = projector_distance(&abc, &cba).unwrap();
        prop_assert!(dist < 1e-8, "order changed the intersection by {dist}");
    }

    /// De Morgan for subspaces: the complement of an intersection is the
    /// sum of the complements.
    #[test]
    fn complement_swaps_intersection_and_sum(seed in any::<u64>(), dim in 2usize..=6) {
        let mut rng = rng_from_seed(seed);
        let tol = ToleranceConfig::default();
        let v1 = random_subspace(dim, rng.random_range(1..=dim), &mut rng);
        let v2 = random_subspace(dim, rng.random_range(1..=dim), &mut rng);
        let lhs = orthogonal_complement(
            &subspace_intersection(&[v1.clone(), v2.clone()], &tol).unwrap(),
        )
        .unwrap();
        let rhs = subspace_sum(
            &[
                orthogonal_complement(&v1).unwrap(),
                orthogonal_complement(&v2).unwrap(),
            ],
            &tol,
        )
        .unwrap();
        let dist = projector_distance(&lhs, &rhs).unwrap();
        prop_assert!(dist <= 1e-8, "De Morgan violated by {dist}");
    }

    /// Tensor monotonicity: `A >= C >= 0` and `B >= D >= 0` imply
    /// `A (x) B >= C (x) D`.
    #[test]
    fn tensor_product_preserves_psd_order(
        seed in any::<u64>(),
        m in 2usize..=4,
        n in 2usize..=4,
    ) {
        let mut rng = rng_from_seed(seed);
        let tol = ToleranceConfig::default();
        let c = random_density(m, rng.random_range(1..=m), &mut rng).scale(rng.random_range(0.1..2.0));
        let d = random_density(n, rng.random_range(1..=n), &mut rng).scale(rng.random_range(0.1..2.0));
        let a = c.add(&random_density(m, rng.random_range(1..=m), &mut rng).scale(rng.random_range(0.1..2.0)));
        let b = d.add(&random_density(n, rng.random_range(1..=n), &mut rng).scale(rng.random_range(0.1..2.0)));
        let diff = kron_hermitian(&a, &b, 64).unwrap().sub(&kron_hermitian(&c, &d, 64).unwrap());
        let verdict = is_psd(&diff, &tol).unwrap();
        prop_assert!(verdict.psd, "min eigenvalue {}", verdict.min_eigenvalue);
    }

    /// `ker(A (x) B) = ker(A) (x) full + full (x) ker(B)` for PSD `A`, `B`.
    #[test]
    fn kernel_of_tensor_product_decomposes(
        seed in any::<u64>(),
        m in 2usize..=4,
        n in 2usize..=4,
    ) {
        let mut rng = rng_from_seed(seed);
        let tol = ToleranceConfig::default();
        let a = random_density(m, rng.random_range(1..m), &mut rng);
        let b = random_density(n, rng.random_range(1..n), &mut rng);
        let direct = kernel_basis(&kron_hermitian(&a, &b, 64).unwrap(), &tol).unwrap();
        let from_a = kron_basis(&kernel_basis(&a, &tol).unwrap(), &SubspaceBasis::full(n), 64).unwrap();
        let from_b = kron_basis(&SubspaceBasis::full(m), &kernel_basis(&b, &tol).unwrap(), 64).unwrap();
        let combined = subspace_sum(&[from_a, from_b], &tol).unwrap();
        let dist = projector_distance(&direct, &combined).unwrap();
        prop_assert!(dist <= 1e-8, "kernel decomposition off by {dist}");
    }

    /// `supp(A (x) B) = supp(A) (x) supp(B)` for PSD `A`, `B`.
    #[test]
    fn support_of_tensor_product_factorizes(
        seed in any::<u64>(),
        m in 2usize..=4,
        n in 2usize..=4,
    ) {
        let mut rng = rng_from_seed(seed);
        let tol = ToleranceConfig::default();
        let a = random_density(m, rng.random_range(1..=m), &mut rng);
        let b = random_density(n, rng.random_range(1..=n), &mut rng);
        let direct = support_basis(&kron_hermitian(&a, &b, 64).unwrap(), &tol).unwrap();
        let tensored = kron_basis(
            &support_basis(&a, &tol).unwrap(),
            &support_basis(&b, &tol).unwrap(),
            64,
        )
        .unwrap();
        prop_assert_eq!(direct.rank(), tensored.rank());
        let dist = projector_distance(&direct, &tensored).unwrap();
        prop_assert!(dist <= 1e-8, "support factorization off by {dist}");
    }

    /// Sequence priors are a probability distribution over tuples.
    #[test]
    fn sequence_priors_sum_to_one(seed in any::<u64>(), k in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let components: Vec<Ensemble> = (0..k)
            .map(|i| {
                let dim = rng.random_range(2..=3);
                let len = rng.random_range(2..=3);
                random_ensemble(format!("c{i}"), dim, len, dim, &mut rng)
            })
            .collect();
        let seq = SequenceEnsemble::new(components, false).unwrap();
        let total: f64 = (0..seq.total_count())
            .map(|flat| seq.prior_of(&seq.tuple_from_flat(flat)).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() <= 1e-9, "tuple priors sum to {total}");
    }

    /// Flat simplex draws are valid prior vectors.
    #[test]
    fn generated_priors_are_normalized(seed in any::<u64>(), len in 2usize..=8) {
        let mut rng = rng_from_seed(seed);
        let priors = random_priors(len, &mut rng);
        prop_assert!(priors.iter().all(|&p| p > 0.0 && p < 1.0));
        let total: f64 = priors.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Eigendecomposition reconstructs the operator.
    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), dim in 1usize..=32) {
        let mut rng = rng_from_seed(seed);
        let h = random_hermitian(dim, &mut rng);
        let eig = eig_hermitian(&h).unwrap();
        let v = &eig.eigenvectors;
        let lambda = ComplexMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                num_complex::Complex64::new(eig.eigenvalues[i], 0.0)
            } else {
                num_complex::Complex64::new(0.0, 0.0)
            }
        });
        let rebuilt = v.mul(&lambda).mul(&v.adjoint());
        let err = frobenius(&rebuilt.sub(h.matrix()));
        let scale = frobenius(h.matrix()).max(1e-300);
        prop_assert!(err <= 1e-9 * scale.max(1.0), "relative error {}", err / scale);
    }
}

/// The optimal value is basis-independent: conjugating every state by one
/// unitary leaves it unchanged.
#[test]
fn min_error_value_is_unitarily_invariant() {
    let opts = SolverOptions::default();
    for seed in 0..8 {
        let mut rng = rng_from_seed(seed);
        let dim = rng.random_range(2..=3);
        let len = rng.random_range(2..=3);
        let e = random_ensemble("base", dim, len, dim, &mut rng);
        let u = random_unitary(dim, &mut rng);
        let rotated = Ensemble::new(
            "rotated",
            (0..len)
                .map(|j| WeightedState {
                    prior: e.prior(j),
                    rho: e.state(j).conjugate_with(&u.adjoint()),
                })
                .collect(),
        )
        .unwrap();
        let p1 = solve_min_error(&e, &opts).unwrap().p;
        let p2 = solve_min_error(&rotated, &opts).unwrap().p;
        assert!(
            (p1 - p2).abs() <= 1e-7,
            "seed {seed}: {p1} vs {p2} after rotation"
        );
    }
}

/// Success probability of a product measurement with the product
/// assignment multiplies across components.
#[test]
fn product_measurement_success_multiplies() {
    let opts = SolverOptions::default();
    for seed in 0..6 {
        let mut rng = rng_from_seed(100 + seed);
        let components: Vec<Ensemble> = (0..2)
            .map(|i| {
                let dim = rng.random_range(2..=3);
                let len = rng.random_range(2..=3);
                random_ensemble(format!("c{i}"), dim, len, dim, &mut rng)
            })
            .collect();
        let solutions: Vec<_> = components
            .iter()
            .map(|e| solve_min_error(e, &opts).unwrap())
            .collect();
        let product_povm = seqdisc_core::tensor_povm(&[
            solutions[0].povm.clone(),
            solutions[1].povm.clone(),
        ])
        .unwrap();
        let seq = SequenceEnsemble::new(components, false).unwrap();
        let assignment = (0..seq.total_count()).map(|j| (j, j)).collect();
        let joint = seq
            .success_probability(&product_povm, &assignment)
            .unwrap();
        let expected: f64 = solutions.iter().map(|s| s.p).product();
        assert!(
            (joint - expected).abs() <= 1e-9,
            "seed {}: {joint} vs {expected}",
            100 + seed
        );
    }
}
