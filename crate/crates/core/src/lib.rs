//! Optimal discrimination of quantum state ensembles and sequences.
//!
//! This crate solves two standard state-discrimination problems over finite
//! ensembles `{(q_i, rho_i)}` of density operators:
//!
//! * **minimum-error** discrimination: choose a POVM maximizing the average
//!   probability of naming the prepared state correctly, and
//! * **unambiguous** discrimination: never misidentify, at the price of an
//!   extra inconclusive outcome whose probability is minimized.
//!
//! Both problems are semidefinite programs and are solved here with a
//! self-contained primal-dual interior-point method ([`sdp`]).  On top of the
//! single-ensemble solvers the crate verifies the product structure of
//! sequence discrimination: when `k` systems are prepared independently from
//! ensembles `E^1, ..., E^k`, the optimal success probability of the joint
//! ensemble factorizes as the product of the component optima, the optimal
//! measurement can be taken as a tensor product of component measurements,
//! and (for unambiguous discrimination) feasibility and the conclusive
//! subspaces also factorize componentwise.
//!
//! Module map:
//!
//! * [`linalg`]: dense complex matrices, a Jacobi Hermitian eigensolver, and
//!   subspace algebra (kernels, supports, intersections) on top of it.
//! * [`ensemble`]: ensembles, sequence ensembles, POVMs, cost matrices.
//! * [`sdp`]: block-diagonal semidefinite programming with equality
//!   constraints, plus the complex-to-real symmetric embedding.
//! * [`minerror`]: minimum-error solvers, the two-state closed form, and
//!   optimality certificates.
//! * [`unambiguous`]: unambiguous-discrimination feasibility, solvers, and
//!   the product construction for sequences.
//! * [`sample`]: seeded random instance generators used by tests, benches
//!   and the CLI.

#![forbid(unsafe_code)]

pub mod ensemble;
pub mod linalg;
pub mod minerror;
pub mod sample;
pub mod sdp;
pub mod unambiguous;

pub use minerror::{
    check_hykl_certificate, helstrom_two, solve_min_error, verify_product_min_error,
    CertificateVerdict, HyklCertificate, MinErrorError, MinErrorSolution, Paradigm,
    ProductTheoremReport, ProductVerifyOptions, SolverStats, CERTIFICATE_TOL,
};

pub use ensemble::{
    tensor_povm, CostMatrix, Ensemble, EnsembleError, Povm, SequenceEnsemble, WeightedState,
    POVM_COMPLETENESS_TOL, PRIOR_TOL, SEQUENCE_PRIOR_TOL,
};

pub use linalg::{
    eig_hermitian, eigvals_hermitian, is_psd, kron, kron_all, kron_basis, kron_hermitian,
    kron_with_cap, trace_norm, ComplexMatrix, EigenDecomposition, HermitianOperator, LinalgError,
    PsdVerdict, SubspaceBasis, ToleranceConfig, DEFAULT_DIM_CAP,
};
pub use linalg::{
    kernel_basis, orthogonal_complement, projector_distance, subspace_contains, subspace_equal,
    subspace_intersection, subspace_sum, support_basis,
};
pub use sdp::{
    ConicProgram, Constraint, LinearTerm, Relation, SdpError, SdpSolution, Sense, SolveStatus,
    SolverOptions, SparseSym, SymMatrix,
};
pub use sample::{
    random_density, random_ensemble, random_gaussian_matrix, random_hermitian, random_priors,
    random_pure_ensemble, random_pure_state, random_subspace, random_two_pure_ensemble,
    random_ud_feasible_ensemble, random_ud_infeasible_ensemble, random_unit_vector,
    random_unitary, rng_from_seed, GENERATOR_NAME,
};
pub use unambiguous::{
    audit_ud_solution, build_product_ud_solution, check_sequence_ud_feasible, check_ud_feasible,
    compute_theta, solve_unambiguous, verify_kernel_decomposition, verify_product_unambiguous,
    KernelDecompositionCheck, SequenceFeasibilityMode, StateFeasibility, UdError, UdFeasibility,
    UdSolution, UdSolutionAudit, UD_DUAL_TOL, UD_PRIMAL_TOL, UD_UNAMBIGUITY_TOL,
};
