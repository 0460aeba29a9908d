//! Minimum-error discrimination.
//!
//! The task: given an ensemble `{(q_i, sigma_i)}`, pick a POVM `{M_i}`
//! with one outcome per state maximizing the average success probability
//! `p = sum_i q_i Tr(sigma_i M_i)`.  [`helstrom_two`] evaluates the
//! two-state closed form `p = (1 + ||q_1 sigma_1 - q_2 sigma_2||_1) / 2`;
//! [`solve_min_error`] solves the general case as a semidefinite program
//! over the embedded real cone.
//!
//! Optimality is audited, never assumed: a measurement is optimal if and
//! only if `Gamma = sum_i q_i sigma_i M_i` dominates every `q_j sigma_j`
//! in the PSD order, which [`check_hykl_certificate`] tests directly.
//!
//! [`verify_product_min_error`] exercises the product structure of
//! sequence discrimination: it solves each component ensemble, tensors
//! the optimal component measurements, certifies the tensored measurement
//! as optimal for the joint ensemble, and (within a configurable
//! dimension cap) solves the joint ensemble directly to compare
//! `prod_i p(E^i)` against `p(E_k)` numerically.

use std::fmt;

use thiserror::Error;

use crate::ensemble::{tensor_povm, Ensemble, EnsembleError, Povm, SequenceEnsemble};
use crate::linalg::{
    eig_hermitian, eigvals_hermitian, kron_hermitian, trace_norm, ComplexMatrix,
    HermitianOperator, LinalgError, DEFAULT_DIM_CAP,
};
use crate::sdp::{
    self, embed_half_sparse, hermitian_basis_coeff, hermitian_basis_inner, hermitian_basis_len,
    hermitian_from_multipliers, unembed_hermitian, ConicProgram, Constraint, LinearTerm, Relation,
    SdpError, SdpSolution, Sense, SolveStatus, SolverOptions,
};

/// Default tolerance for optimality certificates; two orders looser than
/// the solver gap so that certified solves never flap.
pub const CERTIFICATE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MinErrorError {
    #[error("expected exactly 2 states, got {got}")]
    StateCount { got: usize },
    #[error("dimension mismatch: ensemble dim {ensemble}, measurement dim {povm}")]
    Dimension { ensemble: usize, povm: usize },
    #[error("measurement has {effects} conclusive effects for {states} states")]
    Arity { effects: usize, states: usize },
    #[error(
        "solver did not reach optimality for {stage}: status {status}, gap {gap:.3e}, \
         residuals {primal_residual:.3e}/{dual_residual:.3e} after {iterations} iterations"
    )]
    SolverFailed {
        stage: String,
        status: SolveStatus,
        gap: f64,
        primal_residual: f64,
        dual_residual: f64,
        iterations: usize,
    },
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// Which discrimination task a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Paradigm {
    MinError,
    Unambiguous,
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Paradigm::MinError => write!(f, "min-error"),
            Paradigm::Unambiguous => write!(f, "unambiguous"),
        }
    }
}

/// Outcome of one certificate or consistency check inside a report.
#[derive(Debug, Clone)]
pub struct CertificateVerdict {
    pub label: String,
    pub pass: bool,
    /// Worst value behind the verdict: the most negative eigenvalue for
    /// PSD checks, the largest violation for overlap or distance checks.
    pub detail: f64,
    /// Tolerance the detail value was compared against.
    pub tolerance: f64,
}

/// Solver diagnostics for one SDP solve inside a report.
#[derive(Debug, Clone)]
pub struct SolverStats {
    pub label: String,
    pub iterations: usize,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl SolverStats {
    pub(crate) fn from_solution(label: impl Into<String>, sol: &SdpSolution) -> Self {
        Self {
            label: label.into(),
            iterations: sol.iterations,
            gap: sol.gap,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
        }
    }
}

/// Optimality certificate for a candidate measurement: with
/// `Gamma = (G + G^dag)/2` for `G = sum_i q_i sigma_i M_i`, the
/// measurement is optimal iff `Gamma - q_j sigma_j` is PSD for every `j`.
#[derive(Debug, Clone)]
pub struct HyklCertificate {
    /// Smallest eigenvalue of `Gamma - q_j sigma_j` per state `j`.
    pub min_eigenvalues: Vec<f64>,
    pub pass: bool,
    /// PSD slack is measured against `-tolerance * scale`.
    pub tolerance: f64,
    /// `max(1, lambda_max(Gamma))`, the scale the tolerance is relative to.
    pub scale: f64,
    /// `Tr(Gamma)`; equals the optimal value when the certificate passes.
    pub gamma_trace: f64,
}

impl HyklCertificate {
    pub fn worst_eigenvalue(&self) -> f64 {
        self.min_eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// One minimum-error solve: value, measurement, and the dual certificate
/// operator recovered from the SDP multipliers.
#[derive(Debug, Clone)]
pub struct MinErrorSolution {
    /// Success probability of `povm`, recomputed from the returned effects.
    pub p: f64,
    pub povm: Povm,
    /// Dual operator `Gamma` with `Tr(Gamma)` equal to the optimal value.
    pub dual_gamma: HermitianOperator,
    pub sdp: SdpSolution,
}

/// Numeric record of one product-theorem verification.  The report is
/// descriptive: it stores both sides of every comparison and lets the
/// caller apply its own tolerance.
#[derive(Debug, Clone)]
pub struct ProductTheoremReport {
    pub paradigm: Paradigm,
    /// Optimal value of each component ensemble.
    pub local_values: Vec<f64>,
    /// Product of the component optima.
    pub product_value: f64,
    /// Independently solved joint value; absent when the joint dimension
    /// exceeds the direct-solve cap.
    pub direct_value: Option<f64>,
    pub abs_diff: Option<f64>,
    pub certificates: Vec<CertificateVerdict>,
    pub solver_stats: Vec<SolverStats>,
}

/// Options for the product-theorem verifiers.
#[derive(Debug, Clone)]
pub struct ProductVerifyOptions {
    /// Joint dimension above which the direct solve is skipped.
    pub direct_cap: usize,
    /// Tolerance for optimality and feasibility certificates.
    pub certificate_tol: f64,
    /// When set, per-tuple certificate checks run on exactly these tuples
    /// instead of all `prod l_i` of them.
    pub sample_tuples: Option<Vec<Vec<usize>>>,
    pub solver: SolverOptions,
}

impl Default for ProductVerifyOptions {
    fn default() -> Self {
        Self {
            direct_cap: 64,
            certificate_tol: CERTIFICATE_TOL,
            sample_tuples: None,
            solver: SolverOptions::default(),
        }
    }
}

/// Two-state closed form.  The measurement projects onto the nonnegative
/// and negative eigenspaces of `q_1 sigma_1 - q_2 sigma_2`; the zero
/// eigenspace goes to outcome 1, fixing one of the equally optimal
/// measurements deterministically.
pub fn helstrom_two(e: &Ensemble) -> Result<(f64, Povm), MinErrorError> {
    if e.len() != 2 {
        return Err(MinErrorError::StateCount { got: e.len() });
    }
    let diff = e.weighted_operator(0).sub(&e.weighted_operator(1));
    let p = 0.5 * (1.0 + trace_norm(&diff)?);
    let eig = eig_hermitian(&diff)?;
    let d = e.dim();
    let mut first = ComplexMatrix::zeros(d, d);
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda >= 0.0 {
            for r in 0..d {
                for c in 0..d {
                    let v = eig.eigenvectors[(r, idx)] * eig.eigenvectors[(c, idx)].conj();
                    first[(r, c)] += v;
                }
            }
        }
    }
    let m1 = HermitianOperator::symmetrize(first)?;
    let m2 = HermitianOperator::identity(d).sub(&m1);
    let povm = Povm::new(vec![m1, m2], None)?;
    Ok((p, povm))
}

/// Solves `maximize sum_i q_i Tr(sigma_i M_i)` over POVMs with one effect
/// per state.  The returned effects are adjusted by spreading the
/// completeness defect `I - sum M_i` equally, so they sum to the identity
/// up to roundoff; `p` is recomputed from the adjusted measurement.
pub fn solve_min_error(e: &Ensemble, opts: &SolverOptions) -> Result<MinErrorSolution, MinErrorError> {
    let d = e.dim();
    let l = e.len();
    let blocks = vec![2 * d; l];
    let objective = (0..l)
        .map(|i| embed_half_sparse(&e.weighted_operator(i)))
        .collect();
    let identity = HermitianOperator::identity(d);
    let mut constraints = Vec::with_capacity(hermitian_basis_len(d));
    for a in 0..hermitian_basis_len(d) {
        let coeff = hermitian_basis_coeff(d, a);
        constraints.push(Constraint {
            terms: (0..l)
                .map(|block| LinearTerm {
                    block,
                    coeff: coeff.clone(),
                })
                .collect(),
            rhs: hermitian_basis_inner(d, a, &identity),
            relation: Relation::Equal,
        });
    }
    let program = ConicProgram {
        blocks,
        objective,
        constraints,
        sense: Sense::Maximize,
    };
    let sol = sdp::solve(&program, opts)?;
    ensure_optimal(&sol, e.label())?;
    let mut effects = Vec::with_capacity(l);
    for block in &sol.primal_blocks {
        effects.push(unembed_hermitian(block)?);
    }
    let mut sum = HermitianOperator::zero(d);
    for m in &effects {
        sum = sum.add(m);
    }
    let share = HermitianOperator::identity(d).sub(&sum).scale(1.0 / l as f64);
    for m in &mut effects {
        *m = m.add(&share);
    }
    let povm = Povm::new(effects, None)?;
    let p = (0..l)
        .map(|i| e.prior(i) * e.state(i).inner(povm.effect(i)))
        .sum();
    let dual_gamma = hermitian_from_multipliers(d, &sol.dual_multipliers);
    Ok(MinErrorSolution {
        p,
        povm,
        dual_gamma,
        sdp: sol,
    })
}

/// Tests the optimality condition `Gamma - q_j sigma_j >= 0` for all `j`,
/// with `Gamma` symmetrized before eigenvalue checks because it is only
/// Hermitian analytically at an exact optimum.
pub fn check_hykl_certificate(
    e: &Ensemble,
    m: &Povm,
    tol: f64,
) -> Result<HyklCertificate, MinErrorError> {
    if m.dim() != e.dim() {
        return Err(MinErrorError::Dimension {
            ensemble: e.dim(),
            povm: m.dim(),
        });
    }
    if m.inconclusive_index().is_some() || m.len() != e.len() {
        return Err(MinErrorError::Arity {
            effects: m.conclusive_indices().count(),
            states: e.len(),
        });
    }
    let d = e.dim();
    let mut raw = ComplexMatrix::zeros(d, d);
    for i in 0..e.len() {
        let term = e.state(i).matrix().mul(m.effect(i).matrix());
        raw = raw.add(&term.scale_real(e.prior(i)));
    }
    let gamma = HermitianOperator::symmetrize(raw)?;
    certificate_against(&gamma, (0..e.len()).map(|j| e.weighted_operator(j)), tol)
}

/// Certificate core shared by the direct and tuple-sampled paths: tests
/// `gamma - w_j >= 0` for the given weighted operators.
fn certificate_against(
    gamma: &HermitianOperator,
    weighted: impl Iterator<Item = HermitianOperator>,
    tol: f64,
) -> Result<HyklCertificate, MinErrorError> {
    let gamma_evals = eigvals_hermitian(gamma)?;
    let scale = gamma_evals.first().copied().unwrap_or(0.0).max(1.0);
    let mut min_eigenvalues = Vec::new();
    let mut pass = true;
    for w in weighted {
        let evals = eigvals_hermitian(&gamma.sub(&w))?;
        let min = evals.last().copied().unwrap_or(0.0);
        pass &= min >= -tol * scale;
        min_eigenvalues.push(min);
    }
    Ok(HyklCertificate {
        min_eigenvalues,
        pass,
        tolerance: tol,
        scale,
        gamma_trace: gamma.trace(),
    })
}

fn ensure_optimal(sol: &SdpSolution, stage: &str) -> Result<(), MinErrorError> {
    if sol.status == SolveStatus::Optimal {
        Ok(())
    } else {
        Err(MinErrorError::SolverFailed {
            stage: stage.to_string(),
            status: sol.status,
            gap: sol.gap,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            iterations: sol.iterations,
        })
    }
}

/// Verifies the minimum-error product structure for the given components:
/// solves each `E^i`, certifies each local measurement, certifies the
/// tensored measurement on the joint ensemble, and compares the product
/// of the local optima against a direct joint solve when the joint
/// dimension is within `opts.direct_cap`.
pub fn verify_product_min_error(
    components: &[Ensemble],
    opts: &ProductVerifyOptions,
) -> Result<ProductTheoremReport, MinErrorError> {
    if components.is_empty() {
        return Err(EnsembleError::NoComponents.into());
    }
    let mut local_values = Vec::with_capacity(components.len());
    let mut local_povms = Vec::with_capacity(components.len());
    let mut certificates = Vec::new();
    let mut solver_stats = Vec::new();
    for (i, e) in components.iter().enumerate() {
        let label = format!("component {}", i + 1);
        let sol = solve_min_error(e, &opts.solver)?;
        solver_stats.push(SolverStats::from_solution(&label, &sol.sdp));
        let cert = check_hykl_certificate(e, &sol.povm, opts.certificate_tol)?;
        certificates.push(CertificateVerdict {
            label: format!("{label} measurement optimal"),
            pass: cert.pass,
            detail: cert.worst_eigenvalue(),
            tolerance: opts.certificate_tol,
        });
        local_values.push(sol.p);
        local_povms.push(sol.povm);
    }
    let product_value: f64 = local_values.iter().product();
    let seq = SequenceEnsemble::new(components.to_vec(), false)?;

    let joint_cert = match &opts.sample_tuples {
        None => {
            let joint = seq.to_ensemble(DEFAULT_DIM_CAP)?;
            let joint_povm = tensor_povm(&local_povms)?;
            let cert = check_hykl_certificate(&joint, &joint_povm, opts.certificate_tol)?;
            CertificateVerdict {
                label: "tensored measurement optimal for joint ensemble".to_string(),
                pass: cert.pass,
                detail: cert.worst_eigenvalue(),
                tolerance: opts.certificate_tol,
            }
        }
        Some(tuples) => {
            let mut gamma = HermitianOperator::identity(1);
            for (e, m) in components.iter().zip(&local_povms) {
                let mut raw = ComplexMatrix::zeros(e.dim(), e.dim());
                for i in 0..e.len() {
                    let term = e.state(i).matrix().mul(m.effect(i).matrix());
                    raw = raw.add(&term.scale_real(e.prior(i)));
                }
                gamma = kron_hermitian(&gamma, &HermitianOperator::symmetrize(raw)?, DEFAULT_DIM_CAP)?;
            }
            let weighted = tuples
                .iter()
                .map(|t| {
                    Ok::<_, MinErrorError>(
                        seq.state_of(t)?.scale(seq.prior_of(t)?),
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            let cert = certificate_against(&gamma, weighted.into_iter(), opts.certificate_tol)?;
            CertificateVerdict {
                label: format!(
                    "tensored measurement optimal for joint ensemble ({} sampled tuples)",
                    tuples.len()
                ),
                tolerance: opts.certificate_tol,
                pass: cert.pass,
                detail: cert.worst_eigenvalue(),
            }
        }
    };
    certificates.push(joint_cert);

    let direct_value = if components.len() == 1 {
        // The joint ensemble is the single component; reuse its solve.
        Some(local_values[0])
    } else if seq.total_dim() <= opts.direct_cap {
        let joint = seq.to_ensemble(opts.direct_cap)?;
        let sol = solve_min_error(&joint, &opts.solver)?;
        solver_stats.push(SolverStats::from_solution("joint direct", &sol.sdp));
        let cert = check_hykl_certificate(&joint, &sol.povm, opts.certificate_tol)?;
        certificates.push(CertificateVerdict {
            label: "direct joint measurement optimal".to_string(),
            pass: cert.pass,
            detail: cert.worst_eigenvalue(),
            tolerance: opts.certificate_tol,
        });
        Some(sol.p)
    } else {
        None
    };
    let abs_diff = direct_value.map(|dv| (product_value - dv).abs());

    Ok(ProductTheoremReport {
        paradigm: Paradigm::MinError,
        local_values,
        product_value,
        direct_value,
        abs_diff,
        certificates,
        solver_stats,
    })
}
