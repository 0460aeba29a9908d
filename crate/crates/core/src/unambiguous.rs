//! Unambiguous discrimination.
//!
//! Here a measurement may return "inconclusive", but a conclusive outcome
//! must never name the wrong state: `Tr(sigma_i M_j) = 0` for `i != j`.
//! The optimization maximizes the probability of a conclusive (and hence
//! correct) answer.
//!
//! Structure of the solution: with `Q = sum_i sigma_i`, state `j` can be
//! conclusively identified iff removing it shrinks the joint support
//! ([`check_ud_feasible`]).  The conclusive effect for `j` must live in
//! `ker(sigma_i)` for all `i != j`; an orthonormal basis `Theta_j` of that
//! subspace ([`compute_theta`]) reduces the problem to small PSD blocks
//! `Delta_j` with `M_j = Theta_j Delta_j Theta_j^dag`, which is the SDP
//! solved by [`solve_unambiguous`].  Every solve is audited after the
//! fact by [`audit_ud_solution`]: primal feasibility, the dual
//! certificate `Theta_j^dag (Z - q_j sigma_j) Theta_j >= 0` with
//! `Tr(Z)` matching the value, and the unambiguity condition itself.
//!
//! All of this is covariant under tensor products: sequence feasibility
//! reduces to component feasibility ([`check_sequence_ud_feasible`]), the
//! conclusive subspaces of the joint ensemble factorize as
//! `Theta(x) = Theta^1_{x_1} (x) ... (x) Theta^k_{x_k}`
//! ([`verify_kernel_decomposition`] tests this identity numerically from
//! two independent constructions), and tensoring optimal component
//! solutions yields an optimal joint solution
//! ([`build_product_ud_solution`], [`verify_product_unambiguous`]).
//!
//! The subspace arguments assume the joint support of each component
//! ensemble spans its whole space, so all internal computation restricts
//! to the joint support first and lifts results back afterwards.

use thiserror::Error;

use crate::ensemble::{Ensemble, EnsembleError, Povm, SequenceEnsemble};
use crate::linalg::{
    eigvals_hermitian, kernel_basis, kron_basis, kron_hermitian, orthogonal_complement,
    projector_distance, subspace_equal, support_basis, HermitianOperator, LinalgError,
    SubspaceBasis, ToleranceConfig, DEFAULT_DIM_CAP,
};
use crate::minerror::{
    CertificateVerdict, Paradigm, ProductTheoremReport, ProductVerifyOptions, SolverStats,
};
use crate::sdp::{
    self, embed_half_sparse, hermitian_basis_coeff, hermitian_basis_conjugated,
    hermitian_basis_inner, hermitian_basis_len, hermitian_from_multipliers, unembed_hermitian,
    ConicProgram, Constraint, LinearTerm, Relation, SdpError, SdpSolution, Sense, SolveStatus,
    SolverOptions, SparseSym,
};

/// Tolerance on primal feasibility: `sum_j M_j <= I` up to this slack.
pub const UD_PRIMAL_TOL: f64 = 1e-8;
/// Tolerance on dual PSD certificates and on `|Tr(Z) - p|`.
pub const UD_DUAL_TOL: f64 = 1e-7;
/// Tolerance on cross overlaps `Tr(sigma_i M_j)`, `i != j`.
pub const UD_UNAMBIGUITY_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum UdError {
    #[error("state index {index} out of range for {count} states")]
    StateIndex { index: usize, count: usize },
    #[error("expected {expected} effects (one per state plus inconclusive), got {got}")]
    Shape { expected: usize, got: usize },
    #[error("dimension mismatch: ensemble dim {ensemble}, solution dim {solution}")]
    Dimension { ensemble: usize, solution: usize },
    #[error("{components} components but {solutions} local solutions")]
    ComponentMismatch { components: usize, solutions: usize },
    #[error("local solution {index} rejected: {reason}")]
    LocalSolutionInvalid { index: usize, reason: String },
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

/// Per-state feasibility verdict.
#[derive(Debug, Clone)]
pub struct StateFeasibility {
    /// Whether this state can ever be conclusively identified.
    pub identifiable: bool,
    /// Rank of the joint support after removing this state.
    pub excluded_rank: usize,
}

/// Which states of an ensemble (or which tuples of a sequence) admit
/// conclusive identification.  The full ensemble is unambiguously
/// discriminable iff every state is.
#[derive(Debug, Clone)]
pub struct UdFeasibility {
    pub overall: bool,
    /// Rank of the joint support of all states.
    pub joint_rank: usize,
    pub per_state: Vec<StateFeasibility>,
}

/// How to decide sequence feasibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceFeasibilityMode {
    /// Combine component verdicts; never materializes joint states.
    PerComponent,
    /// Materialize the joint ensemble (dimension at most `cap`) and test
    /// it like any other ensemble.  Exists as an independent oracle for
    /// the per-component reduction.
    Direct { cap: usize },
}

/// One unambiguous-discrimination solve.
///
/// The conclusive effects are `M_j = Theta_j Delta_j Theta_j^dag`; the
/// measurement stored in `povm` lists them in state order followed by the
/// inconclusive effect `I - sum_j M_j`.  `deltas[j]` is `None` when
/// `Theta_j` has rank zero, meaning state `j` is structurally impossible
/// to identify and its effect is zero.
#[derive(Debug, Clone)]
pub struct UdSolution {
    /// Probability of a conclusive outcome, recomputed from `povm`.
    pub p: f64,
    pub deltas: Vec<Option<HermitianOperator>>,
    /// Conclusive subspace bases on the ambient space, one per state.
    pub thetas: Vec<SubspaceBasis>,
    /// Dual certificate operator with `Tr(dual_z) = p` at optimality.
    pub dual_z: HermitianOperator,
    pub povm: Povm,
    /// Joint support of the ensemble; all effects act within it.
    pub support: SubspaceBasis,
    /// Absent when every `Theta_j` has rank zero and `p = 0` needs no
    /// solver.
    pub sdp: Option<SdpSolution>,
}

/// After-the-fact audit of a [`UdSolution`] against its ensemble.
#[derive(Debug, Clone)]
pub struct UdSolutionAudit {
    /// Smallest eigenvalue of `I - sum_j M_j`; `>= -`[`UD_PRIMAL_TOL`].
    pub primal_min_eigenvalue: f64,
    /// Smallest eigenvalue of `Theta_j^dag (Z - q_j sigma_j) Theta_j`
    /// over states with nonzero `Theta_j`; `None` when there are none.
    pub dual_min_eigenvalue: Option<f64>,
    /// Smallest eigenvalue of `Z` itself.
    pub z_min_eigenvalue: f64,
    /// Largest `Tr(sigma_i M_j)` over `i != j`.
    pub max_cross_overlap: f64,
    /// `|Tr(Z) - p|`.
    pub duality_gap: f64,
    pub pass: bool,
}

impl UdSolutionAudit {
    /// One-line summary of the failed checks, for diagnostics.
    fn failure_reason(&self) -> String {
        let mut parts = Vec::new();
        if self.primal_min_eigenvalue < -UD_PRIMAL_TOL {
            parts.push(format!(
                "primal slack eigenvalue {:.3e}",
                self.primal_min_eigenvalue
            ));
        }
        if self.dual_min_eigenvalue.is_some_and(|v| v < -UD_DUAL_TOL) {
            parts.push(format!(
                "dual certificate eigenvalue {:.3e}",
                self.dual_min_eigenvalue.unwrap()
            ));
        }
        if self.z_min_eigenvalue < -UD_DUAL_TOL {
            parts.push(format!("Z eigenvalue {:.3e}", self.z_min_eigenvalue));
        }
        if self.max_cross_overlap > UD_UNAMBIGUITY_TOL {
            parts.push(format!("cross overlap {:.3e}", self.max_cross_overlap));
        }
        if self.duality_gap > UD_DUAL_TOL {
            parts.push(format!("duality gap {:.3e}", self.duality_gap));
        }
        parts.join(", ")
    }
}

/// Dual-path test of the conclusive-subspace factorization for one tuple:
/// the subspace computed from the joint states directly must equal the
/// tensor product of the component subspaces.
#[derive(Debug, Clone)]
pub struct KernelDecompositionCheck {
    pub tuple: Vec<usize>,
    pub tensor_rank: usize,
    pub direct_rank: usize,
    pub projector_distance: f64,
    pub equal: bool,
}

/// Tests, for each state `j`, whether removing it shrinks the joint
/// support; only then can `j` be conclusively identified.
pub fn check_ud_feasible(e: &Ensemble, tol: &ToleranceConfig) -> Result<UdFeasibility, UdError> {
    let l = e.len();
    let mut avg = HermitianOperator::zero(e.dim());
    for i in 0..l {
        avg = avg.add(e.state(i));
    }
    let avg = avg.scale(1.0 / l as f64);
    let joint = support_basis(&avg, tol)?;
    let mut per_state = Vec::with_capacity(l);
    let mut overall = true;
    for j in 0..l {
        let mut rest = HermitianOperator::zero(e.dim());
        for i in 0..l {
            if i != j {
                rest = rest.add(e.state(i));
            }
        }
        let rest = rest.scale(1.0 / (l - 1) as f64);
        let excluded = support_basis(&rest, tol)?;
        let identifiable = !subspace_equal(&joint, &excluded, tol)?;
        overall &= identifiable;
        per_state.push(StateFeasibility {
            identifiable,
            excluded_rank: excluded.rank(),
        });
    }
    Ok(UdFeasibility {
        overall,
        joint_rank: joint.rank(),
        per_state,
    })
}

/// Sequence feasibility, with per-tuple verdicts in flat tuple order.
///
/// Per-component mode uses the factorization of the conclusive subspaces:
/// a tuple is identifiable iff each of its component states is, and the
/// joint ranks are the corresponding products.  Direct mode ignores the
/// product structure entirely and tests the materialized joint ensemble.
pub fn check_sequence_ud_feasible(
    components: &[Ensemble],
    mode: SequenceFeasibilityMode,
    tol: &ToleranceConfig,
) -> Result<UdFeasibility, UdError> {
    let seq = SequenceEnsemble::new(components.to_vec(), false)?;
    match mode {
        SequenceFeasibilityMode::Direct { cap } => {
            let joint = seq.to_ensemble(cap)?;
            check_ud_feasible(&joint, tol)
        }
        SequenceFeasibilityMode::PerComponent => {
            let locals = components
                .iter()
                .map(|e| check_ud_feasible(e, tol))
                .collect::<Result<Vec<_>, _>>()?;
            let joint_rank: usize = locals.iter().map(|f| f.joint_rank).product();
            let mut per_state = Vec::with_capacity(seq.total_count());
            let mut overall = true;
            for flat in 0..seq.total_count() {
                let tuple = seq.tuple_from_flat(flat);
                // dim of the tensored conclusive subspace; nonzero iff
                // every factor is.
                let conclusive_dim: usize = tuple
                    .iter()
                    .zip(&locals)
                    .map(|(&x, f)| f.joint_rank - f.per_state[x].excluded_rank)
                    .product();
                let identifiable = conclusive_dim > 0;
                overall &= identifiable;
                per_state.push(StateFeasibility {
                    identifiable,
                    excluded_rank: joint_rank - conclusive_dim,
                });
            }
            Ok(UdFeasibility {
                overall,
                joint_rank,
                per_state,
            })
        }
    }
}

/// Orthonormal basis of the subspace where only state `j` has weight:
/// the intersection of the kernels of all other states, computed as the
/// kernel of their sum (these agree for PSD operators).
///
/// Assumes the ensemble's joint support spans the whole space; callers
/// restrict first (see [`solve_unambiguous`]).  Rank zero is a legal
/// result meaning state `j` can never be conclusively identified.
pub fn compute_theta(
    e: &Ensemble,
    j: usize,
    tol: &ToleranceConfig,
) -> Result<SubspaceBasis, UdError> {
    if j >= e.len() {
        return Err(UdError::StateIndex {
            index: j,
            count: e.len(),
        });
    }
    let mut rest = HermitianOperator::zero(e.dim());
    for i in 0..e.len() {
        if i != j {
            rest = rest.add(e.state(i));
        }
    }
    let rest = rest.scale(1.0 / (e.len() - 1) as f64);
    Ok(kernel_basis(&rest, tol)?)
}

/// Conjugates every state into an orthonormal basis of the joint support.
/// Traces and positivity survive up to the spectral truncation, so the
/// restricted ensemble skips strict re-validation.
fn restrict(e: &Ensemble, tol: &ToleranceConfig) -> Result<(Ensemble, SubspaceBasis), UdError> {
    let mut avg = HermitianOperator::zero(e.dim());
    for i in 0..e.len() {
        avg = avg.add(e.state(i));
    }
    let avg = avg.scale(1.0 / e.len() as f64);
    let support = support_basis(&avg, tol)?;
    let b = support.columns();
    let states = (0..e.len())
        .map(|i| crate::ensemble::WeightedState {
            prior: e.prior(i),
            rho: e.state(i).conjugate_with(b),
        })
        .collect();
    let restricted = Ensemble::new_unchecked(e.label().to_string(), support.rank(), states);
    Ok((restricted, support))
}

/// Lifts an operator on the restricted space back to the ambient space:
/// `B h B^dag` for the support basis columns `B`.
fn lift(h: &HermitianOperator, support: &SubspaceBasis) -> HermitianOperator {
    h.conjugate_with(&support.columns().adjoint())
}

/// Maximizes the conclusive probability
/// `sum_j q_j Tr(sigma_j Theta_j Delta_j Theta_j^dag)` over PSD blocks
/// `Delta_j` subject to `sum_j Theta_j Delta_j Theta_j^dag <= I`.
///
/// The problem is solved on the joint support; rank-zero `Theta_j` blocks
/// are dropped from the program (their effect is identically zero), and
/// when every block is rank zero the answer `p = 0` needs no solver.
pub fn solve_unambiguous(e: &Ensemble, opts: &SolverOptions) -> Result<UdSolution, UdError> {
    let tol = ToleranceConfig::default();
    let d = e.dim();
    let l = e.len();
    let (restricted, support) = restrict(e, &tol)?;
    let s = restricted.dim();
    let thetas_r: Vec<SubspaceBasis> = (0..l)
        .map(|j| compute_theta(&restricted, j, &tol))
        .collect::<Result<_, _>>()?;
    let retained: Vec<usize> = (0..l).filter(|&j| thetas_r[j].rank() > 0).collect();

    let thetas: Vec<SubspaceBasis> = thetas_r
        .iter()
        .map(|t| SubspaceBasis::new(d, support.columns().mul(t.columns())))
        .collect::<Result<_, _>>()?;

    if retained.is_empty() {
        let mut effects = vec![HermitianOperator::zero(d); l];
        effects.push(HermitianOperator::identity(d));
        let povm = Povm::new(effects, Some(l))?;
        return Ok(UdSolution {
            p: 0.0,
            deltas: vec![None; l],
            thetas,
            dual_z: HermitianOperator::zero(d),
            povm,
            support,
            sdp: None,
        });
    }

    // Block layout: one 2r_j block per retained Delta_j, then one 2s
    // slack block turning `sum_j M_j <= I` into an equality over the
    // Hermitian basis of the restricted space.
    let mut blocks: Vec<usize> = retained.iter().map(|&j| 2 * thetas_r[j].rank()).collect();
    blocks.push(2 * s);
    let slack_block = retained.len();
    let mut objective: Vec<SparseSym> = retained
        .iter()
        .map(|&j| {
            let weighted = restricted
                .state(j)
                .conjugate_with(thetas_r[j].columns())
                .scale(restricted.prior(j));
            embed_half_sparse(&weighted)
        })
        .collect();
    objective.push(SparseSym::empty(2 * s));
    let identity = HermitianOperator::identity(s);
    let mut constraints = Vec::with_capacity(hermitian_basis_len(s));
    for a in 0..hermitian_basis_len(s) {
        let mut terms: Vec<LinearTerm> = retained
            .iter()
            .enumerate()
            .map(|(block, &j)| LinearTerm {
                block,
                coeff: embed_half_sparse(&hermitian_basis_conjugated(
                    s,
                    a,
                    thetas_r[j].columns(),
                )),
            })
            .collect();
        terms.push(LinearTerm {
            block: slack_block,
            coeff: hermitian_basis_coeff(s, a),
        });
        constraints.push(Constraint {
            terms,
            rhs: hermitian_basis_inner(s, a, &identity),
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
    if sol.status != SolveStatus::Optimal {
        return Err(UdError::SolverFailed {
            stage: e.label().to_string(),
            status: sol.status,
            gap: sol.gap,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            iterations: sol.iterations,
        });
    }

    let mut deltas: Vec<Option<HermitianOperator>> = vec![None; l];
    for (block, &j) in retained.iter().enumerate() {
        deltas[j] = Some(unembed_hermitian(&sol.primal_blocks[block])?);
    }
    let mut effects = Vec::with_capacity(l + 1);
    let mut conclusive_sum = HermitianOperator::zero(d);
    for j in 0..l {
        let effect = match &deltas[j] {
            Some(delta) => {
                let cols = thetas_r[j].columns();
                let m_restricted = HermitianOperator::symmetrize(
                    cols.mul(delta.matrix()).mul(&cols.adjoint()),
                )?;
                lift(&m_restricted, &support)
            }
            None => HermitianOperator::zero(d),
        };
        conclusive_sum = conclusive_sum.add(&effect);
        effects.push(effect);
    }
    effects.push(HermitianOperator::identity(d).sub(&conclusive_sum));
    let povm = Povm::new(effects, Some(l))?;
    let p = (0..l)
        .map(|j| e.prior(j) * e.state(j).inner(povm.effect(j)))
        .sum();
    let dual_z = lift(
        &hermitian_from_multipliers(s, &sol.dual_multipliers),
        &support,
    );
    Ok(UdSolution {
        p,
        deltas,
        thetas,
        dual_z,
        povm,
        support,
        sdp: Some(sol),
    })
}

/// Checks every claimed property of a solution against the ensemble:
/// primal feasibility, dual certificate, `Tr(Z) = p`, and unambiguity.
pub fn audit_ud_solution(e: &Ensemble, sol: &UdSolution) -> Result<UdSolutionAudit, UdError> {
    let d = e.dim();
    let l = e.len();
    if sol.povm.dim() != d {
        return Err(UdError::Dimension {
            ensemble: d,
            solution: sol.povm.dim(),
        });
    }
    if sol.povm.len() != l + 1
        || sol.povm.inconclusive_index() != Some(l)
        || sol.thetas.len() != l
    {
        return Err(UdError::Shape {
            expected: l + 1,
            got: sol.povm.len(),
        });
    }
    let mut slack = HermitianOperator::identity(d);
    for j in 0..l {
        slack = slack.sub(sol.povm.effect(j));
    }
    let primal_min_eigenvalue = min_eig(&slack)?;

    let mut dual_min_eigenvalue: Option<f64> = None;
    for j in 0..l {
        if sol.thetas[j].rank() == 0 {
            continue;
        }
        let w = sol
            .dual_z
            .sub(&e.weighted_operator(j))
            .conjugate_with(sol.thetas[j].columns());
        let m = min_eig(&w)?;
        dual_min_eigenvalue = Some(dual_min_eigenvalue.map_or(m, |v| v.min(m)));
    }
    let z_min_eigenvalue = min_eig(&sol.dual_z)?;

    let mut max_cross_overlap = 0.0f64;
    for j in 0..l {
        for i in 0..l {
            if i != j {
                max_cross_overlap = max_cross_overlap.max(e.state(i).inner(sol.povm.effect(j)));
            }
        }
    }
    let duality_gap = (sol.dual_z.trace() - sol.p).abs();
    let pass = primal_min_eigenvalue >= -UD_PRIMAL_TOL
        && dual_min_eigenvalue.map_or(true, |v| v >= -UD_DUAL_TOL)
        && z_min_eigenvalue >= -UD_DUAL_TOL
        && max_cross_overlap <= UD_UNAMBIGUITY_TOL
        && duality_gap <= UD_DUAL_TOL;
    Ok(UdSolutionAudit {
        primal_min_eigenvalue,
        dual_min_eigenvalue,
        z_min_eigenvalue,
        max_cross_overlap,
        duality_gap,
        pass,
    })
}

fn min_eig(h: &HermitianOperator) -> Result<f64, UdError> {
    if h.dim() == 0 {
        return Ok(0.0);
    }
    Ok(*eigvals_hermitian(h)?
        .last()
        .expect("nonempty spectrum for nonzero dimension"))
}

/// Tensors validated component solutions into a joint solution: per tuple
/// `Theta(x) = (x)_i Theta^i_{x_i}` and `Delta(x) = (x)_i Delta^i_{x_i}`,
/// with dual `Z = (x)_i Z_i` and value `prod_i p_i`.  Component solutions
/// failing their audit are rejected, since the tensored certificates
/// inherit their violations.
pub fn build_product_ud_solution(
    components: &[Ensemble],
    locals: &[UdSolution],
) -> Result<UdSolution, UdError> {
    if components.len() != locals.len() || components.is_empty() {
        return Err(UdError::ComponentMismatch {
            components: components.len(),
            solutions: locals.len(),
        });
    }
    for (index, (e, sol)) in components.iter().zip(locals).enumerate() {
        let audit = audit_ud_solution(e, sol)?;
        if !audit.pass {
            return Err(UdError::LocalSolutionInvalid {
                index,
                reason: audit.failure_reason(),
            });
        }
    }
    if components.len() == 1 {
        return Ok(locals[0].clone());
    }
    let seq = SequenceEnsemble::new(components.to_vec(), false)?;
    let d = seq.total_dim();
    let l = seq.total_count();

    let mut thetas = Vec::with_capacity(l);
    let mut deltas = Vec::with_capacity(l);
    let mut effects = Vec::with_capacity(l + 1);
    let mut conclusive_sum = HermitianOperator::zero(d);
    for flat in 0..l {
        let tuple = seq.tuple_from_flat(flat);
        let mut theta = SubspaceBasis::full(1);
        let mut delta: Option<HermitianOperator> = Some(HermitianOperator::identity(1));
        let mut effect = HermitianOperator::identity(1);
        for (&x, sol) in tuple.iter().zip(locals) {
            theta = kron_basis(&theta, &sol.thetas[x], DEFAULT_DIM_CAP)?;
            delta = match (delta, &sol.deltas[x]) {
                (Some(a), Some(b)) => Some(kron_hermitian(&a, b, DEFAULT_DIM_CAP)?),
                _ => None,
            };
            effect = kron_hermitian(&effect, sol.povm.effect(x), DEFAULT_DIM_CAP)?;
        }
        conclusive_sum = conclusive_sum.add(&effect);
        thetas.push(theta);
        deltas.push(delta);
        effects.push(effect);
    }
    effects.push(HermitianOperator::identity(d).sub(&conclusive_sum));
    let povm = Povm::new(effects, Some(l))?;

    let mut dual_z = HermitianOperator::identity(1);
    let mut support = SubspaceBasis::full(1);
    let mut p = 1.0;
    for sol in locals {
        dual_z = kron_hermitian(&dual_z, &sol.dual_z, DEFAULT_DIM_CAP)?;
        support = kron_basis(&support, &sol.support, DEFAULT_DIM_CAP)?;
        p *= sol.p;
    }
    Ok(UdSolution {
        p,
        deltas,
        thetas,
        dual_z,
        povm,
        support,
        sdp: None,
    })
}

/// Shared scaffolding for tuple-level kernel checks: restricted
/// components, their conclusive subspaces, and the support projector of
/// every restricted joint state.
struct KernelContext {
    seq: SequenceEnsemble,
    component_thetas: Vec<Vec<SubspaceBasis>>,
    state_supports: Vec<HermitianOperator>,
    support_total: HermitianOperator,
}

impl KernelContext {
    fn new(components: &[Ensemble], tol: &ToleranceConfig) -> Result<Self, UdError> {
        let mut restricted = Vec::with_capacity(components.len());
        let mut component_thetas = Vec::with_capacity(components.len());
        for e in components {
            let (r, _) = restrict(e, tol)?;
            let thetas = (0..r.len())
                .map(|j| compute_theta(&r, j, tol))
                .collect::<Result<Vec<_>, _>>()?;
            component_thetas.push(thetas);
            restricted.push(r);
        }
        let seq = SequenceEnsemble::new(restricted, false)?;
        let d = seq.total_dim();
        let mut state_supports = Vec::with_capacity(seq.total_count());
        let mut support_total = HermitianOperator::zero(d);
        for flat in 0..seq.total_count() {
            let state = seq.state_of(&seq.tuple_from_flat(flat))?;
            let proj = support_basis(&state, tol)?.projector();
            support_total = support_total.add(&proj);
            state_supports.push(proj);
        }
        Ok(Self {
            seq,
            component_thetas,
            state_supports,
            support_total,
        })
    }

    fn check(&self, tuple: &[usize], tol: &ToleranceConfig) -> Result<KernelDecompositionCheck, UdError> {
        let flat = self.seq.flat_index(tuple)?;
        // Direct path: intersect the kernels of all other joint states,
        // i.e. take the orthogonal complement of their summed supports.
        // No tensor structure enters here.
        let others = self.support_total.sub(&self.state_supports[flat]);
        let direct = orthogonal_complement(&support_basis(&others, tol)?)?;
        // Tensor path: product of the component conclusive subspaces.
        let mut tensor = SubspaceBasis::full(1);
        for (&x, thetas) in tuple.iter().zip(&self.component_thetas) {
            tensor = kron_basis(&tensor, &thetas[x], DEFAULT_DIM_CAP)?;
        }
        let dist = projector_distance(&direct, &tensor)?;
        Ok(KernelDecompositionCheck {
            tuple: tuple.to_vec(),
            tensor_rank: tensor.rank(),
            direct_rank: direct.rank(),
            projector_distance: dist,
            equal: dist <= tol.subspace_eq_tol,
        })
    }
}

/// Tests the conclusive-subspace factorization for one sequence tuple by
/// computing the subspace two independent ways (joint-state kernels
/// versus tensored component subspaces) and comparing projectors.
pub fn verify_kernel_decomposition(
    components: &[Ensemble],
    tuple: &[usize],
) -> Result<KernelDecompositionCheck, UdError> {
    let tol = ToleranceConfig::default();
    let ctx = KernelContext::new(components, &tol)?;
    ctx.check(tuple, &tol)
}

/// Verifies the unambiguous product structure: the kernel decomposition
/// tuple by tuple first, then component solves, the tensored product
/// solution audited on the joint ensemble, and (within the direct cap) an
/// independent joint solve for value comparison.
pub fn verify_product_unambiguous(
    components: &[Ensemble],
    opts: &ProductVerifyOptions,
) -> Result<ProductTheoremReport, UdError> {
    if components.is_empty() {
        return Err(EnsembleError::NoComponents.into());
    }
    let tol = ToleranceConfig::default();
    let seq = SequenceEnsemble::new(components.to_vec(), false)?;
    let mut certificates = Vec::new();
    let mut solver_stats = Vec::new();

    let ctx = KernelContext::new(components, &tol)?;
    let tuples: Vec<Vec<usize>> = match &opts.sample_tuples {
        Some(list) => list.clone(),
        None => (0..seq.total_count())
            .map(|flat| seq.tuple_from_flat(flat))
            .collect(),
    };
    for tuple in &tuples {
        let check = ctx.check(tuple, &tol)?;
        certificates.push(CertificateVerdict {
            label: format!("kernel decomposition tuple {:?}", check.tuple),
            pass: check.equal,
            detail: check.projector_distance,
            tolerance: tol.subspace_eq_tol,
        });
    }

    let mut locals = Vec::with_capacity(components.len());
    let mut local_values = Vec::with_capacity(components.len());
    for (i, e) in components.iter().enumerate() {
        let label = format!("component {}", i + 1);
        let sol = solve_unambiguous(e, &opts.solver)?;
        if let Some(sdp) = &sol.sdp {
            solver_stats.push(SolverStats::from_solution(&label, sdp));
        }
        let audit = audit_ud_solution(e, &sol)?;
        push_audit_verdicts(&mut certificates, &label, &audit);
        local_values.push(sol.p);
        locals.push(sol);
    }
    let product_value: f64 = local_values.iter().product();

    let joint = seq.to_ensemble(DEFAULT_DIM_CAP)?;
    let product_sol = build_product_ud_solution(components, &locals)?;
    let product_audit = audit_ud_solution(&joint, &product_sol)?;
    push_audit_verdicts(&mut certificates, "product solution", &product_audit);

    let direct_value = if components.len() == 1 {
        Some(local_values[0])
    } else if seq.total_dim() <= opts.direct_cap {
        let sol = solve_unambiguous(&joint, &opts.solver)?;
        if let Some(sdp) = &sol.sdp {
            solver_stats.push(SolverStats::from_solution("joint direct", sdp));
        }
        let audit = audit_ud_solution(&joint, &sol)?;
        push_audit_verdicts(&mut certificates, "direct solution", &audit);
        Some(sol.p)
    } else {
        None
    };
    let abs_diff = direct_value.map(|dv| (product_value - dv).abs());

    Ok(ProductTheoremReport {
        paradigm: Paradigm::Unambiguous,
        local_values,
        product_value,
        direct_value,
        abs_diff,
        certificates,
        solver_stats,
    })
}

fn push_audit_verdicts(
    certificates: &mut Vec<CertificateVerdict>,
    label: &str,
    audit: &UdSolutionAudit,
) {
    certificates.push(CertificateVerdict {
        label: format!("{label} primal feasibility"),
        pass: audit.primal_min_eigenvalue >= -UD_PRIMAL_TOL,
        detail: audit.primal_min_eigenvalue,
        tolerance: UD_PRIMAL_TOL,
    });
    let dual_worst = audit
        .dual_min_eigenvalue
        .unwrap_or(0.0)
        .min(audit.z_min_eigenvalue);
    certificates.push(CertificateVerdict {
        label: format!("{label} dual certificate"),
        pass: dual_worst >= -UD_DUAL_TOL,
        detail: dual_worst,
        tolerance: UD_DUAL_TOL,
    });
    certificates.push(CertificateVerdict {
        label: format!("{label} unambiguity"),
        pass: audit.max_cross_overlap <= UD_UNAMBIGUITY_TOL,
        detail: audit.max_cross_overlap,
        tolerance: UD_UNAMBIGUITY_TOL,
    });
    certificates.push(CertificateVerdict {
        label: format!("{label} duality gap"),
        pass: audit.duality_gap <= UD_DUAL_TOL,
        detail: audit.duality_gap,
        tolerance: UD_DUAL_TOL,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::WeightedState;
    use crate::linalg::ComplexMatrix;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pure(v: &[Complex64]) -> HermitianOperator {
        HermitianOperator::projector_onto(v).unwrap()
    }

    fn ensemble(priors: &[f64], states: Vec<HermitianOperator>) -> Ensemble {
        let ws = priors
            .iter()
            .zip(states)
            .map(|(&prior, rho)| WeightedState { prior, rho })
            .collect();
        Ensemble::new("test", ws).unwrap()
    }

    fn zero_plus() -> Ensemble {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        ensemble(
            &[0.5, 0.5],
            vec![pure(&[c(1.0, 0.0), c(0.0, 0.0)]), pure(&[c(r, 0.0), c(r, 0.0)])],
        )
    }

    /// Two pure states with overlap `gamma` and priors `(eta, 1 - eta)`.
    fn two_pure(eta: f64, gamma: f64) -> Ensemble {
        ensemble(
            &[eta, 1.0 - eta],
            vec![
                pure(&[c(1.0, 0.0), c(0.0, 0.0)]),
                pure(&[c(gamma, 0.0), c((1.0 - gamma * gamma).sqrt(), 0.0)]),
            ],
        )
    }

    /// Optimal conclusive probability for two pure states: the standard
    /// closed form, with the prior-imbalanced regime where guessing via
    /// projection onto one state's complement wins.
    fn two_pure_closed_form(eta: f64, gamma: f64) -> f64 {
        let (lo, hi) = (eta.min(1.0 - eta), eta.max(1.0 - eta));
        let g = gamma.abs();
        if (lo / hi).sqrt() >= g {
            1.0 - 2.0 * (eta * (1.0 - eta)).sqrt() * g
        } else {
            1.0 - (lo + hi * g * g)
        }
    }

    #[test]
    fn independent_pure_states_are_feasible() {
        let f = check_ud_feasible(&zero_plus(), &ToleranceConfig::default()).unwrap();
        assert!(f.overall);
        assert_eq!(f.joint_rank, 2);
        assert!(f.per_state.iter().all(|s| s.identifiable));
        assert!(f.per_state.iter().all(|s| s.excluded_rank == 1));
    }

    #[test]
    fn dependent_pure_states_are_infeasible() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let e = ensemble(
            &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            vec![
                pure(&[c(1.0, 0.0), c(0.0, 0.0)]),
                pure(&[c(0.0, 0.0), c(1.0, 0.0)]),
                pure(&[c(r, 0.0), c(r, 0.0)]),
            ],
        );
        let f = check_ud_feasible(&e, &ToleranceConfig::default()).unwrap();
        assert!(!f.overall);
        assert!(f.per_state.iter().all(|s| !s.identifiable));
    }

    #[test]
    fn full_rank_mixed_states_are_infeasible() {
        let a = HermitianOperator::new(
            ComplexMatrix::from_rows(&[
                vec![(0.6, 0.0), (0.1, 0.0)],
                vec![(0.1, 0.0), (0.4, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let b = HermitianOperator::new(
            ComplexMatrix::from_rows(&[
                vec![(0.3, 0.0), (0.0, 0.1)],
                vec![(0.0, -0.1), (0.7, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let f = check_ud_feasible(&ensemble(&[0.5, 0.5], vec![a, b]), &ToleranceConfig::default())
            .unwrap();
        assert!(!f.overall);
    }

    #[test]
    fn theta_spans_expected_lines() {
        let tol = ToleranceConfig::default();
        let e = zero_plus();
        // Joint support is all of C^2, so no restriction is needed.
        let t0 = compute_theta(&e, 0, &tol).unwrap();
        assert_eq!(t0.rank(), 1);
        let v = (t0.columns()[(0, 0)], t0.columns()[(1, 0)]);
        assert!((v.0.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((v.0 + v.1).norm() < 1e-12, "kernel of the plus projector");
        let t1 = compute_theta(&e, 1, &tol).unwrap();
        assert_eq!(t1.rank(), 1);
        assert!(t1.columns()[(0, 0)].norm() < 1e-12);
        assert!((t1.columns()[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_rank_member_blocks_all_other_thetas() {
        let mixed = HermitianOperator::new(
            ComplexMatrix::from_rows(&[
                vec![(0.5, 0.0), (0.0, 0.0)],
                vec![(0.0, 0.0), (0.5, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let e = ensemble(
            &[0.5, 0.5],
            vec![mixed, pure(&[c(1.0, 0.0), c(0.0, 0.0)])],
        );
        let tol = ToleranceConfig::default();
        assert_eq!(compute_theta(&e, 0, &tol).unwrap().rank(), 1);
        assert_eq!(compute_theta(&e, 1, &tol).unwrap().rank(), 0);
    }

    #[test]
    fn theta_product_annihilates_other_states() {
        let tol = ToleranceConfig::default();
        let e = two_pure(0.4, 0.3);
        for j in 0..2 {
            let theta = compute_theta(&e, j, &tol).unwrap();
            for i in 0..2 {
                if i != j {
                    let prod = e.state(i).matrix().mul(theta.columns());
                    assert!(prod.max_abs_entry() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn solve_matches_equal_prior_closed_form() {
        let sol = solve_unambiguous(&zero_plus(), &SolverOptions::default()).unwrap();
        let expected = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
        assert!((sol.p - expected).abs() < 1e-7, "p = {}", sol.p);
        assert!((sol.p - 0.292893).abs() < 1e-6);
        let audit = audit_ud_solution(&zero_plus(), &sol).unwrap();
        assert!(audit.pass, "audit failed: {}", audit.failure_reason());
        assert!(sol.sdp.is_some());
    }

    #[test]
    fn solve_matches_closed_form_in_both_prior_regimes() {
        for (eta, gamma) in [(0.3, 0.5), (0.05, 0.9), (0.5, 0.85), (0.2, 0.6)] {
            let e = two_pure(eta, gamma);
            let sol = solve_unambiguous(&e, &SolverOptions::default()).unwrap();
            let expected = two_pure_closed_form(eta, gamma);
            assert!(
                (sol.p - expected).abs() < 1e-6,
                "eta {eta}, gamma {gamma}: p {} vs {expected}",
                sol.p
            );
            let audit = audit_ud_solution(&e, &sol).unwrap();
            assert!(audit.pass, "audit failed: {}", audit.failure_reason());
        }
    }

    #[test]
    fn orthogonal_states_are_discriminated_without_inconclusive_mass() {
        let e = ensemble(
            &[0.5, 0.5],
            vec![pure(&[c(1.0, 0.0), c(0.0, 0.0)]), pure(&[c(0.0, 0.0), c(1.0, 0.0)])],
        );
        let sol = solve_unambiguous(&e, &SolverOptions::default()).unwrap();
        assert!((sol.p - 1.0).abs() < 1e-7);
        let inconclusive = sol.povm.effect(2);
        assert!(inconclusive.matrix().max_abs_entry() < 1e-6);
    }

    #[test]
    fn structurally_blocked_ensemble_returns_zero_without_solving() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let e = ensemble(
            &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            vec![
                pure(&[c(1.0, 0.0), c(0.0, 0.0)]),
                pure(&[c(0.0, 0.0), c(1.0, 0.0)]),
                pure(&[c(r, 0.0), c(r, 0.0)]),
            ],
        );
        let sol = solve_unambiguous(&e, &SolverOptions::default()).unwrap();
        assert_eq!(sol.p, 0.0);
        assert!(sol.sdp.is_none());
        assert!(sol.deltas.iter().all(Option::is_none));
        let audit = audit_ud_solution(&e, &sol).unwrap();
        assert!(audit.pass);
    }

    #[test]
    fn embedded_ensemble_solves_like_its_restriction() {
        // zero-plus padded into dimension 4 with two dead directions.
        let mut v1 = vec![c(0.0, 0.0); 4];
        v1[0] = c(1.0, 0.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut v2 = vec![c(0.0, 0.0); 4];
        v2[0] = c(r, 0.0);
        v2[1] = c(r, 0.0);
        let e = ensemble(&[0.5, 0.5], vec![pure(&v1), pure(&v2)]);
        let sol = solve_unambiguous(&e, &SolverOptions::default()).unwrap();
        assert_eq!(sol.support.rank(), 2);
        let expected = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
        assert!((sol.p - expected).abs() < 1e-7);
        let audit = audit_ud_solution(&e, &sol).unwrap();
        assert!(audit.pass, "audit failed: {}", audit.failure_reason());
        // Effects act inside the joint support: the dead directions stay
        // on the inconclusive outcome.
        for j in 0..2 {
            let m = sol.povm.effect(j).matrix();
            assert!(m[(2, 2)].norm() < 1e-9 && m[(3, 3)].norm() < 1e-9);
        }
    }

    #[test]
    fn sequence_feasibility_modes_agree() {
        let tol = ToleranceConfig::default();
        let good = zero_plus();
        let bad = {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            ensemble(
                &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
                vec![
                    pure(&[c(1.0, 0.0), c(0.0, 0.0)]),
                    pure(&[c(0.0, 0.0), c(1.0, 0.0)]),
                    pure(&[c(r, 0.0), c(r, 0.0)]),
                ],
            )
        };
        for comps in [vec![good.clone(), good.clone()], vec![good.clone(), bad]] {
            let per = check_sequence_ud_feasible(&comps, SequenceFeasibilityMode::PerComponent, &tol)
                .unwrap();
            let direct =
                check_sequence_ud_feasible(&comps, SequenceFeasibilityMode::Direct { cap: 64 }, &tol)
                    .unwrap();
            assert_eq!(per.overall, direct.overall);
            assert_eq!(per.joint_rank, direct.joint_rank);
            assert_eq!(per.per_state.len(), direct.per_state.len());
            for (a, b) in per.per_state.iter().zip(&direct.per_state) {
                assert_eq!(a.identifiable, b.identifiable);
                assert_eq!(a.excluded_rank, b.excluded_rank);
            }
        }
    }

    #[test]
    fn product_solution_squares_the_single_copy_value() {
        let e = zero_plus();
        let opts = SolverOptions::default();
        let locals = vec![
            solve_unambiguous(&e, &opts).unwrap(),
            solve_unambiguous(&e, &opts).unwrap(),
        ];
        let product = build_product_ud_solution(&[e.clone(), e.clone()], &locals).unwrap();
        let single = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
        assert!((product.p - single * single).abs() < 1e-7);
        assert!((product.p - 0.0857864).abs() < 1e-6);
        // Trace multiplicativity of the tensored dual.
        let z_trace = locals[0].dual_z.trace() * locals[1].dual_z.trace();
        assert!((product.dual_z.trace() - z_trace).abs() < 1e-9);
        let joint = SequenceEnsemble::new(vec![e.clone(), e], false)
            .unwrap()
            .to_ensemble(64)
            .unwrap();
        let audit = audit_ud_solution(&joint, &product).unwrap();
        assert!(audit.pass, "audit failed: {}", audit.failure_reason());
    }

    #[test]
    fn single_component_product_is_the_local_solution() {
        let e = zero_plus();
        let local = solve_unambiguous(&e, &SolverOptions::default()).unwrap();
        let product = build_product_ud_solution(&[e], std::slice::from_ref(&local)).unwrap();
        assert_eq!(product.p, local.p);
    }

    #[test]
    fn kernel_decomposition_holds_for_qubit_pair() {
        let e = zero_plus();
        for tuple in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let check = verify_kernel_decomposition(&[e.clone(), e.clone()], &tuple).unwrap();
            assert!(check.equal, "tuple {tuple:?} distance {}", check.projector_distance);
            assert_eq!(check.tensor_rank, 1);
            assert_eq!(check.direct_rank, 1);
            assert!(check.projector_distance < 1e-8);
        }
    }

    #[test]
    fn kernel_decomposition_single_component_is_exact() {
        let check = verify_kernel_decomposition(&[two_pure(0.35, 0.4)], &[1]).unwrap();
        assert!(check.equal);
        assert!(check.projector_distance < 1e-10);
    }

    #[test]
    fn product_verification_on_two_qubit_copies() {
        let e = zero_plus();
        let report =
            verify_product_unambiguous(&[e.clone(), e], &ProductVerifyOptions::default()).unwrap();
        let single = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
        assert!((report.product_value - single * single).abs() < 1e-6);
        let diff = report.abs_diff.expect("direct solve within cap");
        assert!(diff <= 1e-5, "product vs direct diff {diff}");
        for cert in &report.certificates {
            assert!(cert.pass, "failed: {} ({})", cert.label, cert.detail);
        }
    }

    #[test]
    fn product_verification_with_blocked_component_gives_zero() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let blocked = ensemble(
            &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            vec![
                pure(&[c(1.0, 0.0), c(0.0, 0.0)]),
                pure(&[c(0.0, 0.0), c(1.0, 0.0)]),
                pure(&[c(r, 0.0), c(r, 0.0)]),
            ],
        );
        let report = verify_product_unambiguous(
            &[zero_plus(), blocked],
            &ProductVerifyOptions::default(),
        )
        .unwrap();
        assert_eq!(report.product_value, 0.0);
        assert_eq!(report.direct_value, Some(0.0));
        assert_eq!(report.abs_diff, Some(0.0));
    }
}
