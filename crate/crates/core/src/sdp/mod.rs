//! Semidefinite programming over block-diagonal PSD cones.
//!
//! A [`ConicProgram`] optimizes `sum_b <C_b, X_b>` over PSD blocks `X_b`
//! subject to scalar affine constraints `sum_b <A_b, X_b> {=, <=} rhs`.
//! Inequalities are absorbed into nonnegative scalar slack blocks, so the
//! engine itself only sees the standard equality form.  The solver in
//! [`ipm`] is a primal-dual interior-point method with a Mehrotra-style
//! predictor-corrector; see that module for the algorithm.
//!
//! Complex-Hermitian programs are expressed through the real symmetric
//! embedding `embed(H) = [[Re H, -Im H], [Im H, Re H]]`, which preserves
//! positive semidefiniteness and doubles trace inner products:
//! `Tr(embed(A) embed(B)) = 2 Tr(A B)`.  [`embedding`] provides the
//! embedding itself plus the Hermitian constraint basis used to say
//! "these embedded blocks sum to an embedded identity" with only `d^2`
//! real constraints.

pub(crate) mod dense;
mod embedding;
mod ipm;

pub use embedding::{
    embed_complex, embed_half_sparse, hermitian_basis_coeff, hermitian_basis_conjugated,
    hermitian_basis_inner, hermitian_basis_len, hermitian_from_multipliers, unembed_hermitian,
};

use std::fmt::Write as _;
use thiserror::Error;

/// Default relative duality-gap tolerance for declaring optimality.
pub const DEFAULT_GAP_TOL: f64 = 1e-7;

/// Default feasibility-residual tolerance for declaring optimality.
pub const DEFAULT_FEAS_TOL: f64 = 1e-8;

/// Symmetry tolerance for user-supplied coefficient matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("program has no blocks")]
    NoBlocks,
    #[error("block {block} has size zero")]
    EmptyBlock { block: usize },
    #[error("objective list length {found} does not match block count {expected}")]
    ObjectiveArity { expected: usize, found: usize },
    #[error("constraint {constraint} references unknown block {block}")]
    UnknownBlock { constraint: usize, block: usize },
    #[error(
        "constraint {constraint} coefficient dim {found} does not match block {block} size {expected}"
    )]
    CoeffDim {
        constraint: usize,
        block: usize,
        expected: usize,
        found: usize,
    },
    #[error("objective for block {block} has dim {found}, block size is {expected}")]
    ObjectiveDim {
        block: usize,
        expected: usize,
        found: usize,
    },
    #[error("matrix entry ({row}, {col}) out of range for dim {dim}")]
    EntryOutOfRange { row: usize, col: usize, dim: usize },
    #[error("matrix is not symmetric (deviation {deviation:.3e})")]
    NotSymmetric { deviation: f64 },
    #[error("non-finite value in program data")]
    NonFinite,
    #[error("embedded matrix has odd dimension {dim}")]
    OddDimension { dim: usize },
}

/// Dense real symmetric matrix (full row-major storage).
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Wraps raw data, requiring symmetry within [`SYMMETRY_TOL`].
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self, SdpError> {
        if data.len() != dim * dim || data.iter().any(|v| !v.is_finite()) {
            return Err(SdpError::NonFinite);
        }
        let mut dev: f64 = 0.0;
        for i in 0..dim {
            for j in (i + 1)..dim {
                dev = dev.max((data[i * dim + j] - data[j * dim + i]).abs());
            }
        }
        if dev > SYMMETRY_TOL {
            return Err(SdpError::NotSymmetric { deviation: dev });
        }
        let mut m = SymMatrix { dim, data };
        dense::symmetrize(dim, &mut m.data);
        Ok(m)
    }

    pub(crate) fn from_raw(dim: usize, data: Vec<f64>) -> Self {
        SymMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }
}

/// Sparse symmetric matrix given by its upper triangle; entry `(i, j)`
/// with `i < j` implies the mirrored `(j, i)` entry.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSym {
    dim: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl SparseSym {
    /// Builds from arbitrary entries; lower-triangle coordinates are
    /// mirrored and duplicate coordinates are summed.
    pub fn new(dim: usize, raw: &[(usize, usize, f64)]) -> Result<Self, SdpError> {
        let mut entries: Vec<(u32, u32, f64)> = Vec::with_capacity(raw.len());
        for &(i, j, v) in raw {
            if i >= dim || j >= dim {
                return Err(SdpError::EntryOutOfRange {
                    row: i,
                    col: j,
                    dim,
                });
            }
            if !v.is_finite() {
                return Err(SdpError::NonFinite);
            }
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            entries.push((a as u32, b as u32, v));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut folded: Vec<(u32, u32, f64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match folded.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => folded.push((i, j, v)),
            }
        }
        folded.retain(|&(_, _, v)| v != 0.0);
        Ok(SparseSym {
            dim,
            entries: folded,
        })
    }

    pub fn empty(dim: usize) -> Self {
        SparseSym {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity_scaled(dim: usize, v: f64) -> Self {
        SparseSym {
            dim,
            entries: (0..dim as u32).map(|i| (i, i, v)).collect(),
        }
    }

    /// Converts a dense symmetric matrix, keeping nonzero entries.
    pub fn from_sym(m: &SymMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.dim {
            for j in i..m.dim {
                let v = m.get(i, j);
                if v != 0.0 {
                    entries.push((i as u32, j as u32, v));
                }
            }
        }
        SparseSym {
            dim: m.dim,
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inner product `<A, X>` against a full symmetric matrix.
    pub fn inner(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for &(i, j, v) in &self.entries {
            let (i, j) = (i as usize, j as usize);
            if i == j {
                acc += v * x[i * n + i];
            } else {
                acc += 2.0 * v * x[i * n + j];
            }
        }
        acc
    }

    /// Adds `scale * A` into a full symmetric matrix.
    pub fn add_into(&self, scale: f64, out: &mut [f64]) {
        let n = self.dim;
        for &(i, j, v) in &self.entries {
            let (i, j) = (i as usize, j as usize);
            out[i * n + j] += scale * v;
            if i != j {
                out[j * n + i] += scale * v;
            }
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.dim];
        self.add_into(1.0, &mut out);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Equal,
    LessEq,
}

/// One scalar constraint `sum_b <coeff_b, X_b> (= | <=) rhs`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub terms: Vec<LinearTerm>,
    pub rhs: f64,
    pub relation: Relation,
}

#[derive(Clone, Debug)]
pub struct LinearTerm {
    pub block: usize,
    pub coeff: SparseSym,
}

/// Block-diagonal semidefinite program.
#[derive(Clone, Debug)]
pub struct ConicProgram {
    pub blocks: Vec<usize>,
    pub objective: Vec<SparseSym>,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
}

impl ConicProgram {
    pub fn validate(&self) -> Result<(), SdpError> {
        if self.blocks.is_empty() {
            return Err(SdpError::NoBlocks);
        }
        for (b, &size) in self.blocks.iter().enumerate() {
            if size == 0 {
                return Err(SdpError::EmptyBlock { block: b });
            }
        }
        if self.objective.len() != self.blocks.len() {
            return Err(SdpError::ObjectiveArity {
                expected: self.blocks.len(),
                found: self.objective.len(),
            });
        }
        for (b, obj) in self.objective.iter().enumerate() {
            if obj.dim() != self.blocks[b] {
                return Err(SdpError::ObjectiveDim {
                    block: b,
                    expected: self.blocks[b],
                    found: obj.dim(),
                });
            }
        }
        for (c, con) in self.constraints.iter().enumerate() {
            if !con.rhs.is_finite() {
                return Err(SdpError::NonFinite);
            }
            for term in &con.terms {
                let size = *self
                    .blocks
                    .get(term.block)
                    .ok_or(SdpError::UnknownBlock {
                        constraint: c,
                        block: term.block,
                    })?;
                if term.coeff.dim() != size {
                    return Err(SdpError::CoeffDim {
                        constraint: c,
                        block: term.block,
                        expected: size,
                        found: term.coeff.dim(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump of the assembled program for debugging.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Minimize => "minimize",
            Sense::Maximize => "maximize",
        };
        let _ = writeln!(
            out,
            "conic-program sense={sense} blocks={:?} constraints={}",
            self.blocks,
            self.constraints.len()
        );
        for (b, obj) in self.objective.iter().enumerate() {
            let _ = writeln!(out, "objective block={b} nnz={}", obj.entries().len());
            for &(i, j, v) in obj.entries() {
                let _ = writeln!(out, "  {i} {j} {v:.17e}");
            }
        }
        for (c, con) in self.constraints.iter().enumerate() {
            let rel = match con.relation {
                Relation::Equal => "=",
                Relation::LessEq => "<=",
            };
            let _ = writeln!(out, "constraint {c} rel={rel} rhs={:.17e}", con.rhs);
            for term in &con.terms {
                let _ = writeln!(
                    out,
                    "  term block={} nnz={}",
                    term.block,
                    term.coeff.entries().len()
                );
                for &(i, j, v) in term.coeff.entries() {
                    let _ = writeln!(out, "    {i} {j} {v:.17e}");
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Relative duality-gap threshold for optimality.
    pub gap_tol: f64,
    /// Feasibility-residual threshold for optimality.
    pub feas_tol: f64,
    /// Iteration cap; exceeding it yields `Failed` with the best iterate.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gap_tol: DEFAULT_GAP_TOL,
            feas_tol: DEFAULT_FEAS_TOL,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Gap and residual tolerances met.
    Optimal,
    /// Dual objective diverged; the primal problem is infeasible.
    Infeasible,
    /// Iteration limit or numerical stall before reaching tolerances.
    Failed,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveStatus::Optimal => write!(f, "optimal"),
            SolveStatus::Infeasible => write!(f, "infeasible"),
            SolveStatus::Failed => write!(f, "numeric-failure"),
        }
    }
}

/// Solver output.
///
/// `dual_multipliers` follow the sign convention that makes the dual slack
/// PSD: for a maximization program `S = sum_a y_a A_a - C`, for a
/// minimization program `S = C - sum_a y_a A_a`; in both cases
/// `dual_value = b . y` and the slack blocks are reported in `dual_slacks`.
#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    /// `|primal - dual| / max(1, |primal|)`.
    pub gap: f64,
    /// `|b - A(X)|_2 / (1 + |b|_2)`.
    pub primal_residual: f64,
    /// Aggregated Frobenius norm of the dual slack equation residual,
    /// relative to `1 + |C|_F`.
    pub dual_residual: f64,
    pub iterations: usize,
    pub primal_blocks: Vec<SymMatrix>,
    pub dual_multipliers: Vec<f64>,
    pub dual_slacks: Vec<SymMatrix>,
}

/// Solves the program; see [`SolveStatus`] for outcome semantics.
pub fn solve(program: &ConicProgram, opts: &SolverOptions) -> Result<SdpSolution, SdpError> {
    program.validate()?;
    ipm::solve(program, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_trace_capped(dim: usize) -> ConicProgram {
        // maximize Tr(X) s.t. X + S = I, S >= 0 (i.e. X <= I).
        let mut constraints = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                let coeff = SparseSym::new(dim, &[(i, j, 1.0)]).unwrap();
                constraints.push(Constraint {
                    terms: vec![
                        LinearTerm {
                            block: 0,
                            coeff: coeff.clone(),
                        },
                        LinearTerm { block: 1, coeff },
                    ],
                    rhs: if i == j { 1.0 } else { 0.0 },
                    relation: Relation::Equal,
                });
            }
        }
        ConicProgram {
            blocks: vec![dim, dim],
            objective: vec![
                SparseSym::identity_scaled(dim, 1.0),
                SparseSym::empty(dim),
            ],
            constraints,
            sense: Sense::Maximize,
        }
    }

    #[test]
    fn trace_cap_reaches_identity() {
        let program = max_trace_capped(2);
        let sol = solve(&program, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_value - 2.0).abs() < 1e-7);
        assert!(sol.gap <= DEFAULT_GAP_TOL);
        assert!(sol.primal_residual <= DEFAULT_FEAS_TOL);
        assert!(sol.dual_residual <= DEFAULT_FEAS_TOL);
        let x = &sol.primal_blocks[0];
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((x.get(i, j) - expect).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn weighted_trace_objective() {
        // maximize <diag(1,0), X> s.t. X <= I gives 1.
        let mut program = max_trace_capped(2);
        program.objective[0] = SparseSym::new(2, &[(0, 0, 1.0)]).unwrap();
        let sol = solve(&program, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn weak_duality_and_value_consistency() {
        let program = max_trace_capped(3);
        let sol = solve(&program, &SolverOptions::default()).unwrap();
        // Maximization: primal <= dual up to numerical noise.
        assert!(sol.primal_value <= sol.dual_value + 1e-9);
        // Objective recomputed from the returned block matches primal_value.
        let recomputed = program.objective[0].inner(sol.primal_blocks[0].data());
        assert!((recomputed - sol.primal_value).abs() < 1e-9);
    }

    #[test]
    fn objective_scaling_scales_value_not_argument() {
        let base = max_trace_capped(2);
        let mut scaled = base.clone();
        scaled.objective[0] = SparseSym::identity_scaled(2, 3.0);
        let s1 = solve(&base, &SolverOptions::default()).unwrap();
        let s2 = solve(&scaled, &SolverOptions::default()).unwrap();
        assert!((s2.primal_value - 3.0 * s1.primal_value).abs() < 1e-8 * 3.0);
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (s1.primal_blocks[0].get(i, j) - s2.primal_blocks[0].get(i, j)).abs() < 1e-6
                );
            }
        }
    }

    #[test]
    fn scalar_inequality_constraint() {
        // maximize x s.t. x <= 3 on a 1x1 block.
        let program = ConicProgram {
            blocks: vec![1],
            objective: vec![SparseSym::identity_scaled(1, 1.0)],
            constraints: vec![Constraint {
                terms: vec![LinearTerm {
                    block: 0,
                    coeff: SparseSym::identity_scaled(1, 1.0),
                }],
                rhs: 3.0,
                relation: Relation::LessEq,
            }],
            sense: Sense::Maximize,
        };
        let sol = solve(&program, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_value - 3.0).abs() < 1e-7);
    }

    #[test]
    fn minimization_sense() {
        // minimize Tr(X) s.t. diagonal entries >= 1 via X - S = I.
        let dim = 2;
        let mut constraints = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                let coeff = SparseSym::new(dim, &[(i, j, 1.0)]).unwrap();
                constraints.push(Constraint {
                    terms: vec![
                        LinearTerm {
                            block: 0,
                            coeff: coeff.clone(),
                        },
                        LinearTerm {
                            block: 1,
                            coeff: SparseSym::new(dim, &[(i, j, -1.0)]).unwrap(),
                        },
                    ],
                    rhs: if i == j { 1.0 } else { 0.0 },
                    relation: Relation::Equal,
                });
            }
        }
        let program = ConicProgram {
            blocks: vec![dim, dim],
            objective: vec![
                SparseSym::identity_scaled(dim, 1.0),
                SparseSym::empty(dim),
            ],
            constraints,
            sense: Sense::Minimize,
        };
        let sol = solve(&program, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_value - 2.0).abs() < 1e-6);
        // Minimization: dual <= primal.
        assert!(sol.dual_value <= sol.primal_value + 1e-9);
    }

    #[test]
    fn validation_catches_bad_arity() {
        let program = ConicProgram {
            blocks: vec![2],
            objective: vec![],
            constraints: vec![],
            sense: Sense::Maximize,
        };
        assert!(matches!(
            solve(&program, &SolverOptions::default()),
            Err(SdpError::ObjectiveArity { .. })
        ));
    }

    #[test]
    fn sparse_sym_folds_and_mirrors() {
        let s = SparseSym::new(3, &[(1, 0, 2.0), (0, 1, 1.0), (2, 2, 5.0)]).unwrap();
        assert_eq!(s.entries(), &[(0, 1, 3.0), (2, 2, 5.0)]);
        let dense = s.to_dense();
        assert_eq!(dense[0 * 3 + 1], 3.0);
        assert_eq!(dense[1 * 3 + 0], 3.0);
        let x = SymMatrix::identity(3);
        assert!((s.inner(x.data()) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn dump_is_deterministic() {
        let p = max_trace_capped(2);
        assert_eq!(p.dump(), p.dump());
        assert!(p.dump().contains("conic-program sense=maximize"));
    }
}
