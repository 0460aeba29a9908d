//! Data model for discrimination instances.
//!
//! An [`Ensemble`] is a validated list of prior-weighted density operators
//! on one Hilbert space.  A [`SequenceEnsemble`] is the product instance
//! built from `k` component ensembles: its states are all Kronecker
//! products of component states, indexed by tuples `(x_1, ..., x_k)` in
//! lexicographic order with the last position varying fastest.  Sequence
//! states are produced on demand so that large tuple counts stay cheap;
//! full materialization is opt-in and bounded by the dimension cap.
//!
//! [`Povm`] holds a positive operator-valued measurement, optionally
//! tagging one effect as the inconclusive outcome.  [`success_probability`]
//! and [`Ensemble::average_cost`] evaluate a fixed measurement strategy
//! against an instance; they do not optimize anything.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::linalg::{
    is_psd, kron_hermitian, ComplexMatrix, HermitianOperator, LinalgError, ToleranceConfig,
    DEFAULT_DIM_CAP,
};

/// Absolute tolerance on the prior sum and on each state trace.
pub const PRIOR_TOL: f64 = 1e-10;
/// Absolute tolerance on the tuple-prior sum of a sequence ensemble; looser
/// than [`PRIOR_TOL`] because component deviations compound multiplicatively.
pub const SEQUENCE_PRIOR_TOL: f64 = 1e-9;
/// Entrywise tolerance on POVM completeness.
pub const POVM_COMPLETENESS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("ensemble needs at least 2 states, got {count}")]
    TooFewStates { count: usize },
    #[error("state {index} has prior {value} outside (0, 1]")]
    PriorOutOfRange { index: usize, value: f64 },
    #[error("priors sum to {sum}, expected 1 within {PRIOR_TOL:e}")]
    PriorSum { sum: f64 },
    #[error("state {index} has trace {trace}, expected 1 within {PRIOR_TOL:e}")]
    StateTrace { index: usize, trace: f64 },
    #[error("state {index} is not PSD, witness eigenvalue {min_eigenvalue}")]
    StateNotPsd { index: usize, min_eigenvalue: f64 },
    #[error("state {index} has dimension {got}, expected {expected}")]
    StateDimMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("dimension mismatch: ensemble dim {ensemble}, measurement dim {povm}")]
    DimensionMismatch { ensemble: usize, povm: usize },
    #[error("no components given")]
    NoComponents,
    #[error("sequence state count overflows a machine integer")]
    CountOverflow,
    #[error("sequence dimension {dim} exceeds cap {cap}")]
    CapacityExceeded { dim: usize, cap: usize },
    #[error("tuple {tuple:?} does not index this sequence ensemble")]
    BadTuple { tuple: Vec<usize> },
    #[error("measurement needs at least 1 effect")]
    NoEffects,
    #[error("effect {index} is not PSD, witness eigenvalue {min_eigenvalue}")]
    EffectNotPsd { index: usize, min_eigenvalue: f64 },
    #[error("effect {index} has dimension {got}, expected {expected}")]
    EffectDimMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("effects sum to identity only within {deviation:e}, tolerance {POVM_COMPLETENESS_TOL:e}")]
    Incomplete { deviation: f64 },
    #[error("inconclusive index {index} out of range for {count} effects")]
    InconclusiveOutOfRange { index: usize, count: usize },
    #[error("assignment missing conclusive outcome {outcome}")]
    MissingAssignment { outcome: usize },
    #[error("assignment references outcome {outcome}, which is not a conclusive outcome")]
    UnknownOutcome { outcome: usize },
    #[error("assignment maps outcome {outcome} to state {state}, but only {count} states exist")]
    AssignedStateOutOfRange {
        outcome: usize,
        state: usize,
        count: usize,
    },
    #[error("cost matrix is {rows}x{cols}, expected {expected}x{expected}")]
    CostShape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("cost matrix has a non-finite entry")]
    NonFiniteCost,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One prior-weighted density operator.
#[derive(Debug, Clone)]
pub struct WeightedState {
    pub prior: f64,
    pub rho: HermitianOperator,
}

/// A validated discrimination instance on a single Hilbert space.
#[derive(Debug, Clone)]
pub struct Ensemble {
    dim: usize,
    states: Vec<WeightedState>,
    label: String,
}

impl Ensemble {
    /// Validates priors (strictly positive, summing to 1 within
    /// [`PRIOR_TOL`]) and states (unit trace within [`PRIOR_TOL`], PSD
    /// within the default rank tolerance).  Deviations are reported, never
    /// silently renormalized.
    pub fn new(label: impl Into<String>, states: Vec<WeightedState>) -> Result<Self, EnsembleError> {
        if states.len() < 2 {
            return Err(EnsembleError::TooFewStates {
                count: states.len(),
            });
        }
        let dim = states[0].rho.dim();
        let tol = ToleranceConfig::default();
        let mut prior_sum = 0.0;
        for (index, ws) in states.iter().enumerate() {
            if ws.rho.dim() != dim {
                return Err(EnsembleError::StateDimMismatch {
                    index,
                    expected: dim,
                    got: ws.rho.dim(),
                });
            }
            if !(ws.prior > 0.0 && ws.prior <= 1.0 && ws.prior.is_finite()) {
                return Err(EnsembleError::PriorOutOfRange {
                    index,
                    value: ws.prior,
                });
            }
            prior_sum += ws.prior;
            let trace = ws.rho.trace();
            if (trace - 1.0).abs() > PRIOR_TOL {
                return Err(EnsembleError::StateTrace { index, trace });
            }
            let verdict = is_psd(&ws.rho, &tol)?;
            if !verdict.psd {
                return Err(EnsembleError::StateNotPsd {
                    index,
                    min_eigenvalue: verdict.min_eigenvalue,
                });
            }
        }
        if (prior_sum - 1.0).abs() > PRIOR_TOL {
            return Err(EnsembleError::PriorSum { sum: prior_sum });
        }
        Ok(Self {
            dim,
            states,
            label: label.into(),
        })
    }

    /// Constructor for internally produced instances whose invariants hold
    /// by construction but may exceed the strict validation tolerances
    /// (tuple priors of a sequence ensemble compound component roundoff).
    pub(crate) fn new_unchecked(label: String, dim: usize, states: Vec<WeightedState>) -> Self {
        Self { dim, states, label }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of states, written `l` in reports.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[WeightedState] {
        &self.states
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn prior(&self, j: usize) -> f64 {
        self.states[j].prior
    }

    pub fn state(&self, j: usize) -> &HermitianOperator {
        &self.states[j].rho
    }

    /// The prior-weighted operator `eta_j * rho_j`.
    pub fn weighted_operator(&self, j: usize) -> HermitianOperator {
        self.states[j].rho.scale(self.states[j].prior)
    }

    /// Probability that the strategy `(m, assignment)` names the prepared
    /// state correctly.
    pub fn success_probability(
        &self,
        m: &Povm,
        assignment: &BTreeMap<usize, usize>,
    ) -> Result<f64, EnsembleError> {
        success_from_parts(
            self.dim,
            self.len(),
            |j| Ok((self.states[j].prior, self.states[j].rho.clone())),
            m,
            assignment,
        )
    }

    /// Average cost `sum_ij q_i C_ij Tr(sigma_i M_j)` of measuring with
    /// `m`, pairing cost column `j` with the `j`-th conclusive effect.
    pub fn average_cost(&self, m: &Povm, c: &CostMatrix) -> Result<f64, EnsembleError> {
        if m.dim() != self.dim {
            return Err(EnsembleError::DimensionMismatch {
                ensemble: self.dim,
                povm: m.dim(),
            });
        }
        let conclusive: Vec<usize> = m.conclusive_indices().collect();
        if c.size() != self.len() || conclusive.len() != self.len() {
            return Err(EnsembleError::CostShape {
                expected: self.len(),
                rows: c.size(),
                cols: conclusive.len(),
            });
        }
        let mut cost = 0.0;
        for (i, ws) in self.states.iter().enumerate() {
            for (j, &effect) in conclusive.iter().enumerate() {
                cost += ws.prior * c.get(i, j) * ws.rho.inner(m.effect(effect));
            }
        }
        Ok(cost)
    }
}

/// Product instance over `k` component ensembles.
#[derive(Debug, Clone)]
pub struct SequenceEnsemble {
    components: Vec<Ensemble>,
    total_count: usize,
    total_dim: usize,
    materialized: Option<Vec<WeightedState>>,
}

impl SequenceEnsemble {
    /// Builds the product instance.  The joint dimension must stay within
    /// [`DEFAULT_DIM_CAP`] (individual joint states could not be formed
    /// otherwise); `materialize` additionally precomputes every tuple
    /// state.
    pub fn new(components: Vec<Ensemble>, materialize: bool) -> Result<Self, EnsembleError> {
        if components.is_empty() {
            return Err(EnsembleError::NoComponents);
        }
        let mut total_count = 1usize;
        let mut total_dim = 1usize;
        for c in &components {
            total_count = total_count
                .checked_mul(c.len())
                .ok_or(EnsembleError::CountOverflow)?;
            total_dim = total_dim
                .checked_mul(c.dim())
                .ok_or(EnsembleError::CountOverflow)?;
        }
        if total_dim > DEFAULT_DIM_CAP {
            return Err(EnsembleError::CapacityExceeded {
                dim: total_dim,
                cap: DEFAULT_DIM_CAP,
            });
        }
        let mut seq = Self {
            components,
            total_count,
            total_dim,
            materialized: None,
        };
        if materialize {
            let mut states = Vec::with_capacity(total_count);
            for flat in 0..total_count {
                let tuple = seq.tuple_from_flat(flat);
                states.push(WeightedState {
                    prior: seq.prior_of(&tuple)?,
                    rho: seq.state_of(&tuple)?,
                });
            }
            seq.materialized = Some(states);
        }
        Ok(seq)
    }

    pub fn components(&self) -> &[Ensemble] {
        &self.components
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Number of sequence states, `l = prod l_i`.
    pub fn total_count(&self) -> usize {
        self.total_count
    }

    /// Joint dimension, `prod d_i`.
    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn is_materialized(&self) -> bool {
        self.materialized.is_some()
    }

    /// Flat index of a tuple under lexicographic order, last position
    /// fastest: `((x_1 l_2 + x_2) l_3 + x_3) ...`.
    pub fn flat_index(&self, tuple: &[usize]) -> Result<usize, EnsembleError> {
        self.check_tuple(tuple)?;
        let mut flat = 0usize;
        for (x, c) in tuple.iter().zip(&self.components) {
            flat = flat * c.len() + x;
        }
        Ok(flat)
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn tuple_from_flat(&self, mut flat: usize) -> Vec<usize> {
        let mut tuple = vec![0usize; self.components.len()];
        for (slot, c) in tuple.iter_mut().zip(&self.components).rev() {
            *slot = flat % c.len();
            flat /= c.len();
        }
        tuple
    }

    /// Tuple prior `prod_i eta^i_{x_i}`.
    pub fn prior_of(&self, tuple: &[usize]) -> Result<f64, EnsembleError> {
        self.check_tuple(tuple)?;
        Ok(tuple
            .iter()
            .zip(&self.components)
            .map(|(&x, c)| c.prior(x))
            .product())
    }

    /// Tuple state `rho^1_{x_1} (x) ... (x) rho^k_{x_k}`.
    pub fn state_of(&self, tuple: &[usize]) -> Result<HermitianOperator, EnsembleError> {
        self.check_tuple(tuple)?;
        if let Some(states) = &self.materialized {
            let flat = self.flat_index(tuple)?;
            return Ok(states[flat].rho.clone());
        }
        let mut out = HermitianOperator::identity(1);
        for (&x, c) in tuple.iter().zip(&self.components) {
            out = kron_hermitian(&out, c.state(x), DEFAULT_DIM_CAP)?;
        }
        Ok(out)
    }

    fn weighted_at_flat(&self, flat: usize) -> Result<(f64, HermitianOperator), EnsembleError> {
        if let Some(states) = &self.materialized {
            return Ok((states[flat].prior, states[flat].rho.clone()));
        }
        let tuple = self.tuple_from_flat(flat);
        Ok((self.prior_of(&tuple)?, self.state_of(&tuple)?))
    }

    /// Flattens into an ordinary [`Ensemble`] over the joint space, tuple
    /// order preserved.  `cap` bounds the joint dimension.
    pub fn to_ensemble(&self, cap: usize) -> Result<Ensemble, EnsembleError> {
        if self.total_dim > cap {
            return Err(EnsembleError::CapacityExceeded {
                dim: self.total_dim,
                cap,
            });
        }
        let mut states = Vec::with_capacity(self.total_count);
        for flat in 0..self.total_count {
            let (prior, rho) = self.weighted_at_flat(flat)?;
            states.push(WeightedState { prior, rho });
        }
        let label = self
            .components
            .iter()
            .map(Ensemble::label)
            .collect::<Vec<_>>()
            .join("(x)");
        Ok(Ensemble::new_unchecked(label, self.total_dim, states))
    }

    /// See [`Ensemble::success_probability`]; state indices are flat tuple
    /// indices.
    pub fn success_probability(
        &self,
        m: &Povm,
        assignment: &BTreeMap<usize, usize>,
    ) -> Result<f64, EnsembleError> {
        success_from_parts(
            self.total_dim,
            self.total_count,
            |j| self.weighted_at_flat(j),
            m,
            assignment,
        )
    }

    fn check_tuple(&self, tuple: &[usize]) -> Result<(), EnsembleError> {
        let ok = tuple.len() == self.components.len()
            && tuple
                .iter()
                .zip(&self.components)
                .all(|(&x, c)| x < c.len());
        if ok {
            Ok(())
        } else {
            Err(EnsembleError::BadTuple {
                tuple: tuple.to_vec(),
            })
        }
    }
}

/// A positive operator-valued measurement.
#[derive(Debug, Clone)]
pub struct Povm {
    dim: usize,
    effects: Vec<HermitianOperator>,
    inconclusive_index: Option<usize>,
}

impl Povm {
    /// Validates PSD effects that sum to the identity within
    /// [`POVM_COMPLETENESS_TOL`] entrywise.
    pub fn new(
        effects: Vec<HermitianOperator>,
        inconclusive_index: Option<usize>,
    ) -> Result<Self, EnsembleError> {
        if effects.is_empty() {
            return Err(EnsembleError::NoEffects);
        }
        let dim = effects[0].dim();
        let tol = ToleranceConfig::default();
        let mut sum = HermitianOperator::zero(dim);
        for (index, effect) in effects.iter().enumerate() {
            if effect.dim() != dim {
                return Err(EnsembleError::EffectDimMismatch {
                    index,
                    expected: dim,
                    got: effect.dim(),
                });
            }
            let verdict = is_psd(effect, &tol)?;
            if !verdict.psd {
                return Err(EnsembleError::EffectNotPsd {
                    index,
                    min_eigenvalue: verdict.min_eigenvalue,
                });
            }
            sum = sum.add(effect);
        }
        let deviation = sum
            .matrix()
            .max_abs_diff(&ComplexMatrix::identity(dim));
        if deviation > POVM_COMPLETENESS_TOL {
            return Err(EnsembleError::Incomplete { deviation });
        }
        if let Some(index) = inconclusive_index {
            if index >= effects.len() {
                return Err(EnsembleError::InconclusiveOutOfRange {
                    index,
                    count: effects.len(),
                });
            }
        }
        Ok(Self {
            dim,
            effects,
            inconclusive_index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[HermitianOperator] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &HermitianOperator {
        &self.effects[i]
    }

    pub fn inconclusive_index(&self) -> Option<usize> {
        self.inconclusive_index
    }

    /// Indices of all effects except the inconclusive one, in order.
    pub fn conclusive_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.effects.len()).filter(move |&i| Some(i) != self.inconclusive_index)
    }
}

/// All Kronecker products of one effect per input, lexicographic in the
/// outcome tuple with the last position fastest.  A single input is
/// returned unchanged; for two or more inputs no product outcome plays the
/// inconclusive role, so the tag is dropped.
pub fn tensor_povm(povms: &[Povm]) -> Result<Povm, EnsembleError> {
    match povms {
        [] => Err(EnsembleError::NoComponents),
        [single] => Ok(single.clone()),
        _ => {
            let mut effects = vec![HermitianOperator::identity(1)];
            for p in povms {
                let mut next = Vec::with_capacity(effects.len() * p.len());
                for partial in &effects {
                    for e in p.effects() {
                        next.push(kron_hermitian(partial, e, DEFAULT_DIM_CAP)?);
                    }
                }
                effects = next;
            }
            Povm::new(effects, None)
        }
    }
}

/// Real cost table; entry `(i, j)` is the cost of announcing outcome `j`
/// when state `i` was prepared.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn new(size: usize, entries: Vec<f64>) -> Result<Self, EnsembleError> {
        if entries.len() != size * size {
            return Err(EnsembleError::CostShape {
                expected: size,
                rows: entries.len() / size.max(1),
                cols: size,
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(EnsembleError::NonFiniteCost);
        }
        Ok(Self { size, entries })
    }

    /// The misidentification cost `C_ij = 1 - delta_ij`.
    pub fn misidentification(size: usize) -> Self {
        let entries = (0..size * size)
            .map(|idx| if idx / size == idx % size { 0.0 } else { 1.0 })
            .collect();
        Self { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }
}

fn success_from_parts(
    dim: usize,
    count: usize,
    fetch: impl Fn(usize) -> Result<(f64, HermitianOperator), EnsembleError>,
    m: &Povm,
    assignment: &BTreeMap<usize, usize>,
) -> Result<f64, EnsembleError> {
    if m.dim() != dim {
        return Err(EnsembleError::DimensionMismatch {
            ensemble: dim,
            povm: m.dim(),
        });
    }
    for (&outcome, &state) in assignment {
        if outcome >= m.len() || Some(outcome) == m.inconclusive_index() {
            return Err(EnsembleError::UnknownOutcome { outcome });
        }
        if state >= count {
            return Err(EnsembleError::AssignedStateOutOfRange {
                outcome,
                state,
                count,
            });
        }
    }
    let mut p = 0.0;
    for outcome in m.conclusive_indices() {
        let &state = assignment
            .get(&outcome)
            .ok_or(EnsembleError::MissingAssignment { outcome })?;
        let (prior, rho) = fetch(state)?;
        p += prior * rho.inner(m.effect(outcome));
    }
    // Roundoff can push the value marginally outside [0, 1]; anything
    // larger is a real input problem and is returned untouched.
    if (-1e-9..0.0).contains(&p) {
        p = 0.0;
    } else if p > 1.0 && p <= 1.0 + 1e-9 {
        p = 1.0;
    }
    Ok(p)
}
