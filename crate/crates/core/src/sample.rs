//! Seeded random instance generation.
//!
//! Everything here draws from a caller-supplied [`rand::Rng`]; the
//! crate-standard generator is ChaCha20 ([`rng_from_seed`]), which is
//! seedable and platform-independent, so a seed fully determines every
//! generated instance.  Pure states are uniform on the sphere (isotropic
//! complex Gaussian, normalized), mixed states come from the Wishart-style
//! construction `G G^dag / Tr(G G^dag)` with a chosen rank, and priors are
//! flat on the probability simplex.
//!
//! Beyond generic ensembles there are two engineered families for
//! unambiguous discrimination: [`random_ud_feasible_ensemble`] builds
//! states that each own a private direction of the joint support (so every
//! state is identifiable), and [`random_ud_infeasible_ensemble`] plants a
//! full-rank member (so none is).

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::ensemble::{Ensemble, WeightedState};
use crate::linalg::{
    eig_hermitian, ComplexMatrix, HermitianOperator, SubspaceBasis,
};

/// Generator named in reports; fixed so that seeds mean the same thing
/// everywhere.
pub const GENERATOR_NAME: &str = "ChaCha20";

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn column_of(m: &ComplexMatrix, j: usize) -> Vec<Complex64> {
    (0..m.rows()).map(|i| m[(i, j)]).collect()
}

/// Standard normal pair via the polar method.
fn normal_pair(rng: &mut impl Rng) -> (f64, f64) {
    loop {
        let v1 = 2.0 * rng.random::<f64>() - 1.0;
        let v2 = 2.0 * rng.random::<f64>() - 1.0;
        let s = v1 * v1 + v2 * v2;
        if s > 0.0 && s < 1.0 {
            let f = (-2.0 * s.ln() / s).sqrt();
            return (v1 * f, v2 * f);
        }
    }
}

/// Matrix with independent isotropic complex Gaussian entries.
pub fn random_gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let (re, im) = normal_pair(rng);
        data.push(Complex64::new(re, im));
    }
    ComplexMatrix::from_fn(rows, cols, |i, j| data[i * cols + j])
}

pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> HermitianOperator {
    let g = random_gaussian_matrix(dim, dim, rng);
    HermitianOperator::symmetrize(g).expect("square Gaussian matrix")
}

/// Haar-distributed up to column phases: eigenvectors of a Gaussian
/// Hermitian matrix, whose distribution is unitarily invariant.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let h = random_hermitian(dim, rng);
    eig_hermitian(&h).expect("finite Gaussian spectrum").eigenvectors
}

pub fn random_unit_vector(dim: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    loop {
        let mut v = Vec::with_capacity(dim);
        for _ in 0..dim {
            let (re, im) = normal_pair(rng);
            v.push(Complex64::new(re, im));
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

pub fn random_pure_state(dim: usize, rng: &mut impl Rng) -> HermitianOperator {
    HermitianOperator::projector_onto(&random_unit_vector(dim, rng)).expect("unit vector")
}

/// Density operator of the requested rank: `G G^dag / Tr(G G^dag)` for a
/// `dim x rank` Gaussian `G`.
pub fn random_density(dim: usize, rank: usize, rng: &mut impl Rng) -> HermitianOperator {
    assert!(rank >= 1 && rank <= dim, "rank must be in 1..=dim");
    let g = random_gaussian_matrix(dim, rank, rng);
    let w = HermitianOperator::symmetrize(g.mul(&g.adjoint())).expect("Gram matrix");
    let trace = w.trace();
    w.scale(1.0 / trace)
}

/// Flat sample on the probability simplex (normalized unit-rate
/// exponential draws).
pub fn random_priors(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut draws = Vec::with_capacity(len);
    for _ in 0..len {
        let g = loop {
            let u = rng.random::<f64>();
            if u > 0.0 {
                break -(1.0 - u).ln();
            }
        };
        draws.push(g);
    }
    let total: f64 = draws.iter().sum();
    draws.iter().map(|g| g / total).collect()
}

fn assemble(
    label: impl Into<String>,
    priors: Vec<f64>,
    states: Vec<HermitianOperator>,
) -> Ensemble {
    let ws = priors
        .into_iter()
        .zip(states)
        .map(|(prior, rho)| WeightedState { prior, rho })
        .collect();
    Ensemble::new(label, ws).expect("generated ensemble is valid")
}

/// Ensemble of `len` mixed states with ranks drawn from `1..=max_rank`
/// and flat random priors.
pub fn random_ensemble(
    label: impl Into<String>,
    dim: usize,
    len: usize,
    max_rank: usize,
    rng: &mut impl Rng,
) -> Ensemble {
    assert!(max_rank >= 1 && max_rank <= dim, "max_rank must be in 1..=dim");
    let priors = random_priors(len, rng);
    let states = (0..len)
        .map(|_| random_density(dim, rng.random_range(1..=max_rank), rng))
        .collect();
    assemble(label, priors, states)
}

pub fn random_pure_ensemble(
    label: impl Into<String>,
    dim: usize,
    len: usize,
    rng: &mut impl Rng,
) -> Ensemble {
    let priors = random_priors(len, rng);
    let states = (0..len).map(|_| random_pure_state(dim, rng)).collect();
    assemble(label, priors, states)
}

/// Ensemble where every state can be conclusively identified, with
/// `len <= dim` required.
///
/// For `len < dim`: state `j` mixes a private orthonormal direction
/// `u_j` (weight at least 0.3) with a random density on the shared
/// subspace spanned by the remaining `dim - len` directions.  Removing
/// state `j` removes `u_j` from the joint support, so each state is
/// identifiable, every state has rank below `dim`, and the shared parts
/// keep the family noncommuting.  For `len == dim` that construction
/// degenerates to orthogonal states, so linearly independent pure states
/// are drawn instead (resampling on the measure-zero dependent draws).
pub fn random_ud_feasible_ensemble(
    label: impl Into<String>,
    dim: usize,
    len: usize,
    rng: &mut impl Rng,
) -> Ensemble {
    assert!(len >= 2 && len <= dim, "need 2 <= len <= dim");
    let label = label.into();
    let priors = random_priors(len, rng);
    let u = random_unitary(dim, rng);
    if len < dim {
        let shared_dim = dim - len;
        let shared = ComplexMatrix::from_fn(dim, shared_dim, |i, j| u[(i, len + j)]);
        let states = (0..len)
            .map(|j| {
                let private =
                    HermitianOperator::projector_onto(&column_of(&u, j)).expect("unit column");
                let tau_small = random_density(shared_dim, rng.random_range(1..=shared_dim), rng);
                let tau = tau_small.conjugate_with(&shared.adjoint());
                let a = rng.random_range(0.3..0.7);
                private.scale(a).add(&tau.scale(1.0 - a))
            })
            .collect();
        return assemble(label, priors, states);
    }
    for _ in 0..32 {
        // v_j = normalize(u_j + 0.35 * g_j): near the orthonormal frame,
        // hence linearly independent except on a measure-zero set, which
        // the feasibility check below catches.
        let states: Vec<HermitianOperator> = (0..len)
            .map(|j| {
                let g = random_unit_vector(dim, rng);
                let v: Vec<Complex64> = (0..dim).map(|i| u[(i, j)] + 0.35 * g[i]).collect();
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let v: Vec<Complex64> = v.into_iter().map(|z| z / norm).collect();
                HermitianOperator::projector_onto(&v).expect("unit vector")
            })
            .collect();
        let e = assemble(label.clone(), priors.clone(), states);
        let feasible = crate::unambiguous::check_ud_feasible(&e, &Default::default())
            .expect("feasibility check on generated ensemble");
        if feasible.overall {
            return e;
        }
    }
    unreachable!("dependent draws have measure zero; 32 in a row is a bug");
}

/// Ensemble with a full-rank member, so no state can be conclusively
/// identified.
pub fn random_ud_infeasible_ensemble(
    label: impl Into<String>,
    dim: usize,
    len: usize,
    rng: &mut impl Rng,
) -> Ensemble {
    let priors = random_priors(len, rng);
    let blocker = rng.random_range(0..len);
    let states = (0..len)
        .map(|j| {
            if j == blocker {
                random_density(dim, dim, rng)
            } else {
                random_density(dim, rng.random_range(1..=dim), rng)
            }
        })
        .collect();
    assemble(label, priors, states)
}

/// Two pure qubit states with overlap `|<psi_1|psi_2>| = gamma` in a
/// random basis, priors `(eta, 1 - eta)`.
pub fn random_two_pure_ensemble(
    label: impl Into<String>,
    eta: f64,
    gamma: f64,
    rng: &mut impl Rng,
) -> Ensemble {
    assert!((0.0..=1.0).contains(&gamma), "overlap must be in [0, 1]");
    let u = random_unitary(2, rng);
    let psi1 = column_of(&u, 0);
    let orth = column_of(&u, 1);
    let c = (1.0 - gamma * gamma).sqrt();
    let psi2: Vec<Complex64> = (0..2).map(|i| gamma * psi1[i] + c * orth[i]).collect();
    assemble(
        label,
        vec![eta, 1.0 - eta],
        vec![
            HermitianOperator::projector_onto(&psi1).expect("unit column"),
            HermitianOperator::projector_onto(&psi2).expect("unit vector"),
        ],
    )
}

/// Subspace spanned by `rank` Haar-random orthonormal directions.
pub fn random_subspace(dim: usize, rank: usize, rng: &mut impl Rng) -> SubspaceBasis {
    assert!(rank <= dim, "rank must not exceed dim");
    let u = random_unitary(dim, rng);
    let cols = ComplexMatrix::from_fn(dim, rank, |i, j| u[(i, j)]);
    SubspaceBasis::new(dim, cols).expect("orthonormal columns")
}
