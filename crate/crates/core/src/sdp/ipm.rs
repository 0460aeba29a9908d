//! Primal-dual interior-point solver.
//!
//! Internal standard form: minimize `<C, X>` over PSD block matrices with
//! equality constraints `<A_a, X> = b_a` (maximization and `<=` relations
//! are normalized away in `prepare`).  Iterates `(X, y, S)` stay strictly
//! interior; each step solves the HKM normal equations
//!
//! ```text
//! M dy = b - sigma mu A(S^-1) + A(X R_d S^-1) [+ A(dX_aff dS_aff S^-1)]
//! M[a][b] = Tr(A_a X A_b S^-1)
//! dS = R_d - A^T(dy),   dX = sigma mu S^-1 - X - X dS S^-1 [- corrector]
//! ```
//!
//! with `R_d = C - A^T(y) - S`, using a Mehrotra predictor (`sigma = 0`)
//! followed by a corrector with `sigma = (mu_aff / mu)^3`.  The Schur
//! matrix `M` is symmetric positive definite and solved by Cholesky; step
//! lengths come from a bisection on per-block Cholesky feasibility, so an
//! accepted step is certified strictly PSD.  The best iterate by
//! `max(gap, residuals)` is tracked and returned, which makes the solver
//! push past the requested tolerances while it still progresses and stop
//! cleanly on stalls.  All iteration order is fixed, so identical inputs
//! produce identical outputs.

use super::dense;
use super::{
    ConicProgram, Relation, SdpError, SdpSolution, Sense, SolveStatus, SolverOptions, SymMatrix,
};

/// Iterations with mu shrinking by less than this factor count as stalled.
const STALL_RATIO: f64 = 0.98;
const STALL_LIMIT: usize = 4;
/// Extra convergence depth beyond the requested tolerances before an early
/// exit; downstream certificate checks benefit from the sharper iterate.
const DEEP_FACTOR: f64 = 50.0;
const DIVERGENCE_LIMIT: f64 = 1e11;

struct PreparedTerm {
    block: usize,
    /// Canonical upper-triangle entries (i <= j).
    upper: Vec<(u32, u32, f64)>,
    /// All entries including mirrored lower triangle.
    full: Vec<(u32, u32, f64)>,
    /// Dense copy when the coefficient is not sparse enough.
    dense: Option<Vec<f64>>,
}

struct PreparedCon {
    rhs: f64,
    terms: Vec<PreparedTerm>,
}

struct Prepared {
    sizes: Vec<usize>,
    orig_blocks: usize,
    cons: Vec<PreparedCon>,
    /// Internal objective (minimization sense), dense per block.
    c: Vec<Vec<f64>>,
    c_norm: f64,
    b: Vec<f64>,
    b_norm: f64,
    maximize: bool,
    n_total: usize,
}

fn prepare(p: &ConicProgram) -> Prepared {
    let maximize = p.sense == Sense::Maximize;
    let mut sizes = p.blocks.clone();
    let orig_blocks = p.blocks.len();
    let mut cons = Vec::with_capacity(p.constraints.len());
    for con in &p.constraints {
        let mut terms: Vec<PreparedTerm> = Vec::with_capacity(con.terms.len() + 1);
        for t in &con.terms {
            if t.coeff.is_empty() {
                continue;
            }
            terms.push(make_term(t.block, sizes[t.block], t.coeff.entries()));
        }
        if con.relation == Relation::LessEq {
            let slack = sizes.len();
            sizes.push(1);
            terms.push(make_term(slack, 1, &[(0, 0, 1.0)]));
        }
        cons.push(PreparedCon {
            rhs: con.rhs,
            terms,
        });
    }
    let c: Vec<Vec<f64>> = sizes
        .iter()
        .enumerate()
        .map(|(bl, &n)| {
            let mut dense = vec![0.0; n * n];
            if bl < orig_blocks {
                let sign = if maximize { -1.0 } else { 1.0 };
                p.objective[bl].add_into(sign, &mut dense);
            }
            dense
        })
        .collect();
    let c_norm = c
        .iter()
        .map(|m| m.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    let b: Vec<f64> = cons.iter().map(|c| c.rhs).collect();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let n_total = sizes.iter().sum();
    Prepared {
        sizes,
        orig_blocks,
        cons,
        c,
        c_norm,
        b,
        b_norm,
        maximize,
        n_total,
    }
}

fn make_term(block: usize, n: usize, upper: &[(u32, u32, f64)]) -> PreparedTerm {
    let mut full = Vec::with_capacity(upper.len() * 2);
    for &(i, j, v) in upper {
        full.push((i, j, v));
        if i != j {
            full.push((j, i, v));
        }
    }
    let dense = if full.len() > 2 * n {
        let mut m = vec![0.0; n * n];
        for &(i, j, v) in &full {
            m[i as usize * n + j as usize] = v;
        }
        Some(m)
    } else {
        None
    };
    PreparedTerm {
        block,
        upper: upper.to_vec(),
        full,
        dense,
    }
}

fn alloc_blocks(sizes: &[usize]) -> Vec<Vec<f64>> {
    sizes.iter().map(|&n| vec![0.0; n * n]).collect()
}

fn identity_blocks(sizes: &[usize], tau: f64) -> Vec<Vec<f64>> {
    sizes
        .iter()
        .map(|&n| {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                m[i * n + i] = tau;
            }
            m
        })
        .collect()
}

fn dot_blocks(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>())
        .sum()
}

/// `<A, X>` with X full symmetric.
fn term_inner_sym(t: &PreparedTerm, x: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for &(i, j, v) in &t.upper {
        let (i, j) = (i as usize, j as usize);
        if i == j {
            acc += v * x[i * n + i];
        } else {
            acc += 2.0 * v * x[i * n + j];
        }
    }
    acc
}

/// `Tr(A G)` with G a general (not necessarily symmetric) matrix.
fn term_inner_general(t: &PreparedTerm, g: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for &(i, j, v) in &t.full {
        acc += v * g[j as usize * n + i as usize];
    }
    acc
}

fn term_scatter(t: &PreparedTerm, scale: f64, out: &mut [f64], n: usize) {
    for &(i, j, v) in &t.full {
        out[i as usize * n + j as usize] += scale * v;
    }
}

struct Snapshot {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    s: Vec<Vec<f64>>,
    pobj_user: f64,
    dobj_user: f64,
    gap: f64,
    rp: f64,
    rd: f64,
    score: f64,
}

pub(super) fn solve(program: &ConicProgram, opts: &SolverOptions) -> Result<SdpSolution, SdpError> {
    let prep = prepare(program);
    let sizes = &prep.sizes;
    let nblocks = sizes.len();
    let m = prep.cons.len();
    let max_n = sizes.iter().copied().max().unwrap_or(1);

    let mut x = identity_blocks(sizes, 1.0);
    let mut s = identity_blocks(sizes, 1.0);
    let mut y = vec![0.0; m];

    let mut sinv = alloc_blocks(sizes);
    let mut rd = alloc_blocks(sizes);
    let mut g = alloc_blocks(sizes);
    let mut k_corr = alloc_blocks(sizes);
    let mut dxa = alloc_blocks(sizes);
    let mut dsa = alloc_blocks(sizes);
    let mut dx = alloc_blocks(sizes);
    let mut ds = alloc_blocks(sizes);
    let mut w = alloc_blocks(sizes);
    let mut w_present = vec![false; nblocks];
    let mut at_dy = alloc_blocks(sizes);
    let mut scratch1 = vec![0.0; max_n * max_n];
    let mut scratch2 = vec![0.0; max_n * max_n];
    let mut schur = vec![0.0; m * m];

    let mut best: Option<Snapshot> = None;
    let mut iterations = 0usize;
    let mut stall_count = 0usize;
    let mut prev_mu = f64::INFINITY;
    let mut diverged = false;

    for iter in 0..opts.max_iter {
        // Residuals and objective bookkeeping for the current iterate.
        let ax = apply_a(&prep, &x);
        let rp_vec: Vec<f64> = prep.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let rp = norm2(&rp_vec) / (1.0 + prep.b_norm);
        apply_at(&prep, &y, &mut at_dy);
        let mut rd_sq = 0.0;
        for bl in 0..nblocks {
            for idx in 0..rd[bl].len() {
                let v = prep.c[bl][idx] - at_dy[bl][idx] - s[bl][idx];
                rd[bl][idx] = v;
                rd_sq += v * v;
            }
        }
        let rd_norm = rd_sq.sqrt() / (1.0 + prep.c_norm);
        let pobj_int = dot_blocks(&prep.c, &x);
        let dobj_int: f64 = prep.b.iter().zip(&y).map(|(b, y)| b * y).sum();
        let (pobj_user, dobj_user) = if prep.maximize {
            (-pobj_int, -dobj_int)
        } else {
            (pobj_int, dobj_int)
        };
        let gap = (pobj_user - dobj_user).abs() / pobj_user.abs().max(1.0);
        let score = gap.max(rp).max(rd_norm);
        if best.as_ref().map_or(true, |b| score < b.score) {
            best = Some(Snapshot {
                x: x.clone(),
                y: y.clone(),
                s: s.clone(),
                pobj_user,
                dobj_user,
                gap,
                rp,
                rd: rd_norm,
                score,
            });
        }
        if gap <= opts.gap_tol / DEEP_FACTOR
            && rp <= opts.feas_tol / DEEP_FACTOR
            && rd_norm <= opts.feas_tol / DEEP_FACTOR
        {
            break;
        }
        if dobj_int.abs() > DIVERGENCE_LIMIT * (1.0 + prep.b_norm) {
            diverged = true;
            break;
        }

        let mu = dot_blocks(&x, &s) / prep.n_total as f64;
        if mu < 1e-18 || mu >= STALL_RATIO * prev_mu {
            stall_count += 1;
            if stall_count >= STALL_LIMIT {
                break;
            }
        } else {
            stall_count = 0;
        }
        prev_mu = mu;

        // Factor S and X; both stay strictly PD by step-length construction.
        let mut s_chol = Vec::with_capacity(nblocks);
        let mut x_chol = Vec::with_capacity(nblocks);
        let mut factor_failed = false;
        for bl in 0..nblocks {
            match (
                dense::cholesky(sizes[bl], &s[bl]),
                dense::cholesky(sizes[bl], &x[bl]),
            ) {
                (Some(ls), Some(lx)) => {
                    sinv[bl] = dense::invert_from_cholesky(sizes[bl], &ls);
                    s_chol.push(ls);
                    x_chol.push(lx);
                }
                _ => {
                    factor_failed = true;
                    break;
                }
            }
        }
        if factor_failed {
            break;
        }
        let _ = &x_chol;

        // G = X R_d S^-1 per block, reused by predictor and corrector.
        for bl in 0..nblocks {
            let n = sizes[bl];
            dense::mat_mul(n, &rd[bl], &sinv[bl], &mut scratch1[..n * n]);
            dense::mat_mul(n, &x[bl], &scratch1[..n * n], &mut g[bl]);
        }
        let a_of_g = apply_a_general(&prep, &g);
        let a_of_sinv = apply_a(&prep, &sinv);

        assemble_schur(
            &prep,
            &x,
            &sinv,
            &mut w,
            &mut w_present,
            &mut scratch1,
            &mut scratch2,
            &mut schur,
        );
        let schur_chol = match factor_schur(m, &schur) {
            Some(l) => l,
            None => break,
        };

        // Predictor (sigma = 0).
        let mut dy_aff: Vec<f64> = (0..m).map(|a| prep.b[a] + a_of_g[a]).collect();
        dense::chol_solve(m, &schur_chol, &mut dy_aff);
        build_ds(&prep, &rd, &dy_aff, &mut dsa, &mut at_dy);
        for bl in 0..nblocks {
            let n = sizes[bl];
            dense::mat_mul(n, &dsa[bl], &sinv[bl], &mut scratch1[..n * n]);
            dense::mat_mul(n, &x[bl], &scratch1[..n * n], &mut scratch2[..n * n]);
            for idx in 0..n * n {
                dxa[bl][idx] = -x[bl][idx] - scratch2[idx];
            }
            dense::symmetrize(n, &mut dxa[bl]);
        }
        let gamma = if iter < 3 { 0.95 } else { 0.98 };
        let alpha_p_aff = step_length(sizes, &x, &dxa, gamma, &mut scratch1);
        let alpha_d_aff = step_length(sizes, &s, &dsa, gamma, &mut scratch1);
        let xs = dot_blocks(&x, &s);
        let mu_aff = (xs
            + alpha_p_aff * dot_blocks(&dxa, &s)
            + alpha_d_aff * dot_blocks(&x, &dsa)
            + alpha_p_aff * alpha_d_aff * dot_blocks(&dxa, &dsa))
            / prep.n_total as f64;
        let sigma = ((mu_aff / mu).powi(3)).clamp(1e-10, 1.0);

        // Corrector.
        for bl in 0..nblocks {
            let n = sizes[bl];
            dense::mat_mul(n, &dsa[bl], &sinv[bl], &mut scratch1[..n * n]);
            dense::mat_mul(n, &dxa[bl], &scratch1[..n * n], &mut k_corr[bl]);
        }
        let a_of_k = apply_a_general(&prep, &k_corr);
        let mut dy: Vec<f64> = (0..m)
            .map(|a| prep.b[a] - sigma * mu * a_of_sinv[a] + a_of_g[a] + a_of_k[a])
            .collect();
        dense::chol_solve(m, &schur_chol, &mut dy);
        build_ds(&prep, &rd, &dy, &mut ds, &mut at_dy);
        for bl in 0..nblocks {
            let n = sizes[bl];
            dense::mat_mul(n, &ds[bl], &sinv[bl], &mut scratch1[..n * n]);
            dense::mat_mul(n, &x[bl], &scratch1[..n * n], &mut scratch2[..n * n]);
            for idx in 0..n * n {
                dx[bl][idx] =
                    sigma * mu * sinv[bl][idx] - x[bl][idx] - scratch2[idx] - k_corr[bl][idx];
            }
            dense::symmetrize(n, &mut dx[bl]);
        }
        let alpha_p = step_length(sizes, &x, &dx, gamma, &mut scratch1);
        let alpha_d = step_length(sizes, &s, &ds, gamma, &mut scratch1);
        if alpha_p < 1e-8 && alpha_d < 1e-8 {
            stall_count = STALL_LIMIT;
        }

        let mut finite = true;
        for bl in 0..nblocks {
            for idx in 0..x[bl].len() {
                x[bl][idx] += alpha_p * dx[bl][idx];
                s[bl][idx] += alpha_d * ds[bl][idx];
                finite &= x[bl][idx].is_finite() && s[bl][idx].is_finite();
            }
        }
        for (ya, &d) in y.iter_mut().zip(&dy) {
            *ya += alpha_d * d;
            finite &= ya.is_finite();
        }
        iterations = iter + 1;
        if !finite {
            break;
        }
    }

    let best = best.expect("at least one iterate recorded");
    let converged =
        best.gap <= opts.gap_tol && best.rp <= opts.feas_tol && best.rd <= opts.feas_tol;
    let status = if converged {
        SolveStatus::Optimal
    } else if diverged {
        SolveStatus::Infeasible
    } else {
        SolveStatus::Failed
    };
    let sign = if prep.maximize { -1.0 } else { 1.0 };
    Ok(SdpSolution {
        status,
        primal_value: best.pobj_user,
        dual_value: best.dobj_user,
        gap: best.gap,
        primal_residual: best.rp,
        dual_residual: best.rd,
        iterations,
        primal_blocks: (0..prep.orig_blocks)
            .map(|bl| SymMatrix::from_raw(sizes[bl], best.x[bl].clone()))
            .collect(),
        dual_multipliers: best.y.iter().map(|v| sign * v).collect(),
        dual_slacks: (0..prep.orig_blocks)
            .map(|bl| SymMatrix::from_raw(sizes[bl], best.s[bl].clone()))
            .collect(),
    })
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn apply_a(prep: &Prepared, blocks: &[Vec<f64>]) -> Vec<f64> {
    prep.cons
        .iter()
        .map(|con| {
            con.terms
                .iter()
                .map(|t| term_inner_sym(t, &blocks[t.block], prep.sizes[t.block]))
                .sum()
        })
        .collect()
}

fn apply_a_general(prep: &Prepared, blocks: &[Vec<f64>]) -> Vec<f64> {
    prep.cons
        .iter()
        .map(|con| {
            con.terms
                .iter()
                .map(|t| term_inner_general(t, &blocks[t.block], prep.sizes[t.block]))
                .sum()
        })
        .collect()
}

fn apply_at(prep: &Prepared, y: &[f64], out: &mut [Vec<f64>]) {
    for block in out.iter_mut() {
        block.fill(0.0);
    }
    for (con, &ya) in prep.cons.iter().zip(y) {
        if ya == 0.0 {
            continue;
        }
        for t in &con.terms {
            term_scatter(t, ya, &mut out[t.block], prep.sizes[t.block]);
        }
    }
}

fn build_ds(
    prep: &Prepared,
    rd: &[Vec<f64>],
    dy: &[f64],
    out: &mut [Vec<f64>],
    at_buf: &mut [Vec<f64>],
) {
    apply_at(prep, dy, at_buf);
    for bl in 0..out.len() {
        for idx in 0..out[bl].len() {
            out[bl][idx] = rd[bl][idx] - at_buf[bl][idx];
        }
    }
}

/// Schur matrix `M[a][b] = sum_bl Tr(A_a X A_b S^-1)`, lower triangle
/// computed then mirrored (the matrix is symmetric analytically).
#[allow(clippy::too_many_arguments)]
fn assemble_schur(
    prep: &Prepared,
    x: &[Vec<f64>],
    sinv: &[Vec<f64>],
    w: &mut [Vec<f64>],
    w_present: &mut [bool],
    scratch1: &mut [f64],
    scratch2: &mut [f64],
    schur: &mut [f64],
) {
    let m = prep.cons.len();
    schur.fill(0.0);
    for bcon in 0..m {
        w_present.fill(false);
        for t in &prep.cons[bcon].terms {
            let bl = t.block;
            let n = prep.sizes[bl];
            if !w_present[bl] {
                w[bl].fill(0.0);
                w_present[bl] = true;
            }
            match &t.dense {
                Some(a_dense) => {
                    // W += X (A S^-1), two dense products.
                    dense::mat_mul(n, a_dense, &sinv[bl], &mut scratch1[..n * n]);
                    dense::mat_mul(n, &x[bl], &scratch1[..n * n], &mut scratch2[..n * n]);
                    for idx in 0..n * n {
                        w[bl][idx] += scratch2[idx];
                    }
                }
                None => {
                    // W += sum_(i,j,v) v * outer(X[:, i], S^-1[j, :]).
                    for &(i, j, v) in &t.full {
                        let xrow = &x[bl][i as usize * n..(i as usize + 1) * n];
                        let srow = &sinv[bl][j as usize * n..(j as usize + 1) * n];
                        for r in 0..n {
                            let f = v * xrow[r];
                            if f == 0.0 {
                                continue;
                            }
                            let wrow = &mut w[bl][r * n..(r + 1) * n];
                            for c in 0..n {
                                wrow[c] += f * srow[c];
                            }
                        }
                    }
                }
            }
        }
        for acon in 0..=bcon {
            let mut acc = 0.0;
            for t in &prep.cons[acon].terms {
                if w_present[t.block] {
                    acc += term_inner_general(t, &w[t.block], prep.sizes[t.block]);
                }
            }
            schur[acon * m + bcon] = acc;
            schur[bcon * m + acon] = acc;
        }
    }
}

fn factor_schur(m: usize, schur: &[f64]) -> Option<Vec<f64>> {
    if let Some(l) = dense::cholesky(m, schur) {
        return Some(l);
    }
    // Ridge retries for nearly singular normal equations late in the run.
    let max_diag = (0..m)
        .map(|i| schur[i * m + i].abs())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let mut jitter = 1e-13 * max_diag;
    for _ in 0..3 {
        let mut shifted = schur.to_vec();
        for i in 0..m {
            shifted[i * m + i] += jitter;
        }
        if let Some(l) = dense::cholesky(m, &shifted) {
            return Some(l);
        }
        jitter *= 100.0;
    }
    None
}

/// Largest fraction of the direction keeping every block strictly PD,
/// certified by successful Cholesky factorizations.
fn step_length(
    sizes: &[usize],
    base: &[Vec<f64>],
    dir: &[Vec<f64>],
    gamma: f64,
    scratch: &mut [f64],
) -> f64 {
    let feasible = |alpha: f64, scratch: &mut [f64]| -> bool {
        for bl in 0..sizes.len() {
            let n = sizes[bl];
            let buf = &mut scratch[..n * n];
            for idx in 0..n * n {
                buf[idx] = base[bl][idx] + alpha * dir[bl][idx];
            }
            if dense::cholesky(n, buf).is_none() {
                return false;
            }
        }
        true
    };
    let hi_cap = 2.0;
    let alpha_max = if feasible(hi_cap, scratch) {
        hi_cap
    } else {
        let mut lo = 0.0;
        let mut hi = hi_cap;
        for _ in 0..25 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid, scratch) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let mut alpha = (gamma * alpha_max).min(1.0);
    for _ in 0..8 {
        if alpha <= 0.0 || feasible(alpha, scratch) {
            break;
        }
        alpha *= 0.9;
    }
    alpha.max(0.0)
}
