//! Command implementations.  Each returns a [`RunReport`]; the caller
//! renders it and derives the exit code from `report.pass`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;

use seqdisc_core::linalg::ToleranceConfig;
use seqdisc_core::sample::{
    random_ensemble, random_ud_feasible_ensemble, random_ud_infeasible_ensemble, rng_from_seed,
    GENERATOR_NAME,
};
use seqdisc_core::unambiguous::{
    audit_ud_solution, check_sequence_ud_feasible, solve_unambiguous, verify_product_unambiguous,
    SequenceFeasibilityMode, UdFeasibility, UdSolutionAudit, UD_DUAL_TOL, UD_PRIMAL_TOL,
    UD_UNAMBIGUITY_TOL,
};
use seqdisc_core::{
    check_hykl_certificate, solve_min_error, verify_product_min_error, Ensemble, MinErrorError,
    Povm, ProductTheoremReport, ProductVerifyOptions, SequenceEnsemble, SolverOptions,
    CERTIFICATE_TOL,
};

use crate::format::{load_ensemble, load_povm, write_povm, LoadedEnsemble};
use crate::report::{
    CertificateEntry, FeasibilityReport, FeasibilitySummary, GeneratorInfo, InputDigest,
    RunReport, SimulationReport, SolverStatsEntry, ToleranceEcho, TupleFeasibility, Values,
};
use crate::{CliError, ParadigmArg};

/// Joint dimension cap for materialized solves; `SEQDISC_DIM_CAP`
/// overrides it.
pub const DEFAULT_DIRECT_CAP: usize = 64;

/// Outcome probabilities below this are treated as exact zeros during
/// simulation, so structurally forbidden outcomes are never sampled.
const PROB_FLOOR: f64 = 1e-13;

pub fn effective_dim_cap() -> Result<usize, CliError> {
    match std::env::var("SEQDISC_DIM_CAP") {
        Ok(raw) => raw
            .parse::<usize>()
            .map_err(|_| CliError::Input(format!("SEQDISC_DIM_CAP: not a dimension: {raw:?}"))),
        Err(_) => Ok(DEFAULT_DIRECT_CAP),
    }
}

fn solver_err(e: impl std::fmt::Display) -> CliError {
    CliError::Solver(e.to_string())
}

fn input_digest(loaded: &LoadedEnsemble) -> InputDigest {
    InputDigest {
        path: loaded.path.clone(),
        sha256: loaded.sha256.clone(),
        label: loaded.ensemble.label().to_string(),
        dimension: loaded.ensemble.dim(),
        states: loaded.ensemble.len(),
    }
}

fn base_report(command: String, mode: String, solver: &SolverOptions) -> RunReport {
    RunReport {
        command,
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode,
        inputs: Vec::new(),
        generator: None,
        tolerances: ToleranceEcho::baseline(solver),
        values: None,
        certificates: Vec::new(),
        solver_stats: Vec::new(),
        feasibility: Vec::new(),
        simulation: None,
        wall_time_ms: None,
        pass: true,
    }
}

/// Certificate entries for a min-error optimality check: one per state
/// (the smallest eigenvalue of `Gamma - q_j sigma_j`, nonnegative at
/// optimality) plus the match between `Tr(Gamma)` and the value.
fn hykl_entries(
    e: &Ensemble,
    povm: &Povm,
    p: f64,
    tol: f64,
) -> Result<Vec<CertificateEntry>, CliError> {
    let cert = check_hykl_certificate(e, povm, tol).map_err(solver_err)?;
    let threshold = -tol * cert.scale;
    let mut entries: Vec<CertificateEntry> = cert
        .min_eigenvalues
        .iter()
        .enumerate()
        .map(|(j, &min)| CertificateEntry {
            label: format!("optimality condition state {j}"),
            pass: min >= threshold,
            detail: min,
            tolerance: tol,
        })
        .collect();
    let gap = (cert.gamma_trace - p).abs();
    entries.push(CertificateEntry {
        label: "certificate value matches success probability".to_string(),
        pass: gap <= tol,
        detail: gap,
        tolerance: tol,
    });
    Ok(entries)
}

/// Certificate entries for an unambiguous solution audit.  The primal
/// and unambiguity checks use their fixed feasibility tolerances; the
/// optimality checks (dual certificate and duality gap) use `dual_tol`.
fn ud_entries(label: &str, audit: &UdSolutionAudit, dual_tol: f64) -> Vec<CertificateEntry> {
    let dual_worst = audit
        .dual_min_eigenvalue
        .unwrap_or(0.0)
        .min(audit.z_min_eigenvalue);
    vec![
        CertificateEntry {
            label: format!("{label}: primal feasibility"),
            pass: audit.primal_min_eigenvalue >= -UD_PRIMAL_TOL,
            detail: audit.primal_min_eigenvalue,
            tolerance: UD_PRIMAL_TOL,
        },
        CertificateEntry {
            label: format!("{label}: dual certificate"),
            pass: dual_worst >= -dual_tol,
            detail: dual_worst,
            tolerance: dual_tol,
        },
        CertificateEntry {
            label: format!("{label}: unambiguity"),
            pass: audit.max_cross_overlap <= UD_UNAMBIGUITY_TOL,
            detail: audit.max_cross_overlap,
            tolerance: UD_UNAMBIGUITY_TOL,
        },
        CertificateEntry {
            label: format!("{label}: duality gap"),
            pass: audit.duality_gap <= dual_tol,
            detail: audit.duality_gap,
            tolerance: dual_tol,
        },
    ]
}

pub fn cmd_solve(
    command: String,
    paradigm: ParadigmArg,
    ensemble_path: &Path,
    emit_povm: Option<&Path>,
    tol: Option<f64>,
) -> Result<RunReport, CliError> {
    let solver = SolverOptions::default();
    let loaded = load_ensemble(ensemble_path)?;
    let e = &loaded.ensemble;
    let mut report = base_report(command, format!("solve {paradigm}"), &solver);
    report.inputs.push(input_digest(&loaded));
    match paradigm {
        ParadigmArg::MinError => {
            let cert_tol = tol.unwrap_or(CERTIFICATE_TOL);
            report.tolerances.certificate = Some(cert_tol);
            let sol = solve_min_error(e, &solver).map_err(solver_err)?;
            report
                .solver_stats
                .push(stats_entry("solve", &sol.sdp));
            report.certificates = hykl_entries(e, &sol.povm, sol.p, cert_tol)?;
            report.values = Some(Values {
                p: Some(sol.p),
                ..Values::default()
            });
            if let Some(path) = emit_povm {
                write_povm(path, &sol.povm, Some(format!("{} min-error optimal", e.label())))?;
            }
            report.pass = report.certificates.iter().all(|c| c.pass);
        }
        ParadigmArg::Unambiguous => {
            let dual_tol = tol.unwrap_or(UD_DUAL_TOL);
            report.tolerances.certificate = Some(dual_tol);
            report.tolerances.ud_primal = Some(UD_PRIMAL_TOL);
            report.tolerances.ud_dual = Some(dual_tol);
            report.tolerances.ud_unambiguity = Some(UD_UNAMBIGUITY_TOL);
            let sol = solve_unambiguous(e, &solver).map_err(solver_err)?;
            if let Some(sdp) = &sol.sdp {
                report.solver_stats.push(stats_entry("solve", sdp));
            }
            let audit = audit_ud_solution(e, &sol).map_err(solver_err)?;
            report.certificates = ud_entries("solution", &audit, dual_tol);
            report.values = Some(Values {
                p: Some(sol.p),
                ..Values::default()
            });
            if let Some(path) = emit_povm {
                write_povm(
                    path,
                    &sol.povm,
                    Some(format!("{} unambiguous optimal", e.label())),
                )?;
            }
            report.pass = report.certificates.iter().all(|c| c.pass);
        }
    }
    Ok(report)
}

fn stats_entry(label: &str, sdp: &seqdisc_core::SdpSolution) -> SolverStatsEntry {
    SolverStatsEntry {
        label: label.to_string(),
        iterations: sdp.iterations,
        gap: sdp.gap,
        primal_residual: sdp.primal_residual,
        dual_residual: sdp.dual_residual,
    }
}

/// Evenly spaced flat tuple indices, used when `--sample-tuples` limits
/// the per-tuple checks.
fn evenly_spaced_tuples(seq: &SequenceEnsemble, n: usize) -> Vec<Vec<usize>> {
    let total = seq.total_count();
    if n == 0 || n >= total {
        return (0..total).map(|f| seq.tuple_from_flat(f)).collect();
    }
    let mut flats: Vec<usize> = (0..n)
        .map(|t| {
            if n == 1 {
                0
            } else {
                (t * (total - 1)) / (n - 1)
            }
        })
        .collect();
    flats.dedup();
    flats.into_iter().map(|f| seq.tuple_from_flat(f)).collect()
}

fn product_report_into(
    report: &mut RunReport,
    result: &ProductTheoremReport,
    value_tol: f64,
    direct_possible: bool,
) {
    report.certificates = result.certificates.iter().map(Into::into).collect();
    report.solver_stats = result.solver_stats.iter().map(Into::into).collect();
    let diff_ok = match result.abs_diff {
        Some(d) => d <= value_tol,
        None => true,
    };
    report.values = Some(Values {
        local_values: Some(result.local_values.clone()),
        product_value: Some(result.product_value),
        direct_value: result.direct_value,
        abs_diff: result.abs_diff,
        direct_skipped: if result.direct_value.is_none() && !direct_possible {
            Some("skipped (capacity)".to_string())
        } else {
            None
        },
        ..Values::default()
    });
    report.pass = diff_ok && report.certificates.iter().all(|c| c.pass);
}

pub fn cmd_verify_product(
    command: String,
    paradigm: ParadigmArg,
    ensemble_paths: &[&Path],
    value_tol: f64,
    direct_cap: Option<usize>,
    sample_tuples: Option<usize>,
) -> Result<RunReport, CliError> {
    let solver = SolverOptions::default();
    let cap = match direct_cap {
        Some(c) => c,
        None => effective_dim_cap()?,
    };
    let mut report = base_report(command, format!("verify-product {paradigm}"), &solver);
    report.tolerances.value_diff = Some(value_tol);
    report.tolerances.certificate = Some(CERTIFICATE_TOL);
    let mut components = Vec::with_capacity(ensemble_paths.len());
    for path in ensemble_paths {
        let loaded = load_ensemble(path)?;
        report.inputs.push(input_digest(&loaded));
        components.push(loaded.ensemble);
    }
    let seq = SequenceEnsemble::new(components.clone(), false)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let mut opts = ProductVerifyOptions {
        direct_cap: cap,
        solver,
        ..ProductVerifyOptions::default()
    };
    if let Some(n) = sample_tuples {
        opts.sample_tuples = Some(evenly_spaced_tuples(&seq, n));
    }
    let direct_possible = seq.total_dim() <= cap;
    let result = match paradigm {
        ParadigmArg::MinError => verify_product_min_error(&components, &opts).map_err(solver_err)?,
        ParadigmArg::Unambiguous => {
            report.tolerances.ud_primal = Some(UD_PRIMAL_TOL);
            report.tolerances.ud_dual = Some(UD_DUAL_TOL);
            report.tolerances.ud_unambiguity = Some(UD_UNAMBIGUITY_TOL);
            verify_product_unambiguous(&components, &opts).map_err(solver_err)?
        }
    };
    product_report_into(&mut report, &result, value_tol, direct_possible);
    Ok(report)
}

fn summarize_feasibility(f: &UdFeasibility, seq: &SequenceEnsemble) -> FeasibilitySummary {
    FeasibilitySummary {
        overall: f.overall,
        joint_rank: f.joint_rank,
        tuples: f
            .per_state
            .iter()
            .enumerate()
            .map(|(flat, s)| TupleFeasibility {
                tuple: seq.tuple_from_flat(flat),
                identifiable: s.identifiable,
                excluded_rank: s.excluded_rank,
            })
            .collect(),
    }
}

fn summaries_agree(a: &FeasibilitySummary, b: &FeasibilitySummary) -> bool {
    a.overall == b.overall
        && a.joint_rank == b.joint_rank
        && a.tuples.len() == b.tuples.len()
        && a.tuples.iter().zip(&b.tuples).all(|(x, y)| {
            x.identifiable == y.identifiable && x.excluded_rank == y.excluded_rank
        })
}

fn feasibility_report(
    components: &[Ensemble],
    trial: Option<usize>,
    cap: usize,
) -> Result<FeasibilityReport, CliError> {
    let tol = ToleranceConfig::default();
    let seq = SequenceEnsemble::new(components.to_vec(), false)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let per = check_sequence_ud_feasible(components, SequenceFeasibilityMode::PerComponent, &tol)
        .map_err(solver_err)?;
    let per_summary = summarize_feasibility(&per, &seq);
    if seq.total_dim() <= cap {
        let direct =
            check_sequence_ud_feasible(components, SequenceFeasibilityMode::Direct { cap }, &tol)
                .map_err(solver_err)?;
        let direct_summary = summarize_feasibility(&direct, &seq);
        let agreement = summaries_agree(&per_summary, &direct_summary);
        Ok(FeasibilityReport {
            trial,
            per_component: per_summary,
            direct: Some(direct_summary),
            direct_skipped: None,
            agreement: Some(agreement),
        })
    } else {
        Ok(FeasibilityReport {
            trial,
            per_component: per_summary,
            direct: None,
            direct_skipped: Some("skipped (capacity)".to_string()),
            agreement: None,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RandomSpec {
    pub d: usize,
    pub l: usize,
    pub k: usize,
    pub seed: u64,
    pub trials: usize,
}

pub fn parse_random_spec(tokens: &[String]) -> Result<RandomSpec, CliError> {
    let mut spec = RandomSpec {
        d: 3,
        l: 3,
        k: 2,
        seed: 0,
        trials: 1,
    };
    for token in tokens {
        let (key, value) = token.split_once('=').ok_or_else(|| {
            CliError::Input(format!("--random expects key=value entries, got {token:?}"))
        })?;
        let bad = |_| CliError::Input(format!("--random: invalid value in {token:?}"));
        match key {
            "d" => spec.d = value.parse().map_err(bad)?,
            "l" => spec.l = value.parse().map_err(bad)?,
            "k" => spec.k = value.parse().map_err(bad)?,
            "seed" => spec.seed = value.parse().map_err(bad)?,
            "trials" => spec.trials = value.parse().map_err(bad)?,
            other => {
                return Err(CliError::Input(format!(
                    "--random: unknown key {other:?} (expected d, l, k, seed, trials)"
                )));
            }
        }
    }
    if spec.d < 1 || spec.l < 2 || spec.k < 1 || spec.trials < 1 {
        return Err(CliError::Input(
            "--random requires d >= 1, l >= 2, k >= 1, trials >= 1".to_string(),
        ));
    }
    Ok(spec)
}

pub fn cmd_check_ud(
    command: String,
    ensemble_paths: &[&Path],
    random: Option<&[String]>,
) -> Result<RunReport, CliError> {
    let solver = SolverOptions::default();
    let cap = effective_dim_cap()?;
    let mut report = base_report(command, "check-ud".to_string(), &solver);
    match random {
        Some(tokens) => {
            if !ensemble_paths.is_empty() {
                return Err(CliError::Input(
                    "check-ud takes either component files or --random, not both".to_string(),
                ));
            }
            let spec = parse_random_spec(tokens)?;
            report.generator = Some(GeneratorInfo {
                name: GENERATOR_NAME.to_string(),
                seed: spec.seed,
            });
            let mut rng = rng_from_seed(spec.seed);
            for trial in 0..spec.trials {
                let components: Vec<Ensemble> = (0..spec.k)
                    .map(|i| {
                        let label = format!("random trial {trial} component {i}");
                        match rng.random_range(0..4u8) {
                            2 if spec.l <= spec.d => {
                                random_ud_feasible_ensemble(label, spec.d, spec.l, &mut rng)
                            }
                            3 => random_ud_infeasible_ensemble(label, spec.d, spec.l, &mut rng),
                            _ => random_ensemble(label, spec.d, spec.l, spec.d, &mut rng),
                        }
                    })
                    .collect();
                report
                    .feasibility
                    .push(feasibility_report(&components, Some(trial), cap)?);
            }
        }
        None => {
            if ensemble_paths.is_empty() {
                return Err(CliError::Input(
                    "check-ud needs component files or --random".to_string(),
                ));
            }
            let mut components = Vec::with_capacity(ensemble_paths.len());
            for path in ensemble_paths {
                let loaded = load_ensemble(path)?;
                report.inputs.push(input_digest(&loaded));
                components.push(loaded.ensemble);
            }
            report
                .feasibility
                .push(feasibility_report(&components, None, cap)?);
        }
    }
    report.pass = report
        .feasibility
        .iter()
        .all(|f| f.agreement != Some(false));
    Ok(report)
}

/// Per-component sampling tables for the Monte-Carlo run.
struct ComponentSim {
    priors: Vec<f64>,
    /// `outcome_rows[x][y] = Tr(rho_x M_y)`, floored and renormalized.
    outcome_rows: Vec<Vec<f64>>,
    inconclusive: Option<usize>,
}

fn simulation_tables(e: &Ensemble, povm: &Povm) -> ComponentSim {
    let outcome_rows = (0..e.len())
        .map(|x| {
            let mut row: Vec<f64> = (0..povm.len())
                .map(|y| {
                    let p = e.state(x).inner(povm.effect(y));
                    if p < PROB_FLOOR {
                        0.0
                    } else {
                        p
                    }
                })
                .collect();
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                for p in &mut row {
                    *p /= total;
                }
            }
            row
        })
        .collect();
    ComponentSim {
        priors: (0..e.len()).map(|j| e.prior(j)).collect(),
        outcome_rows,
        inconclusive: povm.inconclusive_index(),
    }
}

fn draw(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

pub fn cmd_simulate(
    command: String,
    paradigm: ParadigmArg,
    ensemble_paths: &[&Path],
    shots: u64,
    seed: u64,
) -> Result<RunReport, CliError> {
    if shots == 0 {
        return Err(CliError::Input("--shots must be at least 1".to_string()));
    }
    let solver = SolverOptions::default();
    let mut report = base_report(command, format!("simulate {paradigm}"), &solver);
    report.generator = Some(GeneratorInfo {
        name: GENERATOR_NAME.to_string(),
        seed,
    });
    let mut components = Vec::with_capacity(ensemble_paths.len());
    for path in ensemble_paths {
        let loaded = load_ensemble(path)?;
        report.inputs.push(input_digest(&loaded));
        components.push(loaded.ensemble);
    }
    let unambiguous = matches!(paradigm, ParadigmArg::Unambiguous);
    let mut analytic = 1.0;
    let mut sims = Vec::with_capacity(components.len());
    for (i, e) in components.iter().enumerate() {
        let label = format!("component {}", i + 1);
        match paradigm {
            ParadigmArg::MinError => {
                let sol = solve_min_error(e, &solver).map_err(solver_err)?;
                report.solver_stats.push(stats_entry(&label, &sol.sdp));
                let cert_tol = CERTIFICATE_TOL;
                report.tolerances.certificate = Some(cert_tol);
                report
                    .certificates
                    .extend(hykl_entries(e, &sol.povm, sol.p, cert_tol)?);
                analytic *= sol.p;
                sims.push(simulation_tables(e, &sol.povm));
            }
            ParadigmArg::Unambiguous => {
                let sol = solve_unambiguous(e, &solver).map_err(solver_err)?;
                if let Some(sdp) = &sol.sdp {
                    report.solver_stats.push(stats_entry(&label, sdp));
                }
                report.tolerances.ud_primal = Some(UD_PRIMAL_TOL);
                report.tolerances.ud_dual = Some(UD_DUAL_TOL);
                report.tolerances.ud_unambiguity = Some(UD_UNAMBIGUITY_TOL);
                let audit = audit_ud_solution(e, &sol).map_err(solver_err)?;
                report.certificates.extend(ud_entries(&label, &audit, UD_DUAL_TOL));
                analytic *= sol.p;
                sims.push(simulation_tables(e, &sol.povm));
            }
        }
    }

    let mut rng = rng_from_seed(seed);
    let mut successes = 0u64;
    let mut misidentifications = 0u64;
    let mut inconclusive_count = 0u64;
    for _ in 0..shots {
        let mut mismatch = false;
        let mut inconclusive = false;
        for sim in &sims {
            let x = draw(&sim.priors, rng.random::<f64>());
            let y = draw(&sim.outcome_rows[x], rng.random::<f64>());
            if Some(y) == sim.inconclusive {
                inconclusive = true;
            } else if y != x {
                mismatch = true;
            }
        }
        if unambiguous && inconclusive {
            inconclusive_count += 1;
        } else if mismatch {
            misidentifications += 1;
        } else {
            successes += 1;
        }
    }
    let empirical = successes as f64 / shots as f64;
    let standard_error = (empirical * (1.0 - empirical) / shots as f64).sqrt();
    let sigma = (analytic * (1.0 - analytic) / shots as f64).sqrt();
    let within = (empirical - analytic).abs() <= 3.0 * sigma;
    report.values = Some(Values {
        p: Some(analytic),
        ..Values::default()
    });
    report.simulation = Some(SimulationReport {
        shots,
        analytic_p: analytic,
        empirical_p: empirical,
        standard_error,
        successes,
        inconclusive: unambiguous.then_some(inconclusive_count),
        misidentifications: unambiguous.then_some(misidentifications),
        within_three_sigma: within,
    });
    let zero_misid = !unambiguous || misidentifications == 0;
    report.pass = within && zero_misid && report.certificates.iter().all(|c| c.pass);
    Ok(report)
}

pub fn cmd_certify(
    command: String,
    ensemble_path: &Path,
    povm_path: &Path,
) -> Result<RunReport, CliError> {
    let solver = SolverOptions::default();
    let mut report = base_report(command, "certify".to_string(), &solver);
    let loaded = load_ensemble(ensemble_path)?;
    let e = &loaded.ensemble;
    report.inputs.push(input_digest(&loaded));
    let loaded_povm = load_povm(povm_path)?;
    let povm = &loaded_povm.povm;
    report.inputs.push(InputDigest {
        path: loaded_povm.path.clone(),
        sha256: loaded_povm.sha256.clone(),
        label: "povm".to_string(),
        dimension: povm.dim(),
        states: povm.len(),
    });
    if povm.dim() != e.dim() {
        return Err(CliError::Input(format!(
            "dimension mismatch: ensemble dim {}, POVM dim {}",
            e.dim(),
            povm.dim()
        )));
    }
    let conclusive: Vec<usize> = povm.conclusive_indices().collect();
    if conclusive.len() != e.len() {
        return Err(CliError::Input(format!(
            "POVM has {} conclusive effects for {} states; expected one each",
            conclusive.len(),
            e.len()
        )));
    }
    let assignment: BTreeMap<usize, usize> = conclusive
        .iter()
        .enumerate()
        .map(|(state, &outcome)| (outcome, state))
        .collect();
    let p_candidate = e
        .success_probability(povm, &assignment)
        .map_err(|err| CliError::Input(err.to_string()))?;

    if povm.inconclusive_index().is_some() {
        // Unambiguous candidate: it must never misidentify, and it is
        // optimal iff its value matches an independent optimal solve.
        report.tolerances.certificate = Some(CERTIFICATE_TOL);
        report.tolerances.ud_unambiguity = Some(UD_UNAMBIGUITY_TOL);
        report.tolerances.ud_dual = Some(UD_DUAL_TOL);
        let mut max_cross = 0.0f64;
        for (state, &outcome) in conclusive.iter().enumerate() {
            for i in 0..e.len() {
                if i != state {
                    max_cross = max_cross.max(e.state(i).inner(povm.effect(outcome)));
                }
            }
        }
        report.certificates.push(CertificateEntry {
            label: "candidate unambiguity".to_string(),
            pass: max_cross <= UD_UNAMBIGUITY_TOL,
            detail: max_cross,
            tolerance: UD_UNAMBIGUITY_TOL,
        });
        let reference = solve_unambiguous(e, &solver).map_err(solver_err)?;
        if let Some(sdp) = &reference.sdp {
            report.solver_stats.push(stats_entry("reference solve", sdp));
        }
        let audit = audit_ud_solution(e, &reference).map_err(solver_err)?;
        report
            .certificates
            .extend(ud_entries("reference solution", &audit, UD_DUAL_TOL));
        let shortfall = reference.p - p_candidate;
        report.certificates.push(CertificateEntry {
            label: "candidate optimal".to_string(),
            pass: shortfall.abs() <= CERTIFICATE_TOL,
            detail: shortfall,
            tolerance: CERTIFICATE_TOL,
        });
        report.values = Some(Values {
            p: Some(p_candidate),
            reference_p: Some(reference.p),
            ..Values::default()
        });
    } else {
        // Min-error candidate: the optimality condition is necessary and
        // sufficient, so no reference solve is needed.
        report.tolerances.certificate = Some(CERTIFICATE_TOL);
        report.certificates = hykl_entries(e, povm, p_candidate, CERTIFICATE_TOL)?;
        report.values = Some(Values {
            p: Some(p_candidate),
            ..Values::default()
        });
    }
    report.pass = report.certificates.iter().all(|c| c.pass);
    Ok(report)
}
