//! Machine- and human-readable run reports.
//!
//! A report is the single output of every command.  It is fully
//! deterministic for fixed inputs, seed, and version: wall time is only
//! recorded behind the `--timings` flag so that default output is
//! byte-identical across runs, and every numeric claim carries the
//! tolerance it was tested against.

use serde::{Deserialize, Serialize};

use seqdisc_core::{
    CertificateVerdict, SolverOptions, SolverStats, ToleranceConfig,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    /// Normalized command echo (`seqdisc` plus the arguments as given).
    pub command: String,
    pub version: String,
    /// What ran: `solve min-error`, `verify-product unambiguous`,
    /// `check-ud`, `simulate min-error`, `certify`.
    pub mode: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<InputDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorInfo>,
    pub tolerances: ToleranceEcho,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Values>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<CertificateEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solver_stats: Vec<SolverStatsEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub feasibility: Vec<FeasibilityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
    /// Overall verdict; drives the process exit code.
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
    pub label: String,
    pub dimension: usize,
    pub states: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub name: String,
    pub seed: u64,
}

/// The tolerance set actually used by the run.  Fixed fields apply to
/// every command; optional fields appear when the command used them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToleranceEcho {
    pub solver_gap: f64,
    pub solver_feasibility: f64,
    pub rank: f64,
    pub psd: f64,
    pub subspace_equality: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_diff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ud_primal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ud_dual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ud_unambiguity: Option<f64>,
}

impl ToleranceEcho {
    pub fn baseline(solver: &SolverOptions) -> Self {
        let tol = ToleranceConfig::default();
        ToleranceEcho {
            solver_gap: solver.gap_tol,
            solver_feasibility: solver.feas_tol,
            rank: tol.rank_tol,
            psd: tol.psd_tol,
            subspace_equality: tol.subspace_eq_tol,
            certificate: None,
            value_diff: None,
            ud_primal: None,
            ud_dual: None,
            ud_unambiguity: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Values {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Optimal value from an independent reference solve (certify).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_diff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct_skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub label: String,
    pub pass: bool,
    pub detail: f64,
    pub tolerance: f64,
}

impl From<&CertificateVerdict> for CertificateEntry {
    fn from(v: &CertificateVerdict) -> Self {
        CertificateEntry {
            label: v.label.clone(),
            pass: v.pass,
            detail: v.detail,
            tolerance: v.tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverStatsEntry {
    pub label: String,
    pub iterations: usize,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl From<&SolverStats> for SolverStatsEntry {
    fn from(s: &SolverStats) -> Self {
        SolverStatsEntry {
            label: s.label.clone(),
            iterations: s.iterations,
            gap: s.gap,
            primal_residual: s.primal_residual,
            dual_residual: s.dual_residual,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<usize>,
    pub per_component: FeasibilitySummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct: Option<FeasibilitySummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct_skipped: Option<String>,
    /// `None` when the direct branch was skipped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilitySummary {
    pub overall: bool,
    pub joint_rank: usize,
    pub tuples: Vec<TupleFeasibility>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TupleFeasibility {
    pub tuple: Vec<usize>,
    pub identifiable: bool,
    pub excluded_rank: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub shots: u64,
    pub analytic_p: f64,
    pub empirical_p: f64,
    /// `sqrt(p_hat (1 - p_hat) / shots)`.
    pub standard_error: f64,
    pub successes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inconclusive: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub misidentifications: Option<u64>,
    /// `|empirical - analytic| <= 3 sqrt(analytic (1 - analytic) / shots)`.
    pub within_three_sigma: bool,
}

impl RunReport {
    pub fn render_json(&self) -> String {
        let mut body = serde_json::to_string_pretty(self).expect("report serializes");
        body.push('\n');
        body
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line(format!("seqdisc {} [{}]", self.version, self.mode));
        line(format!("command: {}", self.command));
        for input in &self.inputs {
            line(format!(
                "input: {} (label {:?}, dim {}, states {}) sha256 {}",
                input.path, input.label, input.dimension, input.states, input.sha256
            ));
        }
        if let Some(g) = &self.generator {
            line(format!("generator: {} seed {}", g.name, g.seed));
        }
        if let Some(v) = &self.values {
            line("values:".to_string());
            if let Some(p) = v.p {
                line(format!("  p = {p:.12}"));
            }
            if let Some(p) = v.reference_p {
                line(format!("  optimal p (reference solve) = {p:.12}"));
            }
            if let Some(locals) = &v.local_values {
                for (i, p) in locals.iter().enumerate() {
                    line(format!("  component {} p = {p:.12}", i + 1));
                }
            }
            if let Some(p) = v.product_value {
                line(format!("  product of component optima = {p:.12}"));
            }
            if let Some(p) = v.direct_value {
                line(format!("  direct joint optimum = {p:.12}"));
            }
            if let Some(d) = v.abs_diff {
                line(format!("  |product - direct| = {d:.3e}"));
            }
            if let Some(reason) = &v.direct_skipped {
                line(format!("  direct branch: {reason}"));
            }
        }
        if !self.certificates.is_empty() {
            line("certificates:".to_string());
            for c in &self.certificates {
                line(format!(
                    "  {} {} (detail {:.3e}, tol {:.0e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.label,
                    c.detail,
                    c.tolerance
                ));
            }
        }
        if !self.solver_stats.is_empty() {
            line("solver:".to_string());
            for s in &self.solver_stats {
                line(format!(
                    "  {}: {} iterations, gap {:.3e}, residuals {:.3e}/{:.3e}",
                    s.label, s.iterations, s.gap, s.primal_residual, s.dual_residual
                ));
            }
        }
        for f in &self.feasibility {
            match f.trial {
                Some(t) => line(format!("feasibility (trial {t}):")),
                None => line("feasibility:".to_string()),
            }
            let describe = |label: &str, s: &FeasibilitySummary, out: &mut Vec<String>| {
                out.push(format!(
                    "  {label}: {} (joint rank {})",
                    if s.overall { "feasible" } else { "infeasible" },
                    s.joint_rank
                ));
                for t in &s.tuples {
                    out.push(format!(
                        "    tuple {:?}: {}, excluded rank {}",
                        t.tuple,
                        if t.identifiable {
                            "identifiable"
                        } else {
                            "not identifiable"
                        },
                        t.excluded_rank
                    ));
                }
            };
            let mut lines = Vec::new();
            describe("per-component", &f.per_component, &mut lines);
            if let Some(direct) = &f.direct {
                describe("direct", direct, &mut lines);
            }
            for l in lines {
                line(l);
            }
            if let Some(reason) = &f.direct_skipped {
                line(format!("  direct: {reason}"));
            }
            if let Some(agree) = f.agreement {
                line(format!(
                    "  modes {}",
                    if agree { "agree" } else { "DISAGREE" }
                ));
            }
        }
        if let Some(s) = &self.simulation {
            line("simulation:".to_string());
            line(format!("  shots = {}", s.shots));
            line(format!("  analytic p = {:.12}", s.analytic_p));
            line(format!(
                "  empirical p = {:.12} (standard error {:.3e})",
                s.empirical_p, s.standard_error
            ));
            line(format!("  successes = {}", s.successes));
            if let Some(n) = s.inconclusive {
                line(format!("  inconclusive = {n}"));
            }
            if let Some(n) = s.misidentifications {
                line(format!("  misidentifications = {n}"));
            }
            line(format!(
                "  within 3 sigma of analytic: {}",
                if s.within_three_sigma { "yes" } else { "no" }
            ));
        }
        let t = &self.tolerances;
        let mut tol_parts = vec![
            format!("solver gap {:.0e}", t.solver_gap),
            format!("solver feasibility {:.0e}", t.solver_feasibility),
            format!("rank {:.0e}", t.rank),
            format!("psd {:.0e}", t.psd),
            format!("subspace equality {:.0e}", t.subspace_equality),
        ];
        if let Some(x) = t.certificate {
            tol_parts.push(format!("certificate {x:.0e}"));
        }
        if let Some(x) = t.value_diff {
            tol_parts.push(format!("value diff {x:.0e}"));
        }
        if let Some(x) = t.ud_primal {
            tol_parts.push(format!("ud primal {x:.0e}"));
        }
        if let Some(x) = t.ud_dual {
            tol_parts.push(format!("ud dual {x:.0e}"));
        }
        if let Some(x) = t.ud_unambiguity {
            tol_parts.push(format!("ud unambiguity {x:.0e}"));
        }
        line(format!("tolerances: {}", tol_parts.join(", ")));
        if let Some(ms) = self.wall_time_ms {
            line(format!("wall time: {ms:.1} ms"));
        }
        line(format!(
            "result: {}",
            if self.pass { "PASS" } else { "FAIL" }
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_report() -> RunReport {
        RunReport {
            command: "seqdisc solve --paradigm min-error e.json".into(),
            version: "0.1.0".into(),
            mode: "solve min-error".into(),
            inputs: vec![InputDigest {
                path: "e.json".into(),
                sha256: "00".repeat(32),
                label: "e".into(),
                dimension: 2,
                states: 2,
            }],
            generator: None,
            tolerances: ToleranceEcho::baseline(&SolverOptions::default()),
            values: Some(Values {
                p: Some(0.853553),
                ..Values::default()
            }),
            certificates: vec![CertificateEntry {
                label: "optimality".into(),
                pass: true,
                detail: -1.2e-12,
                tolerance: 1e-6,
            }],
            solver_stats: vec![],
            feasibility: vec![],
            simulation: None,
            wall_time_ms: None,
            pass: true,
        }
    }

    #[test]
    fn json_roundtrips() {
        let report = minimal_report();
        let body = report.render_json();
        let back: RunReport = serde_json::from_str(&body).unwrap();
        assert_eq!(back.command, report.command);
        assert_eq!(back.values.unwrap().p, Some(0.853553));
        assert!(back.pass);
    }

    #[test]
    fn rendering_is_deterministic() {
        let report = minimal_report();
        assert_eq!(report.render_text(), report.render_text());
        assert_eq!(report.render_json(), report.render_json());
    }

    #[test]
    fn text_report_mentions_verdict_and_tolerance() {
        let text = minimal_report().render_text();
        assert!(text.contains("result: PASS"));
        assert!(text.contains("tol 1e-6"));
        assert!(text.contains("p = 0.853553"));
        assert!(!text.contains("wall time"), "timings are opt-in");
    }
}
