//! End-to-end check pipeline and report assembly, shared by the CLI and the
//! examples.
//!
//! Pipeline order: build configuration → assign virtuals → build spanning
//! tree → (simplified stability, if selected) → distributed equilibrium solve
//! → model-based stability → overload check → verdict broadcast → report.

use crate::families::{self, Family};
use crate::jacobi::{solve, ConvergenceRow, SolveOutput, SolverSettings};
use crate::model::{Configuration, ModuleId};
use crate::oracle::{self, OracleError};
use crate::overload::{aggregate_verdict, connection_reports, OverloadOutcome};
use crate::runtime::{MessageKind, Runtime, RuntimeError, SchedulePolicy};
use crate::scenario::{ScenarioDoc, ScenarioError};
use crate::stability::{
    model_based_stability, simplified_stability, BalanceVerdict, SimplifiedOutcome,
    StabilityError, SupportSet,
};
use crate::tree::build_tree;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Options of one `check` run, on top of the scenario document.
#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub seed: u64,
    pub policy: SchedulePolicy,
    /// Hardware-faithful mode: 4-byte floats, 17-byte message fragmentation.
    pub fidelity: bool,
    /// Compute centralized-oracle deltas alongside the verdicts.
    pub verify: bool,
    /// Record every message for trace export.
    pub record_trace: bool,
    pub force_simplified: bool,
    pub iterations_override: Option<u32>,
    pub beta_override: Option<f64>,
    pub gamma_override: Option<f64>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            seed: 0,
            policy: SchedulePolicy::Random,
            fidelity: false,
            verify: false,
            record_trace: false,
            force_simplified: false,
            iterations_override: None,
            beta_override: None,
            gamma_override: None,
        }
    }
}

/// Oracle comparison appended by `--verify`.
#[derive(Debug, Clone, Copy)]
pub struct OracleDeltas {
    pub rel_state_error: f64,
    pub classification_match: bool,
    pub max_utilization_delta: f64,
    pub spectral_radius: Option<f64>,
}

/// Everything one check run produced. Fully determined by
/// (scenario, seed, settings); wall time is reported separately by the CLI.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub settings: SolverSettings,
    pub modules: usize,
    pub virtual_modules: usize,
    pub tree_depth: u32,
    pub simplified: Option<SimplifiedOutcome>,
    pub model_based: BalanceVerdict,
    pub support: SupportSet,
    pub overload: OverloadOutcome,
    pub stable: bool,
    pub marginal: bool,
    pub overloaded: bool,
    pub iterations: u32,
    pub last_change_round: Option<u32>,
    pub convergence_log: Vec<ConvergenceRow>,
    pub message_counts: [(MessageKind, u64); 7],
    pub flagged_modules: Vec<ModuleId>,
    pub oracle: Option<OracleDeltas>,
    pub trace_export: Option<String>,
}

impl RunReport {
    /// Exit code: 0 safe, 2 unstable, 3 overloaded, 4 both.
    pub fn exit_code(&self) -> i32 {
        match (self.stable, self.overloaded) {
            (true, false) => 0,
            (false, false) => 2,
            (true, true) => 3,
            (false, true) => 4,
        }
    }

    /// Deterministic textual report (golden-file stable; excludes wall time).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.scenario);
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(
            out,
            "modules: {} real + {} planned",
            self.modules - self.virtual_modules,
            self.virtual_modules
        );
        let _ = writeln!(out, "tree depth: {}", self.tree_depth);
        let _ = writeln!(
            out,
            "solver: iterations={} beta={:.6} gamma={:.1e}",
            self.iterations, self.settings.beta, self.settings.gamma
        );
        if let Some(s) = &self.simplified {
            let _ = writeln!(
                out,
                "stability (simplified): {} [com x={:.6e} y={:.6e} z={:.6e}, safe angle {}]",
                verdict_name(s.verdict),
                s.com.x,
                s.com.y,
                s.com.z,
                s.aggregate.describe()
            );
        }
        let _ = writeln!(
            out,
            "stability (model-based): {} [{}]",
            verdict_name(self.model_based),
            match &self.support {
                SupportSet::Stable => "support: stable".to_string(),
                SupportSet::Points { count, .. } => format!("support points: {count}"),
            }
        );
        if let Some(round) = self.last_change_round {
            let _ = writeln!(out, "contact states settled at round: {round}");
        }
        let max_util = if self.overload.reports.is_empty() {
            "n/a (no connections)".to_string()
        } else {
            format!("{:.4}", self.overload.summary.max_utilization)
        };
        let _ = writeln!(
            out,
            "overload: {} [max utilization {}, breaches {}{}]",
            if self.overloaded { "BREACH" } else { "ok" },
            max_util,
            self.overload.summary.breach_count,
            match self.overload.summary.witness {
                Some((a, b)) => format!(", witness {a}-{b}"),
                None => String::new(),
            }
        );
        let _ = writeln!(out, "verdict: {}", verdict_word(self.exit_code()));
        if !self.flagged_modules.is_empty() {
            let ids: Vec<String> = self.flagged_modules.iter().map(|m| m.to_string()).collect();
            let _ = writeln!(out, "flagged modules: {}", ids.join(","));
        }
        let _ = writeln!(out, "messages:");
        for (kind, count) in &self.message_counts {
            let _ = writeln!(out, "  {}: {}", kind.name(), count);
        }
        if !self.convergence_log.is_empty() {
            let _ = writeln!(out, "convergence (round, residual, state changes):");
            for row in &self.convergence_log {
                let _ = writeln!(
                    out,
                    "  {} {:.6e} {}",
                    row.round, row.residual, row.state_changes
                );
            }
        }
        if let Some(o) = &self.oracle {
            let _ = writeln!(out, "oracle deltas:");
            let _ = writeln!(out, "  relative state error: {:.3e}", o.rel_state_error);
            let _ = writeln!(
                out,
                "  contact classification match: {}",
                o.classification_match
            );
            let _ = writeln!(
                out,
                "  max utilization delta: {:.3e}",
                o.max_utilization_delta
            );
            if let Some(rho) = o.spectral_radius {
                let _ = writeln!(out, "  spectral radius: {rho:.6}");
            }
        }
        out
    }

    /// Per-connection table: `p,q,orientation,f_z,m_x,m_y,utilization,breached`.
    pub fn connections_csv(&self) -> String {
        let mut out = String::from("p,q,orientation,f_z,m_x,m_y,utilization,breached\n");
        for r in &self.overload.reports {
            let _ = writeln!(
                out,
                "{},{},{},{:.6e},{:.6e},{:.6e},{:.6},{}",
                r.a,
                r.b,
                r.orientation,
                r.wrench.f_z(),
                r.wrench.m_x(),
                r.wrench.m_y(),
                r.utilization,
                r.breached
            );
        }
        out
    }
}

fn verdict_name(v: BalanceVerdict) -> &'static str {
    match v {
        BalanceVerdict::Stable => "stable",
        BalanceVerdict::MarginalStable => "marginal-stable",
        BalanceVerdict::Unstable => "UNSTABLE",
    }
}

fn verdict_word(exit: i32) -> &'static str {
    match exit {
        0 => "safe",
        2 => "unstable",
        3 => "overload",
        4 => "unstable+overload",
        _ => "error",
    }
}

fn effective_settings(doc: &ScenarioDoc, opts: &CheckOptions) -> SolverSettings {
    let mut spec = doc.solver;
    if let Some(it) = opts.iterations_override {
        spec.max_iterations = it;
    }
    if let Some(b) = opts.beta_override {
        spec.beta = b;
    }
    if let Some(g) = opts.gamma_override {
        spec.gamma = g;
    }
    SolverSettings::from_spec(&spec)
}

/// Runs the full check pipeline on a scenario document.
pub fn run_check(
    doc: &ScenarioDoc,
    scenario_id: &str,
    opts: &CheckOptions,
) -> Result<RunReport, CheckError> {
    let config = crate::scenario::build_configuration(doc)?;
    let settings = effective_settings(doc, opts);
    let mut rt = Runtime::new(&config, opts.policy, opts.seed, opts.fidelity, opts.record_trace)?;

    let tree = build_tree(&mut rt)?;
    let simplified = if doc.check.simplified_stability || opts.force_simplified {
        Some(simplified_stability(&mut rt, &tree)?)
    } else {
        None
    };
    let solve_out = solve(&mut rt, &tree, settings, false)?;
    let (model_based, support) = model_based_stability(&mut rt, &tree, &solve_out)?;

    // marginal can only come from the simplified check's hull-boundary flag
    let marginal = matches!(
        simplified.map(|s| s.verdict),
        Some(BalanceVerdict::MarginalStable)
    );
    let stable = model_based.is_stable() || marginal;
    let (overload, _flags) = aggregate_verdict(&mut rt, &tree, &solve_out, (stable, marginal))?;

    let oracle = if opts.verify {
        Some(compute_oracle_deltas(&config, &solve_out, settings)?)
    } else {
        None
    };

    let flagged_modules = overload
        .module_flags
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(idx, _)| config.module(idx).id)
        .collect();
    let message_counts = MessageKind::ALL.map(|k| (k, rt.trace.count_of(k)));

    Ok(RunReport {
        scenario: scenario_id.to_string(),
        seed: opts.seed,
        settings,
        modules: config.len(),
        virtual_modules: config.len() - config.real_count(),
        tree_depth: tree.depth(),
        simplified,
        model_based,
        support,
        overloaded: overload.breached(),
        overload,
        stable,
        marginal,
        iterations: solve_out.iterations,
        last_change_round: solve_out.last_change_round,
        convergence_log: solve_out.convergence_log.clone(),
        message_counts,
        flagged_modules,
        oracle,
        trace_export: opts.record_trace.then(|| rt.trace.export_lines()),
    })
}

fn compute_oracle_deltas(
    config: &Configuration,
    solve_out: &SolveOutput,
    settings: SolverSettings,
) -> Result<OracleDeltas, CheckError> {
    let oracle_sol = oracle::assemble_and_solve(config, settings.gamma)?;
    let num: f64 = solve_out
        .states
        .iter()
        .zip(&oracle_sol.states)
        .map(|(a, b)| (a.0 - b.0).norm_squared())
        .sum::<f64>()
        .sqrt();
    let den: f64 = oracle_sol
        .states
        .iter()
        .map(|s| s.0.norm_squared())
        .sum::<f64>()
        .sqrt();
    let classification_match = solve_out.contact_states == oracle_sol.contact_states;

    let oracle_out = SolveOutput {
        states: oracle_sol.states.clone(),
        published: oracle_sol.states.clone(),
        contact_states: oracle_sol.contact_states.clone(),
        iterations: 0,
        last_change_round: None,
        convergence_log: vec![],
        residual_sq: vec![],
        history: None,
    };
    let oracle_reports = connection_reports(config, &oracle_out).expect("valid connections");
    let ours = connection_reports(config, solve_out).expect("valid connections");
    let max_utilization_delta = ours
        .iter()
        .zip(&oracle_reports)
        .map(|(a, b)| (a.utilization - b.utilization).abs())
        .fold(0.0, f64::max);

    let spectral_radius = (config.len() * 6 <= 1200)
        .then(|| oracle::spectral_radius(config, settings.beta, settings.gamma, &oracle_sol))
        .transpose()?;

    Ok(OracleDeltas {
        rel_state_error: num / den.max(f64::MIN_POSITIVE),
        classification_match,
        max_utilization_delta,
        spectral_radius,
    })
}

/// Message-accounting run: executes the pipeline with tracing and checks the
/// analytic message-count identities.
#[derive(Debug, Clone)]
pub struct TraceReport {
    pub report: RunReport,
    pub aggregations: u64,
    pub broadcasts: u64,
    pub expected_jacobi: u64,
    pub accounting_ok: bool,
    pub lines: String,
    pub summary: String,
}

pub fn run_trace(
    doc: &ScenarioDoc,
    scenario_id: &str,
    opts: &CheckOptions,
) -> Result<TraceReport, CheckError> {
    let mut opts = *opts;
    opts.record_trace = true;
    let report = run_check(doc, scenario_id, &opts)?;

    let config = crate::scenario::build_configuration(doc)?;
    let n_real = config.real_count() as u64;
    let degree_sum = config.degree_sum() as u64;
    let count =
        |k: MessageKind| -> u64 { report.message_counts[k.index()].1 };

    // aggregation phases in pipeline order: [CoM + angle when simplified],
    // one residual checkpoint per solver chunk, support set, overload
    let checkpoints = report.convergence_log.len() as u64;
    let mut aggregations = checkpoints + 2;
    let mut broadcasts = 0;
    if report.simplified.is_some() {
        aggregations += 2;
        broadcasts += 1; // planar center-of-mass
    }
    if report.settings.tolerance.is_some() {
        aggregations += 1; // load-norm reference
        broadcasts += checkpoints; // residual push-down
    }
    let expected_jacobi = report.iterations as u64 * degree_sum;
    let accounting_ok = count(MessageKind::AggregateUp) == aggregations * (n_real - 1)
        && count(MessageKind::BroadcastDown) == broadcasts * (n_real - 1)
        && count(MessageKind::Verdict) == n_real - 1
        && count(MessageKind::Init) == n_real - 1
        && (report.settings.tolerance.is_some()
            || count(MessageKind::JacobiState) == expected_jacobi);

    Ok(TraceReport {
        aggregations,
        broadcasts,
        expected_jacobi,
        accounting_ok,
        lines: report.trace_export.clone().unwrap_or_default(),
        summary: trace_summary(&report),
        report,
    })
}

fn trace_summary(report: &RunReport) -> String {
    let mut out = String::from("kind,messages\n");
    for (kind, count) in &report.message_counts {
        let _ = writeln!(out, "{},{}", kind.name(), count);
    }
    out
}

/// One row of the iteration-scaling study.
#[derive(Debug, Clone)]
pub struct ScalingRow {
    pub size: usize,
    pub modules: usize,
    /// Iterations to reach each requested relative error, in input order.
    pub iterations: Vec<Option<u32>>,
    pub spectral_radius: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub family: String,
    pub tolerances: Vec<f64>,
    pub rows: Vec<ScalingRow>,
    /// Fitted growth exponents (iterations ~ c·n^p), one per tolerance;
    /// `None` with fewer than two data points.
    pub exponents: Vec<Option<f64>>,
    pub warnings: Vec<String>,
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,modules");
        for t in &self.tolerances {
            let _ = write!(out, ",iterations_tol_{t:e}");
        }
        out.push_str(",spectral_radius\n");
        for row in &self.rows {
            let _ = write!(out, "{},{}", row.size, row.modules);
            for it in &row.iterations {
                match it {
                    Some(v) => {
                        let _ = write!(out, ",{v}");
                    }
                    None => out.push(','),
                }
            }
            match row.spectral_radius {
                Some(r) => {
                    let _ = writeln!(out, ",{r:.9}");
                }
                None => out.push_str(",\n"),
            }
        }
        out
    }
}

/// Builds a scaling-family scenario by name: `fixed-arm`, `chain` or `slab`.
pub fn family_by_name(family: &str, size: usize) -> Option<Family> {
    match family {
        "fixed-arm" => Some(families::fixed_arm(size)),
        "chain" => Some(families::chain(size)),
        "slab" => Some(families::slab(size)),
        _ => None,
    }
}

/// Runs the iteration-scaling study: for each size, the distributed solve is
/// compared round by round against the centralized solution and the first
/// round reaching each relative-error level is recorded, then the growth
/// exponent is fitted.
pub fn run_scaling(
    family: &str,
    sizes: &[usize],
    tolerances: &[f64],
    seed: u64,
    budget_for: impl Fn(usize) -> u32,
) -> Result<ScalingReport, CheckError> {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &size in sizes {
        let fam = family_by_name(family, size)
            .unwrap_or_else(|| panic!("unknown scaling family {family}"));
        let config = fam.build()?;
        let oracle_sol = oracle::assemble_and_solve(&config, crate::contact::DEFAULT_GAMMA)?;
        let den: f64 = oracle_sol
            .states
            .iter()
            .map(|s| s.0.norm_squared())
            .sum::<f64>()
            .sqrt();

        let settings = SolverSettings {
            beta: 2.0 / 3.0,
            gamma: crate::contact::DEFAULT_GAMMA,
            max_iterations: budget_for(size),
            report_every: budget_for(size),
            tolerance: None,
        };
        let mut rt = Runtime::new(&config, SchedulePolicy::Random, seed, false, false)?;
        let tree = build_tree(&mut rt)?;
        let out = solve(&mut rt, &tree, settings, true)?;
        let history = out.history.as_ref().expect("history recorded");

        let iterations: Vec<Option<u32>> = tolerances
            .iter()
            .map(|&tol| {
                history.iter().enumerate().find_map(|(round, states)| {
                    let num: f64 = states
                        .iter()
                        .zip(&oracle_sol.states)
                        .map(|(a, b)| (a.0 - b.0).norm_squared())
                        .sum::<f64>()
                        .sqrt();
                    (num / den <= tol).then_some(round as u32)
                })
            })
            .collect();
        for (tol, it) in tolerances.iter().zip(&iterations) {
            if it.is_none() {
                warnings.push(format!(
                    "size {size}: tolerance {tol:e} not reached within {} iterations",
                    settings.max_iterations
                ));
            }
        }
        let spectral_radius = (config.len() * 6 <= 1200)
            .then(|| oracle::spectral_radius(&config, settings.beta, settings.gamma, &oracle_sol))
            .transpose()?;

        rows.push(ScalingRow {
            size,
            modules: config.len(),
            iterations,
            spectral_radius,
        });
    }

    let exponents = (0..tolerances.len())
        .map(|t| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|r| {
                    r.iterations[t]
                        .filter(|&i| i > 0)
                        .map(|i| ((r.size as f64).ln(), f64::from(i).ln()))
                })
                .collect();
            fit_slope(&pts)
        })
        .collect();
    if rows.len() < 2 {
        warnings.push("fewer than two sizes: no exponent fit".to_string());
    }

    Ok(ScalingReport {
        family: family.to_string(),
        tolerances: tolerances.to_vec(),
        rows,
        exponents,
        warnings,
    })
}

/// Least-squares slope of y against x; `None` with fewer than two points.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    (denom.abs() > 1e-12).then(|| (n * sxy - sx * sy) / denom)
}

/// Coefficient of determination of a linear fit of y against x.
pub fn fit_r_squared(points: &[(f64, f64)]) -> Option<f64> {
    let slope = fit_slope(points)?;
    let n = points.len() as f64;
    let mean_x: f64 = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y: f64 = points.iter().map(|p| p.1).sum::<f64>() / n;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    (ss_tot > 1e-300).then(|| 1.0 - ss_res / ss_tot)
}

/// Convenience used by tests and examples: check one of the built-in
/// families end to end.
pub fn check_family(fam: &Family, opts: &CheckOptions) -> Result<RunReport, CheckError> {
    run_check(fam.doc(), fam.name(), opts)
}
