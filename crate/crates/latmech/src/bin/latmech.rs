//! Command-line front end: load a scenario, run the check pipeline, emit
//! verdicts, per-connection stresses, convergence logs, message accounting
//! and scaling-study data.

use clap::{Args, Parser, Subcommand};
use latmech::report::{self, CheckOptions};
use latmech::runtime::SchedulePolicy;
use latmech::scenario::ScenarioDoc;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "latmech",
    about = "Predicts whether a planned construction step of a lattice modular robot \
             breaks connections or loses balance",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML)
    #[arg(long)]
    scenario: PathBuf,
    /// Scheduler seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the scenario's iteration budget
    #[arg(long)]
    iterations: Option<u32>,
    /// Override the relaxation weight
    #[arg(long)]
    beta: Option<f64>,
    /// Override the contact regularization factor
    #[arg(long)]
    gamma: Option<f64>,
    /// Also run the simplified flat-ground stability check
    #[arg(long)]
    simplified_stability: bool,
    /// Hardware-faithful mode: 4-byte floats, 17-byte message fragments
    #[arg(long = "fidelity-bb1")]
    fidelity_bb1: bool,
    /// Append centralized-oracle deltas to the report
    #[arg(long)]
    verify: bool,
    /// Write the per-message trace to this path
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the per-connection table to this path
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Use the deterministic round-robin scheduler
    #[arg(long)]
    round_robin: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Full safety check of one scenario (exit code 0 safe, 2 unstable,
    /// 3 overload, 4 both)
    Check(RunArgs),
    /// Iteration-scaling study over a configuration family
    Scaling {
        /// Family: fixed-arm, chain or slab
        #[arg(long, default_value = "fixed-arm")]
        family: String,
        /// Comma-separated sizes
        #[arg(long, value_delimiter = ',', default_value = "4,6,8,10,12,14,16")]
        sizes: Vec<usize>,
        /// Comma-separated relative-error levels
        #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-6")]
        tolerances: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the per-size table to this path
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Message-accounting run: pipeline with full tracing plus analytic
    /// count checks
    Trace(RunArgs),
}

fn options(args: &RunArgs) -> CheckOptions {
    CheckOptions {
        seed: args.seed,
        policy: if args.round_robin {
            SchedulePolicy::RoundRobin
        } else {
            SchedulePolicy::Random
        },
        fidelity: args.fidelity_bb1,
        verify: args.verify,
        record_trace: args.trace.is_some(),
        force_simplified: args.simplified_stability,
        iterations_override: args.iterations,
        beta_override: args.beta,
        gamma_override: args.gamma,
    }
}

fn load_scenario(path: &Path) -> Result<(ScenarioDoc, String), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let doc = ScenarioDoc::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok((doc, id))
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn cmd_check(args: &RunArgs) -> Result<ExitCode, String> {
    let (doc, id) = load_scenario(&args.scenario)?;
    let opts = options(args);
    let started = Instant::now();
    let report = report::run_check(&doc, &id, &opts).map_err(|e| e.to_string())?;
    print!("{}", report.to_text());
    println!("wall time: {} ms", started.elapsed().as_millis());
    if let Some(path) = &args.csv {
        write_file(path, &report.connections_csv())?;
    }
    if let Some(path) = &args.trace {
        write_file(path, report.trace_export.as_deref().unwrap_or(""))?;
    }
    Ok(ExitCode::from(u8::try_from(report.exit_code()).unwrap_or(1)))
}

fn cmd_trace(args: &RunArgs) -> Result<ExitCode, String> {
    let (doc, id) = load_scenario(&args.scenario)?;
    let opts = options(args);
    let tr = report::run_trace(&doc, &id, &opts).map_err(|e| e.to_string())?;
    print!("{}", tr.summary);
    println!(
        "aggregations: {} (n-1 messages each), broadcasts: {}",
        tr.aggregations, tr.broadcasts
    );
    println!("expected solver messages: {}", tr.expected_jacobi);
    println!(
        "accounting: {}",
        if tr.accounting_ok { "ok" } else { "MISMATCH" }
    );
    if let Some(path) = &args.trace {
        write_file(path, &tr.lines)?;
    }
    if !tr.accounting_ok {
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::from(
        u8::try_from(tr.report.exit_code()).unwrap_or(1),
    ))
}

fn cmd_scaling(
    family: &str,
    sizes: &[usize],
    tolerances: &[f64],
    seed: u64,
    csv: Option<&Path>,
) -> Result<ExitCode, String> {
    let report = report::run_scaling(family, sizes, tolerances, seed, |n| (60 * n * n + 400) as u32)
        .map_err(|e| e.to_string())?;
    print!("{}", report.to_csv());
    for (tol, exp) in report.tolerances.iter().zip(&report.exponents) {
        match exp {
            Some(p) => println!("# fitted exponent (tol {tol:e}): {p:.3}"),
            None => println!("# fitted exponent (tol {tol:e}): not enough data"),
        }
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = csv {
        write_file(path, &report.to_csv())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Trace(args) => cmd_trace(args),
        Command::Scaling {
            family,
            sizes,
            tolerances,
            seed,
            csv,
        } => cmd_scaling(family, sizes, tolerances, *seed, csv.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
