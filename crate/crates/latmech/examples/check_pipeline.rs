//! Full safety check of a scenario file, exactly what `latmech check` does:
//! build the configuration, assign planned modules to hosts, grow the
//! spanning tree, solve the equilibrium, run both stability checks and the
//! overload check, and print the report.
//!
//! ```text
//! cargo run --example check_pipeline [scenario.toml]
//! ```

use latmech::report::{run_check, CheckOptions};
use latmech::scenario::ScenarioDoc;

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        format!(
            "{}/scenarios/cantilever_breaks.toml",
            env!("CARGO_MANIFEST_DIR")
        )
    });
    let text = std::fs::read_to_string(&path).expect("scenario file");
    let doc = ScenarioDoc::parse(&text).expect("valid scenario");
    let opts = CheckOptions {
        force_simplified: true,
        verify: true,
        ..CheckOptions::default()
    };
    let report = run_check(&doc, &path, &opts).expect("pipeline runs");
    print!("{}", report.to_text());
    println!("exit code would be: {}", report.exit_code());
    print!("\nper-connection table:\n{}", report.connections_csv());
}
