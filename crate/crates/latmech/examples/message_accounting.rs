//! Message accounting of a full check: per-kind logical counts, the analytic
//! identities behind them, and the effect of hardware-fidelity mode (4-byte
//! floats, payloads over 17 bytes split into fragments).

use latmech::report::{run_trace, CheckOptions};
use latmech::scenario::ScenarioDoc;

fn main() {
    let path = format!("{}/scenarios/row8.toml", env!("CARGO_MANIFEST_DIR"));
    let doc = ScenarioDoc::parse(&std::fs::read_to_string(path).unwrap()).unwrap();

    for fidelity in [false, true] {
        let opts = CheckOptions {
            fidelity,
            ..CheckOptions::default()
        };
        let tr = run_trace(&doc, "row8", &opts).unwrap();
        println!(
            "=== {} ===",
            if fidelity {
                "fidelity mode (4-byte floats, 17-byte fragments)"
            } else {
                "default mode"
            }
        );
        print!("{}", tr.summary);
        // every physical fragment is one trace line
        let solver_fragments = tr
            .lines
            .lines()
            .filter(|l| l.contains(",JacobiState,"))
            .count();
        println!("solver fragments on the wire: {solver_fragments}");
        println!(
            "solver messages expected: iterations × Σdegree = {}",
            tr.expected_jacobi
        );
        println!(
            "aggregations: {} × (n−1), broadcasts: {} × (n−1)",
            tr.aggregations, tr.broadcasts
        );
        println!("accounting identities: {}\n", if tr.accounting_ok { "ok" } else { "MISMATCH" });
    }
}
