//! Connection overload on a growing cantilever: a supported row ends at the
//! table edge and the arm past it grows block by block. The bending moment
//! at the arm's root grows with the square of its length; the lateral
//! connector strength is exceeded between four and six blocks. The elastic
//! prediction is compared against the rigid-statics lever-arm value
//! `W·k²/F_lateral` for the root cut.

use latmech::families;
use latmech::model::ModuleId;
use latmech::oracle::assemble_and_solve;
use latmech::overload::connection_reports;

fn main() {
    let weight = 9.81 * 0.06106;
    println!("arm k | root utilization | statics W·k²/F_L | verdict");
    println!("------+------------------+------------------+--------");
    for k in 1..=7usize {
        let cfg = families::table_edge_overhang(7, k).build().unwrap();
        let sol = assemble_and_solve(&cfg, 1e-4).unwrap();
        let out = latmech::jacobi::SolveOutput {
            states: sol.states.clone(),
            published: sol.states.clone(),
            contact_states: sol.contact_states.clone(),
            iterations: 0,
            last_change_round: None,
            convergence_log: vec![],
            residual_sq: vec![],
            history: None,
        };
        let reports = connection_reports(&cfg, &out).unwrap();
        let root = reports
            .iter()
            .find(|r| r.a == ModuleId(6) && r.b == ModuleId(7))
            .unwrap();
        let statics = weight * (k * k) as f64 / 14.97;
        println!(
            "  {k}   |      {:.4}      |      {:.4}      | {}",
            root.utilization,
            statics,
            if reports.iter().any(|r| r.breached) {
                "BREAKS"
            } else {
                "holds"
            }
        );
    }
}
