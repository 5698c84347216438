//! Convergence of the distributed solver against the centralized direct
//! solution: the relative error of the ten-block column decays linearly on a
//! log scale with the iteration count. Prints a CSV you can plot directly.

use latmech::families;
use latmech::jacobi::{solve, SolverSettings};
use latmech::oracle::assemble_and_solve;
use latmech::runtime::{Runtime, SchedulePolicy};
use latmech::tree::build_tree;

fn main() {
    let cfg = families::fixed_arm(10).build().unwrap();
    let oracle = assemble_and_solve(&cfg, 1e-4).unwrap();
    let den: f64 = oracle
        .states
        .iter()
        .map(|s| s.0.norm_squared())
        .sum::<f64>()
        .sqrt();

    let mut rt = Runtime::new(&cfg, SchedulePolicy::Random, 0, false, false).unwrap();
    let tree = build_tree(&mut rt).unwrap();
    let settings = SolverSettings {
        beta: 2.0 / 3.0,
        gamma: 1e-4,
        max_iterations: 4000,
        report_every: 4000,
        tolerance: None,
    };
    let out = solve(&mut rt, &tree, settings, true).unwrap();
    let history = out.history.unwrap();

    println!("round,relative_error");
    for (round, states) in history.iter().enumerate().step_by(100) {
        let num: f64 = states
            .iter()
            .zip(&oracle.states)
            .map(|(a, b)| (a.0 - b.0).norm_squared())
            .sum::<f64>()
            .sqrt();
        println!("{round},{:.6e}", num / den);
    }
    eprintln!(
        "# tip settles to u_z = {:.4e} m at the column head",
        out.states[9].u_z()
    );
}
