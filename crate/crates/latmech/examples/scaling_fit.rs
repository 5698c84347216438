//! Iteration-scaling study: how many solver rounds the column family needs
//! to reach a given accuracy as it grows. The count grows quadratically with
//! the module count, and the iteration-matrix spectral radius creeps toward
//! one — the structural cost of purely local communication.

use latmech::report::run_scaling;

fn main() {
    let sizes = [4usize, 6, 8, 10, 12, 14, 16];
    let tolerances = [1e-3, 1e-6];
    let report = run_scaling("fixed-arm", &sizes, &tolerances, 0, |n| {
        (60 * n * n + 400) as u32
    })
    .unwrap();
    print!("{}", report.to_csv());
    for (tol, exp) in report.tolerances.iter().zip(&report.exponents) {
        match exp {
            Some(p) => println!("# iterations ~ n^{p:.3} at tolerance {tol:e}"),
            None => println!("# not enough data for a fit at {tol:e}"),
        }
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}
