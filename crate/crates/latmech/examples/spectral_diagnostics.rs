//! Spectral radius of the solver's iteration matrix: below one on every
//! stable configuration (the iteration converges) and approaching one as the
//! column family grows (convergence slows quadratically).

use latmech::families;
use latmech::oracle::{assemble_and_solve, spectral_radius};

fn main() {
    // the radius bounds the slowest mode over all load patterns; gravity on
    // a straight column only excites the faster axial chain
    println!("fixed-arm size | spectral radius | worst-case rounds per digit");
    for n in [4usize, 6, 8, 10, 12, 14, 16] {
        let cfg = families::fixed_arm(n).build().unwrap();
        let sol = assemble_and_solve(&cfg, 1e-4).unwrap();
        let rho = spectral_radius(&cfg, 2.0 / 3.0, 1e-4, &sol).unwrap();
        println!(
            "      {n:2}       |   {rho:.8}    | {:>8.0}",
            (10.0f64).ln() / -rho.ln()
        );
    }

    println!("\nother shapes:");
    for (name, fam) in [
        ("3x3 slab", families::slab(3)),
        ("10-block row", families::chain(10)),
        ("tower + arm", families::tipping_tower(6, 2)),
        ("table-edge overhang", families::table_edge_overhang(7, 4)),
    ] {
        let cfg = fam.build().unwrap();
        let sol = assemble_and_solve(&cfg, 1e-4).unwrap();
        let rho = spectral_radius(&cfg, 2.0 / 3.0, 1e-4, &sol).unwrap();
        println!("  {name:<20} rho = {rho:.8}");
    }
}
