//! The ground-contact predictor-corrector, branch by branch: a supported
//! block under growing bending moment stays in full-facet contact while the
//! edge moment is below the compression-induced limit, then tilts about the
//! facet edge; tension separates the whole contact. The corrected moment is
//! continuous across the boundary, and the tangent rows switch with the
//! branch.

use latmech::contact::{correct, trial_force, DEFAULT_GAMMA};
use latmech::model::{Dof6, FacetDir, Params, Wrench6};

fn main() {
    let p = Params::default();

    println!("-- bending sweep at 1 N compression (limit moment 0.02 N·m) --");
    println!("trial m_y | corrected m_y | state");
    for my in [0.0, 0.01, 0.019, 0.0199999, 0.02, 0.0200001, 0.03, 0.05] {
        let trial = Wrench6::from_components(0.0, 0.0, -1.0, 0.0, my, 0.0);
        let r = correct(&trial, &p, DEFAULT_GAMMA);
        println!(
            "  {my:<9.7} | {:<13.9} | {}",
            r.corrected_force.m_y(),
            r.state
        );
    }

    println!("\n-- tension separates and leaves only the weak spring --");
    let trial = Wrench6::from_components(0.1, -0.2, 1.0, 0.01, 0.02, 0.003);
    let r = correct(&trial, &p, DEFAULT_GAMMA);
    println!("trial    : {:?}", trial.0.transpose());
    println!("corrected: {:?}", r.corrected_force.0.transpose());
    println!("state    : {}", r.state);

    println!("\n-- the tangent is the exact derivative of the corrected map --");
    let u = Dof6::from_components(0.0, 0.0, -1e-8, 0.0, 5e-6, 0.0);
    let result = correct(&trial_force(&u, FacetDir::MinusZ, &p), &p, DEFAULT_GAMMA);
    println!("state {} tangent row m_y: {:?}", result.state, result.tangent.row(4));
}
