//! Predicting loss of balance one construction step ahead: a column on a
//! single supported block grows a sideways arm. Attaching the first arm
//! block is safe; planning the second tips the structure. Both the
//! simplified (rigid, flat-ground) and the model-based (elastic contact)
//! checks are shown, step by step.

use latmech::families;
use latmech::report::{check_family, CheckOptions};

fn main() {
    let steps = [
        ("step b: plan first arm block", families::tipping_tower(3, 1).virtual_ids(&[3])),
        ("step c: plan second arm block", families::tipping_tower(3, 2).virtual_ids(&[4])),
    ];
    for (label, fam) in steps {
        let fam = fam.iterations(8_000).simplified_stability(true);
        let report = check_family(&fam, &CheckOptions::default()).unwrap();
        let simplified = report.simplified.unwrap();
        println!("{label}");
        println!(
            "  center of mass x = {:.4} m (support facet edge at 0.04 m)",
            simplified.com.x
        );
        println!("  simplified check : {:?}", simplified.verdict);
        println!("  model-based check: {:?}", report.model_based);
        if let Some(round) = report.last_change_round {
            println!("  contact states settled at round {round}");
        }
        println!("  verdict: {}\n", if report.stable { "safe" } else { "would tip over" });
    }
}
