//! Mid-connection wrenches and the tension/bending breakage criterion.
//!
//! The wrench carried by a connection is the average of the two one-sided
//! beam reactions, rotated into the connection frame so the axial force sits
//! on local z (tension positive). A connection survives while
//!
//! ```text
//! F_max > 2·max(|m_x|, |m_y|)/L + f_z
//! ```
//!
//! with `F_max` the vertical or lateral connector strength. Shear and torsion
//! are omitted; the connectors are assumed resistant to those modes. Ground
//! connections are governed by the contact model, not connector strength, and
//! are not checked here.

use crate::beam::{rotated_stiffness, rotation_for, BeamError};
use crate::jacobi::SolveOutput;
use crate::model::{Configuration, Dof6, ModuleId, Wrench6};
use crate::runtime::{AggValue, Runtime, RuntimeError, VerdictFlags};
use crate::tree::{broadcast_verdict, converge_cast, Tree};

/// Orientation class of a connection, selecting the connector strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Vertical,
    Lateral,
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Orientation::Vertical => "vertical",
            Orientation::Lateral => "lateral",
        })
    }
}

/// Checked state of one inter-modular connection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionReport {
    pub a: ModuleId,
    pub b: ModuleId,
    pub orientation: Orientation,
    /// Wrench in the connection-local frame seen from the smaller-id side.
    pub wrench: Wrench6,
    /// Load measure over connector strength; breakage predicted at ≥ 1.
    pub utilization: f64,
    pub breached: bool,
}

/// Constant-size aggregation record for the tree roll-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverloadSummary {
    pub max_utilization: f64,
    pub breach_count: u32,
    /// Lexicographically least breached connection (module ids).
    pub witness: Option<(u32, u32)>,
}

impl OverloadSummary {
    pub fn none() -> Self {
        OverloadSummary {
            max_utilization: f64::NEG_INFINITY,
            breach_count: 0,
            witness: None,
        }
    }

    pub fn merge(&self, other: &OverloadSummary) -> OverloadSummary {
        let witness = match (self.witness, other.witness) {
            (None, w) | (w, None) => w,
            (Some(a), Some(b)) => Some(a.min(b)),
        };
        OverloadSummary {
            max_utilization: self.max_utilization.max(other.max_utilization),
            breach_count: self.breach_count + other.breach_count,
            witness,
        }
    }
}

/// Wrench acting in the middle of connection `(a, b)`, in the local frame
/// seen from `a` (axial on z). Action-reaction holds by construction: the
/// same call from `b`'s side gives the frame-aligned negation.
pub fn mid_connection_wrench(
    config: &Configuration,
    a: usize,
    b: usize,
    u_a: &Dof6,
    u_b: &Dof6,
) -> Result<Wrench6, BeamError> {
    let ab = rotated_stiffness(config, a, b)?;
    let ba = rotated_stiffness(config, b, a)?;
    let f_ab = ab.own * u_a.0 + ab.coupling * u_b.0;
    let f_ba = ba.own * u_b.0 + ba.coupling * u_a.0;
    let rot = rotation_for(config, a, b)?;
    Ok(Wrench6(rot.to_local(&((f_ab - f_ba) * 0.5))))
}

/// Orientation class of the connection `(a, b)`.
pub fn orientation(config: &Configuration, a: usize, b: usize) -> Orientation {
    if config.module(a).pos.z != config.module(b).pos.z {
        Orientation::Vertical
    } else {
        Orientation::Lateral
    }
}

/// Applies the breakage criterion to one computed wrench.
pub fn check_connection(
    config: &Configuration,
    a: usize,
    b: usize,
    wrench: Wrench6,
) -> ConnectionReport {
    let params = config.params();
    let orientation = orientation(config, a, b);
    let strength = match orientation {
        Orientation::Vertical => params.strength_vertical,
        Orientation::Lateral => params.strength_lateral,
    };
    let bending = wrench.m_x().abs().max(wrench.m_y().abs());
    let utilization = (2.0 * bending / params.edge_length + wrench.f_z()) / strength;
    ConnectionReport {
        a: config.module(a).id,
        b: config.module(b).id,
        orientation,
        wrench,
        utilization,
        breached: utilization >= 1.0,
    }
}

/// Per-connection checks from the exchanged solver states. Each connection is
/// evaluated once, by its smaller-index endpoint, which already holds the
/// neighbor state from the last solver exchange.
pub fn connection_reports(
    config: &Configuration,
    solve: &SolveOutput,
) -> Result<Vec<ConnectionReport>, BeamError> {
    config
        .connections()
        .iter()
        .map(|&(a, b)| {
            let w = mid_connection_wrench(config, a, b, &solve.published[a], &solve.published[b])?;
            Ok(check_connection(config, a, b, w))
        })
        .collect()
}

/// Outcome of the distributed overload check.
#[derive(Debug, Clone)]
pub struct OverloadOutcome {
    pub summary: OverloadSummary,
    pub reports: Vec<ConnectionReport>,
    /// Per-module flag: some incident connection is breached (the hardware's
    /// red blink).
    pub module_flags: Vec<bool>,
}

impl OverloadOutcome {
    pub fn breached(&self) -> bool {
        self.summary.breach_count > 0
    }
}

/// Runs the breakage check on every connection and aggregates
/// `(max utilization, breach count, witness)` at the centroid, which then
/// broadcasts the combined verdict flags.
pub fn aggregate_verdict(
    rt: &mut Runtime,
    tree: &Tree,
    solve: &SolveOutput,
    stability_flags: (bool, bool),
) -> Result<(OverloadOutcome, VerdictFlags), RuntimeError> {
    let config = rt.config();
    let reports = connection_reports(config, solve).expect("connection endpoints adjacent");

    // owner (smaller index) contributes each connection to the roll-up
    let mut per_module = vec![OverloadSummary::none(); config.len()];
    let mut module_flags = vec![false; config.len()];
    for (&(a, b), report) in config.connections().iter().zip(&reports) {
        let ids = (config.module(a).id.0, config.module(b).id.0);
        let contribution = OverloadSummary {
            max_utilization: report.utilization,
            breach_count: u32::from(report.breached),
            witness: report.breached.then_some(ids),
        };
        per_module[a] = per_module[a].merge(&contribution);
        if report.breached {
            module_flags[a] = true;
            module_flags[b] = true;
        }
    }

    let values: Vec<AggValue> = per_module.into_iter().map(AggValue::Overload).collect();
    let AggValue::Overload(summary) = converge_cast(rt, tree, &values)? else {
        unreachable!()
    };
    let (stable, marginal) = stability_flags;
    let flags = VerdictFlags {
        stable,
        marginal,
        overloaded: summary.breach_count > 0,
    };
    broadcast_verdict(rt, tree, flags)?;
    Ok((
        OverloadOutcome {
            summary,
            reports,
            module_flags,
        },
        flags,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::DEFAULT_GAMMA;
    use crate::families;
    use crate::jacobi::{solve, SolverSettings};
    use crate::oracle::{assemble_and_solve, statics_cut};
    use crate::runtime::SchedulePolicy;
    use crate::testutil::assert_close;
    use crate::tree::build_tree;

    #[test]
    fn zero_states_carry_no_wrench() {
        let cfg = families::fixed_arm(2).build().unwrap();
        let w = mid_connection_wrench(&cfg, 0, 1, &Dof6::zero(), &Dof6::zero()).unwrap();
        assert_eq!(w, Wrench6::zero());
    }

    #[test]
    fn stacked_pair_connection_carries_top_weight() {
        let cfg = families::custom("pair", &[(0, 0, 0), (0, 0, 1)], &[0], &[], 0)
            .build()
            .unwrap();
        let sol = assemble_and_solve(&cfg, DEFAULT_GAMMA).unwrap();
        let w = mid_connection_wrench(&cfg, 0, 1, &sol.states[0], &sol.states[1]).unwrap();
        assert_close(w.f_z(), -0.599, 1e-4); // compression
        assert!(w.m_x().abs() < 1e-9 && w.m_y().abs() < 1e-9);
    }

    #[test]
    fn action_reaction_after_frame_alignment() {
        let cfg = families::table_edge_overhang(3, 2).build().unwrap();
        let sol = assemble_and_solve(&cfg, DEFAULT_GAMMA).unwrap();
        for &(a, b) in cfg.connections() {
            let w_ab = mid_connection_wrench(&cfg, a, b, &sol.states[a], &sol.states[b]).unwrap();
            let w_ba = mid_connection_wrench(&cfg, b, a, &sol.states[b], &sol.states[a]).unwrap();
            let r_ab = rotation_for(&cfg, a, b).unwrap();
            let r_ba = rotation_for(&cfg, b, a).unwrap();
            // align b's frame onto a's and compare with the negation
            let aligned = r_ab.to_local(&r_ba.to_global(&w_ba.0));
            assert!(
                (w_ab.0 + aligned).norm() <= 1e-9 * (1.0 + w_ab.0.norm()),
                "action-reaction violated on ({a},{b})"
            );
        }
    }

    #[test]
    fn pure_tension_beyond_strength_breaches() {
        let cfg = families::custom("pair", &[(0, 0, 0), (0, 0, 1)], &[0], &[], 0)
            .build()
            .unwrap();
        let w = Wrench6::from_components(0.0, 0.0, 12.0, 0.0, 0.0, 0.0);
        let report = check_connection(&cfg, 0, 1, w);
        assert_eq!(report.orientation, Orientation::Vertical);
        assert!(report.utilization > 1.0);
        assert!(report.breached);

        // compression with no moments is always safe
        let w = Wrench6::from_components(0.0, 0.0, -5.0, 0.0, 0.0, 0.0);
        let report = check_connection(&cfg, 0, 1, w);
        assert!(report.utilization < 0.0);
        assert!(!report.breached);
    }

    #[test]
    fn cantilever_roots_match_statics_and_strength_boundary() {
        // 4-overhang root is safe (≈ 0.64), 6-overhang breaches (≈ 1.44)
        for (k, expect_breach, expect_util) in [(4usize, false, 0.6402), (6, true, 1.4405)] {
            let cfg = families::table_edge_overhang(7, k).build().unwrap();
            let sol = assemble_and_solve(&cfg, DEFAULT_GAMMA).unwrap();
            let reports = {
                let out = crate::jacobi::SolveOutput {
                    states: sol.states.clone(),
                    published: sol.states.clone(),
                    contact_states: sol.contact_states.clone(),
                    iterations: 0,
                    last_change_round: None,
                    convergence_log: vec![],
                    residual_sq: vec![],
                    history: None,
                };
                connection_reports(&cfg, &out).unwrap()
            };
            let root_a = cfg.index_of(ModuleId(6)).unwrap(); // x = 0 module
            let root = reports
                .iter()
                .find(|r| {
                    (r.a == cfg.module(root_a).id && r.b == ModuleId(7))
                        || (r.b == cfg.module(root_a).id && r.a == ModuleId(7))
                })
                .expect("root connection reported");
            assert_eq!(root.breached, expect_breach, "k = {k}");
            assert_close(root.utilization, expect_util, 0.01 * expect_util);

            // elastic wrench matches the rigid statics cut within 1%
            let b = cfg.index_of(ModuleId(7)).unwrap();
            let cut = statics_cut(&cfg, root_a, b).unwrap();
            let elastic =
                mid_connection_wrench(&cfg, root_a, b, &sol.states[root_a], &sol.states[b])
                    .unwrap();
            let m_stat = cut.m_x().abs().max(cut.m_y().abs());
            let m_el = elastic.m_x().abs().max(elastic.m_y().abs());
            assert_close(m_el, m_stat, 0.01 * m_stat);
        }
    }

    #[test]
    fn distributed_aggregation_finds_the_witness() {
        let cfg = families::table_edge_overhang(7, 6).build().unwrap();
        let mut rt = Runtime::new(&cfg, SchedulePolicy::Random, 3, false, false).unwrap();
        let tree = build_tree(&mut rt).unwrap();
        let settings = SolverSettings {
            beta: 2.0 / 3.0,
            gamma: DEFAULT_GAMMA,
            max_iterations: 40_000,
            report_every: 40_000,
            tolerance: None,
        };
        let out = solve(&mut rt, &tree, settings, false).unwrap();
        let (outcome, flags) = aggregate_verdict(&mut rt, &tree, &out, (true, false)).unwrap();
        assert!(outcome.breached());
        assert!(flags.overloaded);
        // the peeled base connection (5,6) also breaches and is the
        // lexicographically least breached pair
        assert_eq!(outcome.summary.witness, Some((5, 6)));
        // the cantilever root carries the largest utilization
        let root = outcome
            .reports
            .iter()
            .find(|r| r.a == ModuleId(6) && r.b == ModuleId(7))
            .unwrap();
        assert!(root.breached);
        assert_close(outcome.summary.max_utilization, root.utilization, 1e-12);
        // both endpoints of the breached root connection flag themselves
        let a = cfg.index_of(ModuleId(6)).unwrap();
        let b = cfg.index_of(ModuleId(7)).unwrap();
        assert!(outcome.module_flags[a] && outcome.module_flags[b]);
    }

    #[test]
    fn utilization_is_insensitive_to_elastic_modulus() {
        let base = families::table_edge_overhang(7, 5).build().unwrap();
        let mut stiffer_params = *base.params();
        stiffer_params.elastic_modulus *= 10.0;
        let stiffer = families::table_edge_overhang(7, 5)
            .params(stiffer_params)
            .build()
            .unwrap();
        let report_for = |cfg: &Configuration| {
            let sol = assemble_and_solve(cfg, DEFAULT_GAMMA).unwrap();
            let out = crate::jacobi::SolveOutput {
                states: sol.states.clone(),
                published: sol.states,
                contact_states: sol.contact_states,
                iterations: 0,
                last_change_round: None,
                convergence_log: vec![],
                residual_sq: vec![],
                history: None,
            };
            connection_reports(cfg, &out).unwrap()
        };
        for (r1, r2) in report_for(&base).iter().zip(report_for(&stiffer).iter()) {
            let scale = r1.utilization.abs().max(1e-9);
            assert!(
                (r1.utilization - r2.utilization).abs() / scale < 1e-6,
                "utilization changed with E: {} vs {}",
                r1.utilization,
                r2.utilization
            );
        }
    }
}
