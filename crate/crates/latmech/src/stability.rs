//! The two loss-of-balance predictors.
//!
//! **Simplified check** (flat ground, rigid body): the structure is stable
//! iff its center of mass lies over the convex hull of the ground-contact
//! corner points. Each supporting corner contributes a half-circle of planar
//! directions in which that corner prevents tipping; the union of all
//! half-circles is aggregated over the spanning tree and the structure is
//! stable iff the union is the full angle. Unions of half-circles are always
//! single arcs, so the aggregation payload stays constant-size.
//!
//! **Model-based check** (arbitrary supports): after the equilibrium solve,
//! every support's contact classification yields its active corner points
//! (none / pivot corner / pivot edge / whole facet). Point sets are merged up
//! the tree, collapsing to a `stable` marker as soon as three noncollinear
//! points are seen and keeping at most two collinear points otherwise; the
//! structure is stable iff the marker reaches the centroid.

use crate::contact::{ContactState, Normal, Tilt};
use crate::jacobi::SolveOutput;
use crate::model::{Configuration, FacetDir};
use crate::runtime::{AggValue, BcastValue, Runtime, RuntimeError};
use crate::tree::{broadcast, converge_cast, Tree};
use nalgebra::Vector3;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Width of the "exactly full" band: a safe-angle union missing the full
/// angle by no more than this (or closing with zero-width coverage) is
/// reported marginal rather than stable/unstable.
pub const MARGINAL_BAND: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum StabilityError {
    #[error("simplified check requires flat ground: module {module} has a {facet} support")]
    NotFlatGround { module: u32, facet: FacetDir },
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

/// Verdict of a balance check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalanceVerdict {
    Stable,
    /// The rigid model has no unique answer (center of mass on the support
    /// hull boundary); treated as stable with a flag.
    MarginalStable,
    Unstable,
}

impl BalanceVerdict {
    pub fn is_stable(&self) -> bool {
        !matches!(self, BalanceVerdict::Unstable)
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % TAU;
    if a < 0.0 {
        a += TAU;
    }
    a
}

/// Zero-width coverage points of an exactly-closed angle union. At most two
/// can ever arise (the two stitch points of the closing merge).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seams {
    count: u8,
    at: [f64; 2],
}

impl Seams {
    fn none() -> Self {
        Seams {
            count: 0,
            at: [0.0; 2],
        }
    }

    fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.at[..self.count as usize].iter().copied()
    }

    fn push(&mut self, seam: f64) {
        if self.count < 2 {
            self.at[self.count as usize] = seam;
            self.count += 1;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Base {
    Empty,
    /// Closed arc of directions, `extent` in (0, 2π).
    Arc { start: f64, extent: f64 },
    /// Full circle; `seams` lists directions covered only with zero width.
    Covered { seams: Seams },
}

/// A set of safe planar directions: empty, a single arc spanning at least the
/// straight angle, or the full circle. `grazing` marks the degenerate
/// contribution of a corner directly under the center of mass, which covers
/// every direction with zero width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeAngleRange {
    base: Base,
    grazing: bool,
}

impl SafeAngleRange {
    pub fn empty() -> Self {
        SafeAngleRange {
            base: Base::Empty,
            grazing: false,
        }
    }

    /// Arc `[start, start+extent]`; merges require `extent ≥ π` (every corner
    /// contributes at least the straight angle).
    pub fn arc(start: f64, extent: f64) -> Self {
        assert!(extent > 0.0 && extent < TAU);
        SafeAngleRange {
            base: Base::Arc {
                start: wrap_angle(start),
                extent,
            },
            grazing: false,
        }
    }

    pub fn full() -> Self {
        SafeAngleRange {
            base: Base::Covered {
                seams: Seams::none(),
            },
            grazing: false,
        }
    }

    fn grazing_point() -> Self {
        SafeAngleRange {
            base: Base::Empty,
            grazing: true,
        }
    }

    /// The half-circle of directions in which a support corner prevents
    /// tipping of a rigid body about the center of mass.
    pub fn for_corner(corner: (f64, f64), com: (f64, f64)) -> Self {
        let dx = corner.0 - com.0;
        let dy = corner.1 - com.1;
        if dx * dx + dy * dy < 1e-24 {
            return Self::grazing_point();
        }
        let theta = dy.atan2(dx);
        Self::arc(theta - PI / 2.0, PI)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.base, Base::Empty) && !self.grazing
    }

    /// Measure of the covered directions (2π when closed).
    pub fn extent(&self) -> f64 {
        match self.base {
            Base::Empty => 0.0,
            Base::Arc { extent, .. } => extent,
            Base::Covered { .. } => TAU,
        }
    }

    /// Union of two ranges. Exact set algebra with zero-width-coverage
    /// bookkeeping; associative and commutative up to the seam tolerance.
    pub fn merge(&self, other: &SafeAngleRange) -> SafeAngleRange {
        let grazing = self.grazing || other.grazing;
        let base = match (self.base, other.base) {
            (Base::Empty, b) | (b, Base::Empty) => b,
            (Base::Covered { seams: sa }, Base::Covered { seams: sb }) => {
                // a seam survives only if the other side also has zero width there
                let mut seams = Seams::none();
                for s in sa.iter() {
                    if sb.iter().any(|t| angles_match(s, t)) {
                        seams.push(s);
                    }
                }
                Base::Covered { seams }
            }
            (Base::Covered { seams }, Base::Arc { start, extent })
            | (Base::Arc { start, extent }, Base::Covered { seams }) => {
                let mut kept = Seams::none();
                for s in seams.iter() {
                    let t = wrap_angle(s - start);
                    let healed = t > MARGINAL_BAND && t < extent - MARGINAL_BAND;
                    if !healed {
                        kept.push(s);
                    }
                }
                Base::Covered { seams: kept }
            }
            (
                Base::Arc {
                    start: s1,
                    extent: e1,
                },
                Base::Arc {
                    start: s2,
                    extent: e2,
                },
            ) => merge_arcs(s1, e1, s2, e2),
        };
        SafeAngleRange { base, grazing }
    }

    /// Rounds the representation to 4-byte float precision.
    pub fn quantize(&mut self) {
        let q = |v: f64| v as f32 as f64;
        match &mut self.base {
            Base::Empty => {}
            Base::Arc { start, extent } => {
                *start = q(*start);
                *extent = q(*extent);
            }
            Base::Covered { seams } => {
                for i in 0..seams.count as usize {
                    seams.at[i] = q(seams.at[i]);
                }
            }
        }
    }

    /// Short human-readable form for reports.
    pub fn describe(&self) -> String {
        match self.base {
            Base::Empty => "empty".to_string(),
            Base::Arc { extent, .. } => format!("{extent:.6} rad"),
            Base::Covered { seams } if seams.is_empty() => "full".to_string(),
            Base::Covered { .. } => "full at zero width".to_string(),
        }
    }

    /// Stability verdict of the aggregated range.
    pub fn verdict(&self) -> BalanceVerdict {
        match self.base {
            Base::Covered { seams } if seams.is_empty() => BalanceVerdict::Stable,
            Base::Covered { .. } => BalanceVerdict::MarginalStable,
            Base::Arc { extent, .. } if TAU - extent <= MARGINAL_BAND => {
                BalanceVerdict::MarginalStable
            }
            _ if self.grazing => BalanceVerdict::MarginalStable,
            _ => BalanceVerdict::Unstable,
        }
    }
}

fn angles_match(a: f64, b: f64) -> bool {
    let d = wrap_angle(a - b);
    d <= MARGINAL_BAND || TAU - d <= MARGINAL_BAND
}

/// Union of two closed arcs, each spanning at least (nearly) the straight
/// angle, so they always intersect and the union is one arc or the circle.
fn merge_arcs(s1: f64, e1: f64, s2: f64, e2: f64) -> Base {
    debug_assert!(e1 >= PI - 1e-9 && e2 >= PI - 1e-9, "arcs must span >= pi");
    let d = wrap_angle(s2 - s1);
    let right = e1 - d; // ≥ 0: B starts inside A (touch at 0)
    let wrapped = d + e2 - TAU; // ≥ 0: B reaches past A's start
    let tol = MARGINAL_BAND;

    if right >= -tol && wrapped >= -tol {
        // circle closed; record zero-width stitches
        let mut seams = Seams::none();
        if right <= tol {
            seams.push(wrap_angle(s2));
        }
        if wrapped <= tol {
            seams.push(wrap_angle(s1));
        }
        Base::Covered { seams }
    } else if right >= 0.0 {
        Base::Arc {
            start: s1,
            extent: (d + e2).max(e1),
        }
    } else if wrapped >= 0.0 {
        Base::Arc {
            start: s2,
            extent: (TAU - d + e1).max(e2),
        }
    } else {
        unreachable!("arcs spanning >= pi always intersect")
    }
}

/// Center of mass and total mass of the whole (planned) configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterOfMass {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub total_mass: f64,
}

fn mass_moment(config: &Configuration, idx: usize) -> AggValue {
    let m = config.params().mass;
    let p = config.position(idx);
    AggValue::MassMoment {
        mass: m,
        weighted: [m * p.x, m * p.y, m * p.z],
    }
}

/// Distributed center-of-mass computation: mass and weighted positions are
/// summed up the tree, the division happens at the centroid.
pub fn center_of_mass(rt: &mut Runtime, tree: &Tree) -> Result<CenterOfMass, RuntimeError> {
    let values: Vec<AggValue> = (0..rt.config().len())
        .map(|i| mass_moment(rt.config(), i))
        .collect();
    let AggValue::MassMoment { mass, weighted } = converge_cast(rt, tree, &values)? else {
        unreachable!()
    };
    Ok(CenterOfMass {
        x: weighted[0] / mass,
        y: weighted[1] / mass,
        z: weighted[2] / mass,
        total_mass: mass,
    })
}

/// Ground-level corner points of one module's bottom facet.
fn ground_corners(config: &Configuration, idx: usize) -> [(f64, f64); 4] {
    let l = config.params().edge_length;
    let p = config.module(idx).pos;
    let (x0, y0) = (p.x as f64 * l, p.y as f64 * l);
    [
        (x0, y0),
        (x0 + l, y0),
        (x0, y0 + l),
        (x0 + l, y0 + l),
    ]
}

/// Safe angle range of one module: the union over its ground-level support
/// corners, empty for modules without floor contact.
pub fn safe_angle_range(config: &Configuration, idx: usize, com: (f64, f64)) -> SafeAngleRange {
    let mut range = SafeAngleRange::empty();
    for facet in config.ground_facets_of(idx) {
        if *facet != FacetDir::MinusZ {
            continue;
        }
        for corner in ground_corners(config, idx) {
            range = range.merge(&SafeAngleRange::for_corner(corner, com));
        }
    }
    range
}

/// Outcome of the simplified flat-ground stability check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplifiedOutcome {
    pub verdict: BalanceVerdict,
    pub com: CenterOfMass,
    pub aggregate: SafeAngleRange,
}

/// Runs the simplified check over the tree: center-of-mass aggregation, a
/// planar broadcast, then the safe-angle aggregation.
pub fn simplified_stability(
    rt: &mut Runtime,
    tree: &Tree,
) -> Result<SimplifiedOutcome, StabilityError> {
    let config = rt.config();
    for (idx, facet) in config.ground_facets() {
        if facet != FacetDir::MinusZ {
            return Err(StabilityError::NotFlatGround {
                module: config.module(idx).id.0,
                facet,
            });
        }
    }
    let com = center_of_mass(rt, tree)?;
    let received = broadcast(rt, tree, BcastValue::PlanarCom { x: com.x, y: com.y })?;
    let values: Vec<AggValue> = (0..rt.config().len())
        .map(|idx| {
            let BcastValue::PlanarCom { x, y } = received[idx] else {
                unreachable!()
            };
            AggValue::Angle(safe_angle_range(rt.config(), idx, (x, y)))
        })
        .collect();
    let AggValue::Angle(aggregate) = converge_cast(rt, tree, &values)? else {
        unreachable!()
    };
    Ok(SimplifiedOutcome {
        verdict: aggregate.verdict(),
        com,
        aggregate,
    })
}

/// Active support points of one contact classification: either a constant
/// marker for full-facet contact or at most two pivot points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportSet {
    /// Full-facet contact somewhere: rotation is blocked outright.
    Stable,
    Points {
        count: u8,
        pts: [[f64; 3]; 2],
    },
}

impl SupportSet {
    pub fn empty() -> Self {
        SupportSet::Points {
            count: 0,
            pts: [[0.0; 3]; 2],
        }
    }

    pub fn point(p: Vector3<f64>) -> Self {
        SupportSet::Points {
            count: 1,
            pts: [[p.x, p.y, p.z], [0.0; 3]],
        }
    }

    pub fn edge(p: Vector3<f64>, q: Vector3<f64>) -> Self {
        SupportSet::Points {
            count: 2,
            pts: [[p.x, p.y, p.z], [q.x, q.y, q.z]],
        }
    }

    pub fn point_count(&self) -> u8 {
        match self {
            SupportSet::Stable => 0,
            SupportSet::Points { count, .. } => *count,
        }
    }

    pub fn is_stable_marker(&self) -> bool {
        matches!(self, SupportSet::Stable)
    }

    fn points(&self) -> Vec<Vector3<f64>> {
        match self {
            SupportSet::Stable => vec![],
            SupportSet::Points { count, pts } => pts[..*count as usize]
                .iter()
                .map(|p| Vector3::new(p[0], p[1], p[2]))
                .collect(),
        }
    }

    /// Merge of two support sets: any `Stable` wins; noncollinear point sets
    /// become `Stable`; collinear sets keep their two extreme points.
    pub fn merge(&self, other: &SupportSet) -> SupportSet {
        if self.is_stable_marker() || other.is_stable_marker() {
            return SupportSet::Stable;
        }
        let mut pts = self.points();
        for q in other.points() {
            if !pts.iter().any(|p| (p - q).norm() < 1e-9) {
                pts.push(q);
            }
        }
        match pts.len() {
            0 => SupportSet::empty(),
            1 => SupportSet::point(pts[0]),
            _ => {
                let origin = pts[0];
                let dir = (pts[1] - origin).normalize();
                let collinear = pts
                    .iter()
                    .all(|p| (p - origin).cross(&dir).norm() < 1e-9);
                if !collinear {
                    return SupportSet::Stable;
                }
                // keep the two extremes along the common line
                let (mut lo, mut hi) = (0usize, 0usize);
                for (i, p) in pts.iter().enumerate() {
                    let t = (p - origin).dot(&dir);
                    if t < (pts[lo] - origin).dot(&dir) {
                        lo = i;
                    }
                    if t > (pts[hi] - origin).dot(&dir) {
                        hi = i;
                    }
                }
                SupportSet::edge(pts[lo], pts[hi])
            }
        }
    }

    pub fn quantize(&mut self) {
        if let SupportSet::Points { count, pts } = self {
            for p in pts[..*count as usize].iter_mut() {
                for v in p {
                    *v = *v as f32 as f64;
                }
            }
        }
    }
}

/// Active corner points of one support facet given its final contact state.
pub fn active_support(
    config: &Configuration,
    idx: usize,
    facet: FacetDir,
    state: &ContactState,
) -> SupportSet {
    if state.normal == Normal::Separation {
        return SupportSet::empty();
    }
    if state.tilt_x == Tilt::Stable && state.tilt_y == Tilt::Stable {
        return SupportSet::Stable;
    }
    let l = config.params().edge_length;
    let half = l / 2.0;
    let rot = crate::beam::Rotation6::for_axis(facet.opposite().step());
    let x_axis: Vector3<f64> = rot.block().column(0).into();
    let y_axis: Vector3<f64> = rot.block().column(1).into();
    let facet_center = config.position(idx) + facet.unit() * half;
    let corner = |lx: f64, ly: f64| facet_center + x_axis * lx + y_axis * ly;

    match (state.tilt_x, state.tilt_y) {
        (Tilt::Stable, ty) => {
            // pivot edge parallel to the local y axis at x = sign·L/2
            let lx = ty.sign() * half;
            SupportSet::edge(corner(lx, -half), corner(lx, half))
        }
        (tx, Tilt::Stable) => {
            // pivot edge parallel to the local x axis at y = −sign·L/2
            let ly = -tx.sign() * half;
            SupportSet::edge(corner(-half, ly), corner(half, ly))
        }
        (tx, ty) => SupportSet::point(corner(ty.sign() * half, -tx.sign() * half)),
    }
}

/// Runs the model-based check: per-module active supports from the final
/// contact states, aggregated over the tree with the collinearity merge.
pub fn model_based_stability(
    rt: &mut Runtime,
    tree: &Tree,
    solve: &SolveOutput,
) -> Result<(BalanceVerdict, SupportSet), RuntimeError> {
    let config = rt.config();
    let values: Vec<AggValue> = (0..config.len())
        .map(|idx| {
            let mut set = SupportSet::empty();
            for (facet, state) in &solve.contact_states[idx] {
                set = set.merge(&active_support(config, idx, *facet, state));
            }
            AggValue::Support(set)
        })
        .collect();
    let AggValue::Support(aggregate) = converge_cast(rt, tree, &values)? else {
        unreachable!()
    };
    let verdict = if aggregate.is_stable_marker() {
        BalanceVerdict::Stable
    } else {
        BalanceVerdict::Unstable
    };
    Ok((verdict, aggregate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::runtime::SchedulePolicy;
    use crate::testutil::assert_close;
    use crate::tree::build_tree;
    use proptest::prelude::*;

    fn pipeline(cfg: &Configuration, seed: u64) -> (Runtime<'_>, Tree) {
        let mut rt = Runtime::new(cfg, SchedulePolicy::Random, seed, false, false).unwrap();
        let tree = build_tree(&mut rt).unwrap();
        (rt, tree)
    }

    #[test]
    fn com_of_single_module_is_its_center() {
        let cfg = families::single_grounded().build().unwrap();
        let (mut rt, tree) = pipeline(&cfg, 1);
        let com = center_of_mass(&mut rt, &tree).unwrap();
        assert_close(com.x, 0.02, 1e-15);
        assert_close(com.z, 0.02, 1e-15);
        assert_close(com.total_mass, 0.06106, 1e-15);
    }

    #[test]
    fn com_of_l_shape_matches_hand_average() {
        let cfg = families::custom(
            "l-shape",
            &[(0, 0, 0), (1, 0, 0), (0, 0, 1)],
            &[0, 1],
            &[],
            0,
        )
        .build()
        .unwrap();
        let (mut rt, tree) = pipeline(&cfg, 2);
        let com = center_of_mass(&mut rt, &tree).unwrap();
        // cell centers 0.5L, 1.5L, 0.5L → mean (0.5+1.5+0.5)/3 − facet-relative L/3
        let l = cfg.params().edge_length;
        assert_close(com.x, l * (0.5 + 1.5 + 0.5) / 3.0, 1e-12);
    }

    #[test]
    fn com_directly_over_facet_center_gives_robust_full_angle() {
        let cfg = families::single_grounded().build().unwrap();
        let range = safe_angle_range(&cfg, 0, (0.02, 0.02));
        assert_eq!(range.verdict(), BalanceVerdict::Stable);
    }

    #[test]
    fn far_away_com_excludes_directions_toward_it() {
        // CoM far along +x of a lone support: tipping toward +x is unsafe
        let cfg = families::single_grounded().build().unwrap();
        let range = safe_angle_range(&cfg, 0, (10.0, 0.02));
        let Base::Arc { start, extent } = range.base else {
            panic!("expected an arc, got {range:?}");
        };
        assert!(extent < TAU - 0.1);
        // direction 0 (+x) must not be covered
        let t = wrap_angle(0.0 - start);
        assert!(t > extent, "tipping direction toward +x should be unsafe");
        // direction π (−x) must be covered
        let t = wrap_angle(PI - start);
        assert!(t < extent);
    }

    #[test]
    fn non_ground_module_has_empty_range() {
        let cfg = families::tipping_tower(2, 0).build().unwrap();
        assert!(safe_angle_range(&cfg, 1, (0.02, 0.02)).is_empty());
    }

    #[test]
    fn com_over_corner_is_marginal() {
        let cfg = families::single_grounded().build().unwrap();
        let range = safe_angle_range(&cfg, 0, (0.0, 0.0));
        assert_eq!(range.verdict(), BalanceVerdict::MarginalStable);
    }

    #[test]
    fn tower_overhang_examples_match_hand_statics() {
        // 3-high column with 2-module overhang tips; 1-module overhang holds
        let tipping = families::tipping_tower(3, 2).build().unwrap();
        let (mut rt, tree) = pipeline(&tipping, 3);
        let out = simplified_stability(&mut rt, &tree).unwrap();
        assert_eq!(out.verdict, BalanceVerdict::Unstable);

        let holding = families::tipping_tower(3, 1).build().unwrap();
        let (mut rt, tree) = pipeline(&holding, 3);
        let out = simplified_stability(&mut rt, &tree).unwrap();
        assert_eq!(out.verdict, BalanceVerdict::Stable);
    }

    #[test]
    fn hull_edge_case_is_flagged_marginal() {
        let cfg = families::marginal_ledge().build().unwrap();
        let (mut rt, tree) = pipeline(&cfg, 4);
        let out = simplified_stability(&mut rt, &tree).unwrap();
        assert_eq!(out.verdict, BalanceVerdict::MarginalStable);
    }

    #[test]
    fn wall_supports_reject_the_simplified_check() {
        let fam = families::custom("wall", &[(0, 0, 1), (0, 0, 0)], &[1], &[], 0);
        let mut doc = fam.doc().clone();
        doc.ground_facets.push(crate::scenario::FacetEntry {
            id: 0,
            facet: FacetDir::MinusX,
        });
        let cfg = crate::scenario::build_configuration(&doc).unwrap();
        let (mut rt, tree) = pipeline(&cfg, 5);
        assert!(matches!(
            simplified_stability(&mut rt, &tree),
            Err(StabilityError::NotFlatGround { .. })
        ));
    }

    #[test]
    fn simplified_matches_hull_oracle_on_assorted_scenarios() {
        use crate::oracle::{convex_hull_oracle, HullVerdict};
        for fam in [
            families::single_grounded(),
            families::slab(3),
            families::tipping_tower(3, 1),
            families::tipping_tower(3, 2),
            families::tipping_tower(2, 3),
            families::marginal_ledge(),
            families::table_edge_overhang(7, 4),
            families::table_edge_overhang(3, 4),
        ] {
            let cfg = fam.build().unwrap();
            let (mut rt, tree) = pipeline(&cfg, 6);
            let ours = simplified_stability(&mut rt, &tree).unwrap().verdict;
            let expect = match convex_hull_oracle(&cfg) {
                HullVerdict::Stable => BalanceVerdict::Stable,
                HullVerdict::Marginal => BalanceVerdict::MarginalStable,
                HullVerdict::Unstable => BalanceVerdict::Unstable,
            };
            assert_eq!(ours, expect, "{}", fam.name());
        }
    }

    #[test]
    fn support_set_merge_detects_noncollinearity() {
        let a = SupportSet::edge(Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0));
        let b = SupportSet::point(Vector3::new(0.5, 0.0, 0.0));
        assert!(!a.merge(&b).is_stable_marker()); // still collinear
        let c = SupportSet::point(Vector3::new(0.5, 1.0, 0.0));
        assert!(a.merge(&c).is_stable_marker()); // noncollinear triple

        // collinear merge keeps the extremes
        let d = SupportSet::edge(Vector3::new(2.0, 0.0, 0.0), Vector3::new(3.0, 0.0, 0.0));
        let SupportSet::Points { count, pts } = a.merge(&d) else {
            panic!()
        };
        assert_eq!(count, 2);
        let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        assert!(xs.contains(&0.0) && xs.contains(&3.0));
    }

    #[test]
    fn stable_marker_dominates() {
        let a = SupportSet::Stable;
        let b = SupportSet::point(Vector3::zeros());
        assert!(a.merge(&b).is_stable_marker());
        assert!(b.merge(&a).is_stable_marker());
    }

    #[test]
    fn active_support_geometries() {
        let cfg = families::single_grounded().build().unwrap();
        let l = cfg.params().edge_length;

        let separated = ContactState::separated();
        assert_eq!(
            active_support(&cfg, 0, FacetDir::MinusZ, &separated).point_count(),
            0
        );

        let stable = ContactState::stable_contact();
        assert!(active_support(&cfg, 0, FacetDir::MinusZ, &stable).is_stable_marker());

        // tilting about +y edge (tilt_y positive) pivots on the x = L edge
        let mut tilt = ContactState::stable_contact();
        tilt.tilt_y = Tilt::TiltPos;
        let SupportSet::Points { count, pts } = active_support(&cfg, 0, FacetDir::MinusZ, &tilt)
        else {
            panic!()
        };
        assert_eq!(count, 2);
        for p in &pts[..2] {
            assert_close(p[0], l, 1e-12); // both corners on the +x facet edge
            assert_close(p[2], 0.0, 1e-12); // at ground level
        }

        // tilting in both directions leaves a single corner
        tilt.tilt_x = Tilt::TiltNeg;
        let set = active_support(&cfg, 0, FacetDir::MinusZ, &tilt);
        assert_eq!(set.point_count(), 1);
    }

    proptest! {
        /// merge is associative and commutative up to the marginal band,
        /// checked against a brute-force direction-sampling oracle
        #[test]
        fn angle_merge_matches_direction_sampling(
            dirs in proptest::collection::vec(0.0..TAU, 1..6),
            perm_seed in 0u64..16,
        ) {
            let arcs: Vec<SafeAngleRange> =
                dirs.iter().map(|&t| SafeAngleRange::arc(t - PI / 2.0, PI)).collect();

            // merge in two different orders
            let mut order: Vec<usize> = (0..arcs.len()).collect();
            if perm_seed % 2 == 1 {
                order.reverse();
            }
            order.rotate_left((perm_seed as usize / 2) % arcs.len().max(1));
            let forward = arcs
                .iter()
                .fold(SafeAngleRange::empty(), |acc, a| acc.merge(a));
            let shuffled = order
                .iter()
                .fold(SafeAngleRange::empty(), |acc, &i| acc.merge(&arcs[i]));
            prop_assert_eq!(forward.verdict(), shuffled.verdict());

            // sampled coverage agrees with the final extent
            let samples = 4096;
            let covered = (0..samples)
                .filter(|k| {
                    let t = TAU * (*k as f64 + 0.5) / samples as f64;
                    dirs.iter().any(|&c| {
                        let d = wrap_angle(t - (c - PI / 2.0));
                        d <= PI
                    })
                })
                .count();
            let sampled = TAU * covered as f64 / samples as f64;
            prop_assert!((sampled - forward.extent()).abs() < 0.02,
                "sampled {} vs extent {}", sampled, forward.extent());
        }

        #[test]
        fn support_merge_is_order_insensitive(
            pts in proptest::collection::vec((0i8..4, 0i8..4, 0i8..2), 1..6),
        ) {
            let sets: Vec<SupportSet> = pts
                .iter()
                .map(|&(x, y, z)| SupportSet::point(Vector3::new(x as f64, y as f64, z as f64)))
                .collect();
            let forward = sets.iter().fold(SupportSet::empty(), |a, s| a.merge(s));
            let backward = sets.iter().rev().fold(SupportSet::empty(), |a, s| a.merge(s));
            prop_assert_eq!(forward.is_stable_marker(), backward.is_stable_marker());
            prop_assert_eq!(forward.point_count(), backward.point_count());
        }
    }
}
