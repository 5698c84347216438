//! Centralized ground truth for tests and `--verify` runs.
//!
//! Assembles the full stiffness system over all modules (virtuals included),
//! solves it directly with a fixed-point loop over the per-support contact
//! classifications, and exposes diagnostics: iteration-matrix spectral
//! radius, rigid-statics cut wrenches on determinate substructures, and an
//! exact 2D point-in-hull stability verdict. Single-threaded, dense; test
//! instrument rather than product.

use crate::beam::{rotated_stiffness, Rotation6};
use crate::contact::{evaluate_support, ContactState};
use crate::model::{Configuration, Dof6, FacetDir, ModuleKind, Wrench6};
use nalgebra::{DMatrix, DVector, Vector3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("contact classification cycled without a fixed point after {0} sweeps")]
    NoFixedPoint(usize),
    #[error("system of {dofs} DOFs exceeds the dense diagnostic limit of {limit}")]
    DimensionTooLarge { dofs: usize, limit: usize },
    #[error("structure is not statically determinate at connection {0}..{1}")]
    StaticallyIndeterminate(usize, usize),
    #[error("linear solve failed (singular system)")]
    SingularSystem,
    #[error("eigenvalue iteration did not converge")]
    EigenIterationStalled,
}

/// Direct solution of the assembled system with converged contact branches.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub states: Vec<Dof6>,
    /// Per module: classification of each declared support, facet order as in
    /// `Configuration::ground_facets_of`.
    pub contact_states: Vec<Vec<(FacetDir, ContactState)>>,
    /// Fixed-point sweeps spent until classifications stabilized.
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 50;
const SPECTRAL_DOF_LIMIT: usize = 1200;

type ClassifiedStates = Vec<Vec<(FacetDir, ContactState)>>;

fn assemble(
    config: &Configuration,
    classify_from: Option<&[Dof6]>,
    gamma: f64,
) -> (DMatrix<f64>, DVector<f64>, ClassifiedStates) {
    let n = config.len();
    let mut k = DMatrix::zeros(6 * n, 6 * n);
    let mut f = DVector::zeros(6 * n);
    let params = config.params();

    for (a, b) in config.connections().iter().copied() {
        let ab = rotated_stiffness(config, a, b).expect("connection endpoints are adjacent");
        let ba = rotated_stiffness(config, b, a).expect("connection endpoints are adjacent");
        k.view_mut((6 * a, 6 * a), (6, 6)).add_assign(&ab.own);
        k.view_mut((6 * a, 6 * b), (6, 6)).add_assign(&ab.coupling);
        k.view_mut((6 * b, 6 * b), (6, 6)).add_assign(&ba.own);
        k.view_mut((6 * b, 6 * a), (6, 6)).add_assign(&ba.coupling);
    }

    let mut states = vec![Vec::new(); n];
    for (idx, facet) in config.ground_facets() {
        let u = classify_from.map(|s| s[idx]).unwrap_or_default();
        let support = evaluate_support(&u, facet, params, gamma);
        states[idx].push((facet, support.state));
        k.view_mut((6 * idx, 6 * idx), (6, 6))
            .add_assign(&support.tangent);
    }

    for idx in 0..n {
        let w = config.external_load(idx);
        f.rows_mut(6 * idx, 6).add_assign(&w.0);
    }
    (k, f, states)
}

trait AddAssignView {
    fn add_assign(&mut self, rhs: &nalgebra::Matrix6<f64>);
}

impl<'a> AddAssignView for nalgebra::DMatrixViewMut<'a, f64> {
    fn add_assign(&mut self, rhs: &nalgebra::Matrix6<f64>) {
        for i in 0..6 {
            for j in 0..6 {
                self[(i, j)] += rhs[(i, j)];
            }
        }
    }
}

trait AddAssignRows {
    fn add_assign(&mut self, rhs: &nalgebra::Vector6<f64>);
}

impl<'a> AddAssignRows for nalgebra::DVectorViewMut<'a, f64> {
    fn add_assign(&mut self, rhs: &nalgebra::Vector6<f64>) {
        for i in 0..6 {
            self[i] += rhs[i];
        }
    }
}

fn unpack(u: &DVector<f64>, n: usize) -> Vec<Dof6> {
    (0..n)
        .map(|i| Dof6(nalgebra::Vector6::from_iterator(
            u.rows(6 * i, 6).iter().copied(),
        )))
        .collect()
}

/// Solves the assembled system, iterating the contact classification until it
/// reproduces itself. Classification cycles are broken once by preferring the
/// stable-contact branch; a persistent cycle is reported as [`OracleError::NoFixedPoint`].
pub fn assemble_and_solve(
    config: &Configuration,
    gamma: f64,
) -> Result<OracleSolution, OracleError> {
    let n = config.len();
    let mut previous: Option<Vec<Dof6>> = None;
    let mut history: Vec<ClassifiedStates> = Vec::new();
    let mut forced_stable_once = false;

    for sweep in 0..MAX_SWEEPS {
        let (k, f, classified) = assemble(config, previous.as_deref(), gamma);
        let lu = k.lu();
        let u = lu.solve(&f).ok_or(OracleError::SingularSystem)?;
        let states = unpack(&u, n);
        let (_, _, reclassified) = assemble(config, Some(&states), gamma);

        if reclassified == classified {
            return Ok(OracleSolution {
                states,
                contact_states: reclassified,
                sweeps: sweep + 1,
            });
        }
        if history.contains(&reclassified) {
            if forced_stable_once {
                return Err(OracleError::NoFixedPoint(sweep + 1));
            }
            // Break the cycle once by restarting from the all-stable guess.
            forced_stable_once = true;
            history.clear();
            previous = None;
            continue;
        }
        history.push(reclassified);
        previous = Some(states);
    }
    Err(OracleError::NoFixedPoint(MAX_SWEEPS))
}

/// Spectral radius of the weighted-Jacobi iteration matrix
/// `I − β·D⁻¹·K` with the contact classification frozen at `solution`.
///
/// When every contact sits in the stable branch the assembled matrix is
/// symmetric, and `D⁻¹K` is similar to `D^{-1/2} K D^{-1/2}`, so the robust
/// symmetric eigensolver applies; otherwise a bounded Schur iteration handles
/// the corrected (nonsymmetric) rows.
///
/// A radius below one guarantees convergence from any start. A radius above
/// one means some mode diverges — yet a planar scenario started from the
/// zero state can still converge, because gravity never excites the
/// out-of-plane mode and exact floating-point zeros stay zero. The radius is
/// the honest worst-case diagnostic, not a verdict on a particular run.
pub fn spectral_radius(
    config: &Configuration,
    beta: f64,
    gamma: f64,
    solution: &OracleSolution,
) -> Result<f64, OracleError> {
    let n = config.len();
    let dofs = 6 * n;
    if dofs > SPECTRAL_DOF_LIMIT {
        return Err(OracleError::DimensionTooLarge {
            dofs,
            limit: SPECTRAL_DOF_LIMIT,
        });
    }
    let (k, _, _) = assemble(config, Some(&solution.states), gamma);
    let symmetric = (&k - k.transpose()).norm() <= 1e-10 * k.norm();
    if symmetric {
        // eigenvalues of D⁻¹K equal those of the symmetric D^{-1/2} K D^{-1/2}
        let inv_sqrt: Vec<f64> = (0..dofs)
            .map(|i| {
                let d = k[(i, i)];
                assert!(d > 0.0, "nonpositive stiffness diagonal at dof {i}");
                1.0 / d.sqrt()
            })
            .collect();
        let mut s = k;
        for i in 0..dofs {
            for j in 0..dofs {
                s[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
            }
        }
        let eig = s.symmetric_eigen().eigenvalues;
        return Ok(eig
            .iter()
            .map(|mu| (1.0 - beta * mu).abs())
            .fold(0.0, f64::max));
    }

    let mut c = DMatrix::identity(dofs, dofs);
    for i in 0..dofs {
        let d = k[(i, i)];
        assert!(d > 0.0, "nonpositive stiffness diagonal at dof {i}");
        for j in 0..dofs {
            c[(i, j)] -= beta * k[(i, j)] / d;
        }
    }
    let schur = nalgebra::linalg::Schur::try_new(c, 1e-14, 100_000)
        .ok_or(OracleError::EigenIterationStalled)?;
    let eig = schur.complex_eigenvalues();
    Ok(eig.iter().map(|l| l.norm()).fold(0.0, f64::max))
}

/// Rigid-statics cut wrench at one connection, in the connection-local frame
/// seen from the smaller-index endpoint (tension-positive axial force on
/// local z). Only defined where removing the connection leaves the far side
/// with no supports (the cut is then statically determinate).
#[derive(Debug, Clone, Copy)]
pub struct StaticsCut {
    pub a: usize,
    pub b: usize,
    pub wrench: Wrench6,
}

/// Cut wrenches for every connection whose far side is a support-free
/// subtree, by summing weights and lever arms of the far-side modules.
pub fn statics_oracle(config: &Configuration) -> Vec<StaticsCut> {
    let mut cuts = Vec::new();
    for &(a, b) in config.connections() {
        if let Some(w) = statics_cut(config, a, b) {
            cuts.push(StaticsCut { a, b, wrench: w });
        }
    }
    cuts
}

/// [`statics_cut`] that reports indeterminate cuts as an error.
pub fn statics_wrench(
    config: &Configuration,
    a: usize,
    b: usize,
) -> Result<Wrench6, OracleError> {
    statics_cut(config, a, b).ok_or(OracleError::StaticallyIndeterminate(a, b))
}

/// Statics cut at `(a, b)` if determinate, in the frame of the `a` side.
pub fn statics_cut(config: &Configuration, a: usize, b: usize) -> Option<Wrench6> {
    // Collect the side containing b when the edge (a,b) is removed.
    let n = config.len();
    let mut visited = vec![false; n];
    visited[a] = true;
    visited[b] = true;
    let mut stack = vec![b];
    let mut far = vec![b];
    while let Some(i) = stack.pop() {
        for &j in config.neighbors(i) {
            if i == b && j == a {
                continue;
            }
            if !visited[j] {
                visited[j] = true;
                stack.push(j);
                far.push(j);
            }
        }
    }
    if far.contains(&a) {
        return None; // edge sits on a cycle: not a clean cut
    }
    if far.iter().any(|&i| !config.ground_facets_of(i).is_empty()) {
        return None; // far side carries supports: indeterminate cut
    }

    let params = config.params();
    let w = params.gravity * params.mass;
    let mid = (config.position(a) + config.position(b)) * 0.5;
    // Equilibrium of the far side: the cut provides the upward force and the
    // moment balancing the far-side weights about the cut midpoint.
    let mut force = Vector3::zeros();
    let mut moment = Vector3::zeros();
    for &i in &far {
        force += Vector3::new(0.0, 0.0, w);
        moment += (config.position(i) - mid).cross(&Vector3::new(0.0, 0.0, w));
    }
    let rot = Rotation6::for_axis({
        let pa = config.module(a).pos;
        let pb = config.module(b).pos;
        (pa.x - pb.x, pa.y - pb.y, pa.z - pb.z)
    });
    let local_f = rot.block().transpose() * force;
    let local_m = rot.block().transpose() * moment;
    Some(Wrench6::from_components(
        local_f.x, local_f.y, local_f.z, local_m.x, local_m.y, local_m.z,
    ))
}

/// Flat-ground stability verdict from exact 2D geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HullVerdict {
    Stable,
    Marginal,
    Unstable,
}

/// Brute-force check that the center of mass projects inside the convex hull
/// of the ground-facet corner points (z = 0 plane).
pub fn convex_hull_oracle(config: &Configuration) -> HullVerdict {
    let params = config.params();
    let l = params.edge_length;
    let mut corners: Vec<(f64, f64)> = Vec::new();
    for (idx, facet) in config.ground_facets() {
        if facet != FacetDir::MinusZ {
            continue;
        }
        let p = config.module(idx).pos;
        for (cx, cy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            corners.push((((p.x + cx) as f64) * l, ((p.y + cy) as f64) * l));
        }
    }
    if corners.is_empty() {
        return HullVerdict::Unstable;
    }

    let mut com = Vector3::zeros();
    let mut mass = 0.0;
    for idx in 0..config.len() {
        let _ = config.modules()[idx].kind == ModuleKind::Real; // virtuals count too
        com += config.position(idx) * params.mass;
        mass += params.mass;
    }
    com /= mass;
    let (px, py) = (com.x, com.y);

    // Signed check against every hull edge of the corner set.
    let hull = convex_hull_2d(&corners);
    if hull.len() == 1 {
        let d = ((px - hull[0].0).powi(2) + (py - hull[0].1).powi(2)).sqrt();
        return if d < 1e-12 {
            HullVerdict::Marginal
        } else {
            HullVerdict::Unstable
        };
    }
    let mut min_signed = f64::INFINITY;
    for i in 0..hull.len() {
        let (x1, y1) = hull[i];
        let (x2, y2) = hull[(i + 1) % hull.len()];
        let len = ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt();
        if len < 1e-15 {
            continue;
        }
        // positive = inside for a counter-clockwise hull
        let cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1);
        min_signed = min_signed.min(cross / len);
    }
    if hull.len() == 2 {
        // degenerate hull: a segment has no interior
        return if min_signed.abs() <= 1e-12 && on_segment(hull[0], hull[1], (px, py)) {
            HullVerdict::Marginal
        } else {
            HullVerdict::Unstable
        };
    }
    if min_signed > 1e-12 {
        HullVerdict::Stable
    } else if min_signed >= -1e-12 {
        HullVerdict::Marginal
    } else {
        HullVerdict::Unstable
    }
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    let dot = (p.0 - a.0) * (b.0 - a.0) + (p.1 - a.1) * (b.1 - a.1);
    let len2 = (b.0 - a.0).powi(2) + (b.1 - a.1).powi(2);
    dot >= -1e-12 && dot <= len2 + 1e-12
}

/// Monotone-chain convex hull, counter-clockwise, no duplicate points.
fn convex_hull_2d(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Euclidean norm of all per-module equilibrium residuals of a candidate
/// solution, with contact forces from the predictor-corrector.
pub fn residual_norm_direct(config: &Configuration, states: &[Dof6], gamma: f64) -> f64 {
    let (k, f, _) = assemble(config, Some(states), gamma);
    let mut u = DVector::zeros(6 * config.len());
    for (i, s) in states.iter().enumerate() {
        u.rows_mut(6 * i, 6).copy_from(&s.0);
    }
    (k * u - f).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::DEFAULT_GAMMA;
    use crate::families;
    use crate::model::Params;
    use crate::testutil::{assert_close, grounded_row};

    #[test]
    fn single_grounded_module_settles_by_weight_over_stiffness() {
        let cfg = families::single_grounded().build().unwrap();
        let sol = assemble_and_solve(&cfg, DEFAULT_GAMMA).unwrap();
        assert_close(sol.states[0].u_z(), -1.4975e-7, 1e-11);
        assert_eq!(sol.contact_states[0][0].1, ContactState::stable_contact());
    }

    #[test]
    fn symmetric_slab_settles_uniformly() {
        let cfg = families::slab(2).build().unwrap();
        let sol = assemble_and_solve(&cfg, DEFAULT_GAMMA).unwrap();
        let z0 = sol.states[0].u_z();
        for s in &sol.states {
            assert_close(s.u_z(), z0, 1e-15);
        }
    }

    #[test]
    fn direct_solution_has_tiny_residual() {
        let cfg = families::fixed_arm(10).build().unwrap();
        let sol = assemble_and_solve(&cfg, DEFAULT_GAMMA).unwrap();
        let scale: f64 = (0..cfg.len())
            .map(|i| cfg.external_load(i).0.norm_squared())
            .sum::<f64>()
            .sqrt();
        assert!(residual_norm_direct(&cfg, &sol.states, DEFAULT_GAMMA) <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn global_matrix_is_symmetric_and_psd_when_all_contacts_stable() {
        let cfg = grounded_row(4);
        let sol = assemble_and_solve(&cfg, DEFAULT_GAMMA).unwrap();
        assert!(sol
            .contact_states
            .iter()
            .flatten()
            .all(|(_, s)| *s == ContactState::stable_contact()));
        let (k, _, _) = assemble(&cfg, Some(&sol.states), DEFAULT_GAMMA);
        assert!((&k - k.transpose()).norm() < 1e-6 * k.norm());
        // random energy positivity
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let v = DVector::from_fn(6 * cfg.len(), |_, _| rng.gen_range(-1.0..1.0));
            let e = v.dot(&(&k * &v));
            assert!(e >= -1e-9 * k.norm());
        }
    }

    #[test]
    fn spectral_radius_examples() {
        let cfg = families::fixed_arm(4).build().unwrap();
        let sol = assemble_and_solve(&cfg, DEFAULT_GAMMA).unwrap();
        let rho = spectral_radius(&cfg, 2.0 / 3.0, DEFAULT_GAMMA, &sol).unwrap();
        assert!(rho < 1.0, "rho = {rho}");
        // beta = 0 leaves the identity
        let rho0 = spectral_radius(&cfg, 0.0, DEFAULT_GAMMA, &sol).unwrap();
        assert_close(rho0, 1.0, 1e-12);
    }

    #[test]
    fn spectral_radius_refuses_oversized_systems() {
        let cfg = families::slab(15).build().unwrap(); // 225 modules, 1350 dofs
        let sol = OracleSolution {
            states: vec![Dof6::zero(); cfg.len()],
            contact_states: vec![],
            sweeps: 0,
        };
        assert!(matches!(
            spectral_radius(&cfg, 2.0 / 3.0, DEFAULT_GAMMA, &sol),
            Err(OracleError::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn cantilever_root_cut_matches_lever_arithmetic() {
        // row of 7 grounded modules, 6 hanging past the edge
        let cfg = families::table_edge_overhang(7, 6).build().unwrap();
        let cuts = statics_oracle(&cfg);
        // the root cut carries all 6 overhang modules
        let root = cuts
            .iter()
            .find(|c| {
                let far = cfg.module(c.b).pos.x.max(cfg.module(c.a).pos.x);
                far == 1 // connection between x=0 (last grounded) and x=1
                    && cfg.module(c.a).pos.x.min(cfg.module(c.b).pos.x) == 0
            })
            .unwrap();
        let m = root.wrench.m_x().abs().max(root.wrench.m_y().abs());
        assert_close(m, 0.43128, 2e-4);
        assert!(root.wrench.f_z().abs() < 1e-9); // no axial component
    }

    #[test]
    fn indeterminate_cut_is_an_error() {
        // both sides of every slab connection carry supports
        let cfg = families::slab(2).build().unwrap();
        let (a, b) = cfg.connections()[0];
        assert_eq!(
            statics_wrench(&cfg, a, b),
            Err(OracleError::StaticallyIndeterminate(a, b))
        );
        // while a tower cut is determinate
        let cfg = families::fixed_arm(3).build().unwrap();
        assert!(statics_wrench(&cfg, 0, 1).is_ok());
    }

    #[test]
    fn hull_oracle_examples() {
        // CoM strictly inside the unit support square
        let stable = families::slab(2).build().unwrap();
        assert_eq!(convex_hull_oracle(&stable), HullVerdict::Stable);

        // CoM exactly over the facet edge
        let marginal = families::marginal_ledge().build().unwrap();
        assert_eq!(convex_hull_oracle(&marginal), HullVerdict::Marginal);

        // CoM beyond the hull
        let unstable = families::tipping_tower(3, 2).build().unwrap();
        assert_eq!(convex_hull_oracle(&unstable), HullVerdict::Unstable);
    }

    #[test]
    fn params_insensitivity_of_solution_shape() {
        // scaling E leaves the contact classification unchanged
        let mut weak = Params::default();
        weak.elastic_modulus /= 10.0;
        let cfg1 = families::fixed_arm(6).build().unwrap();
        let cfg2 = families::fixed_arm(6).params(weak).build().unwrap();
        let s1 = assemble_and_solve(&cfg1, DEFAULT_GAMMA).unwrap();
        let s2 = assemble_and_solve(&cfg2, DEFAULT_GAMMA).unwrap();
        assert_eq!(s1.contact_states, s2.contact_states);
    }
}
