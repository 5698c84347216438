//! Regularized module-ground contact: separation, no-slip/no-twist, tilting.
//!
//! A supported module is joined to an immobile mirror node by a beam with the
//! same constants as an inter-modular connection. Each evaluation first
//! computes the uncorrected beam reaction (the trial wrench, in the
//! support-aligned frame where the contact normal is local z), then corrects
//! it branch by branch:
//!
//! ```text
//! trial f_z > 0            → whole wrench × γ            (separation)
//! trial f_z ≤ 0            → f_x, f_y, f_z, m_z kept     (contact)
//!     tilt margin Φ < 0    → bending moment kept         (stable)
//!     tilt margin Φ ≥ 0    → moment blended to the edge-pivot value (tilting)
//! ```
//!
//! with edge moments `m̂_x = m_x − f_y·L/2`, `m̂_y = m_y + f_x·L/2` and margins
//! `Φ = |m̂| + f_z·L/2`. The weak residual stiffness γ keeps the system
//! nonsingular when supports separate. The corrected tangent is the exact
//! derivative of the corrected wrench, so the same branch logic yields the
//! stiffness rows used by the iterative solver.

use crate::beam::{canonical_stiffness, Rotation6, Stiffness6x6};
use crate::model::{Dof6, FacetDir, Params, Wrench6};

/// Default contact regularization factor.
pub const DEFAULT_GAMMA: f64 = 1e-4;

/// Normal (coaxial) contact branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Normal {
    Separation,
    Contact,
}

/// Tilting branch about one facet axis; the sign is the tipping edge side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tilt {
    Stable,
    TiltPos,
    TiltNeg,
}

impl Tilt {
    fn from_sign(sign: f64) -> Tilt {
        if sign >= 0.0 {
            Tilt::TiltPos
        } else {
            Tilt::TiltNeg
        }
    }

    pub fn sign(&self) -> f64 {
        match self {
            Tilt::Stable => 0.0,
            Tilt::TiltPos => 1.0,
            Tilt::TiltNeg => -1.0,
        }
    }
}

/// Per-support classification. In separation both tilt flags are forced to
/// `Stable` (they are irrelevant there).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContactState {
    pub normal: Normal,
    pub tilt_x: Tilt,
    pub tilt_y: Tilt,
}

impl ContactState {
    pub fn stable_contact() -> Self {
        ContactState {
            normal: Normal::Contact,
            tilt_x: Tilt::Stable,
            tilt_y: Tilt::Stable,
        }
    }

    pub fn separated() -> Self {
        ContactState {
            normal: Normal::Separation,
            tilt_x: Tilt::Stable,
            tilt_y: Tilt::Stable,
        }
    }

    pub fn is_tilting(&self) -> bool {
        self.normal == Normal::Contact
            && (self.tilt_x != Tilt::Stable || self.tilt_y != Tilt::Stable)
    }

    pub fn tilt_count(&self) -> usize {
        usize::from(self.tilt_x != Tilt::Stable) + usize::from(self.tilt_y != Tilt::Stable)
    }
}

impl std::fmt::Display for ContactState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.normal {
            Normal::Separation => write!(f, "separation"),
            Normal::Contact => {
                if !self.is_tilting() {
                    write!(f, "contact-stable")
                } else {
                    write!(f, "contact")?;
                    match self.tilt_x {
                        Tilt::Stable => {}
                        Tilt::TiltPos => write!(f, ",tilting-x+")?,
                        Tilt::TiltNeg => write!(f, ",tilting-x-")?,
                    }
                    match self.tilt_y {
                        Tilt::Stable => {}
                        Tilt::TiltPos => write!(f, ",tilting-y+")?,
                        Tilt::TiltNeg => write!(f, ",tilting-y-")?,
                    }
                    Ok(())
                }
            }
        }
    }
}

/// Output of one predictor-corrector evaluation, in the support-aligned frame.
#[derive(Debug, Clone)]
pub struct ContactResult {
    pub corrected_force: Wrench6,
    /// Derivative of the corrected wrench w.r.t. the local module state.
    pub tangent: Stiffness6x6,
    pub state: ContactState,
}

/// Edge moments and tilt margins of a support-aligned wrench.
fn tilt_quantities(w: &Wrench6, half_edge: f64) -> (f64, f64, f64, f64) {
    let edge_moment_x = w.m_x() - w.f_y() * half_edge;
    let edge_moment_y = w.m_y() + w.f_x() * half_edge;
    let margin_x = edge_moment_x.abs() + w.f_z() * half_edge;
    let margin_y = edge_moment_y.abs() + w.f_z() * half_edge;
    (edge_moment_x, edge_moment_y, margin_x, margin_y)
}

/// Uncorrected beam reaction of a supported module, expressed in the
/// support-aligned frame (contact normal mapped to local z).
pub fn trial_force(state: &Dof6, facet: FacetDir, params: &Params) -> Wrench6 {
    // Beam direction runs from the mirror node into the module: -facet.
    let rot = Rotation6::for_axis(facet.opposite().step());
    let local = rot.to_local(&state.0);
    Wrench6(canonical_stiffness(params).own * local)
}

/// Applies the contact correction to a trial wrench (support-aligned frame).
///
/// Tie-breaking at exact branch boundaries (`f_z = 0` or `Φ = 0` computes the
/// contact/tilting split as printed): separation only for strictly positive
/// trial normal force; the tilting blend takes over at `Φ = 0`, where it
/// coincides with the stable value, so the choice has no force discontinuity.
pub fn correct(trial: &Wrench6, params: &Params, gamma: f64) -> ContactResult {
    let canon = canonical_stiffness(params).own;
    let half_edge = params.edge_length / 2.0;
    let gbar = 1.0 - gamma;

    if trial.f_z() > 0.0 {
        return ContactResult {
            corrected_force: *trial * gamma,
            tangent: canon * gamma,
            state: ContactState::separated(),
        };
    }

    let (edge_x, edge_y, margin_x, margin_y) = tilt_quantities(trial, half_edge);
    let mut force = trial.0;
    let mut tangent = canon;
    let mut state = ContactState::stable_contact();

    // strict inequalities: at the exact boundary the stable branch is taken
    // (deterministic tie-break; the blend matches the stable value there)
    if margin_x > 0.0 {
        let s = if edge_x >= 0.0 { 1.0 } else { -1.0 };
        state.tilt_x = Tilt::from_sign(s);
        force[3] = gamma * trial.m_x() + gbar * half_edge * (trial.f_y() - s * trial.f_z());
        let row = gamma * canon.row(3) + gbar * half_edge * (canon.row(1) - canon.row(2) * s);
        tangent.set_row(3, &row);
    }
    if margin_y > 0.0 {
        let s = if edge_y >= 0.0 { 1.0 } else { -1.0 };
        state.tilt_y = Tilt::from_sign(s);
        force[4] = gamma * trial.m_y() - gbar * half_edge * (trial.f_x() + s * trial.f_z());
        let row = gamma * canon.row(4) - gbar * half_edge * (canon.row(0) + canon.row(2) * s);
        tangent.set_row(4, &row);
    }

    ContactResult {
        corrected_force: Wrench6(force),
        tangent,
        state,
    }
}

/// Full support evaluation from a module's global state: classification,
/// corrected wrench (support frame) and global-frame tangent for assembly.
pub fn evaluate_support(
    state: &Dof6,
    facet: FacetDir,
    params: &Params,
    gamma: f64,
) -> ContactResult {
    let rot = Rotation6::for_axis(facet.opposite().step());
    let trial = trial_force(state, facet, params);
    let local = correct(&trial, params, gamma);
    ContactResult {
        corrected_force: local.corrected_force,
        tangent: rot.conjugate(&local.tangent),
        state: local.state,
    }
}

/// Global-frame corrected contact tangent for one support of a module.
pub fn contact_tangent(
    state: &Dof6,
    facet: FacetDir,
    params: &Params,
    gamma: f64,
) -> Stiffness6x6 {
    evaluate_support(state, facet, params, gamma).tangent
}

/// Verifies the unilateral contact conditions on a converged pair
/// `(state, force)` in the support-aligned frame, allowing the elastic and
/// γ-regularization residuals:
///
/// * normal: `f_z ≤ 0`, `u_z ≥ 0` and `f_z·u_z = 0` hold up to the beam
///   compliance (`|u_z| ≤ |f_z|/k_axial` in contact) and the γ-spring in
///   separation;
/// * bending: the tilt margins of the corrected wrench stay below γ times the
///   trial margins.
pub fn exact_complementarity_check(
    state: &Dof6,
    force: &Wrench6,
    params: &Params,
    gamma: f64,
    tol: f64,
) -> bool {
    let k_ax = params.axial_stiffness();
    let half_edge = params.edge_length / 2.0;
    let fz = force.f_z();
    let uz = state.u_z();
    let force_scale = force.0.norm().max(1.0e-12);

    // Normal condition: the pair must sit on one of the two regularized
    // branches, with the correct signs.
    let contact_branch = fz <= tol * force_scale && (fz - k_ax * uz).abs() <= tol * force_scale;
    let separation_branch =
        uz >= -tol && (fz - gamma * k_ax * uz).abs() <= tol * force_scale && fz <= gamma * k_ax * uz.max(0.0) + tol * force_scale;
    if !(contact_branch || separation_branch) {
        return false;
    }
    // Regularization bound on penetration (spec'd elastic-compression slack).
    if uz < -(fz.abs() / k_ax) - tol {
        return false;
    }
    // Complementarity product, allowing both branch residual shapes.
    let slack = (fz * fz / k_ax).max(gamma * k_ax * uz * uz);
    if (fz * uz).abs() > slack * (1.0 + tol) + tol {
        return false;
    }

    // Bending condition: corrected margins must be ≤ γ·(trial margin)+tol.
    // `state` is already support-aligned here, so the trial is the plain
    // canonical beam reaction.
    let trial = Wrench6(canonical_stiffness(params).own * state.0);
    let (_, _, tmx, tmy) = tilt_quantities(&trial, half_edge);
    let (_, _, cmx, cmy) = tilt_quantities(force, half_edge);
    let moment_scale = force_scale * half_edge.max(1.0);
    if cmx > gamma * tmx.max(0.0) + tol * moment_scale {
        return false;
    }
    if cmy > gamma * tmy.max(0.0) + tol * moment_scale {
        return false;
    }
    true
}
