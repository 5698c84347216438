//! Per-connection beam stiffness blocks, frame rotations, and local
//! equilibrium residuals.
//!
//! Every connection is a linear-elastic beam between two module nodes. In the
//! beam's own frame (local z pointing from the far node toward the near one),
//! the force on the near node splits into an `own` block acting on its state
//! and a `coupling` block acting on the far node's state. Index order is
//! `(u_x, u_y, u_z, τ_x, τ_y, τ_z)`.

use crate::model::{Configuration, Dof6, ModuleId, Params, Wrench6};
use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use thiserror::Error;

/// 6×6 stiffness block (mixed units: N/m, N, N·m per column/row pairing).
pub type Stiffness6x6 = Matrix6<f64>;

/// The two canonical stiffness blocks of a beam whose local z runs from the
/// far node to the near node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamBlocks {
    /// Acts on the near node's own state.
    pub own: Stiffness6x6,
    /// Couples the near node to the far node's state.
    pub coupling: Stiffness6x6,
}

/// Canonical beam stiffness blocks for a vertically aligned pair (far node
/// directly below the near node), scaled by `E/L³`.
pub fn canonical_stiffness(params: &Params) -> BeamBlocks {
    let e = params.elastic_modulus;
    let l = params.edge_length;
    let a = params.cross_area;
    let ix = params.inertia_x;
    let iy = params.inertia_y;
    let jn = params.torsion_scaled;
    let s = e / (l * l * l);

    let own = Matrix6::from_row_slice(&[
        12.0 * ix,      0.0,            0.0,     0.0,            -6.0 * ix * l,  0.0,
        0.0,            12.0 * iy,      0.0,     6.0 * iy * l,   0.0,            0.0,
        0.0,            0.0,            a*l*l,   0.0,            0.0,            0.0,
        0.0,            6.0 * iy * l,   0.0,     4.0 * iy * l*l, 0.0,            0.0,
        -6.0 * ix * l,  0.0,            0.0,     0.0,            4.0 * ix * l*l, 0.0,
        0.0,            0.0,            0.0,     0.0,            0.0,            jn * l * l,
    ]) * s;

    let coupling = Matrix6::from_row_slice(&[
        -12.0 * ix,     0.0,            0.0,     0.0,            -6.0 * ix * l,  0.0,
        0.0,            -12.0 * iy,     0.0,     6.0 * iy * l,   0.0,            0.0,
        0.0,            0.0,            -a*l*l,  0.0,            0.0,            0.0,
        0.0,            -6.0 * iy * l,  0.0,     2.0 * iy * l*l, 0.0,            0.0,
        6.0 * ix * l,   0.0,            0.0,     0.0,            2.0 * ix * l*l, 0.0,
        0.0,            0.0,            0.0,     0.0,            0.0,            -jn * l * l,
    ]) * s;

    BeamBlocks { own, coupling }
}

/// Block-diagonal pair of one 3×3 rotation, applied alike to the displacement
/// and rotation halves of a six-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation6 {
    block: Matrix3<f64>,
}

impl Rotation6 {
    pub fn identity() -> Self {
        Rotation6 {
            block: Matrix3::identity(),
        }
    }

    /// Rotation taking the local frame (z along `axis`) to the global frame,
    /// for one of the six lattice axis directions.
    ///
    /// The x/y axes of the local frame follow a fixed deterministic table:
    /// ±z beams keep global x as local x; ±x beams use the minimal rotation
    /// about y; ±y beams the minimal rotation about x.
    pub fn for_axis(axis: (i32, i32, i32)) -> Self {
        let block = match axis {
            (0, 0, 1) => Matrix3::identity(),
            // 180° about x
            (0, 0, -1) => Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0),
            // +90° about y: local z -> +x
            (1, 0, 0) => Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0),
            // -90° about y: local z -> -x
            (-1, 0, 0) => Matrix3::new(0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0),
            // -90° about x: local z -> +y
            (0, 1, 0) => Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0),
            // +90° about x: local z -> -y
            (0, -1, 0) => Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0),
            _ => panic!("not a lattice axis direction: {:?}", axis),
        };
        Rotation6 { block }
    }

    pub fn block(&self) -> &Matrix3<f64> {
        &self.block
    }

    /// The full 6×6 block-diagonal matrix.
    pub fn expand(&self) -> Matrix6<f64> {
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.block);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.block);
        m
    }

    /// Conjugates a stiffness block into the global frame: `R K Rᵀ`.
    pub fn conjugate(&self, k: &Stiffness6x6) -> Stiffness6x6 {
        let r = self.expand();
        r * k * r.transpose()
    }

    /// Local → global for six-vectors.
    pub fn to_global(&self, v: &Vector6<f64>) -> Vector6<f64> {
        self.expand() * v
    }

    /// Global → local for six-vectors.
    pub fn to_local(&self, v: &Vector6<f64>) -> Vector6<f64> {
        self.expand().transpose() * v
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BeamError {
    #[error("modules {0} and {1} are not adjacent")]
    NotAdjacent(ModuleId, ModuleId),
}

/// Rotation for the connection `(near, far)`: maps the beam frame whose z
/// axis points from `far` to `near` onto the global frame. Identity for a
/// vertically stacked pair with `far` below `near`.
pub fn rotation_for(
    config: &Configuration,
    near: usize,
    far: usize,
) -> Result<Rotation6, BeamError> {
    if !config.are_adjacent(near, far) {
        return Err(BeamError::NotAdjacent(
            config.module(near).id,
            config.module(far).id,
        ));
    }
    let a = config.module(near).pos;
    let b = config.module(far).pos;
    Ok(Rotation6::for_axis((a.x - b.x, a.y - b.y, a.z - b.z)))
}

/// Both stiffness blocks of the connection `(near, far)` rotated into the
/// global frame.
pub fn rotated_stiffness(
    config: &Configuration,
    near: usize,
    far: usize,
) -> Result<BeamBlocks, BeamError> {
    let rot = rotation_for(config, near, far)?;
    let canon = canonical_stiffness(config.params());
    Ok(BeamBlocks {
        own: rot.conjugate(&canon.own),
        coupling: rot.conjugate(&canon.coupling),
    })
}

/// One neighbor's contribution to a module's equilibrium: the far node's
/// state and the connection's global-frame blocks. Ground beams use
/// `far_state = 0` and the contact-corrected own block.
#[derive(Debug, Clone, Copy)]
pub struct NeighborTerm {
    pub far_state: Dof6,
    pub own: Stiffness6x6,
    pub coupling: Stiffness6x6,
}

/// Static equilibrium residual of one module:
/// `Σ (own·u + coupling·u_far) − load`. Zero at exact equilibrium.
pub fn equilibrium_residual(state: &Dof6, terms: &[NeighborTerm], load: &Wrench6) -> Wrench6 {
    let mut sum = Vector6::zeros();
    for t in terms {
        sum += t.own * state.0 + t.coupling * t.far_state.0;
    }
    Wrench6(sum - load.0)
}

/// Beam direction (far → near) as a real unit vector.
pub fn beam_direction(config: &Configuration, near: usize, far: usize) -> Vector3<f64> {
    let d = config.position(near) - config.position(far);
    d / d.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GroundFacet, Module, ModuleKind, Params};
    use crate::testutil::{assert_close, module};

    fn two_module_config(b: (i32, i32, i32)) -> Configuration {
        Configuration::new(
            Params::default(),
            vec![module(0, 0, 0, 0), module(1, b.0, b.1, b.2)],
            vec![],
            ModuleId(0),
        )
        .unwrap()
    }

    #[test]
    fn canonical_entries_match_hand_arithmetic() {
        let k = canonical_stiffness(&Params::default());
        // axial: E·A/L
        assert_close(k.own[(2, 2)], 4.0e6, 1e-6);
        // transverse: 12·E·I/L³ equals axial because I = L⁴/12, A = L²
        assert_close(k.own[(0, 0)], 4.0e6, 1e-6);
        // bending coupling, symmetric placement
        assert_close(k.own[(0, 4)], -6.0 * 100e6 * (0.04f64.powi(4) / 12.0) / 0.04f64.powi(2), 1e-9);
        assert_eq!(k.own[(0, 4)], k.own[(4, 0)]);
        // own block symmetric; coupling block is not
        assert!((k.own - k.own.transpose()).norm() < 1e-9);
        assert!((k.coupling - k.coupling.transpose()).norm() > 1.0);
    }

    #[test]
    fn rotation_table_is_orthonormal_and_right_handed() {
        for axis in [(0, 0, 1), (0, 0, -1), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)] {
            let r = Rotation6::for_axis(axis);
            let b = r.block();
            assert!((b * b.transpose() - Matrix3::identity()).norm() < 1e-14);
            assert_close(b.determinant(), 1.0, 1e-14);
            // local z maps to the axis direction
            let z = b * Vector3::z();
            assert_close(z.x, axis.0 as f64, 1e-14);
            assert_close(z.y, axis.1 as f64, 1e-14);
            assert_close(z.z, axis.2 as f64, 1e-14);
        }
    }

    #[test]
    fn stacked_pair_uses_identity_rotation() {
        let cfg = two_module_config((0, 0, -1)); // module 1 below module 0
        let r = rotation_for(&cfg, 0, 1).unwrap();
        assert_eq!(r, Rotation6::identity());
    }

    #[test]
    fn east_neighbor_maps_local_z_to_plus_x() {
        let cfg = two_module_config((-1, 0, 0)); // module 1 west of module 0
        let r = rotation_for(&cfg, 0, 1).unwrap();
        let z = r.block() * Vector3::z();
        assert_close(z.x, 1.0, 1e-14);
        assert_close(z.y, 0.0, 1e-14);
        assert_close(z.z, 0.0, 1e-14);
    }

    #[test]
    fn rotation_pair_differs_by_transverse_flip() {
        for b in [(0, 0, 1), (0, 0, -1), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)] {
            let cfg = two_module_config(b);
            let r01 = rotation_for(&cfg, 0, 1).unwrap();
            let r10 = rotation_for(&cfg, 1, 0).unwrap();
            let align = r10.block().transpose() * r01.block();
            // 180° rotation about an axis perpendicular to local z:
            // maps z to -z, orthonormal, det +1, trace -1.
            let z = align * Vector3::z();
            assert_close(z.z, -1.0, 1e-14);
            assert_close(align.determinant(), 1.0, 1e-14);
            assert_close(align.trace(), -1.0, 1e-14);
        }
    }

    #[test]
    fn not_adjacent_is_an_error() {
        let cfg = Configuration::new(
            Params::default(),
            vec![module(0, 0, 0, 0), module(1, 1, 0, 0), module(2, 2, 0, 0)],
            vec![],
            ModuleId(0),
        )
        .unwrap();
        assert_eq!(
            rotation_for(&cfg, 0, 2).unwrap_err(),
            BeamError::NotAdjacent(ModuleId(0), ModuleId(2))
        );
    }

    #[test]
    fn rotated_stiffness_preserves_trace_eigenvalues_and_symmetry() {
        let canon = canonical_stiffness(&Params::default());
        for b in [(1, 0, 0), (0, 1, 0), (0, 0, -1)] {
            let cfg = two_module_config(b);
            let k = rotated_stiffness(&cfg, 0, 1).unwrap();
            assert_close(k.own.trace(), canon.own.trace(), 1e-3);
            assert!((k.own - k.own.transpose()).norm() < 1e-6);
            let mut eig_r: Vec<f64> = k.own.symmetric_eigen().eigenvalues.iter().copied().collect();
            let mut eig_c: Vec<f64> = canon.own.symmetric_eigen().eigenvalues.iter().copied().collect();
            eig_r.sort_by(|a, b| a.partial_cmp(b).unwrap());
            eig_c.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in eig_r.iter().zip(&eig_c) {
                assert_close(*a, *b, 1e-3 * (1.0 + b.abs()));
                assert!(*a > -1e-6); // positive semi-definite
            }
        }
    }

    #[test]
    fn ninety_degree_rotation_swaps_axial_and_transverse_entries() {
        // beam along +y: rotation about x; entry (1,1) of the rotated own
        // block must equal the canonical axial entry (2,2).
        let r = Rotation6::for_axis((0, 1, 0));
        let k = canonical_stiffness(&Params::default());
        let rk = r.conjugate(&k.own);
        assert_close(rk[(1, 1)], k.own[(2, 2)], 1e-6);
    }

    #[test]
    fn residual_at_zero_state_is_minus_load() {
        let load = Wrench6::from_components(0.0, 0.0, -0.599, 0.0, 0.0, 0.0);
        let k = canonical_stiffness(&Params::default());
        let terms = [NeighborTerm {
            far_state: Dof6::zero(),
            own: k.own,
            coupling: k.coupling,
        }];
        let r = equilibrium_residual(&Dof6::zero(), &terms, &load);
        assert_close(r.f_z(), 0.599, 1e-12);
    }

    #[test]
    fn grounded_spring_equilibrium_has_zero_axial_residual() {
        // single grounded module; axial deflection -F/k balances the weight
        let p = Params::default();
        let k = canonical_stiffness(&p);
        let w = crate::model::external_load(&p);
        let u = Dof6::from_components(0.0, 0.0, w.f_z() / p.axial_stiffness(), 0.0, 0.0, 0.0);
        let terms = [NeighborTerm {
            far_state: Dof6::zero(),
            own: k.own,
            coupling: Matrix6::zeros(),
        }];
        let r = equilibrium_residual(&u, &terms, &w);
        assert!(r.f_z().abs() < 1e-9);
    }

    #[test]
    fn residual_vanishes_at_the_direct_solution() {
        let cfg = crate::families::fixed_arm(3).build().unwrap();
        let sol = crate::oracle::assemble_and_solve(&cfg, 1e-4).unwrap();
        let load_scale = crate::model::external_load(cfg.params()).norm();
        for idx in 0..cfg.len() {
            let mut terms: Vec<NeighborTerm> = cfg
                .neighbors(idx)
                .iter()
                .map(|&q| {
                    let blocks = rotated_stiffness(&cfg, idx, q).unwrap();
                    NeighborTerm {
                        far_state: sol.states[q],
                        own: blocks.own,
                        coupling: blocks.coupling,
                    }
                })
                .collect();
            for &facet in cfg.ground_facets_of(idx) {
                terms.push(NeighborTerm {
                    far_state: Dof6::zero(),
                    own: crate::contact::contact_tangent(&sol.states[idx], facet, cfg.params(), 1e-4),
                    coupling: Matrix6::zeros(),
                });
            }
            let r = equilibrium_residual(&sol.states[idx], &terms, &cfg.external_load(idx));
            assert!(
                r.norm() < 1e-6 * load_scale,
                "module {idx}: residual {}",
                r.norm()
            );
        }
    }

    #[test]
    fn rigid_translation_and_rotation_produce_no_force() {
        let p = Params::default();
        let k = canonical_stiffness(&p);
        let l = p.edge_length;
        // uniform translation
        let t = Vector6::new(1e-6, 2e-6, -1e-6, 0.0, 0.0, 0.0);
        let f = k.own * t + k.coupling * t;
        assert!(f.norm() < 1e-9);
        // rigid rotation about the far node (y axis): near node moves by θ·L in x
        let theta = 1e-6;
        let near = Vector6::new(theta * l, 0.0, 0.0, 0.0, theta, 0.0);
        let far = Vector6::new(0.0, 0.0, 0.0, 0.0, theta, 0.0);
        let f = k.own * near + k.coupling * far;
        assert!(f.norm() < 1e-9, "rigid rotation force {}", f.norm());
    }

    #[test]
    fn mirrored_blocks_keep_global_assembly_symmetric() {
        // own/coupling blocks seen from either end must satisfy
        // coupling_ba = coupling_abᵀ so the assembled matrix is symmetric.
        for b in [(0, 0, -1), (1, 0, 0), (0, -1, 0)] {
            let cfg = two_module_config(b);
            let ab = rotated_stiffness(&cfg, 0, 1).unwrap();
            let ba = rotated_stiffness(&cfg, 1, 0).unwrap();
            assert!((ba.coupling - ab.coupling.transpose()).norm() < 1e-6);
        }
    }

    #[test]
    fn virtual_modules_get_beams_too() {
        let cfg = Configuration::new(
            Params::default(),
            vec![
                module(0, 0, 0, 0),
                Module {
                    id: ModuleId(1),
                    pos: crate::model::GridPos::new(0, 0, 1),
                    kind: ModuleKind::Virtual,
                },
            ],
            vec![GroundFacet {
                module: ModuleId(0),
                dir: crate::model::FacetDir::MinusZ,
            }],
            ModuleId(0),
        )
        .unwrap();
        assert!(rotated_stiffness(&cfg, 1, 0).is_ok());
    }
}
