//! Lattice, module identities, connection topology and physical parameters.
//!
//! Modules are unit cubes on a Cartesian grid. Each module is reduced to a
//! single node with six degrees of freedom (three displacements, three
//! rotations) at its center; adjacent modules (face-sharing cells) are joined
//! by an elastic beam between their nodes. A module resting on an external
//! flat support carries a declared ground facet; the support is modeled by a
//! beam to an immobile mirror node one lattice step past that face.

use nalgebra::{Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Physical and geometric parameters of one module, in SI units.
///
/// Defaults describe a 40 mm cube block: `E` = 100 MPa, square cross-section
/// `A = L²`, bending inertia `I = L⁴/12`, scaled torsion constant
/// `2.25·L⁴/41.6`, mass 61.06 g, and the two connector strengths (vertical
/// stud+magnet vs. lateral corner magnets).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Elastic modulus (Pa).
    pub elastic_modulus: f64,
    /// Beam length = lattice pitch = module edge (m).
    pub edge_length: f64,
    /// Beam cross-sectional area (m²).
    pub cross_area: f64,
    /// Second moment of area, x bending (m⁴).
    pub inertia_x: f64,
    /// Second moment of area, y bending (m⁴).
    pub inertia_y: f64,
    /// Scaled torsion constant about the beam axis (m⁴).
    pub torsion_scaled: f64,
    /// Module mass (kg).
    pub mass: f64,
    /// Breaking strength of a vertical (stacked) connection (N).
    pub strength_vertical: f64,
    /// Breaking strength of a lateral (side) connection (N).
    pub strength_lateral: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
}

impl Default for Params {
    fn default() -> Self {
        let l: f64 = 0.04;
        Params {
            elastic_modulus: 100e6,
            edge_length: l,
            cross_area: l * l,
            inertia_x: l.powi(4) / 12.0,
            inertia_y: l.powi(4) / 12.0,
            torsion_scaled: 2.25 * l.powi(4) / 41.6,
            mass: 0.06106,
            strength_vertical: 11.98,
            strength_lateral: 14.97,
            gravity: 9.81,
        }
    }
}

impl Params {
    /// Axial beam stiffness `E·A/L` (N/m).
    pub fn axial_stiffness(&self) -> f64 {
        self.elastic_modulus * self.cross_area / self.edge_length
    }

    /// All fields strictly positive, except gravity which may be zero.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("elastic_modulus", self.elastic_modulus),
            ("edge_length", self.edge_length),
            ("cross_area", self.cross_area),
            ("inertia_x", self.inertia_x),
            ("inertia_y", self.inertia_y),
            ("torsion_scaled", self.torsion_scaled),
            ("mass", self.mass),
            ("strength_vertical", self.strength_vertical),
            ("strength_lateral", self.strength_lateral),
        ];
        for (name, v) in fields {
            if v <= 0.0 || !v.is_finite() {
                return Err(ConfigError::BadParameter {
                    field: name,
                    value: v,
                });
            }
        }
        if self.gravity < 0.0 || !self.gravity.is_finite() {
            return Err(ConfigError::BadParameter {
                field: "gravity",
                value: self.gravity,
            });
        }
        Ok(())
    }
}

/// Opaque module identifier, unique within a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModuleId(pub u32);

impl fmt::Display for ModuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Integer lattice cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPos {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl GridPos {
    pub fn new(x: i32, y: i32, z: i32) -> Self {
        GridPos { x, y, z }
    }

    /// True if the two cells share a face.
    pub fn is_adjacent(&self, other: &GridPos) -> bool {
        let dx = (self.x - other.x).abs();
        let dy = (self.y - other.y).abs();
        let dz = (self.z - other.z).abs();
        dx + dy + dz == 1
    }

    /// Center of the cell in world coordinates, cell edge `L`.
    pub fn center(&self, edge_length: f64) -> Vector3<f64> {
        Vector3::new(
            (self.x as f64 + 0.5) * edge_length,
            (self.y as f64 + 0.5) * edge_length,
            (self.z as f64 + 0.5) * edge_length,
        )
    }
}

/// One of the six facet directions of a cubic module (outward face normal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FacetDir {
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
    #[serde(rename = "+z")]
    PlusZ,
    #[serde(rename = "-z")]
    MinusZ,
}

impl FacetDir {
    pub const ALL: [FacetDir; 6] = [
        FacetDir::PlusX,
        FacetDir::MinusX,
        FacetDir::PlusY,
        FacetDir::MinusY,
        FacetDir::PlusZ,
        FacetDir::MinusZ,
    ];

    /// Outward unit normal in integer lattice steps.
    pub fn step(&self) -> (i32, i32, i32) {
        match self {
            FacetDir::PlusX => (1, 0, 0),
            FacetDir::MinusX => (-1, 0, 0),
            FacetDir::PlusY => (0, 1, 0),
            FacetDir::MinusY => (0, -1, 0),
            FacetDir::PlusZ => (0, 0, 1),
            FacetDir::MinusZ => (0, 0, -1),
        }
    }

    /// Outward unit normal as a real vector.
    pub fn unit(&self) -> Vector3<f64> {
        let (x, y, z) = self.step();
        Vector3::new(x as f64, y as f64, z as f64)
    }

    /// The opposite facet.
    pub fn opposite(&self) -> FacetDir {
        match self {
            FacetDir::PlusX => FacetDir::MinusX,
            FacetDir::MinusX => FacetDir::PlusX,
            FacetDir::PlusY => FacetDir::MinusY,
            FacetDir::MinusY => FacetDir::PlusY,
            FacetDir::PlusZ => FacetDir::MinusZ,
            FacetDir::MinusZ => FacetDir::PlusZ,
        }
    }
}

impl fmt::Display for FacetDir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FacetDir::PlusX => "+x",
            FacetDir::MinusX => "-x",
            FacetDir::PlusY => "+y",
            FacetDir::MinusY => "-y",
            FacetDir::PlusZ => "+z",
            FacetDir::MinusZ => "-z",
        };
        f.write_str(s)
    }
}

/// Whether a module physically exists or is only planned for attachment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModuleKind {
    Real,
    Virtual,
}

/// Six-component kinematic state of one module node:
/// `(u_x, u_y, u_z, τ_x, τ_y, τ_z)` — displacements in m, rotations in rad.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dof6(pub Vector6<f64>);

/// Six-component force/torque vector conjugate to [`Dof6`]:
/// `(f_x, f_y, f_z, m_x, m_y, m_z)` — forces in N, torques in N·m.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench6(pub Vector6<f64>);

macro_rules! six_vector_impl {
    ($ty:ident, $c0:ident, $c1:ident, $c2:ident, $c3:ident, $c4:ident, $c5:ident) => {
        impl $ty {
            pub fn zero() -> Self {
                $ty(Vector6::zeros())
            }

            pub fn from_components(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Self {
                $ty(Vector6::new(a, b, c, d, e, f))
            }

            pub fn $c0(&self) -> f64 {
                self.0[0]
            }
            pub fn $c1(&self) -> f64 {
                self.0[1]
            }
            pub fn $c2(&self) -> f64 {
                self.0[2]
            }
            pub fn $c3(&self) -> f64 {
                self.0[3]
            }
            pub fn $c4(&self) -> f64 {
                self.0[4]
            }
            pub fn $c5(&self) -> f64 {
                self.0[5]
            }

            pub fn norm(&self) -> f64 {
                self.0.norm()
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }
        }

        impl From<Vector6<f64>> for $ty {
            fn from(v: Vector6<f64>) -> Self {
                $ty(v)
            }
        }

        impl std::ops::Add for $ty {
            type Output = $ty;
            fn add(self, rhs: $ty) -> $ty {
                $ty(self.0 + rhs.0)
            }
        }

        impl std::ops::Sub for $ty {
            type Output = $ty;
            fn sub(self, rhs: $ty) -> $ty {
                $ty(self.0 - rhs.0)
            }
        }

        impl std::ops::Neg for $ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                $ty(-self.0)
            }
        }

        impl std::ops::Mul<f64> for $ty {
            type Output = $ty;
            fn mul(self, s: f64) -> $ty {
                $ty(self.0 * s)
            }
        }
    };
}

six_vector_impl!(Dof6, u_x, u_y, u_z, tau_x, tau_y, tau_z);
six_vector_impl!(Wrench6, f_x, f_y, f_z, m_x, m_y, m_z);

/// One module entry of a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Module {
    pub id: ModuleId,
    pub pos: GridPos,
    pub kind: ModuleKind,
}

/// A ground facet: `module`'s face in direction `dir` rests on a flat
/// external support co-planar with that face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroundFacet {
    pub module: ModuleId,
    pub dir: FacetDir,
}

/// Validated lattice placement of real and virtual modules, the declared
/// ground facets, the centroid, and the face-sharing connection graph.
///
/// Immutable after construction; shared read-only by every module process.
#[derive(Debug, Clone)]
pub struct Configuration {
    params: Params,
    /// Sorted by id; `ModuleIdx` is a position in this vector.
    modules: Vec<Module>,
    id_to_idx: HashMap<ModuleId, usize>,
    /// Per module, sorted by neighbor id.
    neighbors: Vec<Vec<usize>>,
    /// Face-sharing pairs with `idx_a < idx_b`, sorted.
    connections: Vec<(usize, usize)>,
    /// Per module, sorted by direction.
    ground_facets: Vec<Vec<FacetDir>>,
    centroid: usize,
}

impl Configuration {
    /// Assembles and validates a configuration. `modules` entries need not be
    /// sorted. See [`ConfigError`] for the rejection cases.
    pub fn new(
        params: Params,
        mut modules: Vec<Module>,
        facets: Vec<GroundFacet>,
        centroid: ModuleId,
    ) -> Result<Self, ConfigError> {
        params.validate()?;
        if modules.is_empty() {
            return Err(ConfigError::EmptyConfiguration);
        }
        modules.sort_by_key(|m| m.id);

        let mut id_to_idx = HashMap::with_capacity(modules.len());
        let mut by_pos: HashMap<GridPos, usize> = HashMap::with_capacity(modules.len());
        for (idx, m) in modules.iter().enumerate() {
            if id_to_idx.insert(m.id, idx).is_some() {
                return Err(ConfigError::DuplicateId(m.id));
            }
            if let Some(&other) = by_pos.get(&m.pos) {
                return Err(ConfigError::DuplicatePosition {
                    a: modules[other].id,
                    b: m.id,
                    pos: m.pos,
                });
            }
            by_pos.insert(m.pos, idx);
        }

        // Adjacency from face-sharing cells.
        let n = modules.len();
        let mut neighbors = vec![Vec::new(); n];
        let mut connections = Vec::new();
        for (idx, m) in modules.iter().enumerate() {
            for dir in FacetDir::ALL {
                let (dx, dy, dz) = dir.step();
                let cell = GridPos::new(m.pos.x + dx, m.pos.y + dy, m.pos.z + dz);
                if let Some(&other) = by_pos.get(&cell) {
                    neighbors[idx].push(other);
                    if idx < other {
                        connections.push((idx, other));
                    }
                }
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        connections.sort_unstable();

        // Ground facets: must reference a known module, be unique, face an
        // empty cell, and -z facets must lie on the floor plane z = 0.
        let mut ground_facets = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::new();
        for f in &facets {
            let &idx = id_to_idx
                .get(&f.module)
                .ok_or(ConfigError::BadGroundFacet {
                    module: f.module,
                    dir: f.dir,
                    reason: "unknown module id",
                })?;
            if !seen.insert((f.module, f.dir)) {
                return Err(ConfigError::BadGroundFacet {
                    module: f.module,
                    dir: f.dir,
                    reason: "duplicate facet",
                });
            }
            let m = &modules[idx];
            let (dx, dy, dz) = f.dir.step();
            let facing = GridPos::new(m.pos.x + dx, m.pos.y + dy, m.pos.z + dz);
            if by_pos.contains_key(&facing) {
                return Err(ConfigError::BadGroundFacet {
                    module: f.module,
                    dir: f.dir,
                    reason: "face is shared with another module, not an external support",
                });
            }
            if f.dir == FacetDir::MinusZ && m.pos.z != 0 {
                return Err(ConfigError::BadGroundFacet {
                    module: f.module,
                    dir: f.dir,
                    reason: "bottom facets must rest on the floor plane z=0",
                });
            }
            ground_facets[idx].push(f.dir);
        }
        for list in &mut ground_facets {
            list.sort_unstable();
        }

        let &centroid_idx = id_to_idx
            .get(&centroid)
            .ok_or(ConfigError::UnknownCentroid(centroid))?;
        if modules[centroid_idx].kind != ModuleKind::Real {
            return Err(ConfigError::VirtualCentroid(centroid));
        }

        // Real connection graph must be connected.
        let real_count = modules.iter().filter(|m| m.kind == ModuleKind::Real).count();
        if real_count == 0 {
            return Err(ConfigError::EmptyConfiguration);
        }
        let mut visited = vec![false; n];
        let mut stack = vec![centroid_idx];
        visited[centroid_idx] = true;
        let mut reached = 0usize;
        while let Some(i) = stack.pop() {
            reached += 1;
            for &j in &neighbors[i] {
                if modules[j].kind == ModuleKind::Real && !visited[j] {
                    visited[j] = true;
                    stack.push(j);
                }
            }
        }
        if reached != real_count {
            return Err(ConfigError::DisconnectedStructure {
                reached,
                total: real_count,
            });
        }

        // Every virtual module needs a real neighbor to emulate it.
        for (idx, m) in modules.iter().enumerate() {
            if m.kind == ModuleKind::Virtual
                && !neighbors[idx]
                    .iter()
                    .any(|&j| modules[j].kind == ModuleKind::Real)
            {
                return Err(ConfigError::OrphanVirtualModule(m.id));
            }
        }

        Ok(Configuration {
            params,
            modules,
            id_to_idx,
            neighbors,
            connections,
            ground_facets,
            centroid: centroid_idx,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Number of modules, real and virtual.
    pub fn len(&self) -> usize {
        self.modules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }

    pub fn real_count(&self) -> usize {
        self.modules
            .iter()
            .filter(|m| m.kind == ModuleKind::Real)
            .count()
    }

    pub fn modules(&self) -> &[Module] {
        &self.modules
    }

    pub fn module(&self, idx: usize) -> &Module {
        &self.modules[idx]
    }

    pub fn index_of(&self, id: ModuleId) -> Option<usize> {
        self.id_to_idx.get(&id).copied()
    }

    /// Neighbor indices of `idx`, sorted by id.
    pub fn neighbors(&self, idx: usize) -> &[usize] {
        &self.neighbors[idx]
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// All face-sharing pairs, `(low_idx, high_idx)` sorted.
    pub fn connections(&self) -> &[(usize, usize)] {
        &self.connections
    }

    pub fn ground_facets_of(&self, idx: usize) -> &[FacetDir] {
        &self.ground_facets[idx]
    }

    /// All (module index, facet) supports, in deterministic order.
    pub fn ground_facets(&self) -> impl Iterator<Item = (usize, FacetDir)> + '_ {
        self.ground_facets
            .iter()
            .enumerate()
            .flat_map(|(idx, dirs)| dirs.iter().map(move |&d| (idx, d)))
    }

    pub fn centroid(&self) -> usize {
        self.centroid
    }

    /// World position of a module's node (cell center).
    pub fn position(&self, idx: usize) -> Vector3<f64> {
        self.modules[idx].pos.center(self.params.edge_length)
    }

    /// Sum of the degrees of all modules (twice the connection count).
    pub fn degree_sum(&self) -> usize {
        self.neighbors.iter().map(|n| n.len()).sum()
    }

    /// Gravity load on one module: `(0, 0, -g·M, 0, 0, 0)`.
    pub fn external_load(&self, _idx: usize) -> Wrench6 {
        external_load(&self.params)
    }

    /// Gravity load looked up by public id.
    pub fn external_load_of(&self, id: ModuleId) -> Result<Wrench6, ConfigError> {
        self.index_of(id)
            .map(|idx| self.external_load(idx))
            .ok_or(ConfigError::UnknownModule(id))
    }
}

/// Gravity load wrench for a module with the given parameters.
pub fn external_load(params: &Params) -> Wrench6 {
    Wrench6::from_components(0.0, 0.0, -params.gravity * params.mass, 0.0, 0.0, 0.0)
}

/// Configuration construction and validation failures.
#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("parameter {field} must be positive and finite, got {value}")]
    BadParameter { field: &'static str, value: f64 },
    #[error("configuration has no modules")]
    EmptyConfiguration,
    #[error("duplicate module id {0}")]
    DuplicateId(ModuleId),
    #[error("modules {a} and {b} occupy the same cell ({},{},{})", pos.x, pos.y, pos.z)]
    DuplicatePosition { a: ModuleId, b: ModuleId, pos: GridPos },
    #[error("real connection graph is disconnected: reached {reached} of {total} modules")]
    DisconnectedStructure { reached: usize, total: usize },
    #[error("virtual module {0} has no real neighbor to emulate it")]
    OrphanVirtualModule(ModuleId),
    #[error("bad ground facet ({module}, {dir}): {reason}")]
    BadGroundFacet {
        module: ModuleId,
        dir: FacetDir,
        reason: &'static str,
    },
    #[error("centroid {0} is not a module of the configuration")]
    UnknownCentroid(ModuleId),
    #[error("centroid {0} must be a real module")]
    VirtualCentroid(ModuleId),
    #[error("unknown module {0}")]
    UnknownModule(ModuleId),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{grounded_row, module, vmodule};

    #[test]
    fn defaults_match_block_datasheet() {
        let p = Params::default();
        assert_eq!(p.elastic_modulus, 100e6);
        assert_eq!(p.edge_length, 0.04);
        assert_eq!(p.cross_area, 0.0016);
        assert!((p.inertia_x - 0.04f64.powi(4) / 12.0).abs() < 1e-20);
        assert!((p.torsion_scaled - 2.25 * 0.04f64.powi(4) / 41.6).abs() < 1e-20);
        assert_eq!(p.mass, 0.06106);
        assert_eq!(p.strength_vertical, 11.98);
        assert_eq!(p.strength_lateral, 14.97);
        assert!((p.axial_stiffness() - 4.0e6).abs() < 1e-6);
    }

    #[test]
    fn external_load_is_weight_only() {
        let w = external_load(&Params::default());
        assert!((w.f_z() + 0.59900).abs() < 1e-5);
        assert_eq!(w.f_x(), 0.0);
        assert_eq!(w.m_y(), 0.0);

        let p = Params {
            gravity: 0.0,
            ..Params::default()
        };
        assert_eq!(external_load(&p), Wrench6::zero());

        let p2 = Params {
            mass: 2.0 * Params::default().mass,
            ..Params::default()
        };
        assert!((external_load(&p2).f_z() - 2.0 * w.f_z()).abs() < 1e-12);
    }

    #[test]
    fn single_module_configuration() {
        let cfg = Configuration::new(
            Params::default(),
            vec![module(0, 0, 0, 0)],
            vec![GroundFacet {
                module: ModuleId(0),
                dir: FacetDir::MinusZ,
            }],
            ModuleId(0),
        )
        .unwrap();
        assert_eq!(cfg.len(), 1);
        assert_eq!(cfg.connections().len(), 0);
        assert_eq!(cfg.ground_facets_of(0), &[FacetDir::MinusZ]);
    }

    #[test]
    fn stacked_and_side_by_side_adjacency() {
        let stacked = Configuration::new(
            Params::default(),
            vec![module(0, 0, 0, 0), module(1, 0, 0, 1)],
            vec![],
            ModuleId(0),
        )
        .unwrap();
        assert_eq!(stacked.connections(), &[(0, 1)]);

        let lateral = Configuration::new(
            Params::default(),
            vec![module(0, 0, 0, 0), module(1, 1, 0, 0)],
            vec![],
            ModuleId(0),
        )
        .unwrap();
        assert_eq!(lateral.connections(), &[(0, 1)]);
    }

    #[test]
    fn fixed_arm_is_a_chain_with_grounded_end() {
        let cfg = crate::families::fixed_arm(10).build().unwrap();
        assert_eq!(cfg.len(), 10);
        assert_eq!(cfg.connections().len(), 9);
        // chain: two endpoints of degree 1, rest degree 2
        let deg1 = (0..10).filter(|&i| cfg.neighbors(i).len() == 1).count();
        assert_eq!(deg1, 2);
        let grounded: Vec<_> = cfg.ground_facets().collect();
        assert_eq!(grounded.len(), 1);
        assert_eq!(grounded[0].1, FacetDir::MinusZ);
        assert_eq!(cfg.neighbors(grounded[0].0).len(), 1);
    }

    #[test]
    fn rejects_duplicate_position() {
        let err = Configuration::new(
            Params::default(),
            vec![module(0, 0, 0, 0), module(1, 0, 0, 0)],
            vec![],
            ModuleId(0),
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::DuplicatePosition { .. }));
    }

    #[test]
    fn rejects_disconnected_real_graph() {
        let err = Configuration::new(
            Params::default(),
            vec![module(0, 0, 0, 0), module(1, 5, 0, 0)],
            vec![],
            ModuleId(0),
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::DisconnectedStructure { .. }));
    }

    #[test]
    fn rejects_orphan_virtual() {
        let err = Configuration::new(
            Params::default(),
            vec![module(0, 0, 0, 0), vmodule(1, 3, 0, 0)],
            vec![],
            ModuleId(0),
        )
        .unwrap_err();
        assert_eq!(err, ConfigError::OrphanVirtualModule(ModuleId(1)));
    }

    #[test]
    fn rejects_bad_ground_facets() {
        // facet toward an occupied cell
        let err = Configuration::new(
            Params::default(),
            vec![module(0, 0, 0, 0), module(1, 0, 0, 1)],
            vec![GroundFacet {
                module: ModuleId(0),
                dir: FacetDir::PlusZ,
            }],
            ModuleId(0),
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::BadGroundFacet { .. }));

        // bottom facet off the floor plane
        let err = Configuration::new(
            Params::default(),
            vec![module(0, 0, 0, 0), module(1, 0, 0, 1)],
            vec![GroundFacet {
                module: ModuleId(1),
                dir: FacetDir::MinusZ,
            }],
            ModuleId(0),
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::BadGroundFacet { .. }));
    }

    #[test]
    fn adjacency_is_symmetric_and_counts_match_bruteforce() {
        let cfg = grounded_row(8);
        for i in 0..cfg.len() {
            for &j in cfg.neighbors(i) {
                assert!(cfg.neighbors(j).contains(&i));
            }
        }
        let mut brute = 0;
        for i in 0..cfg.len() {
            for j in (i + 1)..cfg.len() {
                if cfg.module(i).pos.is_adjacent(&cfg.module(j).pos) {
                    brute += 1;
                }
            }
        }
        assert_eq!(brute, cfg.connections().len());
    }

    mod blobs {
        use super::*;
        use proptest::prelude::*;

        /// Random connected blob grown cell by cell from the origin.
        fn blob(steps: Vec<u8>) -> Configuration {
            let mut cells = vec![GridPos::new(0, 0, 0)];
            for s in steps {
                let from = cells[(s as usize / 6) % cells.len()];
                let (dx, dy, dz) = FacetDir::ALL[s as usize % 6].step();
                let cell = GridPos::new(from.x + dx, from.y + dy, from.z + dz);
                if !cells.contains(&cell) {
                    cells.push(cell);
                }
            }
            let modules = cells
                .iter()
                .enumerate()
                .map(|(i, &pos)| Module {
                    id: ModuleId(i as u32),
                    pos,
                    kind: ModuleKind::Real,
                })
                .collect();
            Configuration::new(Params::default(), modules, vec![], ModuleId(0)).unwrap()
        }

        proptest! {
            #[test]
            fn connection_count_matches_pairwise_bruteforce(
                steps in proptest::collection::vec(0u8..=255, 0..99)
            ) {
                let cfg = blob(steps);
                prop_assert!(cfg.len() <= 100);
                let mut brute = 0;
                for i in 0..cfg.len() {
                    for j in (i + 1)..cfg.len() {
                        if cfg.module(i).pos.is_adjacent(&cfg.module(j).pos) {
                            brute += 1;
                        }
                    }
                }
                prop_assert_eq!(brute, cfg.connections().len());
                for i in 0..cfg.len() {
                    for &j in cfg.neighbors(i) {
                        prop_assert!(cfg.neighbors(j).contains(&i));
                    }
                }
            }
        }
    }
}
