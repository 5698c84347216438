//! Scenario documents: the on-disk description of a configuration plus
//! solver settings and check selection.
//!
//! The format is TOML. Unknown keys are rejected. Schema:
//!
//! ```toml
//! [params]                  # optional; omitted fields take the block defaults
//! elastic_modulus = 100e6   # Pa
//! edge_length = 0.04        # m
//! # cross_area, inertia_x, inertia_y, torsion_scaled (m²/m⁴),
//! # mass (kg), strength_vertical, strength_lateral (N), gravity (m/s²)
//!
//! modules = [ { id = 0, x = 0, y = 0, z = 0 } ]
//! virtual_modules = [ { id = 9, x = 1, y = 0, z = 0 } ]   # optional
//! ground_facets = [ { id = 0, facet = "-z" } ]            # optional
//! centroid = 0
//!
//! [solver]
//! max_iterations = 2000
//! beta = 0.6666666666666666   # optional, default 2/3
//! gamma = 1e-4                # optional, default 1e-4
//! tolerance = 1e-9            # optional; enables early stop at residual
//!                             # checkpoints (extension; off when absent)
//!
//! [check]                     # optional
//! simplified_stability = true # default false
//! ```
//!
//! Facet strings are `"+x" "-x" "+y" "-y" "+z" "-z"` (outward face normal).
//! Bottom (`-z`) facets must rest on the floor plane `z = 0`; the other
//! directions declare a flat support co-planar with that face. All values are
//! SI once parsed.

use crate::model::{
    ConfigError, Configuration, FacetDir, GridPos, GroundFacet, Module, ModuleId, ModuleKind,
    Params,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleEntry {
    pub id: u32,
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacetEntry {
    pub id: u32,
    pub facet: FacetDir,
}

fn default_beta() -> f64 {
    2.0 / 3.0
}

fn default_gamma() -> f64 {
    crate::contact::DEFAULT_GAMMA
}

/// Solver section of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iterations: u32,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            max_iterations: 2000,
            beta: default_beta(),
            gamma: default_gamma(),
            tolerance: None,
        }
    }
}

/// Check selection section.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    #[serde(default)]
    pub simplified_stability: bool,
}

/// Parsed scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Params>,
    pub modules: Vec<ModuleEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub virtual_modules: Vec<ModuleEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ground_facets: Vec<FacetEntry>,
    pub centroid: u32,
    pub solver: SolverSpec,
    #[serde(default)]
    pub check: CheckSpec,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver.max_iterations must be at least 1")]
    BadIterationBudget,
    #[error("solver.beta must be in (0, 1], got {0}")]
    BadBeta(f64),
    #[error("solver.gamma must be in (0, 1), got {0}")]
    BadGamma(f64),
}

impl ScenarioDoc {
    /// Parses a TOML scenario. Errors carry line/column positions.
    pub fn parse(text: &str) -> Result<ScenarioDoc, ScenarioError> {
        let doc: ScenarioDoc = toml::from_str(text)?;
        doc.validate_solver()?;
        Ok(doc)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialization cannot fail")
    }

    pub fn validate_solver(&self) -> Result<(), ScenarioError> {
        if self.solver.max_iterations < 1 {
            return Err(ScenarioError::BadIterationBudget);
        }
        if !(self.solver.beta > 0.0 && self.solver.beta <= 1.0) {
            return Err(ScenarioError::BadBeta(self.solver.beta));
        }
        if !(self.solver.gamma > 0.0 && self.solver.gamma < 1.0) {
            return Err(ScenarioError::BadGamma(self.solver.gamma));
        }
        Ok(())
    }

    pub fn params(&self) -> Params {
        self.params.unwrap_or_default()
    }
}

/// Builds and validates the configuration described by a scenario document.
pub fn build_configuration(doc: &ScenarioDoc) -> Result<Configuration, ScenarioError> {
    doc.validate_solver()?;
    let mut modules = Vec::with_capacity(doc.modules.len() + doc.virtual_modules.len());
    for e in &doc.modules {
        modules.push(Module {
            id: ModuleId(e.id),
            pos: GridPos::new(e.x, e.y, e.z),
            kind: ModuleKind::Real,
        });
    }
    for e in &doc.virtual_modules {
        modules.push(Module {
            id: ModuleId(e.id),
            pos: GridPos::new(e.x, e.y, e.z),
            kind: ModuleKind::Virtual,
        });
    }
    let facets = doc
        .ground_facets
        .iter()
        .map(|f| GroundFacet {
            module: ModuleId(f.id),
            dir: f.facet,
        })
        .collect();
    Ok(Configuration::new(
        doc.params(),
        modules,
        facets,
        ModuleId(doc.centroid),
    )?)
}

/// Re-emits a configuration as a scenario document (inverse of
/// [`build_configuration`] up to entry ordering, which is normalized by id).
pub fn scenario_from_configuration(
    config: &Configuration,
    solver: SolverSpec,
    check: CheckSpec,
) -> ScenarioDoc {
    let mut modules = Vec::new();
    let mut virtual_modules = Vec::new();
    for m in config.modules() {
        let entry = ModuleEntry {
            id: m.id.0,
            x: m.pos.x,
            y: m.pos.y,
            z: m.pos.z,
        };
        match m.kind {
            ModuleKind::Real => modules.push(entry),
            ModuleKind::Virtual => virtual_modules.push(entry),
        }
    }
    let ground_facets = config
        .ground_facets()
        .map(|(idx, facet)| FacetEntry {
            id: config.module(idx).id.0,
            facet,
        })
        .collect();
    ScenarioDoc {
        params: Some(*config.params()),
        modules,
        virtual_modules,
        ground_facets,
        centroid: config.module(config.centroid()).id.0,
        solver,
        check,
    }
}
