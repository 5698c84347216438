//! Parametric scenario families used by the scaling study, the examples and
//! the test suite.

use crate::model::Params;
use crate::scenario::{
    build_configuration, CheckSpec, ModuleEntry, ScenarioDoc, ScenarioError, SolverSpec,
};
use crate::model::Configuration;

/// A named, buildable scenario.
#[derive(Debug, Clone)]
pub struct Family {
    name: String,
    doc: ScenarioDoc,
}

impl Family {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn doc(&self) -> &ScenarioDoc {
        &self.doc
    }

    pub fn params(mut self, params: Params) -> Self {
        self.doc.params = Some(params);
        self
    }

    pub fn solver(mut self, solver: SolverSpec) -> Self {
        self.doc.solver = solver;
        self
    }

    pub fn iterations(mut self, n: u32) -> Self {
        self.doc.solver.max_iterations = n;
        self
    }

    pub fn simplified_stability(mut self, on: bool) -> Self {
        self.doc.check.simplified_stability = on;
        self
    }

    /// Moves the listed module ids from the real to the planned (virtual) set.
    pub fn virtual_ids(mut self, ids: &[u32]) -> Self {
        let (virt, real): (Vec<_>, Vec<_>) = self
            .doc
            .modules
            .iter()
            .copied()
            .partition(|m| ids.contains(&m.id));
        self.doc.modules = real;
        self.doc.virtual_modules.extend(virt);
        self
    }

    pub fn build(&self) -> Result<Configuration, ScenarioError> {
        build_configuration(&self.doc)
    }
}

fn family(name: impl Into<String>, doc: ScenarioDoc) -> Family {
    Family {
        name: name.into(),
        doc,
    }
}

/// Scenario over explicit cells. `grounded` and `virtuals` index into `cells`;
/// grounded cells get a bottom facet.
pub fn custom(
    name: &str,
    cells: &[(i32, i32, i32)],
    grounded: &[usize],
    virtuals: &[usize],
    centroid: usize,
) -> Family {
    let entries: Vec<ModuleEntry> = cells
        .iter()
        .enumerate()
        .map(|(i, &(x, y, z))| ModuleEntry {
            id: i as u32,
            x,
            y,
            z,
        })
        .collect();
    let doc = ScenarioDoc {
        params: None,
        modules: entries
            .iter()
            .copied()
            .filter(|e| !virtuals.contains(&(e.id as usize)))
            .collect(),
        virtual_modules: entries
            .iter()
            .copied()
            .filter(|e| virtuals.contains(&(e.id as usize)))
            .collect(),
        ground_facets: grounded
            .iter()
            .map(|&i| crate::scenario::FacetEntry {
                id: i as u32,
                facet: crate::model::FacetDir::MinusZ,
            })
            .collect(),
        centroid: centroid as u32,
        solver: SolverSpec::default(),
        check: CheckSpec::default(),
    };
    family(name, doc)
}

/// One module resting on the floor.
pub fn single_grounded() -> Family {
    custom("single", &[(0, 0, 0)], &[0], &[], 0)
}

/// Vertical column of `n` modules; only the bottom end touches the floor.
/// The classic chain-with-one-grounded-end used for the iteration-scaling
/// study ("size" is the module count).
pub fn fixed_arm(n: usize) -> Family {
    assert!(n >= 1);
    let cells: Vec<_> = (0..n as i32).map(|k| (0, 0, k)).collect();
    custom(&format!("fixed-arm-{n}"), &cells, &[0], &[], n / 2)
}

/// Horizontal row of `n` modules, every one resting on the floor.
pub fn chain(n: usize) -> Family {
    assert!(n >= 1);
    let cells: Vec<_> = (0..n as i32).map(|k| (k, 0, 0)).collect();
    let grounded: Vec<_> = (0..n).collect();
    custom(&format!("chain-{n}"), &cells, &grounded, &[], n / 2)
}

/// `n`×`n` single-layer slab, fully supported.
pub fn slab(n: usize) -> Family {
    assert!(n >= 1);
    let mut cells = Vec::new();
    for x in 0..n as i32 {
        for y in 0..n as i32 {
            cells.push((x, y, 0));
        }
    }
    let grounded: Vec<_> = (0..cells.len()).collect();
    let centroid = (n / 2) * n + n / 2;
    custom(&format!("slab-{n}"), &cells, &grounded, &[], centroid)
}

/// Row of `grounded` supported modules ending at x = 0, with `overhang`
/// modules continuing past the edge of the support plane. The cantilever's
/// root connection is (x=0, x=1).
pub fn table_edge_overhang(grounded: usize, overhang: usize) -> Family {
    assert!(grounded >= 1);
    let mut cells = Vec::new();
    for i in 0..grounded as i32 {
        cells.push((i - (grounded as i32 - 1), 0, 0));
    }
    for i in 1..=overhang as i32 {
        cells.push((i, 0, 0));
    }
    let grounded_idx: Vec<_> = (0..grounded).collect();
    custom(
        &format!("overhang-{grounded}g-{overhang}"),
        &cells,
        &grounded_idx,
        &[],
        grounded - 1,
    )
}

/// Column of `column` stacked modules on a single supported base, with
/// `overhang` modules extending sideways from the top. Tips over once the
/// combined center of mass passes the base facet edge.
pub fn tipping_tower(column: usize, overhang: usize) -> Family {
    assert!(column >= 1);
    let mut cells = Vec::new();
    for k in 0..column as i32 {
        cells.push((0, 0, k));
    }
    for i in 1..=overhang as i32 {
        cells.push((i, 0, column as i32 - 1));
    }
    custom(
        &format!("tower-{column}c-{overhang}o"),
        &cells,
        &[0],
        &[],
        0,
    )
}

/// Four modules whose center of mass lands exactly over the support facet
/// edge: the marginal boundary case.
pub fn marginal_ledge() -> Family {
    custom(
        "marginal-ledge",
        &[(0, 0, 0), (0, 0, 1), (1, 0, 1), (1, 0, 2)],
        &[0],
        &[],
        0,
    )
}

/// Staircase of `steps` runs, each `run` long, climbing one level per run
/// with runs overlapping by one cell; bottom run supported. A 3D mix of
/// vertical and lateral connections.
pub fn staircase(steps: usize, run: usize) -> Family {
    assert!(steps >= 1 && run >= 2);
    let mut cells = Vec::new();
    let mut grounded = Vec::new();
    for s in 0..steps as i32 {
        for r in 0..run as i32 {
            let x = s * (run as i32 - 1) + r;
            cells.push((x, 0, s));
            if s == 0 {
                grounded.push(cells.len() - 1);
            }
        }
    }
    custom(
        &format!("staircase-{steps}x{run}"),
        &cells,
        &grounded,
        &[],
        0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builders_produce_valid_configurations() {
        for fam in [
            single_grounded(),
            fixed_arm(10),
            chain(8),
            slab(3),
            table_edge_overhang(7, 6),
            tipping_tower(3, 2),
            marginal_ledge(),
            staircase(3, 2),
        ] {
            let cfg = fam.build().unwrap_or_else(|e| panic!("{}: {e}", fam.name()));
            assert!(!cfg.is_empty());
        }
    }

    #[test]
    fn virtual_ids_moves_modules_to_planned_set() {
        let fam = tipping_tower(3, 2).virtual_ids(&[4]);
        let cfg = fam.build().unwrap();
        let m = cfg.module(cfg.index_of(crate::model::ModuleId(4)).unwrap());
        assert_eq!(m.kind, crate::model::ModuleKind::Virtual);
        assert_eq!(cfg.real_count(), 4);
    }
}
