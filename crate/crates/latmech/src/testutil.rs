//! Helpers shared by unit tests.

use crate::model::{Configuration, GridPos, Module, ModuleId, ModuleKind};

pub fn assert_close(actual: f64, expected: f64, tol: f64) {
    assert!(
        (actual - expected).abs() <= tol,
        "expected {expected}, got {actual} (tol {tol})"
    );
}

pub fn module(id: u32, x: i32, y: i32, z: i32) -> Module {
    Module {
        id: ModuleId(id),
        pos: GridPos::new(x, y, z),
        kind: ModuleKind::Real,
    }
}

pub fn vmodule(id: u32, x: i32, y: i32, z: i32) -> Module {
    Module {
        id: ModuleId(id),
        pos: GridPos::new(x, y, z),
        kind: ModuleKind::Virtual,
    }
}

/// Horizontal fully supported row (every module grounded).
pub fn grounded_row(n: usize) -> Configuration {
    crate::families::chain(n).build().unwrap()
}
