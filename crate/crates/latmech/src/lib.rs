//! Desk-scale simulator of lattice modular robots that predicts, one
//! construction step ahead, whether attaching planned modules will overload
//! inter-modular connections or make the structure lose balance.
//!
//! Each module is a logical process talking only to its lattice neighbors.
//! The ensemble builds a spanning tree from a designated centroid, solves its
//! own elastic equilibrium (beam network plus unilateral ground contact) with
//! a distributed weighted Jacobi iteration, and aggregates two safety
//! verdicts over the tree: loss of balance and connection overload.
//!
//! The crate is organized around that pipeline:
//!
//! * [`model`] / [`scenario`] — lattice configurations and their on-disk form
//! * [`beam`] — per-connection stiffness blocks and frames
//! * [`contact`] — regularized ground-contact predictor-corrector
//! * [`runtime`] — deterministic message-passing executor with tracing
//! * [`tree`] — spanning tree, converge-cast and broadcast
//! * [`jacobi`] — the distributed equilibrium solver
//! * [`stability`] / [`overload`] — the two failure checks
//! * [`oracle`] — centralized direct-solve ground truth and diagnostics
//! * [`report`] — the end-to-end check pipeline behind the CLI
//!
//! See the `examples/` directory for one runnable walkthrough per capability,
//! and the `latmech` binary for the command-line front end.

pub mod beam;
pub mod contact;
pub mod families;
pub mod jacobi;
pub mod model;
pub mod oracle;
pub mod overload;
pub mod report;
pub mod runtime;
pub mod scenario;
pub mod stability;
pub mod tree;

#[cfg(test)]
pub(crate) mod testutil;

pub use contact::{ContactResult, ContactState};
pub use model::{Configuration, Dof6, FacetDir, GridPos, Module, ModuleId, Params, Wrench6};
pub use scenario::{build_configuration, ScenarioDoc};
