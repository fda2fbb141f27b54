//! Discrete divergence problems on the staggered mesh.
//!
//! Local problems minimize the discrete Dirichlet energy subject to
//! `div v = g` inside one subdomain with `v = 0` on its boundary; the global
//! field is the sum of the zero-extended local fields.

mod field;
mod global;
mod local;
pub mod sparse;

pub use field::StaggeredField;
pub use global::{
    assemble, global_solve, main_bound, verify_assembly, weighted_ratio, GlobalSolution,
    GlobalSolveReport,
};
pub use local::{local_solve, LocalProblem, LocalSolution, LocalSolveReport, SolveOptions};
