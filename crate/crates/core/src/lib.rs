//! Solving `div u = f` on the planar cusp `{0 < x₁ < 1, 0 < x₂ < x₁^γ}` in
//! weighted Sobolev spaces, with the local-to-global argument driven by a
//! weighted discrete Hardy inequality.
//!
//! The crate is organized bottom-up: [`hardy`] evaluates discrete Hardy
//! constants, [`geometry`] describes the domain and its dyadic cover,
//! [`weights`] turns a weight `ω(x₁)` into Hardy sequences, [`mesh`] holds
//! the staggered grid, [`decomposition`] splits `f` into locally supported
//! zero-mean pieces and [`solver`] solves the local problems and assembles
//! the global field. [`reports`] runs the parameter sweeps.

pub mod decomposition;
pub mod error;
pub mod grid;
pub mod geometry;
pub mod hardy;
pub mod mesh;
pub mod quadrature;
pub mod reports;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
