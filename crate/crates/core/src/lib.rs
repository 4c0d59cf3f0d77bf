//! Interpolation-based model checking for MiniC programs.

pub mod formula;
pub mod frontend;
pub mod transform;
pub mod solver;
pub mod engine;
pub mod harness;
