//! Single-loop transformation and large-block encoding.

mod lbe;
mod liveness;
mod single_loop;

pub use lbe::{large_block_encode, SummarizedSystem};
pub use liveness::live_variables;
pub use single_loop::{single_loop_transform, PC_VAR};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("unsupported CFA shape: {0}")]
    UnsupportedShape(String),
    #[error("non-linear expression `{0}`")]
    NonLinear(String),
    #[error("`nondet()` condition reached the encoder without being lowered")]
    UnloweredNondet,
}
