//! Tools for indefinite causal order: process matrices, causal structure
//! discovery, causal games, the quantum switch, classical closed timelike
//! curves, quantum causal models and operational/intrinsic reversibility.

pub mod causal;
pub mod cli;
pub mod ctc;
pub mod error;
pub mod games;
pub mod graph;
pub mod linalg;
pub mod osis;
pub mod process;
pub mod qcm;
pub mod switch;
pub mod tensor;

pub use error::{Error, Result};
