//! Behaviors, signalling, causal-order detection and the causal hierarchy.

pub mod behavior;
pub mod detect;
pub mod membership;
pub mod order;
pub mod separability;
