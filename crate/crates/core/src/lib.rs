//! Neuron-level concept dissection for message-passing graph classifiers.
//!
//! The crate trains small GIN/GCN classifiers, captures per-layer neuron activations,
//! searches for logical formulas over node predicates whose masks align with each
//! neuron's thresholded activations, and assembles class-level explanations from the
//! best-aligned neurons.

pub mod concept;
pub mod error;
pub mod explain;
pub mod gnn;
pub mod graph;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod search;

pub use error::{Error, Result};
