//! Semi-supervised fraud detection on bipartite transaction graphs.
//!
//! A graph autoencoder built from BEAN convolutions learns node and edge
//! representations of a two-partition graph (transactions and wallets). A
//! structure decoder predicts edges, a feature decoder reconstructs
//! attributes, and per-partition heads classify the few labeled nodes. The
//! [`explain`] module attributes each classification to the edges whose
//! removal hurts it most.
//!
//! Start with [`data::generate_synthetic`] or [`data::load_elliptic`], then
//! [`train::fit`] and [`explain::explain`].

pub mod cli;
pub mod conv;
pub mod data;
pub mod error;
pub mod explain;
pub mod graph;
pub mod model;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use graph::{BipartiteGraph, Label, NodeRef, Partition};
pub use model::{SageFinConfig, SageFinModel};
