//! Graph classification with quantum-walk spatial convolutions over
//! transitively aligned vertex grids.
//!
//! Pipeline: load TU-format graphs ([`graph`]), compute depth-based vertex
//! representations ([`depth`]), align every graph to shared k-means
//! prototypes ([`alignment`]), compute the quantum walk average mixing
//! matrix of each aligned grid ([`quantum_walk`]), and train the
//! convolutional classifier ([`neural`], [`trainer`]). [`pipeline`] and
//! [`store`] cover preprocessing and on-disk artifacts.

pub mod alignment;
pub mod depth;
pub mod error;
pub mod graph;
pub mod neural;
pub mod pipeline;
pub mod quantum_walk;
pub mod store;
pub mod trainer;

pub use error::{Error, Result};
