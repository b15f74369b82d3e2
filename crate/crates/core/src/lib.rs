//! BetaE: knowledge-graph reasoning with Beta-distribution embeddings.
//!
//! Entities and queries are embedded as vectors of independent Beta
//! distributions. Relation projection is a learned network, intersection is
//! an attention-weighted product of densities (which stays a Beta), and
//! negation takes the reciprocal of the shape parameters. Union is handled
//! either by rewriting to disjunctive normal form or via De Morgan's law.
//!
//! Module map:
//! - [`kg`]: triples, vocabularies, adjacency, split overlays
//! - [`query`]: query trees, the s-expression language, rewrites, exact evaluation
//! - [`sampler`]: benchmark query generation
//! - [`dataset`]: query dataset files
//! - [`beta`]: special functions and Beta-distribution primitives
//! - [`model`]: the embedding model, its operators and checkpoints
//! - [`train`]: the negative-sampling objective and optimizer loop
//! - [`eval`]: filtered ranking metrics and uncertainty analyses

pub mod beta;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod kg;
pub mod model;
pub mod query;
pub mod sampler;
pub mod train;
pub mod seed;

pub use error::{Error, Result};
