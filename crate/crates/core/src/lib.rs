//! Training and meta-evaluation toolkit for reference-based MT metrics.
//!
//! The pipeline reads MQM-annotated evaluation data ([`corpus`]), turns it
//! into intra-annotator preference pairs ([`rankings`]), fine-tunes a small
//! sequence scorer on those pairs ([`training`]), scores system outputs
//! ([`metrics`]) and measures agreement with human judgments, including under
//! machine-translated references ([`metaeval`]).

pub mod cli;
pub mod corpus;
pub mod metaeval;
pub mod metrics;
pub mod rankings;
pub mod seed;
pub mod synthetic;
pub mod training;
mod tsv;

pub use tsv::TsvError;
