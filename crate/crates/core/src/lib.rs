//! Cultural reasoning evaluation for multilingual answer–explanation corpora.
//!
//! The pipeline: load a corpus ([`corpus`]), embed explanations and questions
//! ([`embedding`]), build per-culture knowledge vectors ([`culture`]), score
//! Cultural Fluency, Deviation, Consistency and Linguistic Adaptation
//! ([`metrics`], using [`depth`]), test differences ([`stats`]) and render
//! reports ([`report`]).
//!
//! Formulas are generic over [`Scalar`] (`f32`/`f64`); the pipeline types
//! below fix `f64`.

pub mod corpus;
pub mod culture;
pub mod depth;
pub mod embedding;
pub mod metrics;
pub mod report;
mod scalar;
pub mod stats;
pub mod synthetic;

pub use scalar::Scalar;

/// Double-precision embedding, the form every pipeline stage uses.
pub type Embedding = embedding::EmbeddingVector<f64>;
pub type Features = depth::TextFeatures<f64>;
pub type Instance = metrics::InstanceScore<f64>;
pub type Group = metrics::GroupScore<f64>;
pub type Pair = metrics::PairScore<f64>;
pub type Scores = metrics::ScoreSet<f64>;
