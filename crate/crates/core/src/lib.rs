//! Narrative map extraction for framed news corpora.
//!
//! The pipeline reads a corpus and document embeddings, lays the embeddings
//! out in the plane and clusters them into topics, scores every chronological
//! pair of documents for coherence, and solves a flow linear program between
//! a chosen source and sink to obtain a narrative map. Maps are evaluated by
//! how well their framing distribution matches the corpus.
//!
//! Numeric types are generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision.

pub mod cli;
pub mod coherence;
pub mod corpus;
pub mod embeddings;
pub mod evaluation;
pub mod export;
pub mod extraction;
pub mod json;
pub mod scalar;
pub mod simplex;
pub mod synthetic;
pub mod topics;

pub type EmbeddingStoreF64 = embeddings::EmbeddingStore<f64>;
pub type EmbeddingStoreF32 = embeddings::EmbeddingStore<f32>;
pub type TopicModelF64 = topics::TopicModel<f64>;
pub type TopicModelF32 = topics::TopicModel<f32>;
pub type CoherenceMatrixF64 = coherence::CoherenceMatrix<f64>;
pub type CoherenceMatrixF32 = coherence::CoherenceMatrix<f32>;
pub type LinearProgramF64 = simplex::LinearProgram<f64>;
pub type LinearProgramF32 = simplex::LinearProgram<f32>;
pub type LpModelF64 = extraction::LpModel<f64>;
pub type LpModelF32 = extraction::LpModel<f32>;
pub type NarrativeMapF64 = extraction::NarrativeMap<f64>;
pub type NarrativeMapF32 = extraction::NarrativeMap<f32>;
