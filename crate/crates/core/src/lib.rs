//! Controlled generation of meaning-annotated sentences and a probing harness
//! for sentence embeddings.
//!
//! The pipeline runs in stages:
//!
//! 1. [`event`] defines lexicalized case frames, templates and constraints.
//! 2. [`generator`] populates templates into constraint-satisfying event pools.
//! 3. [`realizer`] maps events to surface sentences with gold annotations.
//! 4. [`taskforge`] builds the five controlled classification datasets.
//! 5. [`encoders`] trains skip-gram/BOW and a recurrent denoising autoencoder.
//! 6. [`prober`] trains the MLP probe and runs the control grid.
//!
//! [`pipeline`] chains the stages through hash-stamped artifacts.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the pipeline's working precision.

pub mod encoders;
pub mod event;
pub mod generator;
pub mod hashing;
pub mod optim;
pub mod pipeline;
pub mod prober;
pub mod realizer;
pub mod scalar;
pub mod taskforge;

pub use scalar::Scalar;

/// Working precision of the pipeline.
pub type Real = f32;

pub type EmbeddingTable = encoders::EmbeddingTable<Real>;
pub type SentenceVectors = encoders::SentenceVectors<Real>;
pub type SeqAutoencoder = encoders::SeqAutoencoder<Real>;
pub type Mlp = prober::Mlp<Real>;
