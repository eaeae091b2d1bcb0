//! Topic modeling toolkit for interlinear manuscript transcriptions.
//!
//! The pipeline tokenizes a line-oriented interlinear transcription, builds
//! bag-of-words and tf-idf matrices, fits LDA, LSA or NMF topic models, and
//! compares the resulting topic labels against per-page categorical metadata
//! (scribal hand, dialect, illustrated subject) with multiple correspondence
//! analysis, 2-D projections and category networks.
//!
//! Heavy inner loops (matrix products, pairwise distances, permutation draws)
//! run on rayon when the `parallel` feature is enabled and fall back to plain
//! iterators otherwise. Results never depend on the thread count.

pub mod corpus;
pub mod error;
pub mod factor;
pub mod graph;
pub mod lda;
pub mod linalg;
pub mod mca;
pub mod numfmt;
pub mod par;
pub mod pipeline;
pub mod project;
pub mod rng;
pub mod stats;
pub mod synthetic;
pub mod vectorize;

pub use error::{Error, Result};
