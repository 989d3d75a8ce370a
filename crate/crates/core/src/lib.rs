//! Sentiment classification for code-mixed (Tamil-English) social-media
//! text.
//!
//! The pipeline tokenizes comments, trains subword skip-gram embeddings on
//! the unlabeled text, tags every token as English or not by wordlist
//! lookup, concatenates the two into per-token features and classifies the
//! sequence with a (bi-directional) LSTM and a dense softmax layer trained
//! with Adam on sparse categorical cross-entropy.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod langid;
pub mod model;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
