//! Sentence boundary detection for speech transcripts with paired lexical and
//! prosodic recurrent-convolutional networks.

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod model;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};
