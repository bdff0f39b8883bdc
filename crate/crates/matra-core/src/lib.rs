//! Core algorithms for the MaTrA translation-evaluation toolkit.

pub mod basemetrics;
pub mod corpus;
pub mod error;
pub mod evalharness;
pub mod features;
pub mod lexstats;
pub mod neural;
pub mod text;
pub mod vectors;

pub use error::{MatraError, Result};
