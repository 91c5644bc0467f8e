//! Entrainment analysis from WAV recordings: file formats, the study
//! pipeline, streaming output and the `entrain` command line.

// negated comparisons keep NaN on the rejecting side
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csvio;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod stream;
pub mod wav;

pub use entrain_core as core;
pub use error::{Error, Result};
