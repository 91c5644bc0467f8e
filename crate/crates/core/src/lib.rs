//! Acoustic-prosodic entrainment analysis between two speakers.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numeric stage of
//! the analysis:
//!
//! * [`audio`]: the in-memory mono sample buffer and channel mixdown.
//! * [`prosody`]: frame-level RMS intensity and autocorrelation pitch.
//! * [`segmentation`]: hysteresis voice activity detection into utterances.
//! * [`features`]: utterance-level mean/max pitch and intensity.
//! * [`preprocess`]: z-score standardization and KNN resampling onto a grid.
//! * [`entrainment`]: proximity, convergence and synchrony, per dyad and in a
//!   sliding-window streaming estimator.
//! * [`stats`]: Pearson, Kruskal-Wallis, Shapiro-Wilk, Levene and correlation power.
//! * [`perception`]: questionnaire score normalization and correlation with entrainment.
//! * [`study`]: between-condition comparison and significance fractions.
//!
//! File formats, the study pipeline and the command line live in the `entrain` crate.
#![no_std]
#![forbid(unsafe_code)]
// negated comparisons keep NaN on the rejecting side
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub(crate) mod math;

pub mod audio;
pub mod entrainment;
pub mod features;
pub mod perception;
pub mod preprocess;
pub mod prosody;
pub mod segmentation;
pub mod stats;
pub mod study;

pub use error::{Error, Result};

use core::fmt;
use serde::{Deserialize, Serialize};

/// One side of a dyad. `A` is the tutor, `B` the participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Speaker {
    A,
    B,
}

impl Speaker {
    pub const BOTH: [Speaker; 2] = [Speaker::A, Speaker::B];

    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::A => "A",
            Speaker::B => "B",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "A" | "a" | "tutor" => Some(Speaker::A),
            "B" | "b" | "participant" => Some(Speaker::B),
            _ => None,
        }
    }
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four utterance-level prosodic features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    MeanPitch,
    MaxPitch,
    MeanIntensity,
    MaxIntensity,
}

impl Feature {
    pub const ALL: [Feature; 4] = [
        Feature::MeanPitch,
        Feature::MaxPitch,
        Feature::MeanIntensity,
        Feature::MaxIntensity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::MeanPitch => "mean_pitch",
            Feature::MaxPitch => "max_pitch",
            Feature::MeanIntensity => "mean_intensity",
            Feature::MaxIntensity => "max_intensity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Feature::ALL.into_iter().find(|f| f.as_str() == s.trim())
    }

    pub fn is_pitch(self) -> bool {
        matches!(self, Feature::MeanPitch | Feature::MaxPitch)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
