use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors produced by the analysis stages.
#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    EmptyAudio,
    InvalidSampleRate(u32),
    /// The audio is shorter than one analysis frame.
    AudioTooShort {
        samples: usize,
        needed: usize,
    },
    InvalidConfig(String),
    MismatchedTracks,
    EmptyInput,
    /// Zero variance or fewer than two values.
    DegenerateDistribution,
    InvalidGrid,
    GridMismatch,
    /// Constant series or too few points for a correlation.
    DegenerateSeries,
    InsufficientOverlap {
        overlap: usize,
    },
    OutOfOrderPoint {
        time: f64,
        last: f64,
    },
    LengthMismatch {
        left: usize,
        right: usize,
    },
    TooFewGroups,
    AllValuesIdentical,
    OutOfRangeN(usize),
    DegenerateGroup,
    InvalidEffectSize(f64),
    InvalidArgument(&'static str),
    ScoreOutOfRange {
        raw: f64,
        max: f64,
    },
    DuplicateRecord {
        dyad: String,
        scale: String,
    },
    InsufficientPairs {
        pairs: usize,
    },
    InsufficientData(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyAudio => f.write_str("audio contains no samples"),
            Error::InvalidSampleRate(sr) => write!(f, "invalid sample rate {sr} Hz"),
            Error::AudioTooShort { samples, needed } => {
                write!(f, "audio too short: {samples} samples, need at least {needed}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::MismatchedTracks => f.write_str("frame tracks do not share the same time base"),
            Error::EmptyInput => f.write_str("no input points"),
            Error::DegenerateDistribution => {
                f.write_str("degenerate distribution: fewer than two values or zero variance")
            }
            Error::InvalidGrid => f.write_str("invalid time grid"),
            Error::GridMismatch => f.write_str("tracks are not on the same grid"),
            Error::DegenerateSeries => f.write_str("degenerate series: constant values or fewer than three points"),
            Error::InsufficientOverlap { overlap } => {
                write!(f, "lagged overlap of {overlap} points is below the minimum of 3")
            }
            Error::OutOfOrderPoint { time, last } => {
                write!(f, "point at t={time} arrived after t={last}")
            }
            Error::LengthMismatch { left, right } => {
                write!(f, "series lengths differ ({left} vs {right})")
            }
            Error::TooFewGroups => f.write_str("too few groups"),
            Error::AllValuesIdentical => f.write_str("all values are identical"),
            Error::OutOfRangeN(n) => write!(f, "sample size {n} outside the supported range"),
            Error::DegenerateGroup => f.write_str("no within-group variation"),
            Error::InvalidEffectSize(r) => write!(f, "invalid effect size {r}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::ScoreOutOfRange { raw, max } => {
                write!(f, "score {raw} outside [0, {max}]")
            }
            Error::DuplicateRecord { dyad, scale } => {
                write!(f, "duplicate record for dyad {dyad}, scale {scale}")
            }
            Error::InsufficientPairs { pairs } => {
                write!(f, "only {pairs} complete pairs, need at least 3")
            }
            Error::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
