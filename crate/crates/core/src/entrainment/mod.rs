//! Proximity, convergence and synchrony between two speakers' resampled
//! feature series.
//!
//! * proximity `D(t) = -|a(t) - b(t)|` at every grid point;
//! * convergence is the Pearson correlation of `D(t)` with `t`;
//! * synchrony is the Pearson correlation of `a(t + delta)` with `b(t)`.
//!
//! On a uniform grid the time integrals of both correlations reduce to plain
//! sample sums, so the ordinary product-moment coefficient is used.

pub mod streaming;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::preprocess::{ResampledTrack, TimeGrid};
use crate::stats::{self, Tail};
use crate::{Error, Feature, Result};

/// `D(t)` per grid point; every value is `<= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximitySeries {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl ProximitySeries {
    pub fn mean(&self) -> f64 {
        math::mean(&self.values)
    }
}

/// A correlation with its significance verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub n: usize,
    #[serde(rename = "p")]
    pub p_value: f64,
    /// `r > 0` and `p < alpha`.
    pub significant_positive: bool,
    /// Applied lag in seconds (synchrony only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lag: Option<f64>,
}

impl CorrelationResult {
    pub fn from_r(r: f64, n: usize, sig: &Significance) -> Self {
        let p_value = stats::pearson_p(r, n, sig.tail);
        CorrelationResult {
            r,
            n,
            p_value,
            significant_positive: r > 0.0 && p_value < sig.alpha,
            lag: None,
        }
    }
}

/// Significance level and alternative for correlation flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Significance {
    pub alpha: f64,
    pub tail: Tail,
}

impl Default for Significance {
    fn default() -> Self {
        Significance {
            alpha: 0.01,
            tail: Tail::TwoSided,
        }
    }
}

/// Lag candidates `min, min + step, ..., <= max`, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagSearch {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SynchronyConfig {
    /// Lag in seconds applied to speaker A when no search range is given.
    pub delta: f64,
    pub search: Option<LagSearch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EntrainmentConfig {
    pub significance: Significance,
    pub synchrony: SynchronyConfig,
}

fn check_pair(a: &ResampledTrack, b: &ResampledTrack) -> Result<()> {
    if a.feature != b.feature || !a.grid.same_as(&b.grid) || a.values.len() != b.values.len() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Negative absolute difference of the two tracks at every grid point.
pub fn proximity(a: &ResampledTrack, b: &ResampledTrack) -> Result<ProximitySeries> {
    check_pair(a, b)?;
    let values = a.values.iter().zip(&b.values).map(|(x, y)| -(x - y).abs()).collect();
    Ok(ProximitySeries { grid: a.grid, values })
}

/// Correlation of proximity with time.
pub fn convergence(a: &ResampledTrack, b: &ResampledTrack, sig: &Significance) -> Result<CorrelationResult> {
    let d = proximity(a, b)?;
    let t: Vec<f64> = d.grid.times().collect();
    let r = stats::pearson_r(&d.values, &t)?;
    Ok(CorrelationResult::from_r(r, t.len(), sig))
}

/// Grid-index shift for a lag in seconds.
pub fn lag_to_shift(delta: f64, step: f64) -> isize {
    math::round(delta / step) as isize
}

/// Pairs `(a[i + shift], b[i])` over the overlapping indices.
pub fn lagged_pairs<'a>(a: &'a [f64], b: &'a [f64], shift: isize) -> (&'a [f64], &'a [f64]) {
    let n = a.len().min(b.len());
    let s = shift.unsigned_abs().min(n);
    if shift >= 0 {
        (&a[s..n], &b[..n - s])
    } else {
        (&a[..n - s], &b[s..n])
    }
}

fn synchrony_at(a: &ResampledTrack, b: &ResampledTrack, delta: f64, sig: &Significance) -> Result<CorrelationResult> {
    if !(delta.abs() < a.grid.span()) {
        return Err(Error::InsufficientOverlap { overlap: 0 });
    }
    let shift = lag_to_shift(delta, a.grid.step());
    let (x, y) = lagged_pairs(&a.values, &b.values, shift);
    if x.len() < 3 {
        return Err(Error::InsufficientOverlap { overlap: x.len() });
    }
    let r = stats::pearson_r(x, y)?;
    let mut res = CorrelationResult::from_r(r, x.len(), sig);
    res.lag = Some(shift as f64 * a.grid.step());
    Ok(res)
}

/// Correlation of `a(t + delta)` with `b(t)`.
///
/// With a search range, every candidate lag is tried and the one with the
/// largest `r` wins (earliest on ties); the chosen lag is recorded in the result.
pub fn synchrony(
    a: &ResampledTrack,
    b: &ResampledTrack,
    cfg: &SynchronyConfig,
    sig: &Significance,
) -> Result<CorrelationResult> {
    check_pair(a, b)?;
    let Some(search) = cfg.search else {
        return synchrony_at(a, b, cfg.delta, sig);
    };
    if !(search.step > 0.0 && search.min <= search.max) {
        return Err(Error::InvalidArgument("lag search needs step > 0 and min <= max"));
    }
    let count = math::floor((search.max - search.min) / search.step + 1e-9) as usize + 1;
    let mut best: Option<CorrelationResult> = None;
    let mut last_err = Error::InsufficientOverlap { overlap: 0 };
    for j in 0..count {
        let delta = search.min + j as f64 * search.step;
        match synchrony_at(a, b, delta, sig) {
            Ok(res) if best.is_none_or(|b| res.r > b.r) => best = Some(res),
            Ok(_) => {}
            Err(e) => last_err = e,
        }
    }
    best.ok_or(last_err)
}

/// A metric that was either computed or skipped for a stated reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MetricOutcome {
    Ok(CorrelationResult),
    Absent { reason: String },
}

impl MetricOutcome {
    fn from_result(r: Result<CorrelationResult>) -> Self {
        match r {
            Ok(c) => MetricOutcome::Ok(c),
            Err(e) => MetricOutcome::Absent { reason: e.to_string() },
        }
    }

    pub fn result(&self) -> Option<&CorrelationResult> {
        match self {
            MetricOutcome::Ok(c) => Some(c),
            MetricOutcome::Absent { .. } => None,
        }
    }

    pub fn significant_positive(&self) -> bool {
        self.result().is_some_and(|c| c.significant_positive)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntrainment {
    pub feature: Feature,
    pub proximity_mean: Option<f64>,
    pub convergence: MetricOutcome,
    pub synchrony: MetricOutcome,
}

/// Per-dyad entrainment summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntrainmentReport {
    pub dyad_id: String,
    pub features: Vec<FeatureEntrainment>,
    /// Some feature converges or synchronizes significantly positively.
    pub entrained: bool,
}

impl EntrainmentReport {
    pub fn feature(&self, feature: Feature) -> Option<&FeatureEntrainment> {
        self.features.iter().find(|f| f.feature == feature)
    }
}

/// Both speakers' tracks for one feature, or why they are unavailable.
pub type FeatureInput = (Feature, core::result::Result<(ResampledTrack, ResampledTrack), String>);

/// Computes every metric for every feature present in `tracks_a`/`tracks_b`.
///
/// Features missing on either side are reported as absent; per-feature
/// failures never abort the report.
pub fn analyze_dyad(
    dyad_id: &str,
    tracks_a: &[ResampledTrack],
    tracks_b: &[ResampledTrack],
    cfg: &EntrainmentConfig,
) -> EntrainmentReport {
    let inputs = Feature::ALL.iter().map(|&f| {
        let a = tracks_a.iter().find(|t| t.feature == f);
        let b = tracks_b.iter().find(|t| t.feature == f);
        let pair = match (a, b) {
            (Some(a), Some(b)) => Ok((a.clone(), b.clone())),
            (None, _) => Err(String::from("no track for speaker A")),
            (_, None) => Err(String::from("no track for speaker B")),
        };
        (f, pair)
    });
    analyze_inputs(dyad_id, inputs, cfg)
}

/// [`analyze_dyad`] over explicit per-feature inputs.
pub fn analyze_inputs(
    dyad_id: &str,
    inputs: impl IntoIterator<Item = FeatureInput>,
    cfg: &EntrainmentConfig,
) -> EntrainmentReport {
    let features: Vec<FeatureEntrainment> = inputs
        .into_iter()
        .map(|(feature, pair)| match pair {
            Ok((a, b)) => FeatureEntrainment {
                feature,
                proximity_mean: proximity(&a, &b).ok().map(|p| p.mean()),
                convergence: MetricOutcome::from_result(convergence(&a, &b, &cfg.significance)),
                synchrony: MetricOutcome::from_result(synchrony(&a, &b, &cfg.synchrony, &cfg.significance)),
            },
            Err(reason) => FeatureEntrainment {
                feature,
                proximity_mean: None,
                convergence: MetricOutcome::Absent { reason: reason.clone() },
                synchrony: MetricOutcome::Absent { reason },
            },
        })
        .collect();
    let entrained = features
        .iter()
        .any(|f| f.convergence.significant_positive() || f.synchrony.significant_positive());
    EntrainmentReport {
        dyad_id: dyad_id.into(),
        features,
        entrained,
    }
}
