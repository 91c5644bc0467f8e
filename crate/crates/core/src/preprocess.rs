//! Standardization and KNN resampling onto a shared uniform grid.
//!
//! Utterance-level points are irregular in time and each speaker is silent
//! for long stretches; KNN regression fills a uniform grid so that both
//! speakers' series can be compared point by point.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::features::UtteranceFeaturePoint;
use crate::math;
use crate::{Error, Feature, Result, Speaker};

/// Uniform grid `t0, t0 + step, ...` up to and including `t_end` (within 1e-9 steps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    step: f64,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, step: f64) -> Result<Self> {
        if !(t0.is_finite() && t_end.is_finite() && t0 < t_end && step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidGrid);
        }
        Ok(TimeGrid { t0, t_end, step })
    }

    /// Grid from the earliest to the latest point time.
    pub fn spanning(times: impl IntoIterator<Item = f64>, step: f64) -> Result<Self> {
        let (lo, hi) = times
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
        Self::new(lo, hi, step)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        math::floor((self.t_end - self.t0) / self.step + 1e-9) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.step
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time(i))
    }

    /// Last grid time (not necessarily `t_end`).
    pub fn last(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn span(&self) -> f64 {
        self.last() - self.t0
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.len() == other.len() && (self.t0 - other.t0).abs() <= 1e-12 && (self.step - other.step).abs() <= 1e-12
    }
}

/// A feature series for one speaker on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampledTrack {
    pub speaker: Speaker,
    pub feature: Feature,
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl ResampledTrack {
    pub fn new(speaker: Speaker, feature: Feature, grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: grid.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("track values must be finite"));
        }
        Ok(ResampledTrack {
            speaker,
            feature,
            grid,
            values,
        })
    }
}

/// Standardizes values to mean 0 and sample standard deviation 1 (n - 1 denominator).
pub fn zscore_values(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::DegenerateDistribution);
    }
    let mean = math::mean(values);
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = math::sqrt(ss / (values.len() - 1) as f64);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::DegenerateDistribution);
    }
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Z-scores the values of points that share one `(speaker, feature)`; times are untouched.
pub fn zscore(points: &[UtteranceFeaturePoint]) -> Result<Vec<UtteranceFeaturePoint>> {
    if let Some(first) = points.first() {
        if points
            .iter()
            .any(|p| p.speaker != first.speaker || p.feature != first.feature)
        {
            return Err(Error::InvalidArgument("zscore needs a single (speaker, feature)"));
        }
    }
    let values: Vec<f64> = points.iter().map(|p| p.value).collect();
    let z = zscore_values(&values)?;
    Ok(points
        .iter()
        .zip(z)
        .map(|(p, value)| UtteranceFeaturePoint { value, ..*p })
        .collect())
}

/// Time-sorted `(time, value)` pairs; equal times keep their input order.
fn sorted_by_time(points: &[UtteranceFeaturePoint]) -> (Vec<f64>, Vec<f64>) {
    let mut pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.time, p.value)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Mean of the `k` points nearest in time to `t`, over points sorted by time.
///
/// Distance ties go to the earlier point. Points tied with the k-th pick in
/// both distance and timestamp are all included.
pub fn knn_at(times: &[f64], values: &[f64], t: f64, k: usize) -> f64 {
    let n = times.len();
    debug_assert!(n > 0 && k > 0);
    let pos = times.partition_point(|&x| x < t);
    let (mut lo, mut hi) = (pos, pos);
    let mut last_left = false;
    for _ in 0..k.min(n) {
        let left = (lo > 0).then(|| (times[lo - 1] - t).abs());
        let right = (hi < n).then(|| (times[hi] - t).abs());
        last_left = match (left, right) {
            (Some(l), Some(r)) => l <= r,
            (Some(_), None) => true,
            _ => false,
        };
        if last_left {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    if k < n {
        if last_left {
            while lo > 0 && times[lo - 1] == times[lo] {
                lo -= 1;
            }
        } else {
            while hi < n && times[hi] == times[hi - 1] {
                hi += 1;
            }
        }
    }
    values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
}

/// KNN regression of one `(speaker, feature)` point set onto `grid`.
///
/// Every grid value is the mean of the `k` points whose timestamps are
/// closest; with fewer than `k` points, all of them.
pub fn knn_regress(points: &[UtteranceFeaturePoint], grid: &TimeGrid, k: usize) -> Result<ResampledTrack> {
    let first = points.first().ok_or(Error::EmptyInput)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1"));
    }
    let (times, values) = sorted_by_time(points);
    let out = grid.times().map(|t| knn_at(&times, &values, t, k)).collect();
    ResampledTrack::new(first.speaker, first.feature, *grid, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizeOrder {
    /// Z-score utterance points, then resample.
    BeforeKnn,
    /// Resample raw values, then z-score the grid series.
    AfterKnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResampleConfig {
    /// Seconds.
    pub grid_step: f64,
    pub k: usize,
    pub order: StandardizeOrder,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        ResampleConfig {
            grid_step: 0.1,
            k: 7,
            order: StandardizeOrder::BeforeKnn,
        }
    }
}

/// Standardizes and resamples one `(speaker, feature)` point set.
pub fn standardize_and_resample(
    points: &[UtteranceFeaturePoint],
    grid: &TimeGrid,
    cfg: &ResampleConfig,
) -> Result<ResampledTrack> {
    match cfg.order {
        StandardizeOrder::BeforeKnn => knn_regress(&zscore(points)?, grid, cfg.k),
        StandardizeOrder::AfterKnn => {
            let mut track = knn_regress(points, grid, cfg.k)?;
            track.values = zscore_values(&track.values)?;
            Ok(track)
        }
    }
}
