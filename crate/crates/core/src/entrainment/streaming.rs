//! Sliding-window convergence and synchrony for online use.
//!
//! Utterance-level points arrive one at a time. The estimator advances a
//! uniform grid behind the latest timestamp seen, fills each new grid point
//! with the KNN mean of the points received so far (optionally standardized
//! with each speaker's running mean and deviation) and keeps the last
//! `window` seconds of grid values. Convergence and synchrony over the window
//! are maintained by running Pearson sums with eviction, so each grid step
//! costs O(1) amortized on top of the KNN lookup.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{lag_to_shift, CorrelationResult, Significance};
use crate::math;
use crate::preprocess::{knn_at, ResampledTrack, TimeGrid};
use crate::{Error, Feature, Result, Speaker};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StreamConfig {
    /// Seconds.
    pub grid_step: f64,
    /// Seconds of grid history used for the window metrics.
    pub window: f64,
    pub k: usize,
    /// Synchrony lag in seconds applied to speaker A.
    pub delta: f64,
    /// Standardize with each speaker's running mean and deviation.
    pub standardize: bool,
    /// Grid origin; defaults to the first point's time.
    pub t0: Option<f64>,
    pub significance: Significance,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            grid_step: 0.1,
            window: 120.0,
            k: 7,
            delta: 0.0,
            standardize: true,
            t0: None,
            significance: Significance::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamPoint {
    pub time: f64,
    pub value: f64,
    pub speaker: Speaker,
}

/// Window metrics after one grid step; `None` when not computable yet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub t: f64,
    pub feature: Feature,
    pub convergence: Option<CorrelationResult>,
    pub synchrony: Option<CorrelationResult>,
}

/// Running sums for a Pearson correlation with removal.
#[derive(Debug, Clone, Copy, Default)]
struct RunningPearson {
    n: usize,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

impl RunningPearson {
    fn add(&mut self, x: f64, y: f64) {
        self.n += 1;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }

    fn remove(&mut self, x: f64, y: f64) {
        self.n -= 1;
        self.sx -= x;
        self.sy -= y;
        self.sxx -= x * x;
        self.syy -= y * y;
        self.sxy -= x * y;
    }

    fn r(&self) -> Option<f64> {
        if self.n < 3 {
            return None;
        }
        let n = self.n as f64;
        let vx = self.sxx - self.sx * self.sx / n;
        let vy = self.syy - self.sy * self.sy / n;
        let cov = self.sxy - self.sx * self.sy / n;
        // relative floor: sums of squares carry rounding residue after eviction
        if vx <= 1e-12 * self.sxx || vy <= 1e-12 * self.syy || vx <= 0.0 || vy <= 0.0 {
            return None;
        }
        Some((cov / math::sqrt(vx * vy)).clamp(-1.0, 1.0))
    }
}

#[derive(Debug, Clone, Default)]
struct SpeakerHistory {
    times: Vec<f64>,
    values: Vec<f64>,
    mean: f64,
    m2: f64,
}

impl SpeakerHistory {
    fn push(&mut self, t: f64, v: f64) {
        self.times.push(t);
        self.values.push(v);
        let n = self.values.len() as f64;
        let d = v - self.mean;
        self.mean += d / n;
        self.m2 += d * (v - self.mean);
    }

    fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    fn value_at(&self, t: f64, k: usize, standardize: bool) -> Option<f64> {
        if self.times.is_empty() {
            return None;
        }
        let raw = knn_at(&self.times, &self.values, t, k);
        if !standardize {
            return Some(raw);
        }
        if self.values.len() < 2 {
            return None;
        }
        let sd = math::sqrt(self.m2 / (self.values.len() - 1) as f64);
        (sd > 0.0).then(|| (raw - self.mean) / sd)
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    index: usize,
    a: Option<f64>,
    b: Option<f64>,
    /// Synchrony pair whose lower grid index is this entry.
    sync_pair: Option<(f64, f64)>,
}

impl Entry {
    fn proximity(&self) -> Option<f64> {
        Some(-(self.a? - self.b?).abs())
    }
}

/// Incremental estimator for one feature of one dyad. Single writer.
#[derive(Debug, Clone)]
pub struct StreamingEstimator {
    feature: Feature,
    cfg: StreamConfig,
    shift: isize,
    window_points: usize,
    a: SpeakerHistory,
    b: SpeakerHistory,
    t0: Option<f64>,
    next_index: usize,
    window: VecDeque<Entry>,
    conv: RunningPearson,
    sync: RunningPearson,
    origin: usize,
    evictions: usize,
}

impl StreamingEstimator {
    pub fn new(feature: Feature, cfg: StreamConfig) -> Result<Self> {
        if !(cfg.grid_step > 0.0 && cfg.window >= cfg.grid_step && cfg.k >= 1) {
            return Err(Error::InvalidConfig(
                "stream needs grid_step > 0, window >= grid_step and k >= 1".into(),
            ));
        }
        Ok(StreamingEstimator {
            feature,
            cfg,
            shift: lag_to_shift(cfg.delta, cfg.grid_step),
            window_points: math::round(cfg.window / cfg.grid_step) as usize + 1,
            a: SpeakerHistory::default(),
            b: SpeakerHistory::default(),
            t0: cfg.t0,
            next_index: 0,
            window: VecDeque::new(),
            conv: RunningPearson::default(),
            sync: RunningPearson::default(),
            origin: 0,
            evictions: 0,
        })
    }

    pub fn feature(&self) -> Feature {
        self.feature
    }

    fn grid_time(&self, index: usize) -> f64 {
        self.t0.unwrap_or(0.0) + index as f64 * self.cfg.grid_step
    }

    /// Adds one point and returns metrics for every grid step it completes.
    pub fn update(&mut self, point: StreamPoint) -> Result<Vec<WindowMetrics>> {
        let mut out = Vec::new();
        self.update_with(point, |_, m| {
            out.push(m);
            Ok::<(), Error>(())
        })?;
        Ok(out)
    }

    /// Like [`update`](Self::update), but hands each step's metrics to `f`
    /// together with the estimator as it stands right after that step.
    pub fn update_with<E: From<Error>>(
        &mut self,
        point: StreamPoint,
        mut f: impl FnMut(&Self, WindowMetrics) -> core::result::Result<(), E>,
    ) -> core::result::Result<(), E> {
        if !point.time.is_finite() || !point.value.is_finite() {
            return Err(Error::InvalidArgument("stream points must be finite").into());
        }
        let history = match point.speaker {
            Speaker::A => &mut self.a,
            Speaker::B => &mut self.b,
        };
        if let Some(last) = history.last_time() {
            if point.time < last {
                return Err(Error::OutOfOrderPoint { time: point.time, last }.into());
            }
        }
        history.push(point.time, point.value);
        let t0 = *self.t0.get_or_insert(point.time);

        while t0 + self.next_index as f64 * self.cfg.grid_step <= point.time + 1e-9 {
            let m = self.advance();
            f(self, m)?;
        }
        Ok(())
    }

    fn advance(&mut self) -> WindowMetrics {
        let index = self.next_index;
        self.next_index += 1;
        let t = self.grid_time(index);
        let (k, z) = (self.cfg.k, self.cfg.standardize);
        let entry = Entry {
            index,
            a: self.a.value_at(t, k, z),
            b: self.b.value_at(t, k, z),
            sync_pair: None,
        };

        while self
            .window
            .front()
            .is_some_and(|e| e.index + self.window_points <= index)
        {
            let old = self.window.pop_front().expect("front checked");
            self.evict(&old);
        }
        self.window.push_back(entry);
        if let Some(d) = entry.proximity() {
            self.conv.add((index - self.origin) as f64, d);
        }
        self.add_sync_pair(index);

        if self.evictions >= self.window_points {
            self.rebuild();
        }

        let sig = &self.cfg.significance;
        let synchrony = self.sync.r().map(|r| {
            let mut c = CorrelationResult::from_r(r, self.sync.n, sig);
            c.lag = Some(self.shift as f64 * self.cfg.grid_step);
            c
        });
        WindowMetrics {
            t,
            feature: self.feature,
            convergence: self.conv.r().map(|r| CorrelationResult::from_r(r, self.conv.n, sig)),
            synchrony,
        }
    }

    fn evict(&mut self, old: &Entry) {
        if let Some(d) = old.proximity() {
            self.conv.remove((old.index - self.origin) as f64, d);
        }
        if let Some((x, y)) = old.sync_pair {
            self.sync.remove(x, y);
        }
        self.evictions += 1;
    }

    /// Forms the synchrony pair completed by the newest entry, if its
    /// partner `|shift|` steps back is still in the window. Both entries must
    /// carry values for both speakers.
    fn add_sync_pair(&mut self, newest: usize) {
        let lag = self.shift.unsigned_abs();
        let Some(lower) = newest.checked_sub(lag) else {
            return;
        };
        let Some(front) = self.window.front() else {
            return;
        };
        if lower < front.index {
            return;
        }
        let pos = lower - front.index;
        let hi = self.window[self.window.len() - 1];
        let lo = self.window[pos];
        if lo.proximity().is_none() || hi.proximity().is_none() {
            return;
        }
        // pair is (a[i + shift], b[i])
        let pair = if self.shift >= 0 {
            hi.a.zip(lo.b)
        } else {
            lo.a.zip(hi.b)
        };
        if let Some((x, y)) = pair {
            self.window[pos].sync_pair = Some((x, y));
            self.sync.add(x, y);
        }
    }

    fn rebuild(&mut self) {
        self.evictions = 0;
        self.origin = self.window.front().map_or(self.origin, |e| e.index);
        self.conv = RunningPearson::default();
        self.sync = RunningPearson::default();
        for e in &self.window {
            if let Some(d) = e.proximity() {
                self.conv.add((e.index - self.origin) as f64, d);
            }
            if let Some((x, y)) = e.sync_pair {
                self.sync.add(x, y);
            }
        }
    }

    /// The window's grid values where both speakers are available, as tracks
    /// for the batch metrics. `None` with fewer than two such points.
    pub fn window_tracks(&self) -> Option<(ResampledTrack, ResampledTrack)> {
        let complete: Vec<&Entry> = self.window.iter().filter(|e| e.a.is_some() && e.b.is_some()).collect();
        let (first, last) = (complete.first()?, complete.last()?);
        let grid = TimeGrid::new(
            self.grid_time(first.index),
            self.grid_time(last.index),
            self.cfg.grid_step,
        )
        .ok()?;
        let a = complete.iter().filter_map(|e| e.a).collect();
        let b = complete.iter().filter_map(|e| e.b).collect();
        Some((
            ResampledTrack::new(Speaker::A, self.feature, grid, a).ok()?,
            ResampledTrack::new(Speaker::B, self.feature, grid, b).ok()?,
        ))
    }
}

/// One estimator per feature for a dyad.
#[derive(Debug, Clone)]
pub struct DyadStream {
    estimators: Vec<StreamingEstimator>,
}

impl DyadStream {
    pub fn new(cfg: StreamConfig) -> Result<Self> {
        let estimators = Feature::ALL
            .iter()
            .map(|&f| StreamingEstimator::new(f, cfg))
            .collect::<Result<_>>()?;
        Ok(DyadStream { estimators })
    }

    pub fn update(&mut self, feature: Feature, point: StreamPoint) -> Result<Vec<WindowMetrics>> {
        self.estimator_mut(feature).update(point)
    }

    pub fn update_with<E: From<Error>>(
        &mut self,
        feature: Feature,
        point: StreamPoint,
        f: impl FnMut(&StreamingEstimator, WindowMetrics) -> core::result::Result<(), E>,
    ) -> core::result::Result<(), E> {
        self.estimator_mut(feature).update_with(point, f)
    }

    pub fn estimator(&self, feature: Feature) -> &StreamingEstimator {
        self.estimators
            .iter()
            .find(|e| e.feature == feature)
            .expect("one estimator per feature")
    }

    fn estimator_mut(&mut self, feature: Feature) -> &mut StreamingEstimator {
        self.estimators
            .iter_mut()
            .find(|e| e.feature == feature)
            .expect("one estimator per feature")
    }
}
