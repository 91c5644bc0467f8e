//! Frame-level pitch and RMS intensity.
//!
//! Both trackers slide a rectangular frame over the signal with a fixed hop.
//! Frame `i` covers samples `[i * hop, i * hop + frame)` and is timestamped at
//! its center, so every track produced from one [`AudioBuffer`] with one
//! [`FrameConfig`] shares the same time base.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::math;
use crate::{Error, Result};

/// Added to the RMS before taking the logarithm; an all-zero frame reads -200 dB.
pub const RMS_EPSILON: f64 = 1e-10;

/// Bonus per octave given to shorter autocorrelation lags when picking the
/// pitch candidate; breaks the near-tie between a period and its multiples.
const OCTAVE_COST: f64 = 0.01;

/// Half-width of the median smoother applied to voiced runs (window of 5 frames).
const MEDIAN_HALF_WIDTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameConfig {
    /// Seconds.
    pub frame_length: f64,
    /// Seconds.
    pub hop: f64,
    /// Hz.
    pub pitch_floor: f64,
    /// Hz.
    pub pitch_ceiling: f64,
    /// Minimum normalized autocorrelation peak for a voiced frame.
    pub voicing_threshold: f64,
    /// Frames quieter than this (dB re full scale) are silent.
    pub silence_floor_db: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            frame_length: 0.040,
            hop: 0.010,
            pitch_floor: 75.0,
            pitch_ceiling: 600.0,
            voicing_threshold: 0.45,
            silence_floor_db: -50.0,
        }
    }
}

impl FrameConfig {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let sr = f64::from(sample_rate);
        if !(self.hop > 0.0 && self.hop <= self.frame_length) {
            return Err(Error::InvalidConfig("need 0 < hop <= frame_length".into()));
        }
        if !(self.pitch_floor > 0.0 && self.pitch_floor < self.pitch_ceiling && self.pitch_ceiling <= sr / 2.0) {
            return Err(Error::InvalidConfig(
                "need 0 < pitch_floor < pitch_ceiling <= sample_rate / 2".into(),
            ));
        }
        if !(self.voicing_threshold > 0.0 && self.voicing_threshold < 1.0) {
            return Err(Error::InvalidConfig("voicing_threshold must lie in (0, 1)".into()));
        }
        if !self.silence_floor_db.is_finite() {
            return Err(Error::InvalidConfig("silence_floor_db must be finite".into()));
        }
        if self.frame_samples(sample_rate) < 2 {
            return Err(Error::InvalidConfig("frame shorter than two samples".into()));
        }
        Ok(())
    }

    pub fn frame_samples(&self, sample_rate: u32) -> usize {
        math::round(self.frame_length * f64::from(sample_rate)) as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        (math::round(self.hop * f64::from(sample_rate)) as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackKind {
    /// Hz, masked by voicing.
    Pitch,
    /// dB re full scale, masked by "not silent".
    Intensity,
}

/// A per-frame measurement series on a uniform time base.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrack {
    kind: TrackKind,
    start: f64,
    step: f64,
    values: Vec<Option<f64>>,
    mask: Vec<bool>,
}

impl FrameTrack {
    pub fn kind(&self) -> TrackKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Center time of the first frame.
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time(i))
    }

    /// The measurement of frame `i`; `None` for unvoiced pitch frames.
    pub fn value(&self, i: usize) -> Option<f64> {
        self.values[i]
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    /// Voiced (pitch) or non-silent (intensity) flag per frame.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn active(&self, i: usize) -> bool {
        self.mask[i]
    }

    /// True if both tracks come from the same frame grid.
    pub fn same_time_base(&self, other: &FrameTrack) -> bool {
        self.len() == other.len()
            && (self.start - other.start).abs() <= 1e-12
            && (self.step - other.step).abs() <= 1e-12
    }
}

struct Framing {
    frame: usize,
    hop: usize,
    count: usize,
    start: f64,
    step: f64,
}

fn framing(audio: &AudioBuffer, cfg: &FrameConfig) -> Result<Framing> {
    let sr = audio.sample_rate();
    cfg.validate(sr)?;
    let frame = cfg.frame_samples(sr);
    let hop = cfg.hop_samples(sr);
    if audio.len() < frame {
        return Err(Error::AudioTooShort {
            samples: audio.len(),
            needed: frame,
        });
    }
    let srf = f64::from(sr);
    Ok(Framing {
        frame,
        hop,
        count: (audio.len() - frame) / hop + 1,
        start: frame as f64 / (2.0 * srf),
        step: hop as f64 / srf,
    })
}

fn frame_db(frame: &[f64]) -> f64 {
    let rms = math::sqrt(math::dot(frame, frame) / frame.len() as f64);
    20.0 * math::log10(rms + RMS_EPSILON)
}

/// Per-frame RMS intensity in dB re full scale.
///
/// Frames below `cfg.silence_floor_db` are flagged silent (mask `false`).
pub fn rms_intensity(audio: &AudioBuffer, cfg: &FrameConfig) -> Result<FrameTrack> {
    let fr = framing(audio, cfg)?;
    let samples = audio.samples();
    let mut values = Vec::with_capacity(fr.count);
    let mut mask = Vec::with_capacity(fr.count);
    for i in 0..fr.count {
        let off = i * fr.hop;
        let db = frame_db(&samples[off..off + fr.frame]);
        values.push(Some(db));
        mask.push(db >= cfg.silence_floor_db);
    }
    Ok(FrameTrack {
        kind: TrackKind::Intensity,
        start: fr.start,
        step: fr.step,
        values,
        mask,
    })
}

/// Autocorrelation pitch tracker.
///
/// Each non-silent frame has its mean removed and is correlated with itself
/// over lags `[1 / pitch_ceiling, 1 / pitch_floor]`, normalizing each lag by the
/// energies of the two overlapping parts. Local maxima are refined by parabolic
/// interpolation; the strongest candidate (with a small preference for shorter
/// lags) is voiced when its correlation reaches `voicing_threshold`. Voiced runs
/// are then median-smoothed over five frames.
pub fn pitch_autocorrelation(audio: &AudioBuffer, cfg: &FrameConfig) -> Result<FrameTrack> {
    let fr = framing(audio, cfg)?;
    let sr = f64::from(audio.sample_rate());
    if cfg.frame_length + 1e-9 < 3.0 / cfg.pitch_floor {
        return Err(Error::InvalidConfig(
            "frame_length must span at least three periods of pitch_floor".into(),
        ));
    }
    let lag_min = (math::floor(sr / cfg.pitch_ceiling) as usize).max(2);
    let lag_max = math::ceil(sr / cfg.pitch_floor) as usize;
    if lag_max + 2 >= fr.frame {
        return Err(Error::InvalidConfig("frame too short for pitch_floor".into()));
    }

    let samples = audio.samples();
    let mut scratch = FrameScratch::new(fr.frame, lag_max + 2);
    let mut values = Vec::with_capacity(fr.count);
    let mut mask = Vec::with_capacity(fr.count);
    for i in 0..fr.count {
        let off = i * fr.hop;
        let frame = &samples[off..off + fr.frame];
        let f0 = if frame_db(frame) < cfg.silence_floor_db {
            None
        } else {
            scratch.estimate(frame, lag_min, lag_max, sr, cfg)
        };
        values.push(f0);
        mask.push(f0.is_some());
    }
    median_smooth(&mut values);
    Ok(FrameTrack {
        kind: TrackKind::Pitch,
        start: fr.start,
        step: fr.step,
        values,
        mask,
    })
}

struct FrameScratch {
    centered: Vec<f64>,
    energy: Vec<f64>,
    corr: Vec<f64>,
}

impl FrameScratch {
    fn new(frame: usize, lags: usize) -> Self {
        FrameScratch {
            centered: Vec::with_capacity(frame),
            energy: Vec::with_capacity(frame + 1),
            corr: Vec::with_capacity(lags + 1),
        }
    }

    fn estimate(&mut self, frame: &[f64], lag_min: usize, lag_max: usize, sr: f64, cfg: &FrameConfig) -> Option<f64> {
        let n = frame.len();
        let mean = math::mean(frame);
        self.centered.clear();
        self.centered.extend(frame.iter().map(|s| s - mean));
        let x = &self.centered;

        // energy[i] = sum of x[..i]^2
        self.energy.clear();
        self.energy.push(0.0);
        let mut acc = 0.0;
        for v in x {
            acc += v * v;
            self.energy.push(acc);
        }
        let total = self.energy[n];
        if total <= 0.0 {
            return None;
        }

        self.corr.clear();
        for lag in 0..=lag_max + 1 {
            if lag + 1 < lag_min {
                self.corr.push(0.0);
                continue;
            }
            let head = self.energy[n - lag];
            let tail = total - self.energy[lag];
            let denom = math::sqrt(head * tail);
            let r = if denom > 0.0 {
                math::dot(&x[..n - lag], &x[lag..]) / denom
            } else {
                0.0
            };
            self.corr.push(r);
        }

        let r = &self.corr;
        let mut best: Option<(f64, f64, f64)> = None; // (strength, value, lag)
        for lag in lag_min..=lag_max {
            let (y0, y1, y2) = (r[lag - 1], r[lag], r[lag + 1]);
            if !(y1 > y0 && y1 >= y2) {
                continue;
            }
            let curvature = y0 - 2.0 * y1 + y2;
            let (offset, peak) = if curvature < 0.0 {
                let d = 0.5 * (y0 - y2) / curvature;
                (d, y1 - 0.25 * (y0 - y2) * d)
            } else {
                (0.0, y1)
            };
            let refined = lag as f64 + offset;
            let f0 = sr / refined;
            if f0 < cfg.pitch_floor || f0 > cfg.pitch_ceiling {
                continue;
            }
            let strength = peak - OCTAVE_COST * libm::log2(cfg.pitch_floor / f0);
            if best.is_none_or(|(s, _, _)| strength > s) {
                best = Some((strength, peak, refined));
            }
        }
        match best {
            Some((_, peak, lag)) if peak >= cfg.voicing_threshold => Some(sr / lag),
            _ => None,
        }
    }
}

/// Median filter over each voiced run; the window is truncated at run edges.
fn median_smooth(values: &mut [Option<f64>]) {
    let raw: Vec<Option<f64>> = values.to_vec();
    let mut i = 0;
    let mut window: Vec<f64> = Vec::with_capacity(2 * MEDIAN_HALF_WIDTH + 1);
    while i < raw.len() {
        if raw[i].is_none() {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < raw.len() && raw[i].is_some() {
            i += 1;
        }
        let run_end = i;
        for (j, slot) in values.iter_mut().enumerate().take(run_end).skip(run_start) {
            let lo = j.saturating_sub(MEDIAN_HALF_WIDTH).max(run_start);
            let hi = (j + MEDIAN_HALF_WIDTH + 1).min(run_end);
            window.clear();
            window.extend(raw[lo..hi].iter().flatten());
            *slot = Some(median(&mut window));
        }
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
