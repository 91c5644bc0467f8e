//! Newline-delimited JSON window events for one dyad.

use std::io::Write;

use entrain_core::entrainment::streaming::{DyadStream, StreamConfig, StreamPoint, StreamingEstimator, WindowMetrics};
use entrain_core::features::UtteranceFeaturePoint;
use entrain_core::Feature;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::manifest::AnalysisConfig;
use crate::pipeline::SpeakerFeatures;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamEvent {
    pub t: f64,
    pub feature: Feature,
    pub window_convergence_r: Option<f64>,
    pub window_convergence_p: Option<f64>,
    pub window_synchrony_r: Option<f64>,
    pub window_synchrony_p: Option<f64>,
}

impl From<WindowMetrics> for StreamEvent {
    fn from(m: WindowMetrics) -> Self {
        StreamEvent {
            t: m.t,
            feature: m.feature,
            window_convergence_r: m.convergence.map(|c| c.r),
            window_convergence_p: m.convergence.map(|c| c.p_value),
            window_synchrony_r: m.synchrony.map(|c| c.r),
            window_synchrony_p: m.synchrony.map(|c| c.p_value),
        }
    }
}

pub fn stream_config(cfg: &AnalysisConfig, t0: Option<f64>) -> StreamConfig {
    StreamConfig {
        grid_step: cfg.resample.grid_step,
        window: cfg.stream.window,
        k: cfg.resample.k,
        delta: cfg.entrainment.synchrony.delta,
        standardize: cfg.stream.standardize,
        t0,
        significance: cfg.entrainment.significance,
    }
}

/// Both speakers' points in arrival order: by time, then speaker, then feature.
pub fn arrival_order(speakers: &[SpeakerFeatures; 2]) -> Vec<UtteranceFeaturePoint> {
    let mut pts: Vec<UtteranceFeaturePoint> = speakers.iter().flat_map(|s| s.points.iter().copied()).collect();
    pts.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then(a.speaker.cmp(&b.speaker))
            .then(a.feature.cmp(&b.feature))
    });
    pts
}

/// Feeds every point through one estimator per feature, sharing a grid
/// origin at the first point, and calls `emit` for each window event with
/// the estimator state right after that grid step.
pub fn run_stream(
    speakers: &[SpeakerFeatures; 2],
    cfg: &AnalysisConfig,
    mut emit: impl FnMut(&StreamingEstimator, WindowMetrics) -> Result<()>,
) -> Result<DyadStream> {
    let pts = arrival_order(speakers);
    let mut stream = DyadStream::new(stream_config(cfg, pts.first().map(|p| p.time)))?;
    for p in &pts {
        let point = StreamPoint {
            time: p.time,
            value: p.value,
            speaker: p.speaker,
        };
        stream.update_with(p.feature, point, &mut emit)?;
    }
    Ok(stream)
}

/// Writes one JSON object per line for every window event.
pub fn write_events(speakers: &[SpeakerFeatures; 2], cfg: &AnalysisConfig, out: &mut impl Write) -> Result<()> {
    run_stream(speakers, cfg, |_, m| {
        serde_json::to_writer(&mut *out, &StreamEvent::from(m))
            .map_err(std::io::Error::from)
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|source| crate::Error::Io {
                path: "<stdout>".into(),
                source,
            })
    })?;
    Ok(())
}
