//! Utterance-level prosodic features.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::prosody::{FrameTrack, TrackKind};
use crate::segmentation::{utterance_center, UtteranceSegment};
use crate::{Error, Feature, Result, Speaker};

/// One utterance's aggregated value of one feature, stamped at the utterance center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtteranceFeaturePoint {
    pub speaker: Speaker,
    pub feature: Feature,
    /// Seconds.
    pub time: f64,
    /// Hz for pitch, dB for intensity, z-units after standardization.
    pub value: f64,
    pub utterance: Option<UtteranceSegment>,
}

/// Mean and max pitch over voiced frames and mean and max intensity over
/// non-silent frames of every segment.
///
/// A frame belongs to a segment when its center lies in `[start, end)`.
/// Segments without voiced frames produce no pitch points. Output is grouped
/// by feature in [`Feature::ALL`] order, each group in segment order.
pub fn aggregate_features(
    pitch: &FrameTrack,
    intensity: &FrameTrack,
    segments: &[UtteranceSegment],
) -> Result<Vec<UtteranceFeaturePoint>> {
    if pitch.kind() != TrackKind::Pitch || intensity.kind() != TrackKind::Intensity || !pitch.same_time_base(intensity)
    {
        return Err(Error::MismatchedTracks);
    }
    let mut per_feature: [Vec<UtteranceFeaturePoint>; 4] = Default::default();
    for seg in segments {
        let center = utterance_center(seg);
        let frames = frame_range(pitch, seg);
        let point = |feature, value| UtteranceFeaturePoint {
            speaker: seg.speaker,
            feature,
            time: center,
            value,
            utterance: Some(*seg),
        };
        let voiced = frames.clone().filter_map(|i| pitch.value(i));
        if let Some((mean, max)) = mean_max(voiced) {
            per_feature[0].push(point(Feature::MeanPitch, mean));
            per_feature[1].push(point(Feature::MaxPitch, max));
        }
        let loud = frames
            .filter(|&i| intensity.active(i))
            .filter_map(|i| intensity.value(i));
        if let Some((mean, max)) = mean_max(loud) {
            per_feature[2].push(point(Feature::MeanIntensity, mean));
            per_feature[3].push(point(Feature::MaxIntensity, max));
        }
    }
    Ok(per_feature.into_iter().flatten().collect())
}

fn frame_range(track: &FrameTrack, seg: &UtteranceSegment) -> core::ops::Range<usize> {
    let n = track.len();
    let first = (0..n).position(|i| track.time(i) >= seg.start_time).unwrap_or(n);
    let end = (first..n)
        .position(|i| track.time(i) >= seg.end_time)
        .map_or(n, |p| first + p);
    first..end
}

fn mean_max(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut sum = 0.0;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let mut count = 0usize;
    for v in values {
        sum += v;
        max = max.max(v);
        min = min.min(v);
        count += 1;
    }
    (count > 0).then(|| {
        // rounding in the sum must not break min <= mean <= max
        let mean = if min == max {
            max
        } else {
            (sum / count as f64).clamp(min, max)
        };
        (mean, max)
    })
}

/// Points of one `(speaker, feature)` pair, in time order.
pub fn select(points: &[UtteranceFeaturePoint], speaker: Speaker, feature: Feature) -> Vec<UtteranceFeaturePoint> {
    let mut out: Vec<_> = points
        .iter()
        .filter(|p| p.speaker == speaker && p.feature == feature)
        .copied()
        .collect();
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    out
}
