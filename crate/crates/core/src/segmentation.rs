//! Utterance segmentation by hysteresis voice activity detection.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::prosody::{FrameTrack, TrackKind};
use crate::{Error, Result, Speaker};

/// Thresholds in dB re full scale, durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VadConfig {
    pub open_db: f64,
    pub close_db: f64,
    pub min_speech: f64,
    pub min_gap: f64,
    pub min_utterance: f64,
    pub merge_gap: f64,
}

impl Default for VadConfig {
    fn default() -> Self {
        VadConfig {
            open_db: -30.0,
            close_db: -35.0,
            min_speech: 0.100,
            min_gap: 0.250,
            min_utterance: 0.300,
            merge_gap: 0.150,
        }
    }
}

impl VadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.close_db <= self.open_db) {
            return Err(Error::InvalidConfig("close_db must not exceed open_db".into()));
        }
        let durations = [self.min_speech, self.min_gap, self.min_utterance, self.merge_gap];
        if durations.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidConfig("VAD durations must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtteranceSegment {
    pub speaker: Speaker,
    pub start_time: f64,
    pub end_time: f64,
}

impl UtteranceSegment {
    pub fn new(speaker: Speaker, start_time: f64, end_time: f64) -> Result<Self> {
        if !(start_time < end_time) || !start_time.is_finite() || !end_time.is_finite() {
            return Err(Error::InvalidArgument("segment needs start_time < end_time"));
        }
        Ok(UtteranceSegment {
            speaker,
            start_time,
            end_time,
        })
    }

    pub fn duration(&self) -> f64 {
        self.end_time - self.start_time
    }

    /// Whether a frame centered at `t` belongs to the segment (`[start, end)`).
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_time && t < self.end_time
    }
}

/// Midpoint of an utterance, the timestamp its feature values are anchored to.
pub fn utterance_center(seg: &UtteranceSegment) -> f64 {
    (seg.start_time + seg.end_time) / 2.0
}

/// Sorts one speaker's segments and checks they do not overlap.
pub fn validate_segments(segments: &mut [UtteranceSegment]) -> Result<()> {
    segments.sort_by(|a, b| a.speaker.cmp(&b.speaker).then(a.start_time.total_cmp(&b.start_time)));
    for w in segments.windows(2) {
        if w[0].speaker == w[1].speaker && w[1].start_time < w[0].end_time {
            return Err(Error::InvalidArgument("overlapping segments for one speaker"));
        }
    }
    Ok(())
}

/// Hysteresis VAD over an intensity track.
///
/// Speech opens once the level stays above `open_db` for `min_speech` and
/// closes once it stays below `close_db` for `min_gap`. Segments closer than
/// `merge_gap` are merged, then segments shorter than `min_utterance` dropped.
/// Boundaries sit half a hop outside the first and last speech frame centers.
pub fn detect_utterances(intensity: &FrameTrack, speaker: Speaker, vad: &VadConfig) -> Result<Vec<UtteranceSegment>> {
    vad.validate()?;
    if intensity.kind() != TrackKind::Intensity {
        return Err(Error::InvalidArgument("detect_utterances needs an intensity track"));
    }
    let step = intensity.step();
    let half = step / 2.0;
    // run lengths in frames; tolerance absorbs float error in d / step
    let frames_for = |d: f64| (libm::ceil(d / step - 1e-9) as usize).max(1);
    let open_frames = frames_for(vad.min_speech);
    let gap_frames = frames_for(vad.min_gap);

    let level = |i: usize| intensity.value(i).unwrap_or(f64::NEG_INFINITY);
    let n = intensity.len();
    let mut raw: Vec<(usize, usize)> = Vec::new(); // inclusive frame ranges
    let mut i = 0;
    while i < n {
        // silence: look for a run above open_db
        if level(i) <= vad.open_db {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < n && level(i) > vad.open_db {
            i += 1;
        }
        if i - run_start < open_frames {
            continue;
        }
        // speech: extend until a long enough run below close_db
        let mut last_speech = i - 1;
        let mut quiet = 0;
        while i < n {
            if level(i) < vad.close_db {
                quiet += 1;
                if quiet >= gap_frames {
                    break;
                }
            } else {
                quiet = 0;
                last_speech = i;
            }
            i += 1;
        }
        raw.push((run_start, last_speech));
        i = last_speech + 1;
        // skip the closing quiet run
        while i < n && level(i) <= vad.open_db && level(i) < vad.close_db {
            i += 1;
        }
    }

    let mut merged: Vec<UtteranceSegment> = Vec::with_capacity(raw.len());
    for (a, b) in raw {
        let start = intensity.time(a) - half;
        let end = intensity.time(b) + half;
        match merged.last_mut() {
            Some(prev) if start - prev.end_time < vad.merge_gap => prev.end_time = end,
            _ => merged.push(UtteranceSegment {
                speaker,
                start_time: start,
                end_time: end,
            }),
        }
    }
    merged.retain(|s| s.duration() >= vad.min_utterance - 1e-9);
    Ok(merged)
}
