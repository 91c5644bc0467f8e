//! Mono sample buffers.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Lowest sample rate accepted anywhere in the toolkit.
pub const MIN_SAMPLE_RATE: u32 = 8000;

/// A mono signal with amplitudes in `[-1, 1]`.
///
/// Immutable once built; share it freely between analysis tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
    channel_count_original: u16,
}

impl AudioBuffer {
    /// Builds a mono buffer. Samples outside `[-1, 1]` are clamped.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::with_channels(samples, sample_rate, 1)
    }

    fn with_channels(mut samples: Vec<f64>, sample_rate: u32, channels: u16) -> Result<Self> {
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(Error::InvalidSampleRate(sample_rate));
        }
        if samples.is_empty() {
            return Err(Error::EmptyAudio);
        }
        for s in &mut samples {
            if !s.is_finite() {
                *s = 0.0;
            }
            *s = s.clamp(-1.0, 1.0);
        }
        Ok(AudioBuffer {
            samples,
            sample_rate,
            channel_count_original: channels,
        })
    }

    /// Mixes interleaved frames down to mono by the per-frame arithmetic mean.
    ///
    /// A trailing partial frame is ignored.
    pub fn from_interleaved(interleaved: &[f64], channels: u16, sample_rate: u32) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidArgument("channel count must be positive"));
        }
        let ch = usize::from(channels);
        let mono = interleaved
            .chunks_exact(ch)
            .map(|frame| frame.iter().sum::<f64>() / ch as f64)
            .collect();
        Self::with_channels(mono, sample_rate, channels)
    }

    /// Mixes interleaved signed 16-bit frames to mono, scaling by 1/32768.
    ///
    /// Channels are summed as integers before the single division, so
    /// identical channels reproduce the single-channel value exactly.
    pub fn from_interleaved_i16(interleaved: &[i16], channels: u16, sample_rate: u32) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidArgument("channel count must be positive"));
        }
        let ch = usize::from(channels);
        let scale = 32768.0 * ch as f64;
        let mono = interleaved
            .chunks_exact(ch)
            .map(|frame| frame.iter().map(|&s| i64::from(s)).sum::<i64>() as f64 / scale)
            .collect();
        Self::with_channels(mono, sample_rate, channels)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel_count_original(&self) -> u16 {
        self.channel_count_original
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Copy of this buffer with every sample multiplied by `gain` (clamped to `[-1, 1]`).
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        let samples = self.samples.iter().map(|s| s * gain).collect();
        Self::with_channels(samples, self.sample_rate, self.channel_count_original)
    }

    /// Copy of this buffer played backwards.
    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        AudioBuffer {
            samples,
            sample_rate: self.sample_rate,
            channel_count_original: self.channel_count_original,
        }
    }
}
