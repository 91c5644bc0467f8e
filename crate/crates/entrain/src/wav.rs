//! RIFF/WAVE reading and writing (PCM 16-bit and IEEE float 32-bit).

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use entrain_core::audio::AudioBuffer;
use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Pcm16,
    Float32,
}

fn map_hound(path: &Path, e: hound::Error) -> Error {
    let path = path.to_path_buf();
    match e {
        // truncated input surfaces as a read error that did not come from the OS
        hound::Error::IoError(source)
            if source.raw_os_error().is_none()
                && matches!(
                    source.kind(),
                    std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other
                ) =>
        {
            Error::MalformedHeader {
                path,
                reason: source.to_string(),
            }
        }
        hound::Error::IoError(source) => Error::Io { path, source },
        hound::Error::FormatError(reason) => Error::MalformedHeader {
            path,
            reason: reason.into(),
        },
        hound::Error::Unsupported => Error::UnsupportedEncoding {
            path,
            reason: "format not supported".into(),
        },
        other => Error::UnsupportedEncoding {
            path,
            reason: other.to_string(),
        },
    }
}

/// Loads a WAV file as a mono buffer: 16-bit samples are divided by 32768,
/// channels are averaged per frame. No resampling.
pub fn load_wav(path: &Path) -> Result<AudioBuffer> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = WavReader::new(BufReader::new(file)).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if reader.len() == 0 {
        return Err(Error::EmptyAudio { path: path.into() });
    }
    let wrap = |source| Error::Analysis {
        path: path.into(),
        source,
    };
    match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => {
            let samples = reader
                .samples::<i16>()
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| map_hound(path, e))?;
            AudioBuffer::from_interleaved_i16(&samples, spec.channels, spec.sample_rate).map_err(wrap)
        }
        (SampleFormat::Float, 32) => {
            let samples = reader
                .samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| map_hound(path, e))?;
            AudioBuffer::from_interleaved(&samples, spec.channels, spec.sample_rate).map_err(wrap)
        }
        (format, bits) => Err(Error::UnsupportedEncoding {
            path: path.into(),
            reason: format!("{bits}-bit {format:?}"),
        }),
    }
}

/// Writes a mono WAV file. PCM samples are rounded to the nearest step of
/// 1/32768 and clipped to the 16-bit range.
pub fn write_wav(path: &Path, audio: &AudioBuffer, encoding: Encoding) -> Result<()> {
    let (bits_per_sample, sample_format) = match encoding {
        Encoding::Pcm16 => (16, SampleFormat::Int),
        Encoding::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate(),
        bits_per_sample,
        sample_format,
    };
    let mut w = WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in audio.samples() {
        let r = match encoding {
            Encoding::Pcm16 => w.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16),
            Encoding::Float32 => w.write_sample(s as f32),
        };
        r.map_err(|e| map_hound(path, e))?;
    }
    w.finalize().map_err(|e| map_hound(path, e))
}
