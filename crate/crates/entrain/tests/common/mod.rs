#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use entrain::wav::{write_wav, Encoding};
use entrain_core::audio::AudioBuffer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const SR: u32 = 16000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trend {
    /// The participant's pitch contour starts far from the tutor's and closes in.
    Converging,
    /// The reverse.
    Diverging,
    Independent,
}

/// Slow zero-mean contour with unit-ish amplitude.
struct Contour(Vec<(f64, f64, f64)>);

impl Contour {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        Contour(
            (0..3)
                .map(|_| {
                    (
                        rng.random_range(20.0..60.0),
                        rng.random_range(0.0..2.0 * PI),
                        rng.random_range(0.5..1.0),
                    )
                })
                .collect(),
        )
    }

    fn at(&self, t: f64) -> f64 {
        self.0
            .iter()
            .map(|(period, ph, a)| a * (2.0 * PI * t / period + ph).sin())
            .sum::<f64>()
            / 1.5
    }
}

fn tone(out: &mut [f64], start: f64, end: f64, f0: f64, amp: f64) {
    let (i0, i1) = (
        (start * SR as f64) as usize,
        ((end * SR as f64) as usize).min(out.len()),
    );
    let ramp = 0.02;
    for (i, s) in out.iter_mut().enumerate().take(i1).skip(i0) {
        let t = i as f64 / SR as f64;
        let edge = ((t - start).min(end - t) / ramp).clamp(0.0, 1.0);
        let env = 0.5 - 0.5 * (PI * edge).cos();
        let x: f64 = (1..=3)
            .map(|h| (2.0 * PI * h as f64 * f0 * (t - start)).sin() / h as f64)
            .sum();
        *s += amp * env * x / 1.84;
    }
}

/// Two turn-taking speakers on separate channels. Utterance pitch follows
/// slow contours; the participant follows the tutor's contour plus a
/// deviation whose size follows `trend`.
pub fn synth_dyad(seed: u64, seconds: f64, trend: Trend) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (seconds * SR as f64) as usize;
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    let (ca, cb) = (Contour::new(&mut rng), Contour::new(&mut rng));
    let mut t = 0.3;
    let mut speaker_a = true;
    while t < seconds - 2.0 {
        let len = rng.random_range(0.5..1.0);
        let w = match trend {
            Trend::Converging => (1.5 * t / seconds).min(1.0),
            Trend::Diverging => (1.0 - 1.5 * t / seconds).max(0.0),
            Trend::Independent => 0.0,
        };
        let amp_db: f64 = rng.random_range(-18.0..-8.0);
        let amp = 10f64.powf(amp_db / 20.0);
        if speaker_a {
            tone(&mut a, t, t + len, 120.0 * 2f64.powf(0.3 * ca.at(t)), amp);
        } else {
            // the tutor's contour plus an independent deviation that fades with w
            let mix = match trend {
                Trend::Independent => cb.at(t),
                _ => ca.at(t) + 1.5 * (1.0 - w) * cb.at(t),
            };
            tone(&mut b, t, t + len, 210.0 * 2f64.powf(0.3 * mix), amp);
        }
        t += len + rng.random_range(0.3..0.6);
        speaker_a = !speaker_a;
    }
    for s in a.iter_mut().chain(b.iter_mut()) {
        *s += rng.random_range(-3e-4..3e-4);
    }
    (a, b)
}

pub fn write_mono(path: &Path, samples: &[f64]) {
    write_wav(path, &AudioBuffer::new(samples.to_vec(), SR).unwrap(), Encoding::Pcm16).unwrap();
}

/// Writes `<id>_a.wav` and `<id>_b.wav` and returns the manifest entry.
pub fn write_dyad(dir: &Path, id: &str, condition: &str, audio: &(Vec<f64>, Vec<f64>)) -> Value {
    write_mono(&dir.join(format!("{id}_a.wav")), &audio.0);
    write_mono(&dir.join(format!("{id}_b.wav")), &audio.1);
    json!({
        "id": id,
        "condition": condition,
        "speaker_a": format!("{id}_a.wav"),
        "speaker_b": format!("{id}_b.wav"),
    })
}

pub fn write_manifest(dir: &Path, manifest: &Value) -> PathBuf {
    let path = dir.join("study.json");
    std::fs::write(&path, serde_json::to_vec_pretty(manifest).unwrap()).unwrap();
    path
}

/// Relative paths and sorted names of every file under `dir`.
pub fn inventory(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    out.sort();
    out
}

/// Bursts of white noise at random levels, on independent schedules per speaker.
pub fn noise_dyad(seed: u64, seconds: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (seconds * SR as f64) as usize;
    let mut channel = || {
        let mut out = vec![0.0; n];
        let mut t = rng.random_range(0.2..1.0);
        while t < seconds - 1.5 {
            let len = rng.random_range(0.5..1.0);
            let amp = 10f64.powf(rng.random_range(-18.0..-8.0) / 20.0);
            let (i0, i1) = ((t * SR as f64) as usize, ((t + len) * SR as f64) as usize);
            for s in &mut out[i0..i1] {
                *s = amp * rng.random_range(-1.0..1.0);
            }
            t += len + rng.random_range(0.8..2.0);
        }
        out
    };
    let a = channel();
    let b = channel();
    (a, b)
}
