#![allow(dead_code)]

use entrain_core::features::UtteranceFeaturePoint;
use entrain_core::preprocess::{ResampledTrack, TimeGrid};
use entrain_core::{Feature, Speaker};

pub fn points(tv: &[(f64, f64)]) -> Vec<UtteranceFeaturePoint> {
    tv.iter()
        .map(|&(time, value)| UtteranceFeaturePoint {
            speaker: Speaker::A,
            feature: Feature::MeanPitch,
            time,
            value,
            utterance: None,
        })
        .collect()
}

/// O(n^2) nearest-neighbour mean: rank every point by (distance, time),
/// keep the first k plus anything tied with the k-th in both keys, then sum
/// the kept points in time order.
pub fn brute_knn(tv: &[(f64, f64)], t: f64, k: usize) -> f64 {
    let mut sorted = tv.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranked: Vec<usize> = (0..sorted.len()).collect();
    ranked.sort_by(|&i, &j| {
        let (di, dj) = ((sorted[i].0 - t).abs(), (sorted[j].0 - t).abs());
        di.total_cmp(&dj)
            .then(sorted[i].0.total_cmp(&sorted[j].0))
            .then(i.cmp(&j))
    });
    let mut keep: Vec<usize> = ranked.iter().copied().take(k).collect();
    if let Some(&last) = keep.last() {
        let key = ((sorted[last].0 - t).abs(), sorted[last].0);
        for &i in ranked.iter().skip(k) {
            if ((sorted[i].0 - t).abs(), sorted[i].0) == key {
                keep.push(i);
            }
        }
    }
    keep.sort_unstable();
    keep.iter().map(|&i| sorted[i].1).sum::<f64>() / keep.len() as f64
}

pub fn track(speaker: Speaker, grid: TimeGrid, values: Vec<f64>) -> ResampledTrack {
    ResampledTrack::new(speaker, Feature::MeanPitch, grid, values).unwrap()
}

pub fn sine(freq: f64, amp: f64, seconds: f64, sr: u32) -> Vec<f64> {
    let n = (seconds * sr as f64).round() as usize;
    (0..n)
        .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin())
        .collect()
}

/// Direct two-pass product-moment correlation.
pub fn direct_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}
