//! Questionnaire scores and their correlation with entrainment.
//!
//! Scales are opaque: a record carries only the raw score and the maximum
//! attainable score, normalized to `[0, 1]`.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::entrainment::EntrainmentReport;
use crate::stats::{self, TestResult};
use crate::{Error, Feature, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionRecord {
    pub dyad_id: String,
    pub scale: String,
    pub raw_score: f64,
    pub max_score: f64,
    /// `raw_score / max_score`.
    pub normalized: f64,
}

impl PerceptionRecord {
    pub fn new(dyad_id: &str, scale: &str, raw_score: f64, max_score: f64) -> Result<Self> {
        if !(max_score > 0.0) || !max_score.is_finite() {
            return Err(Error::ScoreOutOfRange {
                raw: raw_score,
                max: max_score,
            });
        }
        if !(0.0..=max_score).contains(&raw_score) {
            return Err(Error::ScoreOutOfRange {
                raw: raw_score,
                max: max_score,
            });
        }
        Ok(PerceptionRecord {
            dyad_id: dyad_id.into(),
            scale: scale.into(),
            raw_score,
            max_score,
            normalized: raw_score / max_score,
        })
    }
}

/// Rejects repeated `(dyad, scale)` pairs.
pub fn check_unique(records: &[PerceptionRecord]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert((r.dyad_id.as_str(), r.scale.as_str())) {
            return Err(Error::DuplicateRecord {
                dyad: r.dyad_id.clone(),
                scale: r.scale.clone(),
            });
        }
    }
    Ok(())
}

/// Per-dyad scalar taken from an [`EntrainmentReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntrainmentMetric {
    /// Convergence r.
    Convergence,
    /// Synchrony r.
    Synchrony,
    ProximityMean,
}

impl EntrainmentMetric {
    pub const ALL: [EntrainmentMetric; 3] = [
        EntrainmentMetric::Convergence,
        EntrainmentMetric::Synchrony,
        EntrainmentMetric::ProximityMean,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntrainmentMetric::Convergence => "convergence",
            EntrainmentMetric::Synchrony => "synchrony",
            EntrainmentMetric::ProximityMean => "proximity_mean",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s.trim())
    }
}

/// The metric's value for `feature`, if it was computed.
pub fn metric_value(report: &EntrainmentReport, feature: Feature, metric: EntrainmentMetric) -> Option<f64> {
    let f = report.feature(feature)?;
    match metric {
        EntrainmentMetric::Convergence => f.convergence.result().map(|c| c.r),
        EntrainmentMetric::Synchrony => f.synchrony.result().map(|c| c.r),
        EntrainmentMetric::ProximityMean => f.proximity_mean,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionCorrelation {
    pub scale: String,
    pub feature: Feature,
    pub metric: EntrainmentMetric,
    pub test: TestResult,
    pub pairs: usize,
    /// Records on the scale whose dyad had no report or no metric value.
    pub excluded_records: usize,
    /// Reports with a metric value but no record on the scale.
    pub excluded_reports: usize,
}

/// Pearson correlation between normalized scores on `scale` and an
/// entrainment metric, paired by dyad id.
pub fn correlate_with_entrainment(
    records: &[PerceptionRecord],
    reports: &[EntrainmentReport],
    scale: &str,
    feature: Feature,
    metric: EntrainmentMetric,
) -> Result<PerceptionCorrelation> {
    let on_scale: Vec<&PerceptionRecord> = records.iter().filter(|r| r.scale == scale).collect();
    let mut scores = Vec::new();
    let mut values = Vec::new();
    for rec in &on_scale {
        let value = reports
            .iter()
            .find(|r| r.dyad_id == rec.dyad_id)
            .and_then(|r| metric_value(r, feature, metric));
        if let Some(v) = value {
            scores.push(rec.normalized);
            values.push(v);
        }
    }
    let pairs = scores.len();
    let with_metric = reports
        .iter()
        .filter(|r| metric_value(r, feature, metric).is_some())
        .count();
    if pairs < 3 {
        return Err(Error::InsufficientPairs { pairs });
    }
    Ok(PerceptionCorrelation {
        scale: scale.into(),
        feature,
        metric,
        test: stats::pearson(&scores, &values)?,
        pairs,
        excluded_records: on_scale.len() - pairs,
        excluded_reports: with_metric - pairs,
    })
}
