//! Between-condition summaries over many dyads.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::entrainment::EntrainmentReport;
use crate::perception::{metric_value, EntrainmentMetric};
use crate::stats::{self, LeveneCenter, TestResult};
use crate::{Error, Feature, Result};

/// A dyad's report together with its condition label.
#[derive(Debug, Clone, Copy)]
pub struct LabeledReport<'a> {
    pub condition: &'a str,
    pub report: &'a EntrainmentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionFraction {
    pub condition: String,
    pub flagged: usize,
    pub total: usize,
    pub fraction: f64,
}

/// Share of dyads per condition whose `metric` on `feature` is significantly
/// positive. Only convergence and synchrony carry significance flags.
/// Conditions are returned in label order.
pub fn significant_positive_fraction(
    reports: &[LabeledReport<'_>],
    feature: Feature,
    metric: EntrainmentMetric,
) -> Result<Vec<ConditionFraction>> {
    if metric == EntrainmentMetric::ProximityMean {
        return Err(Error::InvalidArgument("proximity has no significance flag"));
    }
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for lr in reports {
        let flagged = lr.report.feature(feature).is_some_and(|f| match metric {
            EntrainmentMetric::Convergence => f.convergence.significant_positive(),
            EntrainmentMetric::Synchrony => f.synchrony.significant_positive(),
            EntrainmentMetric::ProximityMean => false,
        });
        let c = counts.entry(lr.condition).or_default();
        c.0 += usize::from(flagged);
        c.1 += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(condition, (flagged, total))| ConditionFraction {
            condition: condition.into(),
            flagged,
            total,
            fraction: flagged as f64 / total as f64,
        })
        .collect())
}

/// A test that ran, or why it could not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TestOutcome {
    Ok(TestResult),
    Absent { reason: String },
}

impl From<Result<TestResult>> for TestOutcome {
    fn from(r: Result<TestResult>) -> Self {
        match r {
            Ok(t) => TestOutcome::Ok(t),
            Err(e) => TestOutcome::Absent { reason: e.to_string() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub condition: String,
    pub n: usize,
    pub median: f64,
    pub shapiro: TestOutcome,
}

/// Kruskal-Wallis across conditions with the normality and
/// equal-variance checks recorded alongside (they never change the test).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionComparison {
    pub feature: Feature,
    pub metric: EntrainmentMetric,
    pub groups: Vec<GroupSummary>,
    pub levene: TestOutcome,
    pub kruskal_wallis: TestResult,
}

/// Compares `metric` on `feature` across condition labels.
///
/// Needs at least two conditions with at least two dyads that have the metric.
pub fn compare_conditions(
    reports: &[LabeledReport<'_>],
    feature: Feature,
    metric: EntrainmentMetric,
    levene_center: LeveneCenter,
) -> Result<ConditionComparison> {
    let mut by_condition: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for lr in reports {
        if let Some(v) = metric_value(lr.report, feature, metric) {
            by_condition.entry(lr.condition).or_default().push(v);
        }
    }
    if by_condition.len() < 2 || by_condition.values().any(|v| v.len() < 2) {
        return Err(Error::InsufficientData(
            "need at least two conditions with two dyads each".into(),
        ));
    }
    let groups: Vec<&[f64]> = by_condition.values().map(|v| v.as_slice()).collect();
    let summaries = by_condition
        .iter()
        .map(|(c, v)| GroupSummary {
            condition: (*c).into(),
            n: v.len(),
            median: median(v),
            shapiro: stats::shapiro_wilk(v).into(),
        })
        .collect();
    Ok(ConditionComparison {
        feature,
        metric,
        groups: summaries,
        levene: stats::levene(&groups, levene_center).into(),
        kruskal_wallis: stats::kruskal_wallis(&groups)?,
    })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
