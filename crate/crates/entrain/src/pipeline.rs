//! End-to-end study analysis: per-dyad extraction and metrics, then
//! between-condition summaries, perception correlations and output files.

use std::fs;
use std::path::Path;

use entrain_core::entrainment::{analyze_inputs, proximity, EntrainmentReport, FeatureInput};
use entrain_core::features::{aggregate_features, select, UtteranceFeaturePoint};
use entrain_core::perception::{
    correlate_with_entrainment, EntrainmentMetric, PerceptionCorrelation, PerceptionRecord,
};
use entrain_core::preprocess::{standardize_and_resample, ResampledTrack, TimeGrid};
use entrain_core::prosody::{pitch_autocorrelation, rms_intensity};
use entrain_core::segmentation::{detect_utterances, UtteranceSegment};
use entrain_core::stats::power_pearson;
use entrain_core::study::{
    compare_conditions, significant_positive_fraction, ConditionComparison, ConditionFraction, LabeledReport,
};
use entrain_core::{Feature, Speaker};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csvio::{load_perception_csv, read_segments};
use crate::error::{io_err, Error, Result};
use crate::manifest::{AnalysisConfig, DyadEntry, Manifest, Overrides};
use crate::wav::load_wav;

/// One speaker's utterances and feature points.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerFeatures {
    pub speaker: Speaker,
    pub segments: Vec<UtteranceSegment>,
    pub points: Vec<UtteranceFeaturePoint>,
}

/// Audio to utterance-level feature points for one speaker. Segments come
/// from `segments_csv` when given (rows for other speakers are ignored),
/// otherwise from the intensity VAD.
pub fn extract_speaker(
    audio: &Path,
    segments_csv: Option<&Path>,
    speaker: Speaker,
    cfg: &AnalysisConfig,
) -> Result<SpeakerFeatures> {
    let buf = load_wav(audio)?;
    let wrap = |source| Error::Analysis {
        path: audio.into(),
        source,
    };
    let intensity = rms_intensity(&buf, &cfg.frame).map_err(wrap)?;
    let pitch = pitch_autocorrelation(&buf, &cfg.frame).map_err(wrap)?;
    let segments = match segments_csv {
        Some(path) => {
            let mine: Vec<UtteranceSegment> = read_segments(path)?
                .into_iter()
                .filter(|s| s.speaker == speaker)
                .collect();
            if mine.is_empty() {
                return Err(Error::Parse {
                    path: path.into(),
                    reason: format!("no segments for speaker {speaker}"),
                });
            }
            mine
        }
        None => detect_utterances(&intensity, speaker, &cfg.vad).map_err(wrap)?,
    };
    let points = aggregate_features(&pitch, &intensity, &segments).map_err(wrap)?;
    Ok(SpeakerFeatures {
        speaker,
        segments,
        points,
    })
}

/// Both speakers of a dyad.
pub fn extract_dyad(entry: &DyadEntry, cfg: &AnalysisConfig) -> Result<[SpeakerFeatures; 2]> {
    let (a, b) = rayon::join(
        || extract_speaker(&entry.speaker_a, entry.segments_a.as_deref(), Speaker::A, cfg),
        || extract_speaker(&entry.speaker_b, entry.segments_b.as_deref(), Speaker::B, cfg),
    );
    Ok([a?, b?])
}

/// Shared grid over every utterance center of both speakers.
pub fn dyad_grid(speakers: &[SpeakerFeatures; 2], cfg: &AnalysisConfig) -> entrain_core::Result<TimeGrid> {
    let centers = speakers
        .iter()
        .flat_map(|s| s.segments.iter().map(entrain_core::segmentation::utterance_center));
    TimeGrid::spanning(centers, cfg.resample.grid_step)
}

/// Standardized, resampled tracks per feature, or why a feature is missing.
pub fn resample_dyad(speakers: &[SpeakerFeatures; 2], cfg: &AnalysisConfig) -> Vec<FeatureInput> {
    let grid = dyad_grid(speakers, cfg);
    Feature::ALL
        .iter()
        .map(|&f| {
            let pair = match &grid {
                Ok(grid) => {
                    let side = |s: &SpeakerFeatures| {
                        standardize_and_resample(&select(&s.points, s.speaker, f), grid, &cfg.resample)
                            .map_err(|e| format!("speaker {}: {e}", s.speaker))
                    };
                    side(&speakers[0]).and_then(|a| Ok((a, side(&speakers[1])?)))
                }
                Err(e) => Err(format!("no time grid: {e}")),
            };
            (f, pair)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadStatus {
    Ok,
    Error,
}

/// Plot series for one feature: both tracks and their proximity.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePlot {
    pub feature: Feature,
    pub tracks: Option<(ResampledTrack, ResampledTrack)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadResult {
    pub dyad_id: String,
    pub condition: String,
    pub status: DyadStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    /// Utterance counts for speakers A and B.
    pub utterances: [usize; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub report: Option<EntrainmentReport>,
    #[serde(skip)]
    pub plots: Vec<FeaturePlot>,
}

/// Runs one dyad through every stage. Failures become an error-status result.
pub fn analyze_session(entry: &DyadEntry, cfg: &AnalysisConfig) -> DyadResult {
    let failed = |e: Error| DyadResult {
        dyad_id: entry.id.clone(),
        condition: entry.condition.clone(),
        status: DyadStatus::Error,
        error: Some(e.to_string()),
        utterances: [0, 0],
        report: None,
        plots: Feature::ALL
            .iter()
            .map(|&feature| FeaturePlot { feature, tracks: None })
            .collect(),
    };
    let speakers = match extract_dyad(entry, cfg) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let inputs = resample_dyad(&speakers, cfg);
    let plots = inputs
        .iter()
        .map(|(feature, pair)| FeaturePlot {
            feature: *feature,
            tracks: pair.as_ref().ok().cloned(),
        })
        .collect();
    let report = analyze_inputs(&entry.id, inputs, &cfg.entrainment);
    DyadResult {
        dyad_id: entry.id.clone(),
        condition: entry.condition.clone(),
        status: DyadStatus::Ok,
        error: None,
        utterances: [speakers[0].segments.len(), speakers[1].segments.len()],
        report: Some(report),
        plots,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub dyads: usize,
    /// Dyads that produced a report.
    pub analyzed: usize,
    pub entrained: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionEntry {
    pub feature: Feature,
    pub metric: EntrainmentMetric,
    pub conditions: Vec<ConditionFraction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok(T),
    Absent { reason: String },
}

impl<T> From<entrain_core::Result<T>> for Outcome<T> {
    fn from(r: entrain_core::Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Absent { reason: e.to_string() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub feature: Feature,
    pub metric: EntrainmentMetric,
    pub result: Outcome<ConditionComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedCorrelation {
    #[serde(flatten)]
    pub correlation: PerceptionCorrelation,
    /// Two-sided power at the observed `r` and pair count, at the study alpha.
    pub power: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionEntry {
    pub scale: String,
    pub feature: Feature,
    pub metric: EntrainmentMetric,
    pub result: Outcome<AnnotatedCorrelation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: AnalysisConfig,
    pub dyads: Vec<DyadResult>,
    pub conditions: Vec<ConditionSummary>,
    pub fractions: Vec<FractionEntry>,
    pub comparisons: Vec<ComparisonEntry>,
    pub perception: Vec<PerceptionEntry>,
}

/// Options for [`run_study`].
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub overrides: Overrides,
    /// Worker threads for dyads; 0 means one per available core.
    pub jobs: usize,
}

/// Analyzes every dyad of the manifest (in parallel) and aggregates.
///
/// Only manifest, configuration and perception-file problems are fatal;
/// dyad failures are recorded in the dyad's result.
pub fn run_study(manifest: &Manifest, opts: &RunOptions) -> Result<StudyReport> {
    let config = manifest.study_config(&opts.overrides)?;
    let configs = manifest
        .dyads
        .iter()
        .map(|d| manifest.dyad_config(d, &opts.overrides))
        .collect::<Result<Vec<_>>>()?;
    let records = match &manifest.perception_csv {
        Some(p) => load_perception_csv(p)?,
        None => Vec::new(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Manifest(format!("thread pool: {e}")))?;
    let dyads: Vec<DyadResult> = pool.install(|| {
        manifest
            .dyads
            .par_iter()
            .zip(&configs)
            .map(|(d, cfg)| analyze_session(d, cfg))
            .collect()
    });
    Ok(summarize(config, dyads, &records))
}

/// Aggregates finished dyad results into a study report.
pub fn summarize(config: AnalysisConfig, dyads: Vec<DyadResult>, records: &[PerceptionRecord]) -> StudyReport {
    let labeled: Vec<LabeledReport<'_>> = dyads
        .iter()
        .filter_map(|d| {
            d.report.as_ref().map(|report| LabeledReport {
                condition: &d.condition,
                report,
            })
        })
        .collect();

    let mut conditions: Vec<ConditionSummary> = Vec::new();
    let mut labels: Vec<&str> = dyads.iter().map(|d| d.condition.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    for label in labels {
        let members = dyads.iter().filter(|d| d.condition == label);
        conditions.push(ConditionSummary {
            condition: label.into(),
            dyads: members.clone().count(),
            analyzed: members.clone().filter(|d| d.report.is_some()).count(),
            entrained: members
                .filter(|d| d.report.as_ref().is_some_and(|r| r.entrained))
                .count(),
        });
    }

    let mut fractions = Vec::new();
    let mut comparisons = Vec::new();
    for &feature in &Feature::ALL {
        for metric in [EntrainmentMetric::Convergence, EntrainmentMetric::Synchrony] {
            if let Ok(conditions) = significant_positive_fraction(&labeled, feature, metric) {
                fractions.push(FractionEntry {
                    feature,
                    metric,
                    conditions,
                });
            }
        }
        for metric in EntrainmentMetric::ALL {
            comparisons.push(ComparisonEntry {
                feature,
                metric,
                result: compare_conditions(&labeled, feature, metric, config.levene_center).into(),
            });
        }
    }

    let reports: Vec<EntrainmentReport> = labeled.iter().map(|l| l.report.clone()).collect();
    let mut scales: Vec<&str> = records.iter().map(|r| r.scale.as_str()).collect();
    scales.sort_unstable();
    scales.dedup();
    let alpha = config.entrainment.significance.alpha;
    let mut perception = Vec::new();
    for scale in scales {
        for &feature in &Feature::ALL {
            for metric in EntrainmentMetric::ALL {
                let result = correlate_with_entrainment(records, &reports, scale, feature, metric).map(|c| {
                    let power = power_pearson(c.test.statistic, c.pairs, alpha).ok();
                    AnnotatedCorrelation { correlation: c, power }
                });
                perception.push(PerceptionEntry {
                    scale: scale.into(),
                    feature,
                    metric,
                    result: result.into(),
                });
            }
        }
    }

    StudyReport {
        config,
        dyads,
        conditions,
        fractions,
        comparisons,
        perception,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `study_report.json`, `dyads.csv` and `plots/<dyad>/<feature>.csv`.
pub fn emit_outputs(report: &StudyReport, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut json = serde_json::to_vec_pretty(report).expect("report serializes");
    json.push(b'\n');
    write_file(&out_dir.join("study_report.json"), &json)?;
    write_dyads_csv(report, &out_dir.join("dyads.csv"))?;
    for d in &report.dyads {
        let dir = out_dir.join("plots").join(&d.dyad_id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for plot in &d.plots {
            write_plot(plot, &dir.join(format!("{}.csv", plot.feature.as_str())))?;
        }
    }
    Ok(())
}

fn write_dyads_csv(report: &StudyReport, path: &Path) -> Result<()> {
    let mut out = String::from("dyad_id,condition,status,feature,metric,value,n,p,significant_positive,lag,reason\n");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for d in &report.dyads {
        let status = match d.status {
            DyadStatus::Ok => "ok",
            DyadStatus::Error => "error",
        };
        for &feature in &Feature::ALL {
            let fe = d.report.as_ref().and_then(|r| r.feature(feature));
            for metric in EntrainmentMetric::ALL {
                let mut row = vec![
                    d.dyad_id.clone(),
                    d.condition.clone(),
                    status.to_string(),
                    feature.as_str().to_string(),
                    metric.as_str().to_string(),
                ];
                let outcome = fe.map(|fe| match metric {
                    EntrainmentMetric::Convergence => Some(&fe.convergence),
                    EntrainmentMetric::Synchrony => Some(&fe.synchrony),
                    EntrainmentMetric::ProximityMean => None,
                });
                let (value, n, p, flag, lag, reason) = match (fe, outcome) {
                    (Some(fe), Some(None)) => (
                        fmt_opt(fe.proximity_mean),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        if fe.proximity_mean.is_none() {
                            absent_reason(&fe.convergence)
                        } else {
                            String::new()
                        },
                    ),
                    (Some(_), Some(Some(m))) => match m.result() {
                        Some(c) => (
                            c.r.to_string(),
                            c.n.to_string(),
                            c.p_value.to_string(),
                            c.significant_positive.to_string(),
                            fmt_opt(c.lag),
                            String::new(),
                        ),
                        None => (
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            absent_reason(m),
                        ),
                    },
                    _ => (
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        d.error.clone().unwrap_or_default(),
                    ),
                };
                row.extend([value, n, p, flag, lag, reason]);
                w.write_record(&row).map_err(|e| Error::Parse {
                    path: path.into(),
                    reason: e.to_string(),
                })?;
            }
        }
    }
    let body = w.into_inner().map_err(|e| io_err(path)(e.into_error()))?;
    out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
    write_file(path, out.as_bytes())
}

fn absent_reason(m: &entrain_core::entrainment::MetricOutcome) -> String {
    match m {
        entrain_core::entrainment::MetricOutcome::Absent { reason } => reason.clone(),
        _ => String::new(),
    }
}

/// `time_s,a_z,b_z,proximity`; header only when the feature is missing.
fn write_plot(plot: &FeaturePlot, path: &Path) -> Result<()> {
    let mut out = String::from("time_s,a_z,b_z,proximity\n");
    if let Some((a, b)) = &plot.tracks {
        let d = proximity(a, b)?;
        for (((t, x), y), p) in a.grid.times().zip(&a.values).zip(&b.values).zip(&d.values) {
            out.push_str(&format!("{t},{x},{y},{p}\n"));
        }
    }
    write_file(path, out.as_bytes())
}
