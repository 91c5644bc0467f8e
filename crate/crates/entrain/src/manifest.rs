//! Study manifest and layered analysis configuration.
//!
//! Settings are resolved as built-in defaults, then the study-level
//! `config` object, then the dyad's own `config` object, then command-line
//! flags. Config objects may be partial; nested objects merge key by key.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use entrain_core::entrainment::EntrainmentConfig;
use entrain_core::preprocess::ResampleConfig;
use entrain_core::prosody::FrameConfig;
use entrain_core::segmentation::VadConfig;
use entrain_core::stats::LeveneCenter;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamSettings {
    /// Seconds.
    pub window: f64,
    pub standardize: bool,
}

impl Default for StreamSettings {
    fn default() -> Self {
        StreamSettings {
            window: 120.0,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub frame: FrameConfig,
    pub vad: VadConfig,
    pub resample: ResampleConfig,
    pub entrainment: EntrainmentConfig,
    pub levene_center: LeveneCenter,
    pub stream: StreamSettings,
}

/// Command-line settings; each one set wins over every config layer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub grid_step: Option<f64>,
    pub k: Option<usize>,
    pub delta: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut AnalysisConfig) {
        if let Some(a) = self.alpha {
            cfg.entrainment.significance.alpha = a;
        }
        if let Some(s) = self.grid_step {
            cfg.resample.grid_step = s;
        }
        if let Some(k) = self.k {
            cfg.resample.k = k;
        }
        if let Some(d) = self.delta {
            cfg.entrainment.synchrony.delta = d;
        }
    }
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

/// Defaults overlaid with each layer in turn, then `flags`.
pub fn resolve_config(layers: &[&Value], flags: &Overrides) -> Result<AnalysisConfig> {
    let mut v = serde_json::to_value(AnalysisConfig::default()).expect("config serializes");
    for layer in layers {
        if !layer.is_null() {
            merge(&mut v, layer);
        }
    }
    let mut cfg: AnalysisConfig = serde_json::from_value(v).map_err(|e| Error::Manifest(format!("config: {e}")))?;
    flags.apply(&mut cfg);
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &AnalysisConfig) -> Result<()> {
    let a = cfg.entrainment.significance.alpha;
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Manifest(format!("alpha must lie in (0, 1), got {a}")));
    }
    if !(cfg.resample.grid_step > 0.0) || cfg.resample.k == 0 {
        return Err(Error::Manifest("grid_step must be positive and k at least 1".into()));
    }
    if !(cfg.stream.window >= cfg.resample.grid_step) {
        return Err(Error::Manifest(
            "stream window must cover at least one grid step".into(),
        ));
    }
    cfg.vad.validate()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadEntry {
    pub id: String,
    pub condition: String,
    /// Tutor audio.
    pub speaker_a: PathBuf,
    /// Participant audio.
    pub speaker_b: PathBuf,
    /// `speaker,start_s,end_s` CSV replacing automatic segmentation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments_a: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments_b: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub config: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub config: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perception_csv: Option<PathBuf>,
    #[serde(default)]
    pub dyads: Vec<DyadEntry>,
}

impl Manifest {
    /// Reads a manifest and makes every relative path relative to its directory.
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        m.resolve_paths(base);
        m.check()?;
        Ok(m)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.perception_csv.as_mut() {
            fix(p);
        }
        for d in &mut self.dyads {
            fix(&mut d.speaker_a);
            fix(&mut d.speaker_b);
            d.segments_a.as_mut().map(fix);
            d.segments_b.as_mut().map(fix);
        }
    }

    /// Dyad ids must be unique and usable as directory names; config objects
    /// must be JSON objects.
    pub fn check(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for d in &self.dyads {
            let safe = d.id.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c));
            if d.id.is_empty() || !safe || d.id.chars().all(|c| c == '.') {
                return Err(Error::Manifest(format!(
                    "dyad id {:?} must be letters, digits, '_', '-' or '.'",
                    d.id
                )));
            }
            if !seen.insert(d.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate dyad id {:?}", d.id)));
            }
        }
        let configs = std::iter::once(&self.config).chain(self.dyads.iter().map(|d| &d.config));
        for c in configs {
            if !(c.is_null() || c.is_object()) {
                return Err(Error::Manifest("config must be an object".into()));
            }
        }
        Ok(())
    }

    /// Study-level configuration (defaults, study layer, flags).
    pub fn study_config(&self, flags: &Overrides) -> Result<AnalysisConfig> {
        resolve_config(&[&self.config], flags)
    }

    pub fn dyad_config(&self, dyad: &DyadEntry, flags: &Overrides) -> Result<AnalysisConfig> {
        resolve_config(&[&self.config, &dyad.config], flags)
    }
}
