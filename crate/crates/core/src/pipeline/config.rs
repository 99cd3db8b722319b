use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::eval::{StrataSpec, REPORTED_K};
use crate::predict::{Modality, PredictorConfig};
use crate::scenario::ScenarioConfig;
use crate::track::{RolloutSchedule, TrackerConfig, TrackerModality};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub split_ratio: f64,
    pub r: usize,
    pub r_prime: usize,
    pub split_seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            split_ratio: 0.7,
            r: 8,
            r_prime: 3,
            split_seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSchedule {
    pub name: String,
    pub gt_steps: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutConfig {
    pub horizon: usize,
    pub k: Vec<usize>,
    pub schedules: Vec<NamedSchedule>,
    /// Seed and size of the separate corpus the segments are cut from.
    pub corpus_seed: u64,
    pub corpus_samples: usize,
    pub max_segments: Option<usize>,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        let named = |name: &str, steps: &[&str]| NamedSchedule {
            name: name.into(),
            gt_steps: steps.iter().map(|s| s.to_string()).collect(),
        };
        Self {
            horizon: 50,
            k: vec![1, 3],
            schedules: vec![
                named("per_step", &["1-50"]),
                named("intermittent", &["1-8", "13-20", "33-40"]),
                named("initial_only", &["1-8"]),
            ],
            corpus_seed: 2024,
            corpus_samples: 15_000,
            max_segments: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k: Vec<usize>,
    pub confusion_bands: Vec<usize>,
    pub height_strata: StrataSpec,
    pub speed_strata: StrataSpec,
    /// Training fractions for the sweep; empty skips it.
    pub fraction_sweep: Vec<f64>,
    pub rollout: RolloutConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: REPORTED_K.to_vec(),
            confusion_bands: vec![1, 2, 3],
            height_strata: StrataSpec::height(),
            speed_strata: StrataSpec::speed(),
            fraction_sweep: Vec::new(),
            rollout: RolloutConfig::default(),
        }
    }
}

/// Everything one experiment needs. Every random operation draws from a
/// seed field of one of the blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub dataset: DatasetConfig,
    pub predictors: Vec<PredictorConfig>,
    pub trackers: Vec<TrackerConfig>,
    pub eval: EvalConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            dataset: DatasetConfig::default(),
            predictors: Modality::ALL
                .iter()
                .enumerate()
                .map(|(i, &m)| PredictorConfig {
                    seed: 100 + i as u64,
                    ..PredictorConfig::mlp(m)
                })
                .collect(),
            trackers: TrackerModality::ALL
                .iter()
                .enumerate()
                .map(|(i, &m)| TrackerConfig {
                    seed: 200 + i as u64,
                    ..TrackerConfig::for_modality(m)
                })
                .collect(),
            eval: EvalConfig::default(),
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| PipelineError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON with `output_dir` blanked, so the same
    /// experiment hashes equally wherever it is written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        hex::encode(Sha256::digest(serde_json::to_vec(&c).expect("config serializes")))
    }

    /// Re-derives every seed from `seed`: scenario `seed`, GPS `seed + 1`,
    /// split `seed + 2`, predictor `i` `seed + 10 + i`, tracker `i`
    /// `seed + 20 + i` (embedding `seed + 30`), rollout corpus `seed + 40`.
    pub fn apply_seed_override(&mut self, seed: u64) {
        self.scenario.seed = seed;
        self.scenario.gps.seed = seed.wrapping_add(1);
        self.dataset.split_seed = seed.wrapping_add(2);
        for (i, p) in self.predictors.iter_mut().enumerate() {
            p.seed = seed.wrapping_add(10 + i as u64);
        }
        for (i, t) in self.trackers.iter_mut().enumerate() {
            t.seed = seed.wrapping_add(20 + i as u64);
            t.embedding_seed = seed.wrapping_add(30);
        }
        self.eval.rollout.corpus_seed = seed.wrapping_add(40);
    }

    pub fn schedules(&self) -> Result<Vec<(String, RolloutSchedule)>, PipelineError> {
        let r = &self.eval.rollout;
        r.schedules
            .iter()
            .enumerate()
            .map(|(i, s)| {
                RolloutSchedule::parse(r.horizon, self.dataset.r, &s.gt_steps)
                    .map(|sch| (s.name.clone(), sch))
                    .map_err(|e| PipelineError::Config(format!("eval.rollout.schedules[{i}].gt_steps: {e}")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let field = |path: String, msg: String| Err(PipelineError::Config(format!("{path}: {msg}")));
        if let Err(e) = self.scenario.validate() {
            return field("scenario".into(), e.to_string());
        }
        let d = &self.dataset;
        if !(d.split_ratio > 0.0 && d.split_ratio < 1.0) {
            return field("dataset.split_ratio".into(), format!("{} outside (0, 1)", d.split_ratio));
        }
        if d.r == 0 || d.r_prime == 0 {
            return field("dataset.r".into(), "r and r_prime must be positive".into());
        }
        if d.r_prime != 3 {
            return field("dataset.r_prime".into(), "sequence files carry exactly 3 futures".into());
        }
        for (i, p) in self.predictors.iter().enumerate() {
            if let Err(e) = p.validate() {
                return field(format!("predictors[{i}]"), e.to_string());
            }
            if self.predictors[..i].iter().any(|q| q.modality == p.modality) {
                return field(format!("predictors[{i}].modality"), "duplicate modality".into());
            }
        }
        for (i, t) in self.trackers.iter().enumerate() {
            if let Err(e) = t.validate() {
                return field(format!("trackers[{i}]"), e.to_string());
            }
            if t.window != d.r || t.horizon > d.r_prime {
                return field(
                    format!("trackers[{i}].window"),
                    format!("window/horizon must match dataset r = {} and r_prime = {}", d.r, d.r_prime),
                );
            }
            if self.trackers[..i].iter().any(|q| q.modality == t.modality) {
                return field(format!("trackers[{i}].modality"), "duplicate modality".into());
            }
        }
        let e = &self.eval;
        if e.k.is_empty() || e.k.iter().any(|&k| k == 0 || k > crate::dataset::NUM_BEAMS) {
            return field("eval.k".into(), format!("{:?} must be non-empty values in 1..=32", e.k));
        }
        if let Some(f) = e.fraction_sweep.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return field("eval.fraction_sweep".into(), format!("{f} outside (0, 1]"));
        }
        let r = &e.rollout;
        if r.horizon == 0 {
            return field("eval.rollout.horizon".into(), "must be positive".into());
        }
        if r.k.is_empty() || r.k.iter().any(|&k| k == 0 || k > crate::dataset::NUM_BEAMS) {
            return field("eval.rollout.k".into(), format!("{:?} must be non-empty values in 1..=32", r.k));
        }
        if r.corpus_samples == 0 {
            return field("eval.rollout.corpus_samples".into(), "must be positive".into());
        }
        self.schedules()?;
        Ok(())
    }
}
