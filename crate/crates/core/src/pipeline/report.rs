use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eval::{format_table, pct, ConfusionMatrix, R2Scores, StratumRow, TradeoffRow};
use crate::predict::{SweepRow, TrainingLog};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub samples: usize,
    pub flights: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub train_flights: Vec<usize>,
    pub train_sequences: usize,
    pub test_sequences: usize,
    pub rollout_samples: usize,
    pub dataset_sha256: String,
    pub train_histogram: Vec<usize>,
    pub test_histogram: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub summary: DatasetSummary,
    /// File name to SHA-256.
    pub files: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub name: String,
    pub kind: String,
    pub modality: String,
    pub seed: u64,
    pub checkpoint: String,
    pub log: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainManifest {
    pub config_hash: String,
    pub models: Vec<ModelEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub config_hash: String,
    pub name: String,
    pub seed: u64,
    pub log: TrainingLog,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KAccuracy {
    pub k: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandMass {
    pub band: usize,
    pub pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionEval {
    pub model: String,
    pub modality: String,
    pub evaluated: usize,
    pub topk: Vec<KAccuracy>,
    pub r2: R2Scores,
    pub band_mass: Vec<BandMass>,
    pub height_strata: Vec<StratumRow>,
    pub speed_strata: Vec<StratumRow>,
    pub confusion: ConfusionMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonAccuracy {
    pub horizon: usize,
    pub topk: Vec<KAccuracy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingEval {
    pub model: String,
    pub modality: String,
    pub evaluated: usize,
    /// Correct only when every future up to the horizon is in its top-k.
    pub joint: Vec<HorizonAccuracy>,
    /// Each future scored on its own.
    pub marginal: Vec<HorizonAccuracy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSeries {
    pub modality: String,
    pub rows: Vec<SweepRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub dataset: DatasetSummary,
    pub prediction: Vec<PredictionEval>,
    pub tracking: Vec<TrackingEval>,
    pub fraction_sweep: Vec<SweepSeries>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutCurve {
    pub approach: String,
    pub tracker: String,
    pub beam_training_steps: usize,
    /// `per_step[i][s]` is the top-`k[i]` accuracy at step `s + 1`.
    pub per_step: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutReport {
    pub config_hash: String,
    pub horizon: usize,
    pub segments: usize,
    pub k: Vec<usize>,
    pub curves: Vec<RolloutCurve>,
    pub tradeoff: Vec<TradeoffRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub name: String,
    pub samples: usize,
    pub epochs: usize,
    pub final_loss: Option<f64>,
    pub final_train_accuracy: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    /// Unix seconds; the only field allowed to differ between reruns.
    pub generated_at: u64,
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub dataset: DatasetSummary,
    pub training: Vec<TrainingSummary>,
    pub evaluation: EvalReport,
    pub rollout: RolloutReport,
}

fn f2(x: f64) -> String {
    format!("{x:.2}")
}

pub fn render_eval(report: &EvalReport) -> String {
    let d = &report.dataset;
    let mut out = format!(
        "config {}\nsamples {} (train {}, test {}) from {} flights; sequences train {} test {}\n\n",
        report.config_hash, d.samples, d.train_samples, d.test_samples, d.flights, d.train_sequences, d.test_sequences
    );
    if let Some(first) = report.prediction.first() {
        let mut headers = vec!["predictor".to_string(), "n".to_string()];
        headers.extend(first.topk.iter().map(|k| format!("top-{}", k.k)));
        headers.extend(["R2 id".to_string(), "R2 fit".to_string()]);
        headers.extend(first.band_mass.iter().map(|b| format!("|d|<={}", b.band)));
        let rows: Vec<Vec<String>> = report
            .prediction
            .iter()
            .map(|p| {
                let mut r = vec![p.model.clone(), p.evaluated.to_string()];
                r.extend(p.topk.iter().map(|k| f2(k.accuracy)));
                r.push(p.r2.identity.map_or("undefined".into(), |v| format!("{v:.4}")));
                r.push(p.r2.fitted.map_or("undefined".into(), |v| format!("{v:.4}")));
                r.extend(p.band_mass.iter().map(|b| f2(b.pct)));
                r
            })
            .collect();
        let h: Vec<&str> = headers.iter().map(String::as_str).collect();
        out += &format_table(&h, &rows);
        out.push('\n');

        for p in &report.prediction {
            for (name, strata) in [("height", &p.height_strata), ("speed", &p.speed_strata)] {
                let rows: Vec<Vec<String>> = strata
                    .iter()
                    .map(|s| {
                        let mut r = vec![s.label.clone(), s.count.to_string()];
                        match &s.topk {
                            Some(v) => r.extend(v.iter().map(|&x| f2(x))),
                            None => r.extend(std::iter::repeat_n("n/a".to_string(), 4)),
                        }
                        r
                    })
                    .collect();
                out += &format!("{} by {name}\n", p.model);
                out += &format_table(&[name, "n", "top-1", "top-2", "top-3", "top-5"], &rows);
                out.push('\n');
            }
        }
    }
    for t in &report.tracking {
        let ks: Vec<usize> = t.joint.first().map_or(Vec::new(), |h| h.topk.iter().map(|k| k.k).collect());
        let mut headers = vec!["future".to_string()];
        headers.extend(ks.iter().map(|k| format!("joint top-{k}")));
        headers.extend(ks.iter().map(|k| format!("top-{k}")));
        let rows: Vec<Vec<String>> = t
            .joint
            .iter()
            .zip(&t.marginal)
            .map(|(j, m)| {
                let mut r = vec![j.horizon.to_string()];
                r.extend(j.topk.iter().map(|k| f2(k.accuracy)));
                r.extend(m.topk.iter().map(|k| f2(k.accuracy)));
                r
            })
            .collect();
        out += &format!("{} ({} sequences)\n", t.model, t.evaluated);
        let h: Vec<&str> = headers.iter().map(String::as_str).collect();
        out += &format_table(&h, &rows);
        out.push('\n');
    }
    for s in &report.fraction_sweep {
        let rows: Vec<Vec<String>> = s
            .rows
            .iter()
            .map(|r| {
                vec![
                    f2(100.0 * r.fraction),
                    r.train_samples.to_string(),
                    pct(r.topk.first().copied()),
                    r.note.clone().unwrap_or_default(),
                ]
            })
            .collect();
        out += &format!("training fraction sweep, {}\n", s.modality);
        out += &format_table(&["fraction %", "n", "top-1", "note"], &rows);
        out.push('\n');
    }
    out
}

pub fn render_rollout(report: &RolloutReport) -> String {
    let mut out = format!("{} segments of {} steps\n", report.segments, report.horizon);
    let mut headers = vec!["approach".to_string(), "beam training %".to_string()];
    headers.extend(report.k.iter().map(|k| format!("top-{k}")));
    let rows: Vec<Vec<String>> = report
        .tradeoff
        .iter()
        .map(|t| {
            let mut r = vec![t.approach.clone(), f2(t.beam_training_pct)];
            r.extend(t.accuracy.iter().map(|&a| f2(a)));
            r
        })
        .collect();
    let h: Vec<&str> = headers.iter().map(String::as_str).collect();
    out += &format_table(&h, &rows);
    out
}

pub fn render_summary(s: &SummaryReport) -> String {
    let rows: Vec<Vec<String>> = s
        .training
        .iter()
        .map(|t| {
            vec![
                t.name.clone(),
                t.samples.to_string(),
                t.epochs.to_string(),
                t.final_loss.map_or("n/a".into(), |v| format!("{v:.4}")),
                pct(t.final_train_accuracy),
            ]
        })
        .collect();
    let mut out = format_table(&["model", "n", "epochs", "final loss", "train acc"], &rows);
    out.push('\n');
    out += &render_eval(&s.evaluation);
    out += &render_rollout(&s.rollout);
    out
}
