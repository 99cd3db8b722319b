//! End-to-end experiment stages driven by one [`ExperimentConfig`].
//!
//! Layout under the output directory:
//!
//! ```text
//! data/     samples_{train,test}.csv  sequences_{train,test}.csv  rollout_samples.csv  manifest.json
//! models/   predictor_<modality>.{json,bin}  tracker_<modality>.{json,bin}  manifest.json
//! logs/     <model>.json
//! reports/  eval_report.{json,txt}  confusion_<modality>.csv
//!           rollout_report.json  rollout_curves.csv  rollout_<approach>_first.csv
//!           summary.{json,txt}
//! ```
//!
//! Every JSON artifact records the config hash; CSV files are covered by the
//! SHA-256 entries of their directory manifest.

mod config;
mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::checkpoint::{load_predictor, load_tracker, save_predictor, save_tracker};
use crate::dataset::{
    build_sequences, io, label_histogram, split_flights, split_train_test, SensingSample, SequenceSample, NUM_BEAMS,
};
use crate::eval::{
    confusion_matrix, joint_topk_accuracy, r2_scores, resource_tradeoff, stratified_accuracy, topk_accuracy,
    TradeoffEntry,
};
use crate::predict::{training_fraction_sweep, training_subset, train_predictor, BeamPredictor};
use crate::scenario::synthesize_dataset;
use crate::track::{
    per_step_accuracy, recursive_rollout_batch, rollout_segments, sensed_rollout_batch, tracking_rankings,
    train_tracker, write_rollout_csv, BeamTracker, RolloutTrace, TrackerModality,
};

pub use config::{DatasetConfig, EvalConfig, ExperimentConfig, NamedSchedule, RolloutConfig};
pub use report::{
    render_eval, render_rollout, render_summary, BandMass, DatasetManifest, DatasetSummary, EvalReport,
    HorizonAccuracy, KAccuracy, ModelEntry, PredictionEval, RolloutCurve, RolloutReport, SummaryReport,
    SweepSeries, TrackingEval, TrainManifest, TrainingRecord, TrainingSummary,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing {artifact}; run `{stage}` first")]
    Dependency { stage: &'static str, artifact: String },
    #[error("{artifact} was produced by config {found}, current config is {expected}; rerun `{stage}`")]
    Provenance {
        stage: &'static str,
        artifact: String,
        expected: String,
        found: String,
    },
    #[error("{0}")]
    Runtime(String),
}

impl PipelineError {
    /// 2 config, 3 dependency or provenance, 4 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Dependency { .. } | PipelineError::Provenance { .. } => 3,
            PipelineError::Runtime(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

fn runtime<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> PipelineError + '_ {
    move |e| PipelineError::Runtime(format!("{context}: {e}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Generate,
    Train,
    Evaluate,
    Rollout,
    Report,
    All,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Rollout => "rollout",
            Stage::Report => "report",
            Stage::All => "all",
        }
    }
}

/// Runs `stage` (or every stage in order) into `config.output_dir`.
pub fn run(stage: Stage, config: &ExperimentConfig) -> Result<()> {
    config.validate()?;
    let out = config.output_dir.as_path();
    fs::create_dir_all(out).map_err(runtime("create output directory"))?;
    write_json(&out.join("config.json"), config)?;
    match stage {
        Stage::Generate => generate(config, out).map(drop),
        Stage::Train => train(config, out).map(drop),
        Stage::Evaluate => evaluate(config, out).map(drop),
        Stage::Rollout => rollout(config, out).map(drop),
        Stage::Report => report(config, out).map(drop),
        Stage::All => {
            generate(config, out)?;
            train(config, out)?;
            evaluate(config, out)?;
            rollout(config, out)?;
            report(config, out).map(drop)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(runtime("create directory"))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(runtime("serialize"))?;
    fs::write(path, text + "\n").map_err(runtime(&path.display().to_string()))
}

fn read_artifact<T: DeserializeOwned>(path: &Path, stage: &'static str) -> Result<T> {
    let bytes = fs::read(path).map_err(|_| PipelineError::Dependency {
        stage,
        artifact: path.display().to_string(),
    })?;
    serde_json::from_slice(&bytes).map_err(runtime(&path.display().to_string()))
}

fn check_hash(found: &str, config: &ExperimentConfig, artifact: &Path, stage: &'static str) -> Result<()> {
    let expected = config.hash();
    if found != expected {
        return Err(PipelineError::Provenance {
            stage,
            artifact: artifact.display().to_string(),
            expected,
            found: found.into(),
        });
    }
    Ok(())
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(runtime(&path.display().to_string()))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

pub fn seed_record(config: &ExperimentConfig) -> BTreeMap<String, u64> {
    let mut s = BTreeMap::new();
    s.insert("scenario".into(), config.scenario.seed);
    s.insert("gps".into(), config.scenario.gps.seed);
    s.insert("split".into(), config.dataset.split_seed);
    s.insert("rollout_corpus".into(), config.eval.rollout.corpus_seed);
    for p in &config.predictors {
        s.insert(format!("predictor_{}", p.modality.name()), p.seed);
    }
    for t in &config.trackers {
        s.insert(format!("tracker_{}", t.modality.name()), t.seed);
        if t.modality == TrackerModality::BeamOnly {
            s.insert("beam_embedding".into(), t.embedding_seed);
        }
    }
    s
}

fn data_dir(out: &Path) -> PathBuf {
    out.join("data")
}

fn models_dir(out: &Path) -> PathBuf {
    out.join("models")
}

fn reports_dir(out: &Path) -> PathBuf {
    out.join("reports")
}

/// Synthesizes the corpus and the rollout corpus, splits them and writes
/// the CSV files.
pub fn generate(config: &ExperimentConfig, out: &Path) -> Result<DatasetManifest> {
    let d = &config.dataset;
    info!("generate: synthesizing corpus (seed {})", config.scenario.seed);
    let table = synthesize_dataset(&config.scenario, config.scenario.seed).map_err(runtime("synthesize"))?;
    let samples = table.sensing_samples();
    let (train, test) = split_train_test(&samples, d.split_ratio, d.split_seed).map_err(runtime("split"))?;
    let train_flights = split_flights(&samples, d.split_ratio, d.split_seed).map_err(runtime("split flights"))?;
    let (seq_train_src, seq_test_src): (Vec<SensingSample>, Vec<SensingSample>) =
        samples.iter().cloned().partition(|s| train_flights.contains(&s.flight_id));
    let seq_train = build_sequences(&seq_train_src, d.r, d.r_prime);
    let seq_test = build_sequences(&seq_test_src, d.r, d.r_prime);

    let mut rollout_cfg = config.scenario.clone();
    rollout_cfg.seed = config.eval.rollout.corpus_seed;
    rollout_cfg.target_samples = Some(config.eval.rollout.corpus_samples);
    info!("generate: synthesizing rollout corpus (seed {})", rollout_cfg.seed);
    let rollout = synthesize_dataset(&rollout_cfg, rollout_cfg.seed)
        .map_err(runtime("synthesize rollout corpus"))?
        .sensing_samples();

    let dir = data_dir(out);
    fs::create_dir_all(&dir).map_err(runtime("create data directory"))?;
    let mut corpus = Vec::new();
    io::write_samples(&samples, &mut corpus).map_err(runtime("serialize corpus"))?;
    let files = [
        ("samples_train.csv", io::save_samples(&train, &dir.join("samples_train.csv"))),
        ("samples_test.csv", io::save_samples(&test, &dir.join("samples_test.csv"))),
        ("sequences_train.csv", io::save_sequences(&seq_train, &dir.join("sequences_train.csv"))),
        ("sequences_test.csv", io::save_sequences(&seq_test, &dir.join("sequences_test.csv"))),
        ("rollout_samples.csv", io::save_samples(&rollout, &dir.join("rollout_samples.csv"))),
    ];
    let mut hashes = BTreeMap::new();
    for (name, res) in files {
        res.map_err(runtime(name))?;
        hashes.insert(name.to_string(), sha256_file(&dir.join(name))?);
    }

    let summary = DatasetSummary {
        samples: samples.len(),
        flights: table.num_flights,
        train_samples: train.len(),
        test_samples: test.len(),
        train_flights: train_flights.into_iter().collect(),
        train_sequences: seq_train.len(),
        test_sequences: seq_test.len(),
        rollout_samples: rollout.len(),
        dataset_sha256: hex::encode(Sha256::digest(&corpus)),
        train_histogram: label_histogram(&train, NUM_BEAMS),
        test_histogram: label_histogram(&test, NUM_BEAMS),
    };
    info!(
        "generate: {} samples ({} train / {} test), {} / {} sequences, {} rollout samples",
        summary.samples,
        summary.train_samples,
        summary.test_samples,
        summary.train_sequences,
        summary.test_sequences,
        summary.rollout_samples
    );
    let manifest = DatasetManifest {
        config_hash: config.hash(),
        seeds: seed_record(config),
        summary,
        files: hashes,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Samples and sequences written by [`generate`].
pub struct LoadedData {
    pub manifest: DatasetManifest,
    pub train: Vec<SensingSample>,
    pub test: Vec<SensingSample>,
    pub train_sequences: Vec<SequenceSample>,
    pub test_sequences: Vec<SequenceSample>,
    pub rollout: Vec<SensingSample>,
}

pub fn load_data(config: &ExperimentConfig, out: &Path) -> Result<LoadedData> {
    let dir = data_dir(out);
    let manifest_path = dir.join("manifest.json");
    let manifest: DatasetManifest = read_artifact(&manifest_path, "generate")?;
    check_hash(&manifest.config_hash, config, &manifest_path, "generate")?;
    let need = |name: &str| {
        let p = dir.join(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(PipelineError::Dependency {
                stage: "generate",
                artifact: p.display().to_string(),
            })
        }
    };
    let train = io::load_samples(&need("samples_train.csv")?).map_err(runtime("samples_train.csv"))?;
    let test = io::load_samples(&need("samples_test.csv")?).map_err(runtime("samples_test.csv"))?;
    let all: Vec<SensingSample> = train.iter().chain(&test).cloned().collect();
    let r = config.dataset.r;
    let train_sequences =
        io::load_sequences(&need("sequences_train.csv")?, &all, r).map_err(runtime("sequences_train.csv"))?;
    let test_sequences =
        io::load_sequences(&need("sequences_test.csv")?, &all, r).map_err(runtime("sequences_test.csv"))?;
    let rollout = io::load_samples(&need("rollout_samples.csv")?).map_err(runtime("rollout_samples.csv"))?;
    Ok(LoadedData {
        manifest,
        train,
        test,
        train_sequences,
        test_sequences,
        rollout,
    })
}

fn train_record(out: &Path, config: &ExperimentConfig, name: &str, seed: u64, log: crate::predict::TrainingLog) -> Result<String> {
    let rel = format!("logs/{name}.json");
    write_json(
        &out.join(&rel),
        &TrainingRecord {
            config_hash: config.hash(),
            name: name.into(),
            seed,
            log,
        },
    )?;
    Ok(rel)
}

/// Trains every configured predictor and tracker and writes checkpoints.
pub fn train(config: &ExperimentConfig, out: &Path) -> Result<TrainManifest> {
    let data = load_data(config, out)?;
    let hash = config.hash();
    let mdir = models_dir(out);
    let mut models = Vec::new();
    for c in &config.predictors {
        let name = format!("predictor_{}", c.modality.name());
        info!("train: {name} ({} epochs)", c.epochs);
        let subset = training_subset(&data.train, c.train_fraction, c.seed);
        let (model, log) = train_predictor(&subset, c, c.seed).map_err(runtime(&name))?;
        save_predictor(&model, c.seed, &mdir, &name, &hash).map_err(runtime(&name))?;
        let log = train_record(out, config, &name, c.seed, log)?;
        models.push(ModelEntry {
            checkpoint: format!("models/{name}.json"),
            name,
            kind: "predictor".into(),
            modality: c.modality.name().into(),
            seed: c.seed,
            log,
        });
    }
    for c in &config.trackers {
        let name = format!("tracker_{}", c.modality.name());
        info!("train: {name} ({} epochs)", c.epochs);
        let (model, log) = train_tracker(&data.train_sequences, c, c.seed).map_err(runtime(&name))?;
        save_tracker(&model, c.seed, &mdir, &name, &hash).map_err(runtime(&name))?;
        let log = train_record(out, config, &name, c.seed, log)?;
        models.push(ModelEntry {
            checkpoint: format!("models/{name}.json"),
            name,
            kind: "tracker".into(),
            modality: c.modality.name().into(),
            seed: c.seed,
            log,
        });
    }
    let manifest = TrainManifest {
        config_hash: hash,
        models,
    };
    write_json(&mdir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

struct LoadedModels {
    predictors: Vec<(String, BeamPredictor)>,
    trackers: Vec<(String, BeamTracker)>,
}

fn load_models(config: &ExperimentConfig, out: &Path) -> Result<LoadedModels> {
    let path = models_dir(out).join("manifest.json");
    let manifest: TrainManifest = read_artifact(&path, "train")?;
    check_hash(&manifest.config_hash, config, &path, "train")?;
    let mut predictors = Vec::new();
    let mut trackers = Vec::new();
    for m in &manifest.models {
        let p = out.join(&m.checkpoint);
        if !p.exists() {
            return Err(PipelineError::Dependency {
                stage: "train",
                artifact: p.display().to_string(),
            });
        }
        if m.kind == "predictor" {
            let (model, man) = load_predictor(&p).map_err(runtime(&m.name))?;
            check_hash(&man.config_hash, config, &p, "train")?;
            predictors.push((m.name.clone(), model));
        } else {
            let (model, man) = load_tracker(&p).map_err(runtime(&m.name))?;
            check_hash(&man.config_hash, config, &p, "train")?;
            trackers.push((m.name.clone(), model));
        }
    }
    Ok(LoadedModels {
        predictors,
        trackers,
    })
}

fn k_row(ks: &[usize], f: impl Fn(usize) -> Result<f64>) -> Result<Vec<KAccuracy>> {
    ks.iter()
        .map(|&k| f(k).map(|accuracy| KAccuracy { k, accuracy }))
        .collect()
}

pub fn evaluate_predictor(
    name: &str,
    model: &BeamPredictor,
    test: &[SensingSample],
    eval: &EvalConfig,
) -> Result<PredictionEval> {
    let mut used = Vec::new();
    let mut rankings = Vec::new();
    for (s, p) in test.iter().zip(model.predict_batch(test)) {
        if let Some(p) = p {
            used.push(s);
            rankings.push(p.ranking);
        }
    }
    if used.is_empty() {
        return Err(PipelineError::Runtime(format!("{name}: no evaluable test samples")));
    }
    let truths: Vec<usize> = used.iter().map(|s| s.label).collect();
    let top1: Vec<usize> = rankings.iter().map(|r| r[0]).collect();
    let err = |e: crate::eval::EvalError| PipelineError::Runtime(format!("{name}: {e}"));
    let topk = k_row(&eval.k, |k| topk_accuracy(&rankings, &truths, k).map_err(err))?;
    let predicted: Vec<f64> = used.iter().zip(&top1).map(|(s, &b)| s.power32[b]).collect();
    let optimal: Vec<f64> = used.iter().map(|s| s.power32[s.label]).collect();
    let r2 = r2_scores(&predicted, &optimal).map_err(err)?;
    let confusion = confusion_matrix(&truths, &top1, NUM_BEAMS).map_err(err)?;
    let band_mass = eval
        .confusion_bands
        .iter()
        .map(|&band| BandMass {
            band,
            pct: confusion.band_mass(band),
        })
        .collect();
    let heights: Vec<f64> = used.iter().map(|s| s.height).collect();
    let speeds: Vec<f64> = used.iter().map(|s| s.speed).collect();
    Ok(PredictionEval {
        model: name.into(),
        modality: model.config.modality.name().into(),
        evaluated: used.len(),
        topk,
        r2,
        band_mass,
        height_strata: stratified_accuracy(&heights, &rankings, &truths, &eval.height_strata).map_err(err)?,
        speed_strata: stratified_accuracy(&speeds, &rankings, &truths, &eval.speed_strata).map_err(err)?,
        confusion,
    })
}

pub fn evaluate_tracker(name: &str, model: &BeamTracker, test: &[SequenceSample], ks: &[usize]) -> Result<TrackingEval> {
    let (rankings, truths) = tracking_rankings(model, test).map_err(runtime(name))?;
    if truths.is_empty() {
        return Err(PipelineError::Runtime(format!("{name}: no evaluable test sequences")));
    }
    let err = |e: crate::eval::EvalError| PipelineError::Runtime(format!("{name}: {e}"));
    let horizons = 1..=model.config.horizon;
    let joint = horizons
        .clone()
        .map(|h| {
            Ok(HorizonAccuracy {
                horizon: h,
                topk: k_row(ks, |k| joint_topk_accuracy(&rankings, &truths, h, k).map_err(err))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let marginal = horizons
        .map(|h| {
            let r: Vec<Vec<usize>> = rankings.iter().map(|x| x[h - 1].clone()).collect();
            let t: Vec<usize> = truths.iter().map(|x| x[h - 1]).collect();
            Ok(HorizonAccuracy {
                horizon: h,
                topk: k_row(ks, |k| topk_accuracy(&r, &t, k).map_err(err))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrackingEval {
        model: name.into(),
        modality: model.config.modality.name().into(),
        evaluated: truths.len(),
        joint,
        marginal,
    })
}

/// Scores every checkpoint on the test split.
pub fn evaluate(config: &ExperimentConfig, out: &Path) -> Result<EvalReport> {
    let data = load_data(config, out)?;
    let models = load_models(config, out)?;
    let rdir = reports_dir(out);
    fs::create_dir_all(&rdir).map_err(runtime("create reports directory"))?;
    let mut prediction = Vec::new();
    for (name, model) in &models.predictors {
        info!("evaluate: {name}");
        let ev = evaluate_predictor(name, model, &data.test, &config.eval)?;
        fs::write(rdir.join(format!("confusion_{}.csv", ev.modality)), ev.confusion.to_csv())
            .map_err(runtime("confusion csv"))?;
        prediction.push(ev);
    }
    let mut tracking = Vec::new();
    for (name, model) in &models.trackers {
        info!("evaluate: {name}");
        tracking.push(evaluate_tracker(name, model, &data.test_sequences, &config.eval.k)?);
    }
    let mut fraction_sweep = Vec::new();
    if !config.eval.fraction_sweep.is_empty() {
        for c in &config.predictors {
            info!("evaluate: training-fraction sweep for {}", c.modality.name());
            let rows = training_fraction_sweep(&data.train, &data.test, &config.eval.fraction_sweep, c, c.seed)
                .map_err(runtime("fraction sweep"))?;
            fraction_sweep.push(SweepSeries {
                modality: c.modality.name().into(),
                rows,
            });
        }
    }
    let report = EvalReport {
        config_hash: config.hash(),
        seeds: seed_record(config),
        dataset: data.manifest.summary.clone(),
        prediction,
        tracking,
        fraction_sweep,
    };
    write_json(&rdir.join("eval_report.json"), &report)?;
    fs::write(rdir.join("eval_report.txt"), render_eval(&report)).map_err(runtime("eval_report.txt"))?;
    Ok(report)
}

/// Segments of the rollout corpus every tracker can read, in corpus order.
pub fn usable_segments(samples: &[SensingSample], len: usize, max: Option<usize>) -> Vec<&[SensingSample]> {
    let mut segs: Vec<&[SensingSample]> = rollout_segments(samples, len)
        .into_iter()
        .filter(|s| s.iter().all(|x| x.visual.visible))
        .collect();
    if let Some(m) = max {
        segs.truncate(m);
    }
    segs
}

fn curve(approach: &str, tracker: &str, steps: usize, traces: &[RolloutTrace], ks: &[usize]) -> RolloutCurve {
    RolloutCurve {
        approach: approach.into(),
        tracker: tracker.into(),
        beam_training_steps: steps,
        per_step: ks.iter().map(|&k| per_step_accuracy(traces, k)).collect(),
    }
}

fn write_first_trace(dir: &Path, approach: &str, traces: &[RolloutTrace]) -> Result<()> {
    if let Some(t) = traces.first() {
        let f = fs::File::create(dir.join(format!("rollout_{approach}_first.csv"))).map_err(runtime("rollout csv"))?;
        write_rollout_csv(t, std::io::BufWriter::new(f)).map_err(runtime("rollout csv"))?;
    }
    Ok(())
}

/// Runs every schedule with the beam-only tracker and the sensed rollout
/// for the position and vision trackers over the rollout corpus.
pub fn rollout(config: &ExperimentConfig, out: &Path) -> Result<RolloutReport> {
    let data = load_data(config, out)?;
    let models = load_models(config, out)?;
    let rc = &config.eval.rollout;
    let schedules = config.schedules()?;
    let segs = usable_segments(&data.rollout, rc.horizon + config.dataset.r, rc.max_segments);
    if segs.is_empty() {
        return Err(PipelineError::Runtime("rollout corpus yields no full segments".into()));
    }
    info!("rollout: {} segments of {} steps", segs.len(), rc.horizon);
    let rdir = reports_dir(out);
    fs::create_dir_all(&rdir).map_err(runtime("create reports directory"))?;
    let mut curves = Vec::new();
    for (name, tracker) in &models.trackers {
        if tracker.modality() == TrackerModality::BeamOnly {
            for (label, schedule) in &schedules {
                let traces = recursive_rollout_batch(tracker, &segs, schedule).map_err(runtime(name))?;
                write_first_trace(&rdir, label, &traces)?;
                curves.push(curve(label, name, schedule.beam_training_steps(), &traces, &rc.k));
            }
        } else {
            let traces = sensed_rollout_batch(tracker, &segs, rc.horizon).map_err(runtime(name))?;
            let label = tracker.modality().name();
            write_first_trace(&rdir, label, &traces)?;
            curves.push(curve(label, name, 0, &traces, &rc.k));
        }
    }
    let entries: Vec<TradeoffEntry> = curves
        .iter()
        .map(|c| TradeoffEntry {
            approach: c.approach.clone(),
            beam_training_steps: c.beam_training_steps,
            accuracy: c.per_step.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect(),
        })
        .collect();
    let report = RolloutReport {
        config_hash: config.hash(),
        horizon: rc.horizon,
        segments: segs.len(),
        k: rc.k.clone(),
        tradeoff: resource_tradeoff(&entries, rc.horizon),
        curves,
    };
    let mut w = csv::Writer::from_path(rdir.join("rollout_curves.csv")).map_err(runtime("rollout_curves.csv"))?;
    let mut header = vec!["step".to_string()];
    for c in &report.curves {
        header.extend(rc.k.iter().map(|k| format!("{}_top{k}", c.approach)));
    }
    w.write_record(&header).map_err(runtime("rollout_curves.csv"))?;
    for s in 0..rc.horizon {
        let mut row = vec![(s + 1).to_string()];
        for c in &report.curves {
            row.extend(c.per_step.iter().map(|v| format!("{:.4}", v[s])));
        }
        w.write_record(&row).map_err(runtime("rollout_curves.csv"))?;
    }
    w.flush().map_err(runtime("rollout_curves.csv"))?;
    write_json(&rdir.join("rollout_report.json"), &report)?;
    Ok(report)
}

/// Merges the stage outputs into `summary.json` after checking they all
/// come from the current config.
pub fn report(config: &ExperimentConfig, out: &Path) -> Result<SummaryReport> {
    let rdir = reports_dir(out);
    let data_path = data_dir(out).join("manifest.json");
    let data: DatasetManifest = read_artifact(&data_path, "generate")?;
    check_hash(&data.config_hash, config, &data_path, "generate")?;
    let models_path = models_dir(out).join("manifest.json");
    let models: TrainManifest = read_artifact(&models_path, "train")?;
    check_hash(&models.config_hash, config, &models_path, "train")?;
    let eval_path = rdir.join("eval_report.json");
    let evaluation: EvalReport = read_artifact(&eval_path, "evaluate")?;
    check_hash(&evaluation.config_hash, config, &eval_path, "evaluate")?;
    let rollout_path = rdir.join("rollout_report.json");
    let rollout: RolloutReport = read_artifact(&rollout_path, "rollout")?;
    check_hash(&rollout.config_hash, config, &rollout_path, "rollout")?;

    let mut training = Vec::new();
    for m in &models.models {
        let path = out.join(&m.log);
        let rec: TrainingRecord = read_artifact(&path, "train")?;
        check_hash(&rec.config_hash, config, &path, "train")?;
        let last = rec.log.epochs.last();
        training.push(TrainingSummary {
            name: rec.name,
            samples: rec.log.samples,
            epochs: rec.log.epochs.len(),
            final_loss: last.map(|e| e.loss),
            final_train_accuracy: last.map(|e| e.accuracy),
            warnings: rec.log.warnings,
        });
    }
    let generated_at = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let summary = SummaryReport {
        generated_at,
        config_hash: config.hash(),
        seeds: seed_record(config),
        dataset: data.summary,
        training,
        evaluation,
        rollout,
    };
    write_json(&rdir.join("summary.json"), &summary)?;
    fs::write(rdir.join("summary.txt"), render_summary(&summary)).map_err(runtime("summary.txt"))?;
    info!("report: {}", rdir.join("summary.json").display());
    Ok(summary)
}

/// Parses a summary JSON and drops `generated_at`, for comparing reruns.
pub fn summary_without_timestamp(text: &str) -> Result<serde_json::Value> {
    let mut v: serde_json::Value = serde_json::from_str(text).map_err(runtime("summary json"))?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("generated_at");
    }
    Ok(v)
}
