//! Future-beam tracking with a stacked GRU over an 8-step observation window:
//! beam-only (frozen Gaussian beam embedding), GPS-aided and camera-aided.

mod rollout;

use log::{debug, warn};
use ndarray::Array2;
use neuralkit::{
    softmax_cross_entropy_batch, Adam, AdamConfig, EmbeddingTable, GruMasks, GruNet, NnError,
    Parameterized, StepDecay,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Feature, NormalizationSpec, SensingSample, SequenceSample, NUM_BEAMS};
use crate::predict::{EpochLog, PredictionOutput, TrainingLog};

pub use rollout::{
    per_step_accuracy, recursive_rollout, recursive_rollout_batch, rollout_segments, sensed_rollout,
    sensed_rollout_batch, write_rollout_csv, Provenance, RolloutSchedule, RolloutStep, RolloutTrace,
    ROLLOUT_HEADER,
};

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("no usable training sequences")]
    Empty,
    #[error("invalid tracker config: {0}")]
    Config(String),
    #[error("rejected: {0}")]
    Rejected(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
}

pub type Result<T> = std::result::Result<T, TrackError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackerModality {
    BeamOnly,
    Position,
    Vision,
}

impl TrackerModality {
    pub const ALL: [TrackerModality; 3] = [
        TrackerModality::BeamOnly,
        TrackerModality::Position,
        TrackerModality::Vision,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrackerModality::BeamOnly => "beam_only",
            TrackerModality::Position => "position",
            TrackerModality::Vision => "vision",
        }
    }
}

impl std::str::FromStr for TrackerModality {
    type Err = TrackError;

    fn from_str(s: &str) -> Result<Self> {
        TrackerModality::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| TrackError::Config(format!("unknown tracker modality {s:?}")))
    }
}

/// Omitted fields take the [`TrackerConfig::for_modality`] value for the given
/// modality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "TrackerConfigSpec")]
pub struct TrackerConfig {
    pub modality: TrackerModality,
    pub window: usize,
    pub horizon: usize,
    /// Embedding width for beam-only, feature count otherwise.
    pub input_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub classes: usize,
    pub dropout: f64,
    pub lr: f64,
    pub decay_epochs: Vec<usize>,
    pub decay_factor: f64,
    pub batch: usize,
    pub epochs: usize,
    pub embedding_seed: u64,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackerConfigSpec {
    #[serde(default = "beam_only")]
    modality: TrackerModality,
    window: Option<usize>,
    horizon: Option<usize>,
    input_dim: Option<usize>,
    hidden: Option<usize>,
    layers: Option<usize>,
    classes: Option<usize>,
    dropout: Option<f64>,
    lr: Option<f64>,
    decay_epochs: Option<Vec<usize>>,
    decay_factor: Option<f64>,
    batch: Option<usize>,
    epochs: Option<usize>,
    embedding_seed: Option<u64>,
    seed: Option<u64>,
}

fn beam_only() -> TrackerModality {
    TrackerModality::BeamOnly
}

impl From<TrackerConfigSpec> for TrackerConfig {
    fn from(s: TrackerConfigSpec) -> Self {
        let d = TrackerConfig::for_modality(s.modality);
        Self {
            modality: s.modality,
            window: s.window.unwrap_or(d.window),
            horizon: s.horizon.unwrap_or(d.horizon),
            input_dim: s.input_dim.unwrap_or(d.input_dim),
            hidden: s.hidden.unwrap_or(d.hidden),
            layers: s.layers.unwrap_or(d.layers),
            classes: s.classes.unwrap_or(d.classes),
            dropout: s.dropout.unwrap_or(d.dropout),
            lr: s.lr.unwrap_or(d.lr),
            decay_epochs: s.decay_epochs.unwrap_or(d.decay_epochs),
            decay_factor: s.decay_factor.unwrap_or(d.decay_factor),
            batch: s.batch.unwrap_or(d.batch),
            epochs: s.epochs.unwrap_or(d.epochs),
            embedding_seed: s.embedding_seed.unwrap_or(d.embedding_seed),
            seed: s.seed.unwrap_or(d.seed),
        }
    }
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self::for_modality(TrackerModality::BeamOnly)
    }
}

impl TrackerConfig {
    /// The tracking table column for `modality`.
    pub fn for_modality(modality: TrackerModality) -> Self {
        let beam = modality == TrackerModality::BeamOnly;
        Self {
            modality,
            window: 8,
            horizon: 3,
            input_dim: if beam { 20 } else { 2 },
            hidden: 128,
            layers: 2,
            classes: NUM_BEAMS,
            dropout: 0.5,
            lr: if beam { 1e-3 } else { 1e-2 },
            decay_epochs: vec![40, 120],
            decay_factor: 0.1,
            batch: 512,
            epochs: 200,
            embedding_seed: 11,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TrackError::Config(m));
        if self.window == 0 || self.horizon == 0 || self.hidden == 0 || self.layers == 0 {
            return bad("window, horizon, hidden and layers must be positive".into());
        }
        if self.modality != TrackerModality::BeamOnly && self.input_dim != 2 {
            return bad(format!("{} inputs are 2-dimensional", self.modality.name()));
        }
        if self.input_dim == 0 || self.classes < 2 {
            return bad("input_dim must be positive and classes at least 2".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || self.batch == 0 || self.epochs == 0 {
            return bad("lr, batch and epochs must be positive".into());
        }
        Ok(())
    }
}

/// `num_beams × dim` table of i.i.d. standard normal entries. Never trained.
pub fn build_beam_embedding_table(num_beams: usize, dim: usize, seed: u64) -> EmbeddingTable<f64> {
    EmbeddingTable::gaussian(num_beams, dim, seed)
}

/// Turns one time step into a GRU input vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackerInputs {
    pub modality: TrackerModality,
    pub table: Option<EmbeddingTable<f64>>,
    pub norm: NormalizationSpec,
}

impl TrackerInputs {
    pub fn width(&self) -> usize {
        match &self.table {
            Some(t) if self.modality == TrackerModality::BeamOnly => t.dim(),
            _ => 2,
        }
    }

    /// Input for `sample`, with `beam` standing in for its label on the
    /// beam-only path. `None` when the camera cannot see the drone.
    pub fn step(&self, sample: &SensingSample, beam: usize) -> Option<Vec<f64>> {
        match self.modality {
            TrackerModality::BeamOnly => {
                let table = self.table.as_ref().expect("beam-only inputs carry a table");
                table.lookup(beam).ok().map(|row| row.to_vec())
            }
            TrackerModality::Position => Some(vec![
                self.norm.apply(Feature::GpsEast, sample.gps[0]),
                self.norm.apply(Feature::GpsNorth, sample.gps[1]),
            ]),
            TrackerModality::Vision => sample
                .visual
                .visible
                .then(|| vec![sample.visual.center_u, sample.visual.center_v]),
        }
    }
}

/// One input vector per window step, or `None` if any frame is unusable.
pub fn assemble_sequence_inputs(seq: &SequenceSample, inputs: &TrackerInputs) -> Option<Vec<Vec<f64>>> {
    seq.window.iter().map(|s| inputs.step(s, s.label)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamTracker {
    pub config: TrackerConfig,
    pub inputs: TrackerInputs,
    pub net: GruNet<f32>,
}

/// Packs `rows[i][t]` into one `batch × width` matrix per time step.
fn pack_steps(rows: &[&Vec<Vec<f64>>], steps: usize, width: usize) -> Vec<Array2<f32>> {
    (0..steps)
        .map(|t| {
            let flat: Vec<f32> = rows
                .iter()
                .flat_map(|r| r[t].iter().map(|&v| v as f32))
                .collect();
            Array2::from_shape_vec((rows.len(), width), flat).expect("uniform input width")
        })
        .collect()
}

impl BeamTracker {
    pub fn modality(&self) -> TrackerModality {
        self.config.modality
    }

    /// Per-head outputs for a batch of assembled windows.
    pub fn predict_batch(&self, windows: &[&Vec<Vec<f64>>]) -> Result<Vec<Vec<PredictionOutput>>> {
        let mut out = Vec::with_capacity(windows.len());
        for chunk in windows.chunks(2048) {
            for w in chunk {
                if w.len() != self.config.window {
                    return Err(TrackError::Rejected(format!(
                        "{} inputs, expected {}",
                        w.len(),
                        self.config.window
                    )));
                }
            }
            let seq = pack_steps(chunk, self.config.window, self.inputs.width());
            let (logits, _) = self.net.forward(&seq, None)?;
            for i in 0..chunk.len() {
                out.push(
                    logits
                        .iter()
                        .map(|l| PredictionOutput::from_logits(&l.row(i).to_vec()))
                        .collect(),
                );
            }
        }
        Ok(out)
    }

    /// Outputs for each sequence, `None` where the modality skips it.
    pub fn predict_sequences(&self, seqs: &[SequenceSample]) -> Result<Vec<Option<Vec<PredictionOutput>>>> {
        let assembled: Vec<Option<Vec<Vec<f64>>>> = seqs
            .iter()
            .map(|s| assemble_sequence_inputs(s, &self.inputs))
            .collect();
        let rows: Vec<&Vec<Vec<f64>>> = assembled.iter().flatten().collect();
        let mut it = self.predict_batch(&rows)?.into_iter();
        Ok(assembled
            .iter()
            .map(|a| a.as_ref().map(|_| it.next().expect("one output per window")))
            .collect())
    }
}

/// Ranked top-k beams for each future step.
pub fn predict_future(tracker: &BeamTracker, inputs: &[Vec<f64>], k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > tracker.config.classes {
        return Err(TrackError::Rejected(format!("k = {k} outside 1..={}", tracker.config.classes)));
    }
    if inputs.len() != tracker.config.window {
        return Err(TrackError::Rejected(format!(
            "{} inputs, expected {}",
            inputs.len(),
            tracker.config.window
        )));
    }
    if inputs.iter().any(|v| v.len() != tracker.inputs.width()) {
        return Err(TrackError::Rejected("input vector width mismatch".into()));
    }
    let owned = inputs.to_vec();
    let out = tracker.predict_batch(&[&owned])?;
    Ok(out[0].iter().map(|p| p.topk(k).to_vec()).collect())
}

/// Teacher-forced training: the GRU reads the window, its final hidden
/// state feeds one classifier per future step, and the per-step
/// cross-entropies are summed.
pub fn train_tracker(
    train: &[SequenceSample],
    config: &TrackerConfig,
    seed: u64,
) -> Result<(BeamTracker, TrainingLog)> {
    config.validate()?;
    for s in train {
        if s.window.len() != config.window || s.futures.len() < config.horizon {
            return Err(TrackError::Rejected(format!(
                "sequence (flight {}, t {}) has window {} and {} futures",
                s.flight_id,
                s.t_start,
                s.window.len(),
                s.futures.len()
            )));
        }
    }
    let window_samples: Vec<SensingSample> = train.iter().flat_map(|s| s.window.iter().cloned()).collect();
    if window_samples.is_empty() {
        return Err(TrackError::Empty);
    }
    let inputs = TrackerInputs {
        modality: config.modality,
        table: (config.modality == TrackerModality::BeamOnly)
            .then(|| build_beam_embedding_table(config.classes, config.input_dim, config.embedding_seed)),
        norm: NormalizationSpec::fit(&window_samples)?,
    };

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in train {
        if let Some(x) = assemble_sequence_inputs(s, &inputs) {
            if s.futures.iter().any(|&f| f >= config.classes) {
                return Err(TrackError::Rejected("future label out of range".into()));
            }
            xs.push(x);
            ys.push(s.futures[..config.horizon].to_vec());
        }
    }
    if xs.is_empty() {
        return Err(TrackError::Empty);
    }
    let mut log = TrainingLog {
        samples: xs.len(),
        ..TrainingLog::default()
    };
    if ys.iter().all(|y| y == &ys[0]) {
        let msg = format!("all {} training targets equal {:?}", ys.len(), ys[0]);
        warn!("{msg}");
        log.warnings.push(msg);
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order_rng = ChaCha8Rng::seed_from_u64(seed);
    order_rng.set_stream(1);
    let mut drop_rng = ChaCha8Rng::seed_from_u64(seed);
    drop_rng.set_stream(2);
    let mut net = GruNet::<f32>::new(
        inputs.width(),
        config.hidden,
        config.layers,
        config.horizon,
        config.classes,
        config.dropout,
        &mut init_rng,
    );
    let mut adam = Adam::new(AdamConfig::default());
    let schedule = StepDecay::new(config.lr, config.decay_epochs.clone(), config.decay_factor);
    let width = inputs.width();
    let mut order: Vec<usize> = (0..xs.len()).collect();

    for epoch in 0..config.epochs {
        let lr = schedule.lr_at_epoch(epoch);
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch) {
            let rows: Vec<&Vec<Vec<f64>>> = batch.iter().map(|&i| &xs[i]).collect();
            let seq = pack_steps(&rows, config.window, width);
            let masks = (config.dropout > 0.0)
                .then(|| GruMasks::sample(&net, config.window, batch.len(), &mut drop_rng));
            let (logits, cache) = net.forward(&seq, masks)?;
            let mut dlogits = Vec::with_capacity(config.horizon);
            for (h, l) in logits.iter().enumerate() {
                let y: Vec<usize> = batch.iter().map(|&i| ys[i][h]).collect();
                if h == 0 {
                    for (row, &label) in l.rows().into_iter().zip(&y) {
                        let best = row
                            .iter()
                            .enumerate()
                            .fold((0, f32::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
                            .0;
                        correct += usize::from(best == label);
                    }
                }
                let (loss, d) = softmax_cross_entropy_batch(l, &y)?;
                loss_sum += loss as f64 * batch.len() as f64;
                dlogits.push(d);
            }
            let grads = net.backward(&cache, &dlogits)?;
            adam.step(net.params_mut(), &grads, lr)?;
        }
        let entry = EpochLog {
            epoch,
            lr,
            loss: loss_sum / xs.len() as f64,
            accuracy: 100.0 * correct as f64 / xs.len() as f64,
        };
        debug!(
            "{} tracker epoch {epoch}: loss {:.5} future-1 acc {:.2}%",
            config.modality.name(),
            entry.loss,
            entry.accuracy
        );
        log.epochs.push(entry);
    }
    Ok((BeamTracker {
        config: config.clone(),
        inputs,
        net,
    }, log))
}

/// `rankings[seq][future]` with the matching `truths[seq][future]`.
pub type FutureRankings = (Vec<Vec<Vec<usize>>>, Vec<Vec<usize>>);

/// Per-sequence rankings (one per future step) and truths for the
/// sequences the tracker can read.
pub fn tracking_rankings(tracker: &BeamTracker, seqs: &[SequenceSample]) -> Result<FutureRankings> {
    let mut rankings = Vec::new();
    let mut truths = Vec::new();
    for (s, out) in seqs.iter().zip(tracker.predict_sequences(seqs)?) {
        if let Some(out) = out {
            rankings.push(out.into_iter().map(|p| p.ranking).collect());
            truths.push(s.futures[..tracker.config.horizon].to_vec());
        }
    }
    Ok((rankings, truths))
}
