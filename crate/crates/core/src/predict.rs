//! Current-beam prediction from one sensing sample: position-only,
//! position + height + distance, and camera-feature MLPs.

use log::{debug, warn};
use ndarray::Array2;
use neuralkit::{softmax_cross_entropy_batch, Adam, AdamConfig, DenseNet, NnError, Parameterized, StepDecay};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Feature, NormalizationSpec, SensingSample, NUM_BEAMS};
use crate::eval::topk_accuracy;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("no usable training samples")]
    Empty,
    #[error("invalid predictor config: {0}")]
    Config(String),
    #[error("rejected: {0}")]
    Rejected(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
}

pub type Result<T> = std::result::Result<T, PredictError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Position,
    PositionHd,
    Vision,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Position, Modality::PositionHd, Modality::Vision];

    pub fn arity(self) -> usize {
        match self {
            Modality::Position => 2,
            Modality::PositionHd => 4,
            Modality::Vision => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Position => "position",
            Modality::PositionHd => "position_hd",
            Modality::Vision => "vision",
        }
    }

    pub fn features(self) -> &'static [&'static str] {
        match self {
            Modality::Position => &["gps_e", "gps_n"],
            Modality::PositionHd => &["gps_e", "gps_n", "height", "distance"],
            Modality::Vision => &["vis_u", "vis_v", "vis_size"],
        }
    }
}

impl std::str::FromStr for Modality {
    type Err = PredictError;

    fn from_str(s: &str) -> Result<Self> {
        Modality::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| PredictError::Config(format!("unknown modality {s:?}")))
    }
}

/// MLP predictor hyper-parameters. The defaults are the MLP column of the
/// prediction table; [`PredictorConfig::resnet_column`] keeps the image
/// network's column for reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorConfig {
    pub modality: Modality,
    pub hidden: Vec<usize>,
    pub classes: usize,
    pub batch: usize,
    pub epochs: usize,
    pub lr: f64,
    pub decay_epochs: Vec<usize>,
    pub decay_factor: f64,
    pub seed: u64,
    pub train_fraction: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self::mlp(Modality::Position)
    }
}

impl PredictorConfig {
    pub fn mlp(modality: Modality) -> Self {
        Self {
            modality,
            hidden: vec![512, 512],
            classes: NUM_BEAMS,
            batch: 32,
            epochs: 100,
            lr: 1e-2,
            decay_epochs: vec![20, 40, 80],
            decay_factor: 0.1,
            seed: 0,
            train_fraction: 1.0,
        }
    }

    pub fn resnet_column(modality: Modality) -> Self {
        Self {
            epochs: 20,
            lr: 1e-4,
            decay_epochs: vec![4, 8, 12],
            ..Self::mlp(modality)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PredictError::Config(m.to_string()));
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden widths must be positive");
        }
        if self.classes < 2 {
            return bad("need at least two classes");
        }
        if self.batch == 0 || self.epochs == 0 {
            return bad("batch and epochs must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(self.decay_factor > 0.0) {
            return bad("lr and decay_factor must be positive");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return bad("train_fraction must be in (0, 1]");
        }
        Ok(())
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.modality.arity()];
        d.extend(&self.hidden);
        d.push(self.classes);
        d
    }
}

/// Model input for one sample, or `None` when the modality cannot see it.
pub fn assemble_features(
    sample: &SensingSample,
    modality: Modality,
    norm: &NormalizationSpec,
) -> Option<Vec<f64>> {
    let gps = [
        norm.apply(Feature::GpsEast, sample.gps[0]),
        norm.apply(Feature::GpsNorth, sample.gps[1]),
    ];
    match modality {
        Modality::Position => Some(gps.to_vec()),
        Modality::PositionHd => Some(vec![
            gps[0],
            gps[1],
            norm.apply(Feature::Height, sample.height),
            norm.apply(Feature::Distance, sample.distance),
        ]),
        Modality::Vision => sample.visual.visible.then(|| {
            vec![
                sample.visual.center_u,
                sample.visual.center_v,
                norm.apply(Feature::VisSize, sample.visual.apparent_size),
            ]
        }),
    }
}

/// Beam indices by descending probability; ties go to the lower index.
pub fn rank_probabilities(p: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    idx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionOutput {
    pub probabilities: Vec<f64>,
    pub ranking: Vec<usize>,
}

impl PredictionOutput {
    pub fn from_logits(logits: &[f32]) -> Self {
        let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v as f64));
        let exp: Vec<f64> = logits.iter().map(|&v| (v as f64 - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        let probabilities: Vec<f64> = exp.into_iter().map(|e| e / z).collect();
        let ranking = rank_probabilities(&probabilities);
        Self {
            probabilities,
            ranking,
        }
    }

    pub fn top1(&self) -> usize {
        self.ranking[0]
    }

    pub fn topk(&self, k: usize) -> &[usize] {
        &self.ranking[..k.min(self.ranking.len())]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub loss: f64,
    /// Top-1 on the training batches as they were seen, percent.
    pub accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub samples: usize,
    pub epochs: Vec<EpochLog>,
    pub warnings: Vec<String>,
}

impl TrainingLog {
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamPredictor {
    pub config: PredictorConfig,
    pub norm: NormalizationSpec,
    pub net: DenseNet<f32>,
}

impl BeamPredictor {
    pub fn modality(&self) -> Modality {
        self.config.modality
    }

    pub fn predict_features(&self, x: &[f64]) -> Result<PredictionOutput> {
        let xf: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let logits = self.net.forward_one(&xf)?;
        Ok(PredictionOutput::from_logits(logits.as_slice().expect("contiguous")))
    }

    pub fn predict(&self, sample: &SensingSample) -> Option<PredictionOutput> {
        let x = assemble_features(sample, self.modality(), &self.norm)?;
        self.predict_features(&x).ok()
    }

    /// Batched inference; entries are `None` for samples the modality skips.
    pub fn predict_batch(&self, samples: &[SensingSample]) -> Vec<Option<PredictionOutput>> {
        let feats: Vec<Option<Vec<f64>>> = samples
            .iter()
            .map(|s| assemble_features(s, self.modality(), &self.norm))
            .collect();
        let rows: Vec<&Vec<f64>> = feats.iter().flatten().collect();
        let mut out = Vec::with_capacity(samples.len());
        let mut outputs = Vec::with_capacity(rows.len());
        for chunk in rows.chunks(1024) {
            let x = to_matrix(chunk.iter().map(|v| v.as_slice()), self.modality().arity());
            let (logits, _) = self.net.forward(&x.view()).expect("width checked at training");
            for row in logits.rows() {
                outputs.push(PredictionOutput::from_logits(&row.to_vec()));
            }
        }
        let mut it = outputs.into_iter();
        for f in &feats {
            out.push(f.as_ref().map(|_| it.next().expect("one output per row")));
        }
        out
    }
}

/// The `k` most likely beams for one assembled input vector.
pub fn predict_topk(model: &BeamPredictor, input: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > model.config.classes {
        return Err(PredictError::Rejected(format!(
            "k = {k} outside 1..={}",
            model.config.classes
        )));
    }
    if input.len() != model.modality().arity() {
        return Err(PredictError::Rejected(format!(
            "{} inputs for modality {}",
            input.len(),
            model.modality().name()
        )));
    }
    Ok(model.predict_features(input)?.topk(k).to_vec())
}

fn to_matrix<'a>(rows: impl Iterator<Item = &'a [f64]>, width: usize) -> Array2<f32> {
    let flat: Vec<f32> = rows.flat_map(|r| r.iter().map(|&v| v as f32)).collect();
    let n = flat.len() / width;
    Array2::from_shape_vec((n, width), flat).expect("rectangular rows")
}

/// Mini-batch cross-entropy training with Adam and step decay. The
/// normalization ranges are fitted on `train`.
pub fn train_predictor(
    train: &[SensingSample],
    config: &PredictorConfig,
    seed: u64,
) -> Result<(BeamPredictor, TrainingLog)> {
    config.validate()?;
    let norm = NormalizationSpec::fit(train)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in train {
        if let Some(x) = assemble_features(s, config.modality, &norm) {
            if s.label >= config.classes {
                return Err(PredictError::Rejected(format!("label {} out of range", s.label)));
            }
            xs.push(x);
            ys.push(s.label);
        }
    }
    if xs.is_empty() {
        return Err(PredictError::Empty);
    }
    let mut log = TrainingLog {
        samples: xs.len(),
        ..TrainingLog::default()
    };
    if ys.iter().all(|&y| y == ys[0]) {
        let msg = format!("all {} training labels equal {}", ys.len(), ys[0]);
        warn!("{msg}");
        log.warnings.push(msg);
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order_rng = ChaCha8Rng::seed_from_u64(seed);
    order_rng.set_stream(1);
    let mut net = DenseNet::<f32>::new(&config.dims(), &mut init_rng);
    let mut adam = Adam::new(AdamConfig::default());
    let schedule = StepDecay::new(config.lr, config.decay_epochs.clone(), config.decay_factor);
    let width = config.modality.arity();
    let mut order: Vec<usize> = (0..xs.len()).collect();

    for epoch in 0..config.epochs {
        let lr = schedule.lr_at_epoch(epoch);
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch) {
            let x = to_matrix(batch.iter().map(|&i| xs[i].as_slice()), width);
            let y: Vec<usize> = batch.iter().map(|&i| ys[i]).collect();
            let (logits, cache) = net.forward(&x.view())?;
            for (row, &label) in logits.rows().into_iter().zip(&y) {
                let best = row
                    .iter()
                    .enumerate()
                    .fold((0, f32::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
                    .0;
                correct += usize::from(best == label);
            }
            let (loss, dlogits) = softmax_cross_entropy_batch(&logits, &y)?;
            loss_sum += loss as f64 * batch.len() as f64;
            let grads = net.backward(&cache, &dlogits);
            adam.step(net.params_mut(), &grads, lr)?;
        }
        let entry = EpochLog {
            epoch,
            lr,
            loss: loss_sum / xs.len() as f64,
            accuracy: 100.0 * correct as f64 / xs.len() as f64,
        };
        debug!(
            "{} epoch {epoch}: loss {:.5} acc {:.2}%",
            config.modality.name(),
            entry.loss,
            entry.accuracy
        );
        log.epochs.push(entry);
    }
    Ok((
        BeamPredictor {
            config: config.clone(),
            norm,
            net,
        },
        log,
    ))
}

/// Top-1/2/3/5 accuracy (percent) over the samples the modality can see,
/// plus how many were evaluated.
pub fn evaluate_topk(model: &BeamPredictor, samples: &[SensingSample]) -> ([f64; 4], usize) {
    let (rankings, truths) = rankings_and_truths(model, samples);
    if truths.is_empty() {
        return ([0.0; 4], 0);
    }
    let acc = [1, 2, 3, 5].map(|k| topk_accuracy(&rankings, &truths, k).expect("non-empty"));
    (acc, truths.len())
}

pub(crate) fn rankings_and_truths(model: &BeamPredictor, samples: &[SensingSample]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut rankings = Vec::new();
    let mut truths = Vec::new();
    for (s, p) in samples.iter().zip(model.predict_batch(samples)) {
        if let Some(p) = p {
            rankings.push(p.ranking);
            truths.push(s.label);
        }
    }
    (rankings, truths)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fraction: f64,
    pub train_samples: usize,
    /// Top-1, 2, 3, 5 in percent; empty when the point was skipped.
    pub topk: Vec<f64>,
    pub note: Option<String>,
}

/// Seeded subset of `round(fraction * n)` samples in their original order;
/// fraction 1 returns the full set untouched.
pub fn training_subset(train: &[SensingSample], fraction: f64, seed: u64) -> Vec<SensingSample> {
    if fraction >= 1.0 {
        return train.to_vec();
    }
    let n = (fraction * train.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut idx = rand::seq::index::sample(&mut rng, train.len(), n.min(train.len())).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| train[i].clone()).collect()
}

/// Retrains on growing random subsets of `train` and scores each model on
/// the fixed `test` set.
pub fn training_fraction_sweep(
    train: &[SensingSample],
    test: &[SensingSample],
    fractions: &[f64],
    config: &PredictorConfig,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(PredictError::Config(format!("fraction {fraction} outside (0, 1]")));
        }
        let subset = training_subset(train, fraction, seed);
        if subset.is_empty() {
            rows.push(SweepRow {
                fraction,
                train_samples: 0,
                topk: Vec::new(),
                note: Some("fraction selects no samples; skipped".into()),
            });
            continue;
        }
        let (model, log) = train_predictor(&subset, config, seed)?;
        let (acc, _) = evaluate_topk(&model, test);
        rows.push(SweepRow {
            fraction,
            train_samples: log.samples,
            topk: acc.to_vec(),
            note: None,
        });
    }
    Ok(rows)
}
