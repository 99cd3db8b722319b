//! Task datasets built from simulated samples: current-beam prediction tables
//! and fixed-window tracking sequences, with min-max normalization, seeded
//! splits and CSV persistence.

pub mod io;

use std::collections::BTreeSet;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::VisualFeature;

pub use io::{load_samples, load_sequences, save_samples, save_sequences, SAMPLE_HEADER, SEQUENCE_HEADER};

/// Number of beams after downsampling.
pub const NUM_BEAMS: usize = 32;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("empty input")]
    Empty,
    #[error("split ratio must be in (0, 1), got {0}")]
    InvalidRatio(f64),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("sequence references missing sample (flight {flight_id}, t {t})")]
    MissingSample { flight_id: usize, t: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// One observed time step with its ground-truth beam.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingSample {
    pub flight_id: usize,
    pub t: usize,
    /// East, North (m).
    pub gps: [f64; 2],
    pub height: f64,
    pub distance: f64,
    pub speed: f64,
    pub pitch: f64,
    pub roll: f64,
    pub visual: VisualFeature,
    pub power32: Vec<f64>,
    pub label: usize,
}

/// `r` consecutive samples and the labels of the `r'` steps that follow.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSample {
    pub flight_id: usize,
    pub t_start: usize,
    pub window: Vec<SensingSample>,
    pub futures: Vec<usize>,
}

impl SequenceSample {
    pub fn all_visible(&self) -> bool {
        self.window.iter().all(|s| s.visual.visible)
    }
}

/// Seeded shuffle; the first `ratio * n` items (halves rounded down) go to
/// train.
pub fn split_train_test<T: Clone>(items: &[T], ratio: f64, rng_seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if items.is_empty() {
        return Err(DatasetError::Empty);
    }
    let idx = split_indices(items.len(), ratio, rng_seed)?;
    let train = idx.0.iter().map(|&i| items[i].clone()).collect();
    let test = idx.1.iter().map(|&i| items[i].clone()).collect();
    Ok((train, test))
}

/// Index form of [`split_train_test`]; both halves are returned sorted.
pub fn split_indices(n: usize, ratio: f64, rng_seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::InvalidRatio(ratio));
    }
    if n == 0 {
        return Err(DatasetError::Empty);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
    let cut = ((ratio * n as f64 - 0.5).ceil().max(0.0) as usize).min(n);
    let mut train = order[..cut].to_vec();
    let mut test = order[cut..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Picks whole flights for training, in seeded random order, until the train
/// side holds at least `ratio` of the samples.
pub fn split_flights(samples: &[SensingSample], ratio: f64, rng_seed: u64) -> Result<BTreeSet<usize>> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::InvalidRatio(ratio));
    }
    if samples.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut counts = std::collections::BTreeMap::new();
    for s in samples {
        *counts.entry(s.flight_id).or_insert(0usize) += 1;
    }
    let mut flights: Vec<usize> = counts.keys().copied().collect();
    flights.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
    let target = ratio * samples.len() as f64;
    let mut taken = 0usize;
    let mut train = BTreeSet::new();
    for f in flights {
        if taken as f64 >= target {
            break;
        }
        taken += counts[&f];
        train.insert(f);
    }
    Ok(train)
}

/// Index ranges of maximal runs with one flight id and consecutive `t`.
pub fn contiguous_runs(samples: &[SensingSample]) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=samples.len() {
        let breaks = i == samples.len()
            || samples[i].flight_id != samples[i - 1].flight_id
            || samples[i].t != samples[i - 1].t + 1;
        if breaks {
            if i > start {
                runs.push(start..i);
            }
            start = i;
        }
    }
    runs
}

/// Stride-1 windows inside each contiguous run. A run of length n yields
/// `max(0, n - r - r_prime + 1)` sequences.
pub fn build_sequences(samples: &[SensingSample], r: usize, r_prime: usize) -> Vec<SequenceSample> {
    assert!(r >= 1 && r_prime >= 1, "window and horizon must be positive");
    let mut out = Vec::new();
    for run in contiguous_runs(samples) {
        let run = &samples[run];
        if run.len() < r + r_prime {
            continue;
        }
        for s in 0..=run.len() - r - r_prime {
            out.push(SequenceSample {
                flight_id: run[s].flight_id,
                t_start: run[s].t,
                window: run[s..s + r].to_vec(),
                futures: run[s + r..s + r + r_prime].iter().map(|x| x.label).collect(),
            });
        }
    }
    out
}

pub fn label_histogram(samples: &[SensingSample], num_beams: usize) -> Vec<usize> {
    let mut h = vec![0; num_beams];
    for s in samples {
        if s.label < num_beams {
            h[s.label] += 1;
        }
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
        Self { min, max }
    }
}

/// `(x - min) / (max - min)`, unclamped; a degenerate range maps to 0.
pub fn normalize_minmax(x: f64, range: MinMax) -> f64 {
    let span = range.max - range.min;
    if span == 0.0 {
        0.0
    } else {
        (x - range.min) / span
    }
}

pub fn denormalize_minmax(y: f64, range: MinMax) -> f64 {
    range.min + y * (range.max - range.min)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    GpsEast,
    GpsNorth,
    Height,
    Distance,
    VisSize,
}

/// Per-feature ranges fitted on a training split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    pub gps_east: MinMax,
    pub gps_north: MinMax,
    pub height: MinMax,
    pub distance: MinMax,
    /// Fitted on visible samples only.
    pub vis_size: MinMax,
}

impl NormalizationSpec {
    pub fn fit(train: &[SensingSample]) -> Result<Self> {
        if train.is_empty() {
            return Err(DatasetError::Empty);
        }
        let visible: Vec<f64> = train
            .iter()
            .filter(|s| s.visual.visible)
            .map(|s| s.visual.apparent_size)
            .collect();
        let vis_size = if visible.is_empty() {
            MinMax { min: 0.0, max: 0.0 }
        } else {
            MinMax::fit(visible.into_iter())
        };
        Ok(Self {
            gps_east: MinMax::fit(train.iter().map(|s| s.gps[0])),
            gps_north: MinMax::fit(train.iter().map(|s| s.gps[1])),
            height: MinMax::fit(train.iter().map(|s| s.height)),
            distance: MinMax::fit(train.iter().map(|s| s.distance)),
            vis_size,
        })
    }

    pub fn range(&self, f: Feature) -> MinMax {
        match f {
            Feature::GpsEast => self.gps_east,
            Feature::GpsNorth => self.gps_north,
            Feature::Height => self.height,
            Feature::Distance => self.distance,
            Feature::VisSize => self.vis_size,
        }
    }

    pub fn apply(&self, f: Feature, x: f64) -> f64 {
        normalize_minmax(x, self.range(f))
    }

    pub fn invert(&self, f: Feature, y: f64) -> f64 {
        denormalize_minmax(y, self.range(f))
    }
}
