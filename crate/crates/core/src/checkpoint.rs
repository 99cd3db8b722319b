//! On-disk model checkpoints.
//!
//! A checkpoint named `NAME` is two files in one directory:
//!
//! * `NAME.json`: a [`CheckpointManifest`] with the model kind, its full
//!   hyper-parameter config (which fixes the architecture), the training
//!   seed, the normalization constants, the tensor shapes in traversal order,
//!   the producing config hash and the SHA-256 of the blob.
//! * `NAME.bin`: every trainable parameter as little-endian `f32`, tensors
//!   concatenated in the order listed in the manifest, each tensor row-major.
//!
//! The beam embedding table is not stored; it is rebuilt from
//! `tracker.embedding_seed`.

use std::fs;
use std::path::{Path, PathBuf};

use neuralkit::{DenseNet, GruNet, Parameterized};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::NormalizationSpec;
use crate::predict::{BeamPredictor, PredictorConfig};
use crate::track::{build_beam_embedding_table, BeamTracker, TrackerConfig, TrackerInputs, TrackerModality};

pub const CHECKPOINT_FORMAT: &str = "dronebeam-checkpoint/1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid checkpoint: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, CheckpointError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Predictor { config: PredictorConfig },
    Tracker { config: TrackerConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub name: String,
    pub model: ModelSpec,
    pub seed: u64,
    pub normalization: NormalizationSpec,
    pub tensor_shapes: Vec<Vec<usize>>,
    pub num_params: usize,
    pub blob: String,
    pub blob_sha256: String,
    pub config_hash: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_checkpoint<M: Parameterized<f32>>(
    dir: &Path,
    name: &str,
    model: ModelSpec,
    seed: u64,
    normalization: &NormalizationSpec,
    net: &M,
    config_hash: &str,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let blob: Vec<u8> = net.flatten().iter().flat_map(|v| v.to_le_bytes()).collect();
    let blob_name = format!("{name}.bin");
    fs::write(dir.join(&blob_name), &blob)?;
    let manifest = CheckpointManifest {
        format: CHECKPOINT_FORMAT.into(),
        name: name.into(),
        model,
        seed,
        normalization: *normalization,
        tensor_shapes: net.param_shapes(),
        num_params: net.num_params(),
        blob: blob_name,
        blob_sha256: sha256_hex(&blob),
        config_hash: config_hash.into(),
    };
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<CheckpointManifest> {
    let manifest: CheckpointManifest = serde_json::from_slice(&fs::read(path)?)?;
    if manifest.format != CHECKPOINT_FORMAT {
        return Err(CheckpointError::Invalid(format!("unknown format {:?}", manifest.format)));
    }
    Ok(manifest)
}

fn fill_params<M: Parameterized<f32>>(manifest_path: &Path, manifest: &CheckpointManifest, net: &mut M) -> Result<()> {
    if net.param_shapes() != manifest.tensor_shapes {
        return Err(CheckpointError::Invalid("tensor shapes disagree with the config".into()));
    }
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let blob = fs::read(dir.join(&manifest.blob))?;
    if sha256_hex(&blob) != manifest.blob_sha256 {
        return Err(CheckpointError::Invalid(format!("{} fails its checksum", manifest.blob)));
    }
    if blob.len() != 4 * manifest.num_params {
        return Err(CheckpointError::Invalid(format!(
            "blob holds {} bytes, expected {}",
            blob.len(),
            4 * manifest.num_params
        )));
    }
    let values: Vec<f32> = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if !net.load_flat(&values) {
        return Err(CheckpointError::Invalid("parameter count mismatch".into()));
    }
    Ok(())
}

/// Writes `NAME.json` and `NAME.bin`; returns the manifest path.
pub fn save_predictor(model: &BeamPredictor, seed: u64, dir: &Path, name: &str, config_hash: &str) -> Result<PathBuf> {
    write_checkpoint(
        dir,
        name,
        ModelSpec::Predictor {
            config: model.config.clone(),
        },
        seed,
        &model.norm,
        &model.net,
        config_hash,
    )
}

pub fn save_tracker(model: &BeamTracker, seed: u64, dir: &Path, name: &str, config_hash: &str) -> Result<PathBuf> {
    write_checkpoint(
        dir,
        name,
        ModelSpec::Tracker {
            config: model.config.clone(),
        },
        seed,
        &model.inputs.norm,
        &model.net,
        config_hash,
    )
}

pub fn load_predictor(manifest_path: &Path) -> Result<(BeamPredictor, CheckpointManifest)> {
    let manifest = read_manifest(manifest_path)?;
    let ModelSpec::Predictor { config } = &manifest.model else {
        return Err(CheckpointError::Invalid("not a predictor checkpoint".into()));
    };
    let mut net = DenseNet::<f32>::new(&config.dims(), &mut ChaCha8Rng::seed_from_u64(0));
    fill_params(manifest_path, &manifest, &mut net)?;
    let model = BeamPredictor {
        config: config.clone(),
        norm: manifest.normalization,
        net,
    };
    Ok((model, manifest))
}

pub fn load_tracker(manifest_path: &Path) -> Result<(BeamTracker, CheckpointManifest)> {
    let manifest = read_manifest(manifest_path)?;
    let ModelSpec::Tracker { config } = &manifest.model else {
        return Err(CheckpointError::Invalid("not a tracker checkpoint".into()));
    };
    let beam = config.modality == TrackerModality::BeamOnly;
    let inputs = TrackerInputs {
        modality: config.modality,
        table: beam.then(|| build_beam_embedding_table(config.classes, config.input_dim, config.embedding_seed)),
        norm: manifest.normalization,
    };
    let mut net = GruNet::<f32>::new(
        inputs.width(),
        config.hidden,
        config.layers,
        config.horizon,
        config.classes,
        config.dropout,
        &mut ChaCha8Rng::seed_from_u64(0),
    );
    fill_params(manifest_path, &manifest, &mut net)?;
    let model = BeamTracker {
        config: config.clone(),
        inputs,
        net,
    };
    Ok((model, manifest))
}
