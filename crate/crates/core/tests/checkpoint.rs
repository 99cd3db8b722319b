mod common;

use common::flight;
use dronebeam::checkpoint::*;
use dronebeam::dataset::build_sequences;
use dronebeam::predict::{train_predictor, Modality, PredictorConfig};
use dronebeam::track::{train_tracker, TrackerConfig, TrackerModality};
use neuralkit::Parameterized;

fn labels() -> Vec<usize> {
    (0..60).map(|t| (t / 3) % 32).collect()
}

#[test]
fn predictor_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let samples = flight(0, &labels());
    let cfg = PredictorConfig { hidden: vec![16, 16], epochs: 2, ..PredictorConfig::mlp(Modality::PositionHd) };
    let (model, _) = train_predictor(&samples, &cfg, 5).unwrap();
    let path = save_predictor(&model, 5, dir.path(), "p", "abc").unwrap();
    let (back, manifest) = load_predictor(&path).unwrap();
    assert_eq!(back, model);
    assert_eq!((manifest.seed, manifest.config_hash.as_str()), (5, "abc"));
    assert_eq!(std::fs::metadata(dir.path().join("p.bin")).unwrap().len(), 4 * model.net.num_params() as u64);
    assert!(load_tracker(&path).is_err());
}

#[test]
fn tracker_round_trip_rebuilds_embedding() {
    let dir = tempfile::tempdir().unwrap();
    let seqs = build_sequences(&flight(0, &labels()), 8, 3);
    let cfg = TrackerConfig { hidden: 8, epochs: 1, ..TrackerConfig::for_modality(TrackerModality::BeamOnly) };
    let (model, _) = train_tracker(&seqs, &cfg, 1).unwrap();
    let path = save_tracker(&model, 1, dir.path(), "t", "h").unwrap();
    let (back, _) = load_tracker(&path).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.predict_sequences(&seqs).unwrap(), model.predict_sequences(&seqs).unwrap());
}

#[test]
fn tampered_blob_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let samples = flight(0, &labels());
    let cfg = PredictorConfig { hidden: vec![4], epochs: 1, ..PredictorConfig::mlp(Modality::Vision) };
    let (model, _) = train_predictor(&samples, &cfg, 5).unwrap();
    let path = save_predictor(&model, 5, dir.path(), "p", "abc").unwrap();
    let blob = dir.path().join("p.bin");
    let mut bytes = std::fs::read(&blob).unwrap();
    bytes[0] ^= 1;
    std::fs::write(&blob, bytes).unwrap();
    assert!(matches!(load_predictor(&path), Err(CheckpointError::Invalid(_))));
}
