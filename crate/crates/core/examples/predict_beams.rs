//! Trains one MLP per sensing modality, reports top-k accuracy and the
//! power score, and round-trips a checkpoint.
//!
//! cargo run --release --example predict_beams -- [epochs]

use dronebeam::checkpoint::{load_predictor, save_predictor};
use dronebeam::dataset::{split_train_test, NUM_BEAMS};
use dronebeam::eval::{confusion_matrix, r2_power_score};
use dronebeam::predict::{evaluate_topk, train_predictor, Modality, PredictorConfig};
use dronebeam::scenario::{synthesize_dataset, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs: usize = std::env::args().nth(1).map_or(Ok(8), |s| s.parse())?;
    let cfg = ScenarioConfig {
        target_samples: Some(4000),
        ..ScenarioConfig::default()
    };
    let samples = synthesize_dataset(&cfg, cfg.seed)?.sensing_samples();
    let (train, test) = split_train_test(&samples, 0.7, 7)?;
    println!("{} train / {} test samples, {epochs} epochs", train.len(), test.len());

    let dir = std::env::temp_dir().join("dronebeam_predictors");
    for modality in Modality::ALL {
        let config = PredictorConfig {
            hidden: vec![128, 128],
            epochs,
            decay_epochs: vec![epochs / 2],
            ..PredictorConfig::mlp(modality)
        };
        let (model, log) = train_predictor(&train, &config, 1)?;
        let (acc, n) = evaluate_topk(&model, &test);

        let outputs: Vec<_> = model.predict_batch(&test).into_iter().zip(&test).filter_map(|(p, s)| Some((p?, s))).collect();
        let top1: Vec<usize> = outputs.iter().map(|(p, _)| p.top1()).collect();
        let truths: Vec<usize> = outputs.iter().map(|(_, s)| s.label).collect();
        let got: Vec<f64> = outputs.iter().map(|(p, s)| s.power32[p.top1()]).collect();
        let best: Vec<f64> = outputs.iter().map(|(_, s)| s.power32[s.label]).collect();
        let r2 = r2_power_score(&got, &best)?;
        let within_one = confusion_matrix(&truths, &top1, NUM_BEAMS)?.band_mass(1);

        println!(
            "{:<12} loss {:.3}  top-1 {:.1}  top-3 {:.1}  top-5 {:.1}  (n = {n})  R2 {}  |err| <= 1: {within_one:.1}%",
            modality.name(),
            log.final_loss().unwrap_or(f64::NAN),
            acc[0],
            acc[2],
            acc[3],
            r2.map_or("undefined".into(), |v| format!("{v:.3}")),
        );

        let path = save_predictor(&model, 1, &dir, modality.name(), "example")?;
        let (restored, _) = load_predictor(&path)?;
        assert_eq!(evaluate_topk(&restored, &test).0, acc);
    }
    println!("checkpoints in {}", dir.display());
    Ok(())
}
