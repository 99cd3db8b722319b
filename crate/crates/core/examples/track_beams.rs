//! Trains the three GRU trackers on windows of eight past observations and
//! prints joint and per-future accuracy for the next three beams.
//!
//! cargo run --release --example track_beams -- [epochs]

use dronebeam::dataset::{build_sequences, split_flights, SensingSample};
use dronebeam::eval::{format_table, joint_topk_accuracy, topk_accuracy};
use dronebeam::scenario::{synthesize_dataset, ScenarioConfig};
use dronebeam::track::{assemble_sequence_inputs, predict_future, tracking_rankings, train_tracker, TrackerConfig, TrackerModality};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs: usize = std::env::args().nth(1).map_or(Ok(20), |s| s.parse())?;
    let cfg = ScenarioConfig {
        target_samples: Some(5000),
        ..ScenarioConfig::default()
    };
    let samples = synthesize_dataset(&cfg, cfg.seed)?.sensing_samples();
    let train_flights = split_flights(&samples, 0.7, 7)?;
    let (train, test): (Vec<SensingSample>, Vec<SensingSample>) =
        samples.into_iter().partition(|s| train_flights.contains(&s.flight_id));
    let train = build_sequences(&train, 8, 3);
    let test = build_sequences(&test, 8, 3);
    println!("{} train / {} test sequences", train.len(), test.len());

    let mut rows = Vec::new();
    for modality in TrackerModality::ALL {
        let config = TrackerConfig {
            hidden: 64,
            epochs,
            decay_epochs: vec![epochs * 2 / 3],
            ..TrackerConfig::for_modality(modality)
        };
        let (tracker, _) = train_tracker(&train, &config, 3)?;
        let (rankings, truths) = tracking_rankings(&tracker, &test)?;
        for h in 1..=3 {
            let marginal_r: Vec<Vec<usize>> = rankings.iter().map(|r| r[h - 1].clone()).collect();
            let marginal_t: Vec<usize> = truths.iter().map(|t| t[h - 1]).collect();
            rows.push(vec![
                modality.name().to_string(),
                h.to_string(),
                format!("{:.2}", joint_topk_accuracy(&rankings, &truths, h, 1)?),
                format!("{:.2}", joint_topk_accuracy(&rankings, &truths, h, 3)?),
                format!("{:.2}", topk_accuracy(&marginal_r, &marginal_t, 1)?),
            ]);
        }
        if let Some(seq) = test.iter().find(|s| s.all_visible()) {
            let inputs = assemble_sequence_inputs(seq, &tracker.inputs).expect("visible window");
            let predicted = predict_future(&tracker, &inputs, 3)?;
            println!("{}: next beams {:?}, top-3 per future {predicted:?}", modality.name(), seq.futures);
        }
    }
    println!("{}", format_table(&["tracker", "future", "joint top-1", "joint top-3", "top-1"], &rows));
    Ok(())
}
