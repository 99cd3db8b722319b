//! Runs a beam-only tracker recursively over 50-step segments under
//! different beam-training schedules and compares it with a vision tracker
//! that never sweeps.
//!
//! cargo run --release --example rollout_schedules -- [epochs]

use dronebeam::dataset::{build_sequences, split_flights};
use dronebeam::eval::{format_table, resource_tradeoff, TradeoffEntry};
use dronebeam::pipeline::usable_segments;
use dronebeam::scenario::{synthesize_dataset, ScenarioConfig};
use dronebeam::track::{
    per_step_accuracy, recursive_rollout_batch, sensed_rollout_batch, train_tracker, write_rollout_csv,
    RolloutSchedule, TrackerConfig, TrackerModality,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs: usize = std::env::args().nth(1).map_or(Ok(20), |s| s.parse())?;
    let cfg = ScenarioConfig {
        target_samples: Some(6000),
        ..ScenarioConfig::default()
    };
    let samples = synthesize_dataset(&cfg, cfg.seed)?.sensing_samples();
    let flights = split_flights(&samples, 0.7, 7)?;
    let train: Vec<_> = samples.iter().filter(|s| flights.contains(&s.flight_id)).cloned().collect();
    let held_out: Vec<_> = samples.iter().filter(|s| !flights.contains(&s.flight_id)).cloned().collect();
    let sequences = build_sequences(&train, 8, 3);
    let segments = usable_segments(&held_out, 58, None);
    println!("{} training sequences, {} rollout segments", sequences.len(), segments.len());

    let train_one = |m: TrackerModality| {
        let c = TrackerConfig {
            hidden: 64,
            epochs,
            decay_epochs: vec![epochs * 2 / 3],
            ..TrackerConfig::for_modality(m)
        };
        train_tracker(&sequences, &c, 5).map(|(t, _)| t)
    };
    let beam = train_one(TrackerModality::BeamOnly)?;
    let vision = train_one(TrackerModality::Vision)?;

    let schedules = [
        ("per_step", RolloutSchedule::saturated(50, 8)),
        ("intermittent", RolloutSchedule::intermittent()),
        ("initial_only", RolloutSchedule::initial_only(50, 8)),
    ];
    let mut entries = Vec::new();
    let mut curves = Vec::new();
    for (name, schedule) in &schedules {
        let traces = recursive_rollout_batch(&beam, &segments, schedule)?;
        if *name == "intermittent" {
            if let Some(first) = traces.first() {
                write_rollout_csv(first, std::io::stdout().lock())?;
            }
        }
        let curve = per_step_accuracy(&traces, 3);
        entries.push(TradeoffEntry {
            approach: name.to_string(),
            beam_training_steps: schedule.beam_training_steps(),
            accuracy: vec![curve.iter().sum::<f64>() / 50.0],
        });
        curves.push((name.to_string(), curve));
    }
    let curve = per_step_accuracy(&sensed_rollout_batch(&vision, &segments, 50)?, 3);
    entries.push(TradeoffEntry {
        approach: "vision".into(),
        beam_training_steps: 0,
        accuracy: vec![curve.iter().sum::<f64>() / 50.0],
    });
    curves.push(("vision".into(), curve));

    println!("\ntop-3 accuracy every fifth step");
    for (name, curve) in &curves {
        let marks: Vec<String> = curve.iter().step_by(5).map(|v| format!("{v:>5.1}")).collect();
        println!("{name:<13}{}", marks.join(" "));
    }
    let rows: Vec<Vec<String>> = resource_tradeoff(&entries, 50)
        .into_iter()
        .map(|r| vec![r.approach, format!("{:.0}", r.beam_training_pct), format!("{:.2}", r.accuracy[0])])
        .collect();
    println!("\n{}", format_table(&["approach", "beam training %", "mean top-3"], &rows));
    Ok(())
}
