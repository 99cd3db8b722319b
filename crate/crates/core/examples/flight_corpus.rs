//! Simulates a small flight corpus and writes it as CSV.
//!
//! cargo run --example flight_corpus -- [output.csv]

use dronebeam::dataset::{label_histogram, save_samples, NUM_BEAMS};
use dronebeam::scenario::{synthesize_dataset, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("dronebeam_corpus.csv"));

    let cfg = ScenarioConfig {
        target_samples: Some(2000),
        ..ScenarioConfig::default()
    };
    let table = synthesize_dataset(&cfg, cfg.seed)?;
    let samples = table.sensing_samples();

    let heights = samples.iter().map(|s| s.height);
    let (lo, hi) = heights.fold((f64::MAX, f64::MIN), |(a, b), h| (a.min(h), b.max(h)));
    let max_speed = samples.iter().map(|s| s.speed).fold(0.0, f64::max);
    println!("{} samples from {} flights", samples.len(), table.num_flights);
    println!("height {lo:.1} to {hi:.1} m, top speed {max_speed:.2} m/s");

    let hist = label_histogram(&samples, NUM_BEAMS);
    for (beam, count) in hist.iter().enumerate().filter(|(_, &c)| c > 0) {
        println!("beam {beam:>2} {count:>5} {}", "#".repeat(count * 60 / samples.len()));
    }

    save_samples(&samples, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
