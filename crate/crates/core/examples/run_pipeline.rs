//! Runs every pipeline stage on a reduced experiment and prints the summary.
//! The same stages are available from the `dronebeam` binary.
//!
//! cargo run --release --example run_pipeline -- [output-dir]

use dronebeam::pipeline::{render_summary, run, ExperimentConfig, Stage, SummaryReport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let out = std::env::args().nth(1).unwrap_or_else(|| "runs/example".into());

    let mut config = ExperimentConfig::default();
    config.scenario.target_samples = Some(3000);
    config.eval.rollout.corpus_samples = 4000;
    config.eval.fraction_sweep = vec![0.2, 0.4, 1.0];
    for p in &mut config.predictors {
        p.hidden = vec![128, 128];
        p.epochs = 6;
        p.decay_epochs = vec![4];
    }
    for t in &mut config.trackers {
        t.hidden = 48;
        t.epochs = 6;
        t.decay_epochs = vec![4];
    }
    config.output_dir = out.into();

    run(Stage::All, &config)?;
    let text = std::fs::read_to_string(config.output_dir.join("reports/summary.json"))?;
    let summary: SummaryReport = serde_json::from_str(&text)?;
    println!("{}", render_summary(&summary));
    Ok(())
}
