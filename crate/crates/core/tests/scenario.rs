use dronebeam::scenario::*;

fn corpus() -> RawSampleTable {
    synthesize_dataset(&ScenarioConfig::default(), 2023).unwrap()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn best_power(s: &RawSample) -> f64 {
    s.sample.power32[s.sample.label]
}

fn binned(table: &RawSampleTable, key: impl Fn(&RawSample) -> f64, edges: &[f64]) -> Vec<(usize, f64)> {
    edges
        .windows(2)
        .map(|w| {
            let v: Vec<f64> = table
                .samples
                .iter()
                .filter(|s| (w[0]..w[1]).contains(&key(s)))
                .map(best_power)
                .collect();
            (v.len(), mean(&v))
        })
        .collect()
}

#[test]
fn level_flight_receives_more_than_steep_pitch() {
    let t = corpus();
    let bins = binned(&t, |s| s.state.pitch.abs().to_degrees(), &[0.0, 3.0, 20.0, 90.0]);
    assert!(bins[0].0 > 100 && bins[2].0 > 100, "{bins:?}");
    assert!(bins[0].1 > bins[2].1, "{bins:?}");

    let cfg = ScenarioConfig::default();
    let gain_at = |pitch_deg: f64| {
        mean(
            &t.samples
                .iter()
                .map(|s| {
                    let st = DroneState { pitch: -pitch_deg.to_radians(), roll: 0.0, ..s.state };
                    antenna_gain(&st, &cfg.base_station, &cfg.antenna)
                })
                .collect::<Vec<_>>(),
        )
    };
    assert!(gain_at(0.0) > gain_at(25.0));
}

/// Out-and-back at each cruise speed on a high line near the mast, scored on the
/// middle of the line only so every speed sees the same geometry.
#[test]
fn faster_flight_receives_less_on_a_fixed_route() {
    let a = [10.0, 30.0, 60.0];
    let b = [90.0, 30.0, 60.0];
    let means: Vec<f64> = [2.0, 5.0, 8.0, 11.0]
        .iter()
        .map(|&v| {
            let mut cfg = ScenarioConfig {
                flights: FlightSource::Explicit(vec![FlightPlan {
                    waypoints: vec![a, b, a],
                    speeds: vec![v, v],
                    hovers: vec![],
                }]),
                target_samples: None,
                ..ScenarioConfig::default()
            };
            cfg.antenna.attitude_jitter_deg = 0.0;
            let t = synthesize_dataset(&cfg, 1).unwrap();
            let p: Vec<f64> = t
                .samples
                .iter()
                .filter(|s| (35.0..65.0).contains(&s.state.position[0]))
                .map(best_power)
                .collect();
            assert!(p.len() >= 10);
            mean(&p)
        })
        .collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

/// Corpus-wide bins mix distances, so each power is scaled by d² first.
#[test]
fn faster_flight_receives_less_across_the_corpus() {
    let t = corpus();
    let bins: Vec<f64> = [0.0, 3.0, 6.0, 9.0, 11.2]
        .windows(2)
        .map(|w| {
            let v: Vec<f64> = t
                .samples
                .iter()
                .filter(|s| (w[0]..w[1]).contains(&s.sample.speed))
                .map(|s| best_power(s) * s.sample.distance.powi(2))
                .collect();
            assert!(v.len() > 500);
            mean(&v)
        })
        .collect();
    assert!(bins.windows(2).all(|w| w[1] <= w[0]), "{bins:?}");
}

#[test]
fn corpus_respects_the_speed_cap() {
    let t = corpus();
    assert!(t.samples.iter().all(|s| s.sample.speed <= MAX_DRONE_SPEED + 1e-9));
}
