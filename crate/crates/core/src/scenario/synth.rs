use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::sensors::dot;
use super::{
    antenna_gain, norm3, observe_gps, project_camera, random_flight_plan, simulate_trajectory,
    DroneState, FlightPlan, FlightSource, Result, ScenarioConfig, ScenarioError,
};
use crate::dataset::SensingSample;
use crate::phy::{
    channel_taps, downsample_power, make_codebook, BeamCodebook, PathComponent, PowerVector,
};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const MAX_FLIGHTS: usize = 100_000;

/// A labelled sample together with the truth it was generated from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSample {
    pub state: DroneState,
    pub paths: Vec<PathComponent>,
    pub power64: Vec<f64>,
    pub sample: SensingSample,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RawSampleTable {
    pub samples: Vec<RawSample>,
    pub num_flights: usize,
}

impl RawSampleTable {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sensing_samples(&self) -> Vec<SensingSample> {
        self.samples.iter().map(|r| r.sample.clone()).collect()
    }
}

/// Arrival angles at the array for a point, relative to the mount.
fn arrival_angles(cfg: &ScenarioConfig, p: [f64; 3]) -> (f64, f64) {
    let m = cfg.base_station.mount();
    let rel = [p[0] - m[0], p[1] - m[1], p[2] - m[2]];
    let (axis, normal) = cfg.base_station.axes();
    let along = dot(rel, axis);
    let across = dot(rel, normal);
    (across.atan2(along), rel[2].atan2(along.hypot(across)))
}

/// Free-space line-of-sight path with the drone antenna gain applied.
pub fn los_paths(state: &DroneState, cfg: &ScenarioConfig) -> Vec<PathComponent> {
    let bs = &cfg.base_station;
    let m = bs.mount();
    let d = norm3([
        state.position[0] - m[0],
        state.position[1] - m[1],
        state.position[2] - m[2],
    ])
    .max(1e-3);
    let lambda = bs.wavelength();
    let g = antenna_gain(state, bs, &cfg.antenna);
    let amp = g.sqrt() * lambda / (4.0 * PI * d);
    let (azimuth, elevation) = arrival_angles(cfg, state.position);
    vec![PathComponent {
        gain: Complex64::from_polar(amp, -2.0 * PI * d / lambda),
        delay: 0.0,
        azimuth,
        elevation,
    }]
}

fn ground_path<R: Rng + ?Sized>(
    state: &DroneState,
    los: &PathComponent,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> PathComponent {
    let gr = &cfg.ground_reflection;
    let r = gr.scatter_radius * rng.random::<f64>().sqrt();
    let phi = rng.random_range(0.0..2.0 * PI);
    let scatter = [
        state.position[0] + r * phi.cos(),
        state.position[1] + r * phi.sin(),
        0.0,
    ];
    let m = cfg.base_station.mount();
    let leg1 = norm3([
        state.position[0] - scatter[0],
        state.position[1] - scatter[1],
        state.position[2],
    ]);
    let leg2 = norm3([scatter[0] - m[0], scatter[1] - m[1], -m[2]]);
    let direct = norm3([
        state.position[0] - m[0],
        state.position[1] - m[1],
        state.position[2] - m[2],
    ]);
    let span = cfg.ofdm.max_delay();
    let delay = ((leg1 + leg2 - direct).max(0.0) / SPEED_OF_LIGHT).min(0.95 * span);
    let amp = gr.coefficient * (-state.height() / gr.height_scale).exp() * los.gain.norm();
    let (azimuth, elevation) = arrival_angles(cfg, scatter);
    PathComponent {
        gain: Complex64::from_polar(amp, rng.random_range(0.0..2.0 * PI)),
        delay,
        azimuth,
        elevation,
    }
}

/// Sweep in the delay domain: by Parseval over the K-point DFT the mean
/// per-subcarrier power of beam f equals `Σ_d |tap_dᵀ f|²`.
pub(crate) fn tap_sweep(taps: &[Vec<Complex64>], codebook: &BeamCodebook, snr_scale: f64) -> Vec<f64> {
    codebook
        .beams
        .iter()
        .map(|f| {
            let acc: f64 = taps
                .iter()
                .map(|tap| {
                    tap.iter()
                        .zip(f)
                        .fold(Complex64::new(0.0, 0.0), |s, (a, b)| s + a * b)
                        .norm_sqr()
                })
                .sum();
            snr_scale * acc
        })
        .collect()
}

struct FlightContext<'a> {
    cfg: &'a ScenarioConfig,
    codebook: BeamCodebook,
    jitter: Option<Normal<f64>>,
}

impl FlightContext<'_> {
    fn run(
        &self,
        flight_id: usize,
        plan: &FlightPlan,
        flight_seed: u64,
        sensor_rng: &mut ChaCha8Rng,
        out: &mut Vec<RawSample>,
        budget: usize,
    ) -> Result<()> {
        let cfg = self.cfg;
        let states = simulate_trajectory(plan, cfg.step_period, flight_seed, cfg)?;
        for state in states {
            if out.len() >= budget {
                break;
            }
            let mut visual = project_camera(&state, &cfg.camera, &cfg.base_station);
            // sensor draws happen for every step so a sample's noise does not
            // depend on whether its neighbours were filtered
            let gps = observe_gps(&state, &cfg.gps, sensor_rng);
            let (du, dv) = match &self.jitter {
                Some(n) => (n.sample(sensor_rng), n.sample(sensor_rng)),
                None => (0.0, 0.0),
            };
            let ground_draw: u64 = sensor_rng.random();
            if !visual.visible && !cfg.retain_invisible {
                continue;
            }
            if visual.visible {
                visual.center_u = (visual.center_u + du).clamp(0.0, 1.0);
                visual.center_v = (visual.center_v + dv).clamp(0.0, 1.0);
            }
            let mut paths = los_paths(&state, cfg);
            if cfg.ground_reflection.enabled {
                let mut g = ChaCha8Rng::seed_from_u64(ground_draw);
                let gp = ground_path(&state, &paths[0], cfg, &mut g);
                paths.push(gp);
            }
            let taps = channel_taps(&paths, &cfg.ofdm, &cfg.base_station.array)?;
            let power64 = tap_sweep(&taps, &self.codebook, cfg.ofdm.snr_scale);
            let p32 = downsample_power(&PowerVector::new(power64.clone())?)?;
            out.push(RawSample {
                sample: SensingSample {
                    flight_id,
                    t: state.timestamp_index,
                    gps,
                    height: state.height(),
                    distance: state.distance(),
                    speed: state.speed(),
                    pitch: state.pitch,
                    roll: state.roll,
                    visual,
                    label: p32.best_index,
                    power32: p32.powers,
                },
                state,
                paths,
                power64,
            });
        }
        Ok(())
    }
}

/// Runs every flight, labels each step by exhaustive 64-beam training
/// downsampled to 32 beams, and drops steps the camera cannot see.
pub fn synthesize_dataset(cfg: &ScenarioConfig, rng_seed: u64) -> Result<RawSampleTable> {
    cfg.validate()?;
    let bs = &cfg.base_station;
    let ctx = FlightContext {
        cfg,
        codebook: make_codebook(bs.array.num_antennas, bs.num_beams, bs.array.element_spacing)?,
        jitter: (cfg.camera.center_noise_std > 0.0)
            .then(|| Normal::new(0.0, cfg.camera.center_noise_std).expect("finite std")),
    };
    let budget = cfg.target_samples.unwrap_or(usize::MAX);
    let mut plan_rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut sensor_rng = ChaCha8Rng::seed_from_u64(rng_seed ^ cfg.gps.seed.rotate_left(32));
    let mut out = Vec::new();
    let mut flights = 0;
    match &cfg.flights {
        FlightSource::Explicit(plans) => {
            for plan in plans {
                if out.len() >= budget {
                    break;
                }
                let seed = plan_rng.random();
                ctx.run(flights, plan, seed, &mut sensor_rng, &mut out, budget)?;
                flights += 1;
            }
        }
        FlightSource::Random(spec) => {
            let wanted = if cfg.target_samples.is_some() { MAX_FLIGHTS } else { cfg.num_flights };
            while flights < wanted && out.len() < budget {
                let plan = random_flight_plan(&cfg.arena, spec, &mut plan_rng);
                let seed = plan_rng.random();
                ctx.run(flights, &plan, seed, &mut sensor_rng, &mut out, budget)?;
                flights += 1;
            }
            if out.len() < budget && cfg.target_samples.is_some() {
                return Err(ScenarioError::Config(format!(
                    "only {} visible samples after {MAX_FLIGHTS} flights",
                    out.len()
                )));
            }
        }
    }
    Ok(RawSampleTable {
        samples: out,
        num_flights: flights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{beam_sweep, build_channel, optimal_beam};
    use crate::scenario::{Hover, RandomFlights};

    fn base() -> ScenarioConfig {
        ScenarioConfig {
            target_samples: None,
            ..ScenarioConfig::default()
        }
    }

    fn hover_over(p: [f64; 3], seconds: f64) -> FlightPlan {
        FlightPlan {
            waypoints: vec![p, p],
            speeds: vec![1.0],
            hovers: vec![Hover { waypoint: 0, duration: seconds }],
        }
    }

    #[test]
    fn tap_sweep_matches_subcarrier_sweep() {
        let mut cfg = base();
        cfg.ground_reflection.enabled = true;
        let bs = &cfg.base_station;
        let cb = make_codebook(16, 64, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let state = DroneState {
                position: [rng.random_range(5.0..200.0), rng.random_range(5.0..150.0), rng.random_range(5.0..60.0)],
                velocity: [0.0; 3],
                yaw: 0.3,
                pitch: -0.2,
                roll: 0.05,
                timestamp_index: 0,
            };
            let mut paths = los_paths(&state, &cfg);
            let gp = ground_path(&state, &paths[0], &cfg, &mut rng);
            paths.push(gp);
            let taps = channel_taps(&paths, &cfg.ofdm, &bs.array).unwrap();
            let fast = tap_sweep(&taps, &cb, cfg.ofdm.snr_scale);
            let slow = beam_sweep(&build_channel(&paths, &cfg.ofdm, &bs.array).unwrap(), &cb, &cfg.ofdm).unwrap();
            for (a, b) in fast.iter().zip(&slow.powers) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-30), "{a} vs {b}");
            }
            assert_eq!(optimal_beam(&fast).unwrap(), slow.best_index);
        }
    }

    #[test]
    fn all_visible_flight_keeps_every_step() {
        let mut cfg = base();
        // straight above the array, 1000 steps of hover
        cfg.flights = FlightSource::Explicit(vec![hover_over([2.0, 2.0, 50.0], 199.9)]);
        cfg.step_period = 0.2;
        let t = synthesize_dataset(&cfg, 1).unwrap();
        assert_eq!(t.len(), 1000);
    }

    #[test]
    fn out_of_view_segment_contributes_nothing() {
        let mut cfg = base();
        let hidden = hover_over([200.0, 0.0, 5.0], 10.0);
        let seen = hover_over([10.0, 10.0, 60.0], 10.0);
        cfg.flights = FlightSource::Explicit(vec![hidden.clone()]);
        assert_eq!(synthesize_dataset(&cfg, 2).unwrap().len(), 0);
        cfg.flights = FlightSource::Explicit(vec![hidden, seen]);
        let t = synthesize_dataset(&cfg, 2).unwrap();
        assert!(t.samples.iter().all(|s| s.sample.flight_id == 1));
        cfg.retain_invisible = true;
        let t = synthesize_dataset(&cfg, 2).unwrap();
        assert!(t.samples.iter().any(|s| !s.sample.visual.visible));
    }

    #[test]
    fn empty_plan_list_is_rejected() {
        let mut cfg = base();
        cfg.flights = FlightSource::Explicit(vec![]);
        assert!(synthesize_dataset(&cfg, 0).is_err());
    }

    #[test]
    fn best_power_follows_inverse_square() {
        let mut cfg = base();
        cfg.antenna.tilt_enabled = false;
        cfg.antenna.attitude_jitter_deg = 0.0;
        let cb = make_codebook(16, 64, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mean_at = |range: f64, rng: &mut ChaCha8Rng| {
            let mut acc = 0.0;
            for _ in 0..500 {
                let el: f64 = rng.random_range(0.35..1.4);
                let az: f64 = rng.random_range(0.0..2.0 * PI);
                let m = cfg.base_station.mount();
                let p = [
                    m[0] + range * el.cos() * az.cos(),
                    m[1] + range * el.cos() * az.sin(),
                    m[2] + range * el.sin(),
                ];
                let state = DroneState {
                    position: p,
                    velocity: [0.0; 3],
                    yaw: 0.0,
                    pitch: 0.0,
                    roll: 0.0,
                    timestamp_index: 0,
                };
                let taps = channel_taps(&los_paths(&state, &cfg), &cfg.ofdm, &cfg.base_station.array).unwrap();
                let p64 = PowerVector::new(tap_sweep(&taps, &cb, cfg.ofdm.snr_scale)).unwrap();
                acc += downsample_power(&p64).unwrap().best_power();
            }
            acc / 500.0
        };
        let near = mean_at(50.0, &mut rng);
        let far = mean_at(100.0, &mut rng);
        let ratio = far / near;
        assert!((ratio - 0.25).abs() <= 0.25 * 0.2, "ratio {ratio}");
    }

    #[test]
    fn random_corpus_is_deterministic_and_self_consistent() {
        let mut cfg = base();
        cfg.target_samples = Some(1500);
        cfg.ground_reflection.enabled = true;
        let a = synthesize_dataset(&cfg, 99).unwrap();
        let b = synthesize_dataset(&cfg, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1500);
        let bs = &cfg.base_station;
        let cb = make_codebook(16, 64, 0.5).unwrap();
        for r in a.samples.iter().step_by(37) {
            let ch = build_channel(&r.paths, &cfg.ofdm, &bs.array).unwrap();
            let p64 = beam_sweep(&ch, &cb, &cfg.ofdm).unwrap();
            assert_eq!(downsample_power(&p64).unwrap().best_index, r.sample.label);
            assert!(r.sample.visual.visible);
            assert!(r.sample.height >= 0.0 && r.sample.distance >= 0.0);
        }
        let c = synthesize_dataset(&cfg, 100).unwrap();
        assert_ne!(a.samples[0].sample, c.samples[0].sample);
    }

    #[test]
    fn gps_noise_does_not_move_the_flights() {
        let mut cfg = base();
        cfg.num_flights = 3;
        cfg.gps.noise_std = 0.0;
        let clean = synthesize_dataset(&cfg, 5).unwrap();
        cfg.gps.noise_std = 5.0;
        let noisy = synthesize_dataset(&cfg, 5).unwrap();
        assert_eq!(clean.len(), noisy.len());
        for (c, n) in clean.samples.iter().zip(&noisy.samples) {
            assert_eq!(c.state, n.state);
            assert_eq!(c.sample.label, n.sample.label);
        }
    }

    fn binned_means(pairs: &[(f64, f64)], edges: &[f64]) -> Vec<f64> {
        edges
            .windows(2)
            .map(|w| {
                let v: Vec<f64> = pairs.iter().filter(|p| p.0 >= w[0] && p.0 < w[1]).map(|p| p.1).collect();
                assert!(v.len() > 30, "bin {w:?} has {} samples", v.len());
                v.iter().sum::<f64>() / v.len() as f64
            })
            .collect()
    }

    #[test]
    fn power_falls_with_distance() {
        let mut cfg = base();
        cfg.num_flights = 40;
        cfg.flights = FlightSource::Random(RandomFlights::default());
        let t = synthesize_dataset(&cfg, 3).unwrap();
        let pairs: Vec<(f64, f64)> = t
            .samples
            .iter()
            .map(|r| (r.sample.distance, r.sample.power32[r.sample.label]))
            .collect();
        let means = binned_means(&pairs, &[40.0, 100.0, 130.0, 160.0, 190.0, 260.0]);
        assert!(means.windows(2).all(|w| w[1] <= w[0]), "{means:?}");
    }
}
