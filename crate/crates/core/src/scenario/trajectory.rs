use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{
    norm3, AntennaModel, Arena, DroneState, FlightPlan, Hover, RandomFlights, Result,
    ScenarioConfig, ScenarioError,
};

/// One piece of the continuous-time motion profile.
#[derive(Clone, Copy, Debug)]
enum Segment {
    Hover {
        at: [f64; 3],
        duration: f64,
        heading: f64,
    },
    /// Trapezoidal (or triangular) speed ramp along a straight leg.
    Leg {
        from: [f64; 3],
        dir: [f64; 3],
        accel: f64,
        peak: f64,
        ramp: f64,
        cruise: f64,
        heading: f64,
    },
}

impl Segment {
    fn duration(&self) -> f64 {
        match *self {
            Segment::Hover { duration, .. } => duration,
            Segment::Leg { ramp, cruise, .. } => 2.0 * ramp + cruise,
        }
    }

    /// (position, speed along the leg, longitudinal acceleration, heading)
    fn eval(&self, t: f64) -> ([f64; 3], [f64; 3], f64, f64) {
        match *self {
            Segment::Hover { at, heading, .. } => (at, [0.0; 3], 0.0, heading),
            Segment::Leg {
                from,
                dir,
                accel,
                peak,
                ramp,
                cruise,
                heading,
            } => {
                let (s, v, a) = if t < ramp {
                    (0.5 * accel * t * t, accel * t, accel)
                } else if t < ramp + cruise {
                    let tc = t - ramp;
                    (0.5 * peak * ramp + peak * tc, peak, 0.0)
                } else {
                    let td = (t - ramp - cruise).min(ramp);
                    (
                        0.5 * peak * ramp + peak * cruise + peak * td - 0.5 * accel * td * td,
                        (peak - accel * td).max(0.0),
                        -accel,
                    )
                };
                let pos = [from[0] + dir[0] * s, from[1] + dir[1] * s, from[2] + dir[2] * s];
                let vel = [dir[0] * v, dir[1] * v, dir[2] * v];
                (pos, vel, a, heading)
            }
        }
    }
}

fn validate_plan(plan: &FlightPlan, cfg: &ScenarioConfig) -> Result<()> {
    if plan.waypoints.is_empty() {
        return Err(ScenarioError::Plan("no waypoints".into()));
    }
    for (i, w) in plan.waypoints.iter().enumerate() {
        if !cfg.arena.contains(*w) {
            return Err(ScenarioError::Plan(format!("waypoint {i} {w:?} is outside the arena")));
        }
    }
    if plan.speeds.len() + 1 != plan.waypoints.len() {
        return Err(ScenarioError::Plan(format!(
            "{} waypoints need {} leg speeds, got {}",
            plan.waypoints.len(),
            plan.waypoints.len() - 1,
            plan.speeds.len()
        )));
    }
    for (i, (&v, pair)) in plan.speeds.iter().zip(plan.waypoints.windows(2)).enumerate() {
        let moving = norm3(sub(pair[1], pair[0])) > 0.0;
        if !(v >= 0.0) || v > cfg.max_speed + 1e-12 || (moving && v == 0.0) {
            return Err(ScenarioError::Plan(format!(
                "leg {i} speed {v} outside (0, {}]",
                cfg.max_speed
            )));
        }
    }
    for h in &plan.hovers {
        if h.waypoint >= plan.waypoints.len() || !(h.duration >= 0.0) {
            return Err(ScenarioError::Plan(format!("invalid hover {h:?}")));
        }
    }
    Ok(())
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn build_segments(plan: &FlightPlan, accel: f64) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut heading = 0.0;
    let hover_at = |i: usize| -> f64 {
        plan.hovers
            .iter()
            .filter(|h| h.waypoint == i)
            .map(|h| h.duration)
            .sum()
    };
    for (i, &w) in plan.waypoints.iter().enumerate() {
        let dwell = hover_at(i);
        if dwell > 0.0 {
            segments.push(Segment::Hover {
                at: w,
                duration: dwell,
                heading,
            });
        }
        if let Some(&next) = plan.waypoints.get(i + 1) {
            let delta = sub(next, w);
            let len = norm3(delta);
            if len == 0.0 {
                continue;
            }
            let dir = [delta[0] / len, delta[1] / len, delta[2] / len];
            if delta[0].abs() + delta[1].abs() > 1e-9 {
                heading = delta[1].atan2(delta[0]);
            }
            let cruise_speed = plan.speeds[i];
            let (peak, ramp, cruise) = if cruise_speed * cruise_speed / accel >= len {
                let peak = (accel * len).sqrt();
                (peak, peak / accel, 0.0)
            } else {
                let ramp = cruise_speed / accel;
                (cruise_speed, ramp, (len - cruise_speed * ramp) / cruise_speed)
            };
            segments.push(Segment::Leg {
                from: w,
                dir,
                accel,
                peak,
                ramp,
                cruise,
                heading,
            });
        }
    }
    if segments.is_empty() {
        segments.push(Segment::Hover {
            at: plan.waypoints[0],
            duration: 0.0,
            heading,
        });
    }
    segments
}

/// Pitch from horizontal speed and longitudinal acceleration: forward flight
/// and forward acceleration tilt the nose down (negative pitch).
fn pitch_for(antenna: &AntennaModel, horizontal_speed: f64, accel_long: f64) -> f64 {
    if !antenna.tilt_enabled {
        return 0.0;
    }
    let deg = antenna.tilt_per_speed_deg * horizontal_speed + antenna.tilt_per_accel_deg * accel_long;
    -deg.clamp(-antenna.max_tilt_deg, antenna.max_tilt_deg).to_radians()
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut x = (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if x < -std::f64::consts::PI {
        x += two_pi;
    }
    x
}

/// Samples a flight plan every `step_period` seconds. Motion is piecewise
/// linear with trapezoidal speed ramps (stopping at each waypoint); the seed
/// only drives small attitude jitter.
pub fn simulate_trajectory(
    plan: &FlightPlan,
    step_period: f64,
    rng_seed: u64,
    cfg: &ScenarioConfig,
) -> Result<Vec<DroneState>> {
    validate_plan(plan, cfg)?;
    if !(step_period > 0.0) {
        return Err(ScenarioError::Plan("step period must be positive".into()));
    }
    let segments = build_segments(plan, cfg.acceleration);
    let total: f64 = segments.iter().map(Segment::duration).sum();
    let steps = (total / step_period).floor() as usize + 1;

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let jitter_std = cfg.antenna.attitude_jitter_deg.to_radians();
    let jitter = Normal::new(0.0, jitter_std).expect("finite std");

    let mut states = Vec::with_capacity(steps);
    let mut seg_idx = 0;
    let mut seg_start = 0.0;
    for n in 0..steps {
        let t = n as f64 * step_period;
        while seg_idx + 1 < segments.len() && t >= seg_start + segments[seg_idx].duration() {
            seg_start += segments[seg_idx].duration();
            seg_idx += 1;
        }
        let local = (t - seg_start).min(segments[seg_idx].duration());
        let (position, velocity, accel_long, heading) = segments[seg_idx].eval(local);
        let horizontal = velocity[0].hypot(velocity[1]);
        let (j_yaw, j_pitch, j_roll) = if jitter_std > 0.0 {
            (jitter.sample(&mut rng), jitter.sample(&mut rng), jitter.sample(&mut rng))
        } else {
            (0.0, 0.0, 0.0)
        };
        states.push(DroneState {
            position: [position[0], position[1], position[2].max(0.0)],
            velocity,
            yaw: wrap_angle(heading + j_yaw),
            pitch: wrap_angle(pitch_for(&cfg.antenna, horizontal, accel_long) + j_pitch),
            roll: wrap_angle(j_roll),
            timestamp_index: n,
        });
    }
    Ok(states)
}

/// Random waypoint tour inside the arena.
pub fn random_flight_plan<R: Rng + ?Sized>(
    arena: &Arena,
    spec: &RandomFlights,
    rng: &mut R,
) -> FlightPlan {
    let n = rng.random_range(spec.min_waypoints..=spec.max_waypoints);
    let top = spec.max_altitude.min(arena.max_altitude);
    let bottom = spec.min_altitude.min(top);
    let waypoints: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            [
                rng.random_range(0.0..=arena.length_east),
                rng.random_range(0.0..=arena.width_north),
                rng.random_range(bottom..=top),
            ]
        })
        .collect();
    let speeds = (1..n)
        .map(|_| rng.random_range(spec.min_speed..=spec.max_speed))
        .collect();
    let mut hovers = Vec::new();
    for i in 0..n {
        if rng.random::<f64>() < spec.hover_probability {
            hovers.push(Hover {
                waypoint: i,
                duration: rng.random_range(0.0..=spec.max_hover),
            });
        }
    }
    FlightPlan {
        waypoints,
        speeds,
        hovers,
    }
}
