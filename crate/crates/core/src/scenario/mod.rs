//! Synthetic drone flights over a rectangular arena next to a skyward-facing
//! base station: trajectories, GPS and camera observations, attitude-dependent
//! antenna gain, and per-step ground-truth beams.
//!
//! Coordinates are local East-North-Up metres with the base station at the
//! origin (ground level). The array and camera sit `mount_height` above it.

mod sensors;
mod synth;
mod trajectory;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phy::{OfdmConfig, PhyError, UlaArray};

pub use sensors::{antenna_gain, observe_gps, project_camera, tilted_down_axis};
pub use synth::{los_paths, synthesize_dataset, RawSample, RawSampleTable};
pub use trajectory::{random_flight_plan, simulate_trajectory};

/// 25 mph in m/s.
pub const MAX_DRONE_SPEED: f64 = 11.176;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("rejected flight plan: {0}")]
    Plan(String),
    #[error("rejected scenario config: {0}")]
    Config(String),
    #[error(transparent)]
    Phy(#[from] PhyError),
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

/// Simulated drone truth at one time step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    /// East, North, Up (m).
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub yaw: f64,
    /// Aerospace convention: nose-up positive, so forward flight is negative.
    pub pitch: f64,
    pub roll: f64,
    pub timestamp_index: usize,
}

impl DroneState {
    pub fn height(&self) -> f64 {
        self.position[2]
    }

    pub fn distance(&self) -> f64 {
        norm3(self.position)
    }

    pub fn speed(&self) -> f64 {
        norm3(self.velocity)
    }
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Arena {
    pub length_east: f64,
    pub width_north: f64,
    pub max_altitude: f64,
}

impl Default for Arena {
    fn default() -> Self {
        Self {
            length_east: 205.0,
            width_north: 152.0,
            max_altitude: 120.0,
        }
    }
}

impl Arena {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0.0..=self.length_east).contains(&p[0])
            && (0.0..=self.width_north).contains(&p[1])
            && (0.0..=self.max_altitude).contains(&p[2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaseStation {
    pub mount_height: f64,
    /// Heading of the array axis, degrees counter-clockwise from East.
    pub array_axis_deg: f64,
    pub array: UlaArray,
    pub num_beams: usize,
    pub carrier_hz: f64,
}

impl Default for BaseStation {
    fn default() -> Self {
        Self {
            mount_height: 1.5,
            array_axis_deg: -45.0,
            array: UlaArray::default(),
            num_beams: 64,
            carrier_hz: 60e9,
        }
    }
}

impl BaseStation {
    pub fn mount(&self) -> [f64; 3] {
        [0.0, 0.0, self.mount_height]
    }

    /// Unit vectors (array axis, horizontal normal) in ENU.
    pub fn axes(&self) -> ([f64; 3], [f64; 3]) {
        let a = self.array_axis_deg.to_radians();
        ([a.cos(), a.sin(), 0.0], [-a.sin(), a.cos(), 0.0])
    }

    pub fn wavelength(&self) -> f64 {
        299_792_458.0 / self.carrier_hz
    }
}

/// Skyward camera co-located with the array: optical axis points up, image
/// u runs along the array axis and image v along its horizontal normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraModel {
    /// Horizontal field of view, radians.
    pub field_of_view: f64,
    /// tan(hfov/2) / tan(vfov/2).
    pub image_aspect: f64,
    pub max_range: f64,
    /// Apparent size at 1 m range (clamped to 1).
    pub reference_size: f64,
    /// Std of detector jitter on the normalized centre.
    pub center_noise_std: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            field_of_view: 160f64.to_radians(),
            image_aspect: 1.0,
            max_range: 250.0,
            reference_size: 2.0,
            center_noise_std: 0.001,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.field_of_view > 0.0
            && self.field_of_view < std::f64::consts::PI
            && self.image_aspect > 0.0
            && self.max_range > 0.0
            && self.reference_size > 0.0
            && self.center_noise_std >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(ScenarioError::Config(format!("invalid camera {self:?}")))
        }
    }
}

/// Detected drone in the base-station image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisualFeature {
    pub center_u: f64,
    pub center_v: f64,
    pub apparent_size: f64,
    pub visible: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpsModel {
    /// Horizontal noise std per axis, metres.
    pub noise_std: f64,
    pub bias: [f64; 2],
    pub seed: u64,
}

impl Default for GpsModel {
    fn default() -> Self {
        Self {
            noise_std: 2.0,
            bias: [0.0, 0.0],
            seed: 17,
        }
    }
}

/// Quasi-omni drone antenna: a cosine-power lobe on the body-down axis, plus
/// the speed/acceleration-to-pitch coupling that tilts it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AntennaModel {
    pub lobe_exponent: f64,
    /// Power gain outside the lobe.
    pub floor_gain: f64,
    pub tilt_enabled: bool,
    pub tilt_per_speed_deg: f64,
    pub tilt_per_accel_deg: f64,
    pub max_tilt_deg: f64,
    pub attitude_jitter_deg: f64,
}

impl Default for AntennaModel {
    fn default() -> Self {
        Self {
            lobe_exponent: 1.0,
            floor_gain: 0.02,
            tilt_enabled: true,
            tilt_per_speed_deg: 2.0,
            tilt_per_accel_deg: 3.0,
            max_tilt_deg: 35.0,
            attitude_jitter_deg: 0.5,
        }
    }
}

/// Optional second path scattered off the ground near the drone. Its
/// strength decays with altitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundReflection {
    pub enabled: bool,
    pub coefficient: f64,
    pub height_scale: f64,
    pub scatter_radius: f64,
}

impl Default for GroundReflection {
    fn default() -> Self {
        Self {
            enabled: false,
            coefficient: 0.9,
            height_scale: 25.0,
            scatter_radius: 20.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hover {
    pub waypoint: usize,
    pub duration: f64,
}

/// Waypoints visited in order with a cruise speed per leg; the drone stops at
/// every waypoint and may hover there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlightPlan {
    pub waypoints: Vec<[f64; 3]>,
    /// One cruise speed per leg (`waypoints.len() - 1` entries).
    pub speeds: Vec<f64>,
    #[serde(default)]
    pub hovers: Vec<Hover>,
}

/// Generator for random flight plans.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomFlights {
    pub min_waypoints: usize,
    pub max_waypoints: usize,
    pub min_altitude: f64,
    pub max_altitude: f64,
    pub min_speed: f64,
    pub max_speed: f64,
    pub hover_probability: f64,
    pub max_hover: f64,
}

impl Default for RandomFlights {
    fn default() -> Self {
        Self {
            min_waypoints: 3,
            max_waypoints: 6,
            min_altitude: 10.0,
            max_altitude: 110.0,
            min_speed: 2.0,
            max_speed: MAX_DRONE_SPEED,
            hover_probability: 0.2,
            max_hover: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlightSource {
    Explicit(Vec<FlightPlan>),
    Random(RandomFlights),
}

impl Default for FlightSource {
    fn default() -> Self {
        Self::Random(RandomFlights::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub arena: Arena,
    pub base_station: BaseStation,
    pub ofdm: OfdmConfig,
    pub camera: CameraModel,
    pub gps: GpsModel,
    pub antenna: AntennaModel,
    pub ground_reflection: GroundReflection,
    pub flights: FlightSource,
    /// Random source: number of flights when `target_samples` is unset.
    pub num_flights: usize,
    /// Stop (truncating the last flight) once this many samples are kept.
    pub target_samples: Option<usize>,
    pub step_period: f64,
    pub max_speed: f64,
    pub acceleration: f64,
    /// Keep samples whose drone is outside the camera view.
    pub retain_invisible: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            arena: Arena::default(),
            base_station: BaseStation::default(),
            ofdm: OfdmConfig {
                cyclic_prefix_len: 32,
                ..OfdmConfig::default()
            },
            camera: CameraModel::default(),
            gps: GpsModel::default(),
            antenna: AntennaModel::default(),
            ground_reflection: GroundReflection::default(),
            flights: FlightSource::default(),
            num_flights: 20,
            target_samples: Some(12_005),
            step_period: 0.2,
            max_speed: MAX_DRONE_SPEED,
            acceleration: 2.5,
            retain_invisible: false,
            seed: 2023,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.ofdm.validate()?;
        self.camera.validate()?;
        if self.step_period <= 0.0 || self.acceleration <= 0.0 || self.max_speed <= 0.0 {
            return Err(ScenarioError::Config(
                "step_period, acceleration and max_speed must be positive".into(),
            ));
        }
        if self.gps.noise_std < 0.0 {
            return Err(ScenarioError::Config("gps noise_std must be >= 0".into()));
        }
        if self.base_station.num_beams != 64 {
            return Err(ScenarioError::Config(
                "the labelling pipeline downsamples a 64-beam sweep".into(),
            ));
        }
        match &self.flights {
            FlightSource::Explicit(plans) if plans.is_empty() => {
                Err(ScenarioError::Config("empty flight plan list".into()))
            }
            FlightSource::Random(_) if self.num_flights == 0 && self.target_samples.is_none() => {
                Err(ScenarioError::Config("no flights requested".into()))
            }
            FlightSource::Random(r)
                if r.min_waypoints < 2
                    || r.max_waypoints < r.min_waypoints
                    || r.max_speed > self.max_speed
                    || r.min_speed <= 0.0
                    || r.min_speed > r.max_speed =>
            {
                Err(ScenarioError::Config(format!("invalid random flight settings {r:?}")))
            }
            _ => Ok(()),
        }
    }
}
