use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{norm3, AntennaModel, BaseStation, CameraModel, DroneState, GpsModel, VisualFeature};

/// Horizontal position plus bias plus per-axis Gaussian noise.
pub fn observe_gps<R: Rng + ?Sized>(state: &DroneState, model: &GpsModel, rng: &mut R) -> [f64; 2] {
    let mut out = [
        state.position[0] + model.bias[0],
        state.position[1] + model.bias[1],
    ];
    if model.noise_std > 0.0 {
        let n = Normal::new(0.0, model.noise_std).expect("finite std");
        out[0] += n.sample(rng);
        out[1] += n.sample(rng);
    }
    out
}

/// Pinhole projection of the drone into the skyward camera's normalized image
/// plane. Invisible drones keep whatever centre the projection gives (NaN when
/// behind the image plane).
pub fn project_camera(state: &DroneState, camera: &CameraModel, bs: &BaseStation) -> VisualFeature {
    let mount = bs.mount();
    let rel = [
        state.position[0] - mount[0],
        state.position[1] - mount[1],
        state.position[2] - mount[2],
    ];
    let (axis, normal) = bs.axes();
    let xc = dot(rel, axis);
    let yc = dot(rel, normal);
    let zc = rel[2];
    let range = norm3(rel);
    let tan_h = (camera.field_of_view / 2.0).tan();
    let tan_v = tan_h / camera.image_aspect;
    let apparent_size = if range > 0.0 {
        (camera.reference_size / range).min(1.0)
    } else {
        1.0
    };
    if zc <= 0.0 {
        return VisualFeature {
            center_u: f64::NAN,
            center_v: f64::NAN,
            apparent_size,
            visible: false,
        };
    }
    let center_u = 0.5 + 0.5 * (xc / zc) / tan_h;
    let center_v = 0.5 + 0.5 * (yc / zc) / tan_v;
    let visible = (0.0..=1.0).contains(&center_u)
        && (0.0..=1.0).contains(&center_v)
        && range <= camera.max_range;
    VisualFeature {
        center_u,
        center_v,
        apparent_size,
        visible,
    }
}

/// Body-down unit vector in ENU for the given attitude.
pub fn tilted_down_axis(yaw: f64, pitch: f64, roll: f64) -> [f64; 3] {
    let forward = [yaw.cos(), yaw.sin(), 0.0];
    let left = [-yaw.sin(), yaw.cos(), 0.0];
    let nose_down = -pitch;
    let up1 = [
        forward[0] * nose_down.sin(),
        forward[1] * nose_down.sin(),
        nose_down.cos(),
    ];
    let (sr, cr) = roll.sin_cos();
    [
        -(up1[0] * cr - left[0] * sr),
        -(up1[1] * cr - left[1] * sr),
        -(up1[2] * cr - left[2] * sr),
    ]
}

/// Power gain of the drone antenna toward the base station.
pub fn antenna_gain(state: &DroneState, bs: &BaseStation, antenna: &AntennaModel) -> f64 {
    let mount = bs.mount();
    let to_bs = [
        mount[0] - state.position[0],
        mount[1] - state.position[1],
        mount[2] - state.position[2],
    ];
    let d = norm3(to_bs);
    if d == 0.0 {
        return 1.0;
    }
    let down = tilted_down_axis(state.yaw, state.pitch, state.roll);
    let cos_off = (dot(down, to_bs) / d).max(0.0);
    antenna.floor_gain + (1.0 - antenna.floor_gain) * cos_off.powf(antenna.lobe_exponent)
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state_at(p: [f64; 3]) -> DroneState {
        DroneState {
            position: p,
            velocity: [0.0; 3],
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
            timestamp_index: 0,
        }
    }

    #[test]
    fn noiseless_gps_is_exact() {
        let s = state_at([12.5, -3.25, 40.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = GpsModel { noise_std: 0.0, bias: [0.0, 0.0], seed: 0 };
        assert_eq!(observe_gps(&s, &m, &mut rng), [12.5, -3.25]);
        let biased = GpsModel { bias: [3.0, -4.0], ..m };
        assert_eq!(observe_gps(&s, &biased, &mut rng), [15.5, -7.25]);
    }

    #[test]
    fn gps_noise_std_is_honoured() {
        let s = state_at([0.0, 0.0, 10.0]);
        let m = GpsModel { noise_std: 2.0, bias: [0.0, 0.0], seed: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let (mut sum, mut sq) = ([0.0; 2], [0.0; 2]);
        for _ in 0..n {
            let g = observe_gps(&s, &m, &mut rng);
            for k in 0..2 {
                sum[k] += g[k];
                sq[k] += g[k] * g[k];
            }
        }
        for k in 0..2 {
            let mean = sum[k] / n as f64;
            let std = (sq[k] / n as f64 - mean * mean).sqrt();
            assert!((std - 2.0).abs() < 0.04, "axis {k}: {std}");
        }
    }

    #[test]
    fn drone_on_optical_axis_projects_to_centre() {
        let bs = BaseStation::default();
        let f = project_camera(&state_at([0.0, 0.0, 60.0]), &CameraModel::default(), &bs);
        assert!(f.visible);
        assert!((f.center_u - 0.5).abs() < 1e-12 && (f.center_v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn low_elevation_drone_is_outside_the_view() {
        let bs = BaseStation::default();
        let cam = CameraModel::default();
        // 200 m along the array axis at 20 m height: ~84 deg from zenith,
        // beyond the 80 deg half-angle
        let (axis, _) = bs.axes();
        let p = [axis[0] * 200.0, axis[1] * 200.0, 20.0];
        assert!(!project_camera(&state_at(p), &cam, &bs).visible);
        let below = state_at([10.0, 10.0, 0.0]);
        assert!(!project_camera(&below, &cam, &bs).visible);
    }

    #[test]
    fn apparent_size_halves_when_range_doubles() {
        let bs = BaseStation::default();
        let cam = CameraModel::default();
        let m = bs.mount();
        let dir = [0.3, 0.4, (1.0f64 - 0.25).sqrt()];
        let at = |r: f64| state_at([m[0] + dir[0] * r, m[1] + dir[1] * r, m[2] + dir[2] * r]);
        for r in [10.0, 37.0, 80.0] {
            let a = project_camera(&at(r), &cam, &bs).apparent_size;
            let b = project_camera(&at(2.0 * r), &cam, &bs).apparent_size;
            assert!((a / 2.0 - b).abs() < 1e-9);
        }
    }

    #[test]
    fn level_drone_points_straight_down() {
        let d = tilted_down_axis(0.7, 0.0, 0.0);
        assert!((d[2] + 1.0).abs() < 1e-12 && d[0].abs() < 1e-12);
        // nose-down pitch tilts the down axis backwards
        let d = tilted_down_axis(0.0, -0.3, 0.0);
        assert!(d[0] < 0.0);
        assert!((norm3(d) - 1.0).abs() < 1e-12);
        let d = tilted_down_axis(1.0, -0.2, 0.4);
        assert!((norm3(d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tilt_lowers_mean_gain() {
        let bs = BaseStation::default();
        let ant = AntennaModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut level, mut tilted) = (0.0, 0.0);
        for _ in 0..20_000 {
            let p = [rng.random_range(0.0..205.0), rng.random_range(0.0..152.0), rng.random_range(10.0..110.0)];
            let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let mut s = state_at(p);
            s.yaw = yaw;
            level += antenna_gain(&s, &bs, &ant);
            s.pitch = -25f64.to_radians();
            tilted += antenna_gain(&s, &bs, &ant);
        }
        assert!(level > tilted * 1.02, "{level} vs {tilted}");
    }
}
