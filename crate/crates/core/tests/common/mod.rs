#![allow(dead_code)]

use dronebeam::dataset::{SensingSample, NUM_BEAMS};
use dronebeam::scenario::VisualFeature;

/// A sample whose sensed values are simple functions of its label.
pub fn sample(flight_id: usize, t: usize, label: usize) -> SensingSample {
    let x = label as f64;
    SensingSample {
        flight_id,
        t,
        gps: [10.0 + 3.0 * x, 50.0 - x],
        height: 20.0 + x,
        distance: 80.0 + 2.0 * x,
        speed: 3.0,
        pitch: 0.0,
        roll: 0.0,
        visual: VisualFeature {
            center_u: 0.1 + 0.025 * x,
            center_v: 0.5,
            apparent_size: 0.02,
            visible: true,
        },
        power32: (0..NUM_BEAMS).map(|b| 1.0 / (1.0 + (b as f64 - x).powi(2))).collect(),
        label,
    }
}

pub fn flight(flight_id: usize, labels: &[usize]) -> Vec<SensingSample> {
    labels.iter().enumerate().map(|(t, &l)| sample(flight_id, t, l)).collect()
}
