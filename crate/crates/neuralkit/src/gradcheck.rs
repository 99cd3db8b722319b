//! Central-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::Rng;

use crate::{Grads, Parameterized};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckConfig {
    /// Number of parameter coordinates to probe (all of them if the model
    /// is smaller).
    pub samples: usize,
    /// Finite-difference step.
    pub step: f64,
    /// Denominator floor for the relative error so coordinates whose true
    /// gradient is ~0 are judged on absolute error.
    pub abs_floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            samples: 256,
            step: 1e-5,
            abs_floor: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    /// Flat index of the worst coordinate.
    pub worst_index: usize,
}

impl GradCheckReport {
    pub fn within(&self, tolerance: f64) -> bool {
        self.max_rel_error <= tolerance
    }
}

/// Compares `grad(model)` against `(loss(θ+h) - loss(θ-h)) / 2h` on a random
/// subset of coordinates. The model is restored exactly afterwards.
pub fn grad_check<M, L, G, R>(
    model: &mut M,
    loss: L,
    grad: G,
    config: GradCheckConfig,
    rng: &mut R,
) -> GradCheckReport
where
    M: Parameterized<f64>,
    L: Fn(&M) -> f64,
    G: Fn(&M) -> Grads<f64>,
    R: Rng + ?Sized,
{
    let analytic: Vec<f64> = grad(model)
        .iter()
        .flat_map(|g| g.iter().copied().collect::<Vec<_>>())
        .collect();
    let total = model.num_params();
    assert_eq!(analytic.len(), total, "gradient/parameter count mismatch");

    let picks = sample(rng, total, config.samples.min(total)).into_vec();
    let mut max = 0.0f64;
    let mut worst = 0;
    let mut sum = 0.0;
    for &i in &picks {
        let orig = model.param_at(i);
        model.set_param_at(i, orig + config.step);
        let up = loss(model);
        model.set_param_at(i, orig - config.step);
        let down = loss(model);
        model.set_param_at(i, orig);
        let numeric = (up - down) / (2.0 * config.step);
        let a = analytic[i];
        let denom = a.abs().max(numeric.abs()).max(config.abs_floor);
        let rel = (a - numeric).abs() / denom;
        sum += rel;
        if rel > max {
            max = rel;
            worst = i;
        }
    }
    GradCheckReport {
        checked: picks.len(),
        max_rel_error: max,
        mean_rel_error: if picks.is_empty() { 0.0 } else { sum / picks.len() as f64 },
        worst_index: worst,
    }
}
