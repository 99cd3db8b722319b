use ndarray::{ArrayD, ArrayViewMutD, Zip};
use serde::{Deserialize, Serialize};

use crate::{NnError, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moments. Moment buffers are created on the first
/// step from the parameter shapes and must keep matching them afterwards.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub config: AdamConfig,
    first: Vec<ArrayD<T>>,
    second: Vec<ArrayD<T>>,
    step: u64,
}

impl<T: Real> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            first: Vec::new(),
            second: Vec::new(),
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(
        &mut self,
        params: Vec<ArrayViewMutD<'_, T>>,
        grads: &[ArrayD<T>],
        lr: f64,
    ) -> Result<()> {
        if params.len() != grads.len() {
            return Err(NnError::Shape {
                context: "adam tensor count",
                expected: params.len(),
                actual: grads.len(),
            });
        }
        for (p, g) in params.iter().zip(grads) {
            if p.shape() != g.shape() {
                return Err(NnError::Invalid(format!(
                    "adam gradient shape {:?} does not match parameter {:?}",
                    g.shape(),
                    p.shape()
                )));
            }
        }
        if self.first.is_empty() {
            self.first = grads.iter().map(|g| ArrayD::zeros(g.raw_dim())).collect();
            self.second = self.first.clone();
        } else if self.first.len() != grads.len()
            || self.first.iter().zip(grads).any(|(m, g)| m.shape() != g.shape())
        {
            return Err(NnError::Invalid("adam state shape changed".into()));
        }

        self.step += 1;
        let c = &self.config;
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let bc1 = T::lit(1.0 - c.beta1.powi(self.step as i32));
        let bc2 = T::lit(1.0 - c.beta2.powi(self.step as i32));
        let (lr, eps) = (T::lit(lr), T::lit(c.eps));
        let one = T::one();
        // Moments of weights that stop receiving gradient (dead units) decay
        // geometrically into the subnormal range, where arithmetic is orders
        // of magnitude slower; they are flushed to zero instead.
        let tiny = T::min_positive_value();
        let update = |p: &mut T, g: T, m: &mut T, v: &mut T| {
            let mn = b1 * *m + (one - b1) * g;
            let vn = b2 * *v + (one - b2) * g * g;
            *m = if mn.abs() < tiny { T::zero() } else { mn };
            *v = if vn < tiny { T::zero() } else { vn };
            *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
        };

        for (((mut p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            match (p.as_slice_mut(), g.as_slice(), m.as_slice_mut(), v.as_slice_mut()) {
                (Some(ps), Some(gs), Some(ms), Some(vs)) => {
                    for i in 0..ps.len() {
                        update(&mut ps[i], gs[i], &mut ms[i], &mut vs[i]);
                    }
                }
                _ => Zip::from(&mut p)
                    .and(g)
                    .and(m)
                    .and(v)
                    .for_each(|p, &g, m, v| update(p, g, m, v)),
            }
        }
        Ok(())
    }
}

/// Piecewise-constant schedule: the base rate is multiplied by `factor` once
/// for every decay epoch that is `<=` the current (0-based) epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDecay {
    pub base_lr: f64,
    pub decay_epochs: Vec<usize>,
    pub factor: f64,
}

impl StepDecay {
    pub fn new(base_lr: f64, decay_epochs: Vec<usize>, factor: f64) -> Self {
        Self {
            base_lr,
            decay_epochs,
            factor,
        }
    }

    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        let passed = self.decay_epochs.iter().filter(|&&e| e <= epoch).count();
        self.base_lr * self.factor.powi(passed as i32)
    }
}
