use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::Real;

/// Inverted dropout: kept units are scaled by 1/(1-p) during training so
/// inference is the identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dropout {
    pub p: f64,
}

impl Dropout {
    pub fn new(p: f64) -> Self {
        assert!((0.0..1.0).contains(&p), "dropout probability must be in [0,1)");
        Self { p }
    }

    pub fn mask<T: Real, R: Rng + ?Sized>(&self, rows: usize, cols: usize, rng: &mut R) -> Array2<T> {
        if self.p == 0.0 {
            return Array2::ones((rows, cols));
        }
        let keep = T::lit(1.0 / (1.0 - self.p));
        Array2::from_shape_simple_fn((rows, cols), || {
            if rng.random::<f64>() < self.p {
                T::zero()
            } else {
                keep
            }
        })
    }
}
