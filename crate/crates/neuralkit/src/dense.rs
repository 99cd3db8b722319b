//! Fully connected layers and the ReLU multilayer perceptron built from them.

use ndarray::{Array1, Array2, ArrayView2, ArrayViewD, ArrayViewMutD, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::check_dim;
use crate::{Grads, Parameterized, Real, Result};

/// Affine map `y = x W + b` applied row-wise to a batch.
///
/// `weight` is stored `in × out` so a batch laid out one sample per row
/// multiplies on the left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linear<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Real> Linear<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    pub fn uniform_fan_in<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs.max(1) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
        Self {
            weight: Array2::from_shape_simple_fn((inputs, outputs), || T::lit(dist.sample(rng))),
            bias: Array1::from_shape_simple_fn(outputs, || T::lit(dist.sample(rng))),
        }
    }

    /// Weights from N(0, 1) times `scale`, zero bias.
    pub fn normal_scaled<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        Self {
            weight: Array2::from_shape_simple_fn((inputs, outputs), || {
                let z: f64 = StandardNormal.sample(rng);
                T::lit(z * scale)
            }),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: &ArrayView2<'_, T>) -> Array2<T> {
        x.dot(&self.weight) + &self.bias
    }

    /// Returns `(dx, dW, db)` for upstream gradient `dy`.
    pub fn backward(
        &self,
        x: &ArrayView2<'_, T>,
        dy: &Array2<T>,
    ) -> (Array2<T>, Array2<T>, Array1<T>) {
        let dw = x.t().dot(dy);
        let db = dy.sum_axis(Axis(0));
        let dx = dy.dot(&self.weight.t());
        (dx, dw, db)
    }
}

/// Activations retained by [`DenseNet::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct DenseCache<T> {
    /// Input to each layer (post-activation of the previous one).
    inputs: Vec<Array2<T>>,
}

/// ReLU multilayer perceptron: every layer but the last is followed by a
/// rectifier; the last produces class logits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseNet<T> {
    pub layers: Vec<Linear<T>>,
}

impl<T: Real> DenseNet<T> {
    /// `dims = [input, hidden.., classes]`. Hidden layers get fan-in uniform
    /// init; the classifier gets N(0,1)*0.01 weights and zero bias.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "need at least input and output widths");
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                if i + 1 == n {
                    Linear::normal_scaled(dims[i], dims[i + 1], 0.01, rng)
                } else {
                    Linear::uniform_fan_in(dims[i], dims[i + 1], rng)
                }
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Linear<T>>) -> Result<Self> {
        for pair in layers.windows(2) {
            check_dim("DenseNet layer chain", pair[0].outputs(), pair[1].inputs())?;
        }
        Ok(Self { layers })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("non-empty").outputs()
    }

    /// Batched forward pass; `x` holds one sample per row.
    pub fn forward(&self, x: &ArrayView2<'_, T>) -> Result<(Array2<T>, DenseCache<T>)> {
        check_dim("DenseNet input width", self.input_width(), x.ncols())?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut act = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = layer.forward(&act.view());
            if i < last {
                out.mapv_inplace(|v| v.max(T::zero()));
            }
            inputs.push(act);
            act = out;
        }
        Ok((act, DenseCache { inputs }))
    }

    /// Logits for a single input vector.
    pub fn forward_one(&self, x: &[T]) -> Result<Array1<T>> {
        let view = ArrayView2::from_shape((1, x.len()), x)
            .map_err(|e| crate::NnError::Invalid(e.to_string()))?;
        let (logits, _) = self.forward(&view)?;
        Ok(logits.row(0).to_owned())
    }

    /// Parameter gradients for upstream logit gradient `dlogits`.
    pub fn backward(&self, cache: &DenseCache<T>, dlogits: &Array2<T>) -> Grads<T> {
        let mut grads: Vec<_> = Vec::with_capacity(2 * self.layers.len());
        let mut dy = dlogits.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &cache.inputs[i];
            let (mut dx, dw, db) = layer.backward(&x.view(), &dy);
            grads.push(db.into_dyn());
            grads.push(dw.into_dyn());
            if i > 0 {
                // x is relu output of the previous layer; its derivative is the
                // indicator x > 0.
                ndarray::Zip::from(&mut dx)
                    .and(x)
                    .for_each(|d, &a| {
                        if a <= T::zero() {
                            *d = T::zero();
                        }
                    });
            }
            dy = dx;
        }
        grads.reverse();
        grads
    }
}

impl<T: Real> Parameterized<T> for DenseNet<T> {
    fn params(&self) -> Vec<ArrayViewD<'_, T>> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.view().into_dyn(), l.bias.view().into_dyn()])
            .collect()
    }

    fn params_mut(&mut self) -> Vec<ArrayViewMutD<'_, T>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.view_mut().into_dyn(), l.bias.view_mut().into_dyn()])
            .collect()
    }
}
