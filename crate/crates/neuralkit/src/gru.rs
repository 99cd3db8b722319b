//! Gated recurrent units and a stacked GRU classifier with one softmax head
//! per forecast step.
//!
//! Cell equations (batch rows, gate blocks laid out `[update | reset | candidate]`):
//!
//! ```text
//! z  = sigmoid(x Wz + h Uz + bz)
//! r  = sigmoid(x Wr + h Ur + br)
//! n  = tanh(x Wn + (r * h) Un + bn)
//! h' = (1 - z) * h + z * n
//! ```

use ndarray::{s, Array1, Array2, ArrayView2, ArrayViewD, ArrayViewMutD, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::check_dim;
use crate::{Dropout, Grads, Linear, NnError, Parameterized, Real, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GruCell<T> {
    /// `inputs × 3H`
    pub w: Array2<T>,
    /// `H × 3H`
    pub u: Array2<T>,
    /// `3H`
    pub b: Array1<T>,
}

#[derive(Clone, Debug)]
struct StepCache<T> {
    x: Array2<T>,
    h_prev: Array2<T>,
    z: Array2<T>,
    r: Array2<T>,
    n: Array2<T>,
    rh: Array2<T>,
}

fn sigmoid<T: Real>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

impl<T: Real> GruCell<T> {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            w: Array2::zeros((inputs, 3 * hidden)),
            u: Array2::zeros((hidden, 3 * hidden)),
            b: Array1::zeros(3 * hidden),
        }
    }

    /// Input weights U(±1/sqrt(inputs)); recurrent weights and biases
    /// U(±1/sqrt(hidden)).
    pub fn new<R: Rng + ?Sized>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let wb = 1.0 / (inputs.max(1) as f64).sqrt();
        let hb = 1.0 / (hidden.max(1) as f64).sqrt();
        let wd = Uniform::new_inclusive(-wb, wb).expect("finite");
        let hd = Uniform::new_inclusive(-hb, hb).expect("finite");
        Self {
            w: Array2::from_shape_simple_fn((inputs, 3 * hidden), || T::lit(wd.sample(rng))),
            u: Array2::from_shape_simple_fn((hidden, 3 * hidden), || T::lit(hd.sample(rng))),
            b: Array1::from_shape_simple_fn(3 * hidden, || T::lit(hd.sample(rng))),
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.u.nrows()
    }

    /// One recurrence step for a batch; checks shapes.
    pub fn step(&self, h: &ArrayView2<'_, T>, x: &ArrayView2<'_, T>) -> Result<Array2<T>> {
        check_dim("GRU input width", self.inputs(), x.ncols())?;
        check_dim("GRU hidden width", self.hidden(), h.ncols())?;
        check_dim("GRU batch rows", h.nrows(), x.nrows())?;
        Ok(self.step_cached(h, x).0)
    }

    /// Single-vector convenience wrapper around [`GruCell::step`].
    pub fn step_one(&self, h: &[T], x: &[T]) -> Result<Vec<T>> {
        let hv = ArrayView2::from_shape((1, h.len()), h).map_err(|e| NnError::Invalid(e.to_string()))?;
        let xv = ArrayView2::from_shape((1, x.len()), x).map_err(|e| NnError::Invalid(e.to_string()))?;
        Ok(self.step(&hv, &xv)?.into_raw_vec_and_offset().0)
    }

    fn step_cached(&self, h: &ArrayView2<'_, T>, x: &ArrayView2<'_, T>) -> (Array2<T>, StepCache<T>) {
        let hd = self.hidden();
        let xw = x.dot(&self.w) + &self.b;
        let hu = h.dot(&self.u.slice(s![.., ..2 * hd]));

        let mut z = xw.slice(s![.., ..hd]).to_owned();
        z += &hu.slice(s![.., ..hd]);
        z.mapv_inplace(sigmoid);
        let mut r = xw.slice(s![.., hd..2 * hd]).to_owned();
        r += &hu.slice(s![.., hd..]);
        r.mapv_inplace(sigmoid);

        let rh = &r * h;
        let mut n = rh.dot(&self.u.slice(s![.., 2 * hd..]));
        n += &xw.slice(s![.., 2 * hd..]);
        n.mapv_inplace(|v| v.tanh());

        let mut h_new = Array2::zeros(n.raw_dim());
        Zip::from(&mut h_new)
            .and(&z)
            .and(h)
            .and(&n)
            .for_each(|o, &z, &h, &n| *o = (T::one() - z) * h + z * n);
        let cache = StepCache {
            x: x.to_owned(),
            h_prev: h.to_owned(),
            z,
            r,
            n,
            rh,
        };
        (h_new, cache)
    }

    /// Returns `(dx, dh_prev)` and accumulates parameter gradients into `acc`
    /// (`[dW, dU, db]`).
    fn step_backward(
        &self,
        c: &StepCache<T>,
        dh: &Array2<T>,
        acc: &mut [Array2<T>; 2],
        acc_b: &mut Array1<T>,
    ) -> (Array2<T>, Array2<T>) {
        let hd = self.hidden();
        let one = T::one();
        let rows = dh.nrows();
        // Pre-activation gradients laid out like the gate blocks.
        let mut da = Array2::zeros((rows, 3 * hd));
        let mut dh_prev = Array2::zeros(dh.raw_dim());
        {
            let (mut da_z, rest) = da.view_mut().split_at(Axis(1), hd);
            let (_, mut da_n) = rest.split_at(Axis(1), hd);
            Zip::from(&mut da_n)
                .and(dh)
                .and(&c.z)
                .and(&c.n)
                .for_each(|dn, &g, &z, &n| *dn = g * z * (one - n * n));
            Zip::from(&mut da_z)
                .and(&mut dh_prev)
                .and(dh)
                .and(&c.z)
                .and(&c.n)
                .and(&c.h_prev)
                .for_each(|dz, dhp, &g, &z, &n, &h| {
                    *dz = g * (n - h) * z * (one - z);
                    *dhp = g * (one - z);
                });
        }
        let da_n = da.slice(s![.., 2 * hd..]).to_owned();
        let u_n = self.u.slice(s![.., 2 * hd..]);
        let d_rh = da_n.dot(&u_n.t());
        {
            let mut da_r = da.slice_mut(s![.., hd..2 * hd]);
            Zip::from(&mut da_r)
                .and(&mut dh_prev)
                .and(&d_rh)
                .and(&c.r)
                .and(&c.h_prev)
                .for_each(|dr, dhp, &g, &r, &h| {
                    *dr = g * h * r * (one - r);
                    *dhp += g * r;
                });
        }

        acc[0] += &c.x.t().dot(&da);
        let da_zr = da.slice(s![.., ..2 * hd]);
        {
            let mut du_zr = acc[1].slice_mut(s![.., ..2 * hd]);
            du_zr += &c.h_prev.t().dot(&da_zr);
            let mut du_n = acc[1].slice_mut(s![.., 2 * hd..]);
            du_n += &c.rh.t().dot(&da_n);
        }
        *acc_b += &da.sum_axis(Axis(0));

        let dx = da.dot(&self.w.t());
        dh_prev += &da_zr.dot(&self.u.slice(s![.., ..2 * hd]).t());
        (dx, dh_prev)
    }
}

/// Dropout masks for one forward pass: `between[layer][t]` multiplies the
/// output of every non-final layer at step `t`; `head` multiplies the final
/// hidden state before the classifiers.
#[derive(Clone, Debug)]
pub struct GruMasks<T> {
    pub between: Vec<Vec<Array2<T>>>,
    pub head: Array2<T>,
}

impl<T: Real> GruMasks<T> {
    pub fn sample<R: Rng + ?Sized>(net: &GruNet<T>, steps: usize, batch: usize, rng: &mut R) -> Self {
        let drop = Dropout::new(net.dropout);
        let h = net.hidden();
        let between = (0..net.layers.len().saturating_sub(1))
            .map(|_| (0..steps).map(|_| drop.mask(batch, h, rng)).collect())
            .collect();
        let head = drop.mask(batch, h, rng);
        Self { between, head }
    }
}

/// Forward-pass record needed by [`GruNet::backward`].
#[derive(Clone, Debug)]
pub struct GruCache<T> {
    steps: Vec<Vec<StepCache<T>>>,
    final_hidden: Array2<T>,
    masks: Option<GruMasks<T>>,
}

/// Stacked GRU whose last hidden state feeds `heads.len()` parallel linear
/// classifiers. Hidden states start at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GruNet<T> {
    pub layers: Vec<GruCell<T>>,
    pub heads: Vec<Linear<T>>,
    pub dropout: f64,
}

impl<T: Real> GruNet<T> {
    pub fn new<R: Rng + ?Sized>(
        inputs: usize,
        hidden: usize,
        num_layers: usize,
        num_heads: usize,
        classes: usize,
        dropout: f64,
        rng: &mut R,
    ) -> Self {
        assert!(num_layers >= 1 && num_heads >= 1);
        assert!((0.0..1.0).contains(&dropout));
        let layers = (0..num_layers)
            .map(|l| GruCell::new(if l == 0 { inputs } else { hidden }, hidden, rng))
            .collect();
        let heads = (0..num_heads)
            .map(|_| Linear::normal_scaled(hidden, classes, 0.01, rng))
            .collect();
        Self {
            layers,
            heads,
            dropout,
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn hidden(&self) -> usize {
        self.layers[0].hidden()
    }

    pub fn classes(&self) -> usize {
        self.heads[0].outputs()
    }

    /// Runs the sequence (one `batch × inputs` matrix per step). `masks: None`
    /// is inference mode. Returns one logit matrix per head.
    pub fn forward(
        &self,
        seq: &[Array2<T>],
        masks: Option<GruMasks<T>>,
    ) -> Result<(Vec<Array2<T>>, GruCache<T>)> {
        if seq.is_empty() {
            return Err(NnError::Invalid("empty input sequence".into()));
        }
        let batch = seq[0].nrows();
        for x in seq {
            check_dim("GRU sequence input width", self.input_width(), x.ncols())?;
            check_dim("GRU sequence batch rows", batch, x.nrows())?;
        }
        if let Some(m) = &masks {
            check_dim("GRU dropout layers", self.layers.len() - 1, m.between.len())?;
            for per_layer in &m.between {
                check_dim("GRU dropout steps", seq.len(), per_layer.len())?;
            }
        }

        let hd = self.hidden();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut inputs: Vec<Array2<T>> = seq.to_vec();
        let last = self.layers.len() - 1;
        let mut top = Array2::zeros((batch, hd));
        for (l, cell) in self.layers.iter().enumerate() {
            let mut h = Array2::zeros((batch, hd));
            let mut layer_cache = Vec::with_capacity(seq.len());
            let mut outputs = Vec::with_capacity(seq.len());
            for (t, x) in inputs.iter().enumerate() {
                let (h_new, c) = cell.step_cached(&h.view(), &x.view());
                layer_cache.push(c);
                if l < last {
                    let out = match &masks {
                        Some(m) => &h_new * &m.between[l][t],
                        None => h_new.clone(),
                    };
                    outputs.push(out);
                }
                h = h_new;
            }
            caches.push(layer_cache);
            if l < last {
                inputs = outputs;
            } else {
                top = h;
            }
        }
        let final_hidden = match &masks {
            Some(m) => &top * &m.head,
            None => top,
        };
        let logits = self
            .heads
            .iter()
            .map(|head| head.forward(&final_hidden.view()))
            .collect();
        Ok((
            logits,
            GruCache {
                steps: caches,
                final_hidden,
                masks,
            },
        ))
    }

    /// Backpropagation through time given per-head logit gradients.
    pub fn backward(&self, cache: &GruCache<T>, dlogits: &[Array2<T>]) -> Result<Grads<T>> {
        check_dim("GRU head gradients", self.heads.len(), dlogits.len())?;
        let mut head_grads = Vec::with_capacity(2 * self.heads.len());
        let mut d_final = Array2::zeros(cache.final_hidden.raw_dim());
        for (head, dy) in self.heads.iter().zip(dlogits) {
            let (dx, dw, db) = head.backward(&cache.final_hidden.view(), dy);
            d_final += &dx;
            head_grads.push(dw.into_dyn());
            head_grads.push(db.into_dyn());
        }
        if let Some(m) = &cache.masks {
            d_final *= &m.head;
        }

        let steps = cache.steps[0].len();
        let last = self.layers.len() - 1;
        // Gradient arriving at each step's output from the layer above.
        let mut d_out: Vec<Option<Array2<T>>> = vec![None; steps];
        d_out[steps - 1] = Some(d_final);
        let mut layer_grads = Vec::with_capacity(self.layers.len());
        for l in (0..=last).rev() {
            let cell = &self.layers[l];
            let mut acc = [
                Array2::zeros(cell.w.raw_dim()),
                Array2::zeros(cell.u.raw_dim()),
            ];
            let mut acc_b = Array1::zeros(cell.b.raw_dim());
            let mut dh_next: Option<Array2<T>> = None;
            let mut d_in: Vec<Option<Array2<T>>> = vec![None; steps];
            for t in (0..steps).rev() {
                let dh = match (dh_next.take(), d_out[t].take()) {
                    (Some(a), Some(b)) => a + b,
                    (Some(a), None) | (None, Some(a)) => a,
                    (None, None) => continue,
                };
                let (dx, dh_prev) = cell.step_backward(&cache.steps[l][t], &dh, &mut acc, &mut acc_b);
                dh_next = Some(dh_prev);
                d_in[t] = Some(dx);
            }
            if l > 0 {
                if let Some(m) = &cache.masks {
                    for (t, d) in d_in.iter_mut().enumerate() {
                        if let Some(d) = d {
                            *d *= &m.between[l - 1][t];
                        }
                    }
                }
            }
            d_out = d_in;
            let [dw, du] = acc;
            layer_grads.push([dw.into_dyn(), du.into_dyn(), acc_b.into_dyn()]);
        }
        layer_grads.reverse();
        let mut grads: Grads<T> = layer_grads.into_iter().flatten().collect();
        grads.extend(head_grads);
        Ok(grads)
    }
}

impl<T: Real> Parameterized<T> for GruNet<T> {
    fn params(&self) -> Vec<ArrayViewD<'_, T>> {
        let mut out: Vec<ArrayViewD<'_, T>> = self
            .layers
            .iter()
            .flat_map(|c| [c.w.view().into_dyn(), c.u.view().into_dyn(), c.b.view().into_dyn()])
            .collect();
        out.extend(
            self.heads
                .iter()
                .flat_map(|h| [h.weight.view().into_dyn(), h.bias.view().into_dyn()]),
        );
        out
    }

    fn params_mut(&mut self) -> Vec<ArrayViewMutD<'_, T>> {
        let mut out: Vec<ArrayViewMutD<'_, T>> = self
            .layers
            .iter_mut()
            .flat_map(|c| {
                [
                    c.w.view_mut().into_dyn(),
                    c.u.view_mut().into_dyn(),
                    c.b.view_mut().into_dyn(),
                ]
            })
            .collect();
        out.extend(
            self.heads
                .iter_mut()
                .flat_map(|h| [h.weight.view_mut().into_dyn(), h.bias.view_mut().into_dyn()]),
        );
        out
    }
}
