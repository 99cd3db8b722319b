use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::{NnError, Real, Result};

/// Numerically stable softmax (max-subtracted). Probabilities below `ε²` are
/// flushed to zero: they are invisible next to the other entries and would
/// otherwise seed subnormal operands in the backward pass.
pub fn softmax<T: Real>(logits: &ArrayView1<'_, T>) -> Array1<T> {
    let max = logits.fold(T::neg_infinity(), |m, &v| m.max(v));
    let mut e = logits.mapv(|v| (v - max).exp());
    let sum = e.sum();
    let tiny = T::epsilon() * T::epsilon();
    e.mapv_inplace(|v| {
        let p = v / sum;
        if p < tiny {
            T::zero()
        } else {
            p
        }
    });
    e
}

/// Returns `(-log softmax(logits)[class], softmax - onehot)`.
pub fn softmax_cross_entropy<T: Real>(
    logits: &ArrayView1<'_, T>,
    class: usize,
) -> Result<(T, Array1<T>)> {
    let n = logits.len();
    if class >= n {
        return Err(NnError::ClassOutOfRange {
            class,
            num_classes: n,
        });
    }
    let max = logits.fold(T::neg_infinity(), |m, &v| m.max(v));
    let log_sum = logits.fold(T::zero(), |s, &v| s + (v - max).exp()).ln();
    let loss = -(logits[class] - max - log_sum);
    let mut grad = softmax(logits);
    grad[class] -= T::one();
    Ok((loss, grad))
}

/// Mean cross-entropy over a batch (one sample per row) and its gradient with
/// respect to the logits, already divided by the batch size.
pub fn softmax_cross_entropy_batch<T: Real>(
    logits: &Array2<T>,
    classes: &[usize],
) -> Result<(T, Array2<T>)> {
    if logits.nrows() != classes.len() {
        return Err(NnError::Shape {
            context: "batch labels",
            expected: logits.nrows(),
            actual: classes.len(),
        });
    }
    let scale = T::one() / T::lit(classes.len().max(1) as f64);
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut total = T::zero();
    for (i, (row, &c)) in logits.axis_iter(Axis(0)).zip(classes).enumerate() {
        let (l, g) = softmax_cross_entropy(&row, c)?;
        total += l;
        grad.row_mut(i).assign(&(g * scale));
    }
    Ok((total * scale, grad))
}
