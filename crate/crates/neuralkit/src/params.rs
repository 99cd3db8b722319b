use ndarray::{ArrayD, ArrayViewD, ArrayViewMutD};

use crate::Real;

/// Gradients in the same order as [`Parameterized::params`].
pub type Grads<T> = Vec<ArrayD<T>>;

/// Flat, ordered access to a model's trainable tensors.
pub trait Parameterized<T: Real> {
    fn params(&self) -> Vec<ArrayViewD<'_, T>>;
    fn params_mut(&mut self) -> Vec<ArrayViewMutD<'_, T>>;

    fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Reads coordinate `index` of the concatenated parameter vector.
    fn param_at(&self, mut index: usize) -> T {
        for p in self.params() {
            if index < p.len() {
                return *p.iter().nth(index).expect("in range");
            }
            index -= p.len();
        }
        panic!("parameter index out of range");
    }

    fn set_param_at(&mut self, mut index: usize, value: T) {
        for mut p in self.params_mut() {
            if index < p.len() {
                *p.iter_mut().nth(index).expect("in range") = value;
                return;
            }
            index -= p.len();
        }
        panic!("parameter index out of range");
    }

    /// All parameters concatenated in traversal order.
    fn flatten(&self) -> Vec<T> {
        self.params()
            .iter()
            .flat_map(|p| p.iter().copied().collect::<Vec<_>>())
            .collect()
    }

    /// Inverse of [`Parameterized::flatten`]. Returns false on length mismatch.
    fn load_flat(&mut self, values: &[T]) -> bool {
        if values.len() != self.num_params() {
            return false;
        }
        let mut it = values.iter();
        for mut p in self.params_mut() {
            for v in p.iter_mut() {
                *v = *it.next().expect("length checked");
            }
        }
        true
    }

    fn param_shapes(&self) -> Vec<Vec<usize>> {
        self.params().iter().map(|p| p.shape().to_vec()).collect()
    }
}
