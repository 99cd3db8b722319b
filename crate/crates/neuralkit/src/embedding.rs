use ndarray::{Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{NnError, Real, Result};

/// Fixed lookup table mapping a discrete index to a real vector. It is never
/// part of a model's trainable parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable<T> {
    table: Array2<T>,
}

impl<T: Real> EmbeddingTable<T> {
    /// Entries i.i.d. standard normal from a seeded stream.
    pub fn gaussian(rows: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = Array2::from_shape_simple_fn((rows, dim), || {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::lit(z)
        });
        Self { table }
    }

    pub fn from_array(table: Array2<T>) -> Self {
        Self { table }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.table.dim()
    }

    pub fn dim(&self) -> usize {
        self.table.ncols()
    }

    pub fn as_array(&self) -> &Array2<T> {
        &self.table
    }

    pub fn lookup(&self, index: usize) -> Result<ArrayView1<'_, T>> {
        if index >= self.table.nrows() {
            return Err(NnError::ClassOutOfRange {
                class: index,
                num_classes: self.table.nrows(),
            });
        }
        Ok(self.table.row(index))
    }
}
