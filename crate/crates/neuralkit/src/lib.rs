//! A deliberately small neural toolkit: dense ReLU networks, stacked GRUs with
//! multi-head classifiers, a frozen embedding lookup, softmax cross-entropy,
//! Adam with step decay, inverted dropout and a finite-difference gradient
//! checker.
//!
//! Every layer is generic over [`Real`] so the same code runs in `f32` for
//! training and in `f64` for gradient verification. All randomness flows
//! through caller-supplied RNGs, so identical seeds and data order give
//! bit-identical parameters.

pub mod dense;
pub mod dropout;
pub mod embedding;
pub mod error;
pub mod gradcheck;
pub mod gru;
pub mod loss;
pub mod optim;
pub mod params;
pub mod real;

pub use dense::{DenseCache, DenseNet, Linear};
pub use dropout::Dropout;
pub use embedding::EmbeddingTable;
pub use error::{NnError, Result};
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use gru::{GruCache, GruCell, GruMasks, GruNet};
pub use loss::{softmax, softmax_cross_entropy, softmax_cross_entropy_batch};
pub use optim::{Adam, AdamConfig, StepDecay};
pub use params::{Grads, Parameterized};
pub use real::Real;
