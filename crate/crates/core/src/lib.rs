//! Adaptive per-dimension learning rates driven by the effective ratio of
//! recent parameter movement, together with the baseline optimizers they are
//! measured against, hand-differentiated models, dataset loaders, and an
//! experiment harness that emits plot-ready metrics.
//!
//! The crate is organised bottom-up:
//!
//! - [`param`] and [`rng`]: flat `f64` parameter vectors and the seeded
//!   generator every other module draws from.
//! - [`optim`]: the optimizer trait, the effective-ratio window, each update
//!   rule, and a name-keyed [`optim::OptimizerRegistry`].
//! - [`models`]: the 2-D quadratic, softmax logistic regression, and a
//!   one-hidden-layer ReLU MLP with inverted dropout.
//! - [`data`]: IDX and Census CSV ingestion, splits, and mini-batch plans.
//! - [`harness`]: configuration, the training loop, metrics, and comparisons.

pub mod data;
pub mod error;
pub mod harness;
pub mod models;
pub mod optim;
pub mod param;
pub mod rng;

pub use error::{Error, Result};
pub use param::ParamVector;
pub use rng::Rng;
