//! Univariate point forecasting with doubly residual stacks of
//! basis-expansion blocks, trained by hand-written backpropagation, plus the
//! competition evaluation metrics, naive baselines and median ensembling.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod gradcheck;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use rng::Rng;
pub use tensor::{Matrix, Vector};
