//! Sparse regression estimators and a simulation harness for comparing
//! them: the lasso and relaxed lasso by coordinate descent, forward stepwise
//! selection by incremental QR, and best subset selection by branch-and-bound
//! warm-started with iterative hard thresholding.
//!
//! The numerical routines are generic over [`Real`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! simulation harness uses.

pub mod datagen;
pub mod error;
pub mod harness;
pub mod io;
pub mod lasso;
pub mod linalg;
pub mod metrics;
pub mod scalar;
pub mod stepwise;
pub mod subset;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = linalg::Matrix<f64>;
pub type Dataset = datagen::Dataset<f64>;
pub type GroundTruth = datagen::GroundTruth<f64>;
pub type Ar1Covariance = datagen::Ar1Covariance<f64>;
pub type CdOptions = lasso::CdOptions<f64>;
pub type LassoPath = lasso::LassoPath<f64>;
pub type RelaxedPath = lasso::RelaxedPath<f64>;
pub type StepwisePath = stepwise::StepwisePath<f64>;
pub type SubsetSolution = subset::SubsetSolution<f64>;
pub type SubsetPath = subset::SubsetPath<f64>;
pub type BnbOptions = subset::BnbOptions<f64>;
pub type Scores = metrics::Scores<f64>;
