//! Expected Shapley–Shubik values in weighted voting games whose weights are
//! drawn i.i.d. from exponentially decaying laws.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`, which is what the CLI and the
//! statistical tests use.

pub mod distributions;
pub mod error;
pub mod montecarlo;
pub mod parallel;
pub mod quadrature;
pub mod renewal;
pub mod scalar;
pub mod special;
pub mod theory;
pub mod wvg;

pub use distributions::{Bound, Conditioning, Extreme};
pub use error::{Error, Result};
pub use montecarlo::{Estimator, WeightModel};
pub use scalar::Real;

pub type WeightDistribution = distributions::WeightDistribution<f64>;
pub type ConditionedLaw = distributions::ConditionedLaw<f64>;
pub type Game = wvg::Game<f64>;
pub type ShapleyProfile = wvg::ShapleyProfile<f64>;
pub type ExperimentConfig = montecarlo::ExperimentConfig<f64>;
pub type ExperimentResult = montecarlo::ExperimentResult<f64>;
pub type Prediction = theory::Prediction<f64>;
pub type RenewalSummary = renewal::RenewalSummary<f64>;
