//! Sample-size planning for a one-sided z-test when the effect size is
//! uncertain and described by a truncated normal prior.
//!
//! The numerical modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod api;
pub mod criteria;
pub mod design;
pub mod error;
pub mod gauss;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Prior = gauss::TruncatedNormalPrior<f64>;
pub type Conditional = gauss::ConditionalPrior<f64>;
pub type Setup = design::TestSetup<f64>;
pub type PowerDist = design::PowerDistribution<f64>;
pub type Criterion = solver::Criterion<f64>;
pub type Rule = solver::Rule<f64>;
pub type SampleSize = solver::SampleSizeResult<f64>;
pub type Decomposition = criteria::PosDecomposition<f64>;
