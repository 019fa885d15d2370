//! Monte Carlo simulators for stationary growth models and the estimators
//! used to measure their two-time correlations.

pub mod closedform;
pub mod ensemble;
pub mod glew;
pub mod error;
pub mod lpp;
pub mod polymer;
pub mod rng;
pub mod stats;
pub mod tasep;

pub use ensemble::Ensemble;
pub use error::{Error, Result};
pub use rng::{StreamKey, StreamRng};
pub use stats::{CorrelationEstimate, CvtvTriple, EmpiricalDistribution, MomentAccumulator, PairAccumulator};
