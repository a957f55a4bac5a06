//! Numerical checks of the reuse, retrieval and library-growth results.
//! All simulations are deterministic for a fixed seed.

mod decomposition;
mod growth;
mod retrieval;

pub use decomposition::{
    simulate_decomposition_gain, DecompositionGain, DecompositionSimConfig, JointModel,
};
pub use growth::{
    closed_form, decay_rate, equilibrium, library_growth, GrowthParams, GrowthPoint,
    GrowthTrajectory,
};
pub use retrieval::{
    adaptive_simpson, retrieval_success_curve, success_probability_mc, success_probability_quad,
    Gaussian, RetrievalNoiseModel, RetrievalPoint, QUAD_HALF_WIDTH_SIGMAS,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T, SimError> {
    Err(SimError::InvalidParams(msg.into()))
}
