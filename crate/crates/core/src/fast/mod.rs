//! Closed-form solvers for systems with a single PU.

pub mod bisect;
pub mod precoder;
pub mod theta;

pub use precoder::{fast_precoder_step, sca_precoder_solve, FastPrecoderSettings, SinglePuPrecoderProblem};
pub use theta::{bisect_alpha, sca_theta_solve_single, theta_price_point, FastThetaSettings, ThetaMajorizedData};
