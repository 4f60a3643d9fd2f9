//! General solvers for any number of PUs: a log-barrier QCQP solver, the
//! precoder step built on it and the penalty method for the reflection step.

pub mod barrier;
pub mod precoder;
pub mod theta;

pub use barrier::{solve_qcqp_barrier, BarrierSettings, QcqpProblem, QcqpSolution, QuadConstraint};
pub use precoder::{build_precoder_qcqp, solve_precoder_step};
pub use theta::{build_theta_problem, penalty_theta_solve, sca_theta_inner, PenaltySettings, ThetaProblemData};
