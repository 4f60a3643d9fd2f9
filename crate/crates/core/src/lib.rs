//! Weighted sum-rate maximization for an IRS-assisted MIMO cognitive radio
//! downlink.
//!
//! A multi-antenna secondary access point serves several secondary users
//! while keeping the interference at every primary user under a cap. The
//! transmit precoders and the IRS reflection coefficients are optimized
//! jointly by alternating optimization on a WMMSE surrogate.
//!
//! * [`scenario`] draws node positions and Rician channels.
//! * [`model`] evaluates rates, interference and the WMMSE quantities.
//! * [`convex`] holds the general solvers (barrier QCQP, penalty method for
//!   the unit-modulus phases).
//! * [`fast`] holds the closed-form single-PU solvers.
//! * [`ao`] runs the alternating loops and baselines.
//! * [`experiment`] runs seeded trial sweeps and writes CSV results.

pub mod ao;
pub mod convex;
pub mod error;
pub mod experiment;
pub mod fast;
pub mod linalg;
pub mod model;
pub mod scenario;

pub use error::{Error, Result};
