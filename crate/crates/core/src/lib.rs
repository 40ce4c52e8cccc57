//! Monte Carlo laboratory for linear systems `dQ/dt = A(t) Q` driven by
//! stationary, statistically isotropic matrix noise with finite correlation
//! time.
//!
//! The crate is split along the data flow of an experiment:
//!
//! * [`processes`] generates sample paths of the driving noise,
//! * [`evolution`] integrates one realization and keeps the evolution matrix
//!   in Iwasawa form `Q = R D Z`,
//! * [`estimators`] reduces ensembles into Lyapunov exponents, generalized
//!   Lyapunov exponents and empirical rate functions,
//! * [`analytics`] holds the closed-form predictions and convex-analysis
//!   tools the estimates are checked against.

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod ensemble;
pub mod error;
pub mod estimators;
pub mod evolution;
pub mod linalg;
pub mod processes;
pub mod rng;

pub use error::{Error, Result};

/// Embedded in every serialized estimate.
pub const VERSION_TAG: &str = concat!("lyapunov-lab/", env!("CARGO_PKG_VERSION"));
