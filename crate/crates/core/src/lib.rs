//! Derivative-free gradient descent with a two-point Gaussian estimator and a
//! direction-normalized stepsize, plus the tooling to check its
//! high-probability guarantees numerically.

pub mod error;
pub mod harness;
pub mod optimizer;
pub mod oracles;
pub mod sampling;
pub mod schedules;
pub mod theory;

pub use error::{Result, ZoError};
