//! Differentially private convex optimization and convex-concave saddle
//! problems through output perturbation of pluggable non-private solvers.

pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod framework;
pub mod linalg;
pub mod mechanisms;
pub mod oracle;
pub mod problem;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
