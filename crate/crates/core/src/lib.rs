//! Parameter estimation through a threshold detector with added ergodic
//! diffusion noise: invariant laws, path simulation, estimators and their
//! asymptotic variances, Fisher-information resonance sweeps, and MAP tests.

pub mod error;
pub mod estimators;
pub mod expr;
pub mod law;
pub mod noise;
pub mod numerics;
pub mod resonance;
pub mod scheme;
pub mod simulator;
pub mod validation;

pub use error::{Error, Result};
