//! Multiscale Gibbs measures on finite product spaces.

pub mod config;
pub mod entropy;
pub mod error;
pub mod experiment;
pub mod ldp;
pub mod legendre;
pub mod measure;
pub mod numeric;
pub mod pd;
pub mod rng;
pub mod selftest;
pub mod space;

pub use entropy::{
    entropy_profile, phi, shannon_entropy, solve_variational, temperature_ratios, EntropyProfile, Multipliers,
};
pub use error::{Error, Result};
pub use measure::{CostTensor, MultiscaleMeasure, Observable, ScaleParams};
pub use space::ProductSpace;
