//! Metropolis samplers for an attractive-repulsive particle system and a
//! one-particle planar model, with explicit convergence bounds, numerical
//! certificate audits, Gelman–Rubin diagnostics and functional estimates of
//! the total variation distance to stationarity.

// negated comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod diagnostics;
pub mod error;
pub mod functional;
pub mod model;
pub mod numerics;
pub mod rng;
pub mod sampler;
pub mod tv;

pub use error::{Error, Result};
pub use functional::{Functional, RadialForm};
pub use model::{ModelParams, PlanarPoint, SquareConfig};
pub use rng::{RngStream, RNG_ALGORITHM};
pub use sampler::{EnsembleSpec, InitialPolicy, Model, ModelKind, PlanarModel, SquareModel};
