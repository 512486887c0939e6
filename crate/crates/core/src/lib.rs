//! Shot-noise uncertainty quantification and robust hyperparameter design
//! for zero-noise extrapolation and Clifford data regression.
//!
//! Numerical kernels are generic over [`scalar::Real`]; the aliases below
//! fix them to `f64`, which every experiment uses.

// `!(x > 0.0)` style checks reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod cdr;
pub mod circuit;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod opt;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod stateprep;
pub mod uq;
pub mod zne;

pub use error::{Error, Result};

pub type StateVector64 = sim::StateVector<f64>;
pub type DensityMatrix64 = sim::DensityMatrix<f64>;
pub type Matrix64 = linalg::Matrix<f64>;
pub type ThinPlateRbf64 = opt::ThinPlateRbf<f64>;
