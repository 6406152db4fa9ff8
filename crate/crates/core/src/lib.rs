//! Gaussian-process model discrimination: kernels, cross-model prediction
//! errors, design criteria, design search and design measures.

pub mod bessel;
pub mod criteria;
pub mod design;
pub mod error;
pub mod figures;
pub mod gp;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod measures;
pub mod optimize;
pub mod rng;
pub mod search;
pub mod simulation;

pub use error::{Error, Result};
