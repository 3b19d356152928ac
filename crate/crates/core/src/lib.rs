//! Spectral regularization of linear inverse problems with estimated
//! operators, with nonparametric and functional linear instrumental
//! variable estimators built on top.

pub mod bench;
pub mod dgp;
mod error;
pub mod flir;
pub mod grid;
pub mod inference;
mod linalg;
pub mod npiv;
pub mod spectral;

pub use error::{Error, Result};
