//! Exponential last-passage percolation on `Z^2`: passage times and
//! geodesics, finite-volume geodesic trees and Busemann fields, dual weights
//! and interface portraits, and estimators for the scaling exponents.

pub mod duality;
pub mod error;
pub mod lattice;
pub mod lpp;
pub mod parallel;
pub mod scaling;
pub mod stats;
pub mod trees;

pub use error::{Error, Result};
