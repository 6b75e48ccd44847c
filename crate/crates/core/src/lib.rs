//! Bandwidth selection for kernel density estimation.
//!
//! The crate provides the full pipeline from kernel algebra to Monte Carlo
//! experiments: polynomial, Gaussian and one-sided local-linear equivalent
//! kernels ([`kernels`]), density estimates and cross-validation scores
//! ([`density`]), the selector bank from classical CV through indirect
//! do-validation, plug-in and the median-of-13 combination ([`selectors`]),
//! the asymptotic variance constants of those selectors ([`asymptotics`]),
//! and a reproducible simulation harness with six benchmark densities
//! ([`simulation`]).

pub mod asymptotics;
pub mod density;
pub mod error;
pub mod kernels;
pub mod minimize;
pub mod quad;
pub mod selectors;
pub mod simulation;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
