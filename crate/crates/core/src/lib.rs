//! Verification engine for the Itô–Wentzell formula with jump diffusions.
//!
//! A single [`noise::NoisePath`] (Wiener increments plus a finite-activity
//! jump stream) drives every solver in the crate: the state SDE
//! ([`sde`]), the explicitly summed random field ([`randomfield`]), the
//! term-by-term formula evaluator ([`itowentzell`]) and the density
//! kernel solver ([`invariantkernel`]). [`mollifier`] certifies the
//! Gaussian delta-approximation bound and [`experiment`] runs batch suites
//! that emit CSV reports.

pub mod error;
pub mod experiment;
pub mod fields;
pub mod invariantkernel;
pub mod itowentzell;
pub mod mollifier;
pub mod noise;
pub mod randomfield;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
