//! Debiased machine learning for average treatment effects with
//! omitted-variable-bias sensitivity analysis.
//!
//! The pipeline is: validate a [`model::Dataset`], cross-fit nuisance
//! learners and solve the orthogonal score ([`dml`]), then bound the effect
//! of latent confounding with [`sensitivity`]. [`dgp`] provides simulated
//! data with known ground truth for validation.

pub mod dgp;
pub mod dml;
pub mod error;
pub mod learners;
pub mod model;
pub mod sensitivity;
pub mod stats;

pub use error::{Error, Result};
