//! Reconstruction correction for sensitive attributes of fair models.
//!
//! An adversary's guess of a training set's sensitive column is pushed to the
//! nearest (confidence-weighted) reconstruction consistent with the model's
//! released statistical-fairness guarantee.

pub mod adversary;
pub mod corrector;
pub mod estimator;
pub mod fairness;
pub mod harness;
