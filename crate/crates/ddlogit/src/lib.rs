//! Estimation of dynamic discrete-choice logit models with fixed-effects
//! unobserved heterogeneity.
//!
//! The crate covers the full pipeline: representing choice histories with
//! duration dependence, solving the dynamic logit model, constructing
//! sufficient statistics that absorb the fixed effects, conditional maximum
//! likelihood on the resulting equivalence classes, BIC selection of the
//! duration cutoff, full-solution mixture maximum likelihood for comparison,
//! panel simulation, and Monte Carlo / empirical replication harnesses.

pub mod cmle;
pub mod error;
pub mod harness;
pub mod histories;
pub mod mle;
pub mod model;
pub mod simulate;
pub mod suffstats;
