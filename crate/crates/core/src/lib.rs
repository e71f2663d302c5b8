//! Heavy-tailed Bayesian deep ReLU networks at desk scale.
//!
//! The crate is organised around five subsystems:
//!
//! - [`net`] — ReLU network data model, evaluation, calculus (compose /
//!   parallelize / depth-sync / enlarge), clipping and the coefficient
//!   perturbation bound.
//! - [`prior`] — heavy-tailed base densities with tail certification,
//!   per-coefficient scaling schedules, prior sampling and log-density,
//!   and the rate bookkeeping (effective smoothness, target exponents).
//! - [`construct`] — explicit ReLU approximation networks with tracked
//!   coefficient bounds: multiplication, polynomial, indicator/test,
//!   Taylor-grid, localized and partition-of-unity builders, plus the
//!   compositional assembly.
//! - [`divergence`] — Monte-Carlo and closed-form divergences of the
//!   Gaussian regression model.
//! - [`data`] — ground-truth fixtures, design distributions, regression
//!   data generation and a box-counting dimension estimator.

pub mod construct;
pub mod data;
pub mod divergence;
pub mod net;
pub mod prior;
pub mod quad;
pub mod stats;

pub use net::{clip, propagation_bound, Architecture, Network, ParamCount};
