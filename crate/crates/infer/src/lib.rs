//! Inference over network weights: tempered-posterior MCMC and
//! heavy-tailed mean-field variational approximation.

pub mod mcmc;
pub mod vb;
