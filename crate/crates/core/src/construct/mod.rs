//! Constructive ReLU approximation networks with tracked coefficient
//! bounds.
//!
//! Every builder records its measured maximum coefficient and asserts
//! the applicable cap at build time, not just in tests.

mod config;
mod indicator;
mod mult;
mod taylor;
mod wide;

pub use config::{cartesian, ApproxConfig, GridLayout, TargetFn};
pub use indicator::{indicator_net, outside_margin_bands, test_net};
pub use mult::{monomials, mult_net, poly_net};
pub use taylor::{
    clamp_net, localized_net, taylor_grid_net, tent_weight, BuilderReport, LocalizedParts,
};
pub use wide::{
    compositional_net, planned_composition_dims, planned_wide_dims, wide_depth_threshold,
    wide_net, wide_net_embedded, wide_width_threshold, ComponentFn, CompositionSpec,
    CompositionalBuild, EmbedMode, WideBuild,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Net(#[from] crate::net::NetError),
}

pub(crate) fn precondition(msg: impl Into<String>) -> ConstructError {
    ConstructError::Precondition(msg.into())
}

#[cfg(test)]
mod tests_mult;
#[cfg(test)]
mod tests_grid;
#[cfg(test)]
mod tests_comp;
