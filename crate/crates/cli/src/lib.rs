//! Experiment orchestration: architecture selection, rate-grid runs
//! over the sample size, slope fitting against target exponents, and
//! report emission.

pub mod arch;
pub mod config;
pub mod experiment;
pub mod report;

pub use arch::{choose_architecture, ArchMode, ChosenArch};
pub use config::ExperimentConfig;
pub use experiment::{run_experiment, MethodSummary, RateReport, ResultRow};
pub use report::emit_report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Data(#[from] htbnn_core::data::DataError),
    #[error(transparent)]
    Prior(#[from] htbnn_core::prior::PriorError),
    #[error(transparent)]
    Vb(#[from] htbnn_infer::vb::VbError),
    #[error(transparent)]
    Mcmc(#[from] htbnn_infer::mcmc::McmcError),
    #[error(transparent)]
    Construct(#[from] htbnn_core::construct::ConstructError),
}
