//! Experiment configuration, readable from a TOML key/value file.

use serde::{Deserialize, Serialize};

use htbnn_core::prior::{HeavyTailDensity, ScalingSchedule, ScheduleMode};

use crate::arch::ArchMode;
use crate::BenchError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Fixture name from the catalog.
    pub fixture: String,
    /// `"fixture-default"` or `"uniform"`.
    #[serde(default = "default_design")]
    pub design: String,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// `"student"` (with `nu`) or `"cauchy"`.
    #[serde(default = "default_family")]
    pub prior_family: String,
    #[serde(default = "default_nu")]
    pub nu: f64,
    /// `"directed"` or `"constant"`.
    #[serde(default = "default_schedule")]
    pub schedule: String,
    /// `"vb"`, `"mcmc"` or `"both"`.
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: Option<String>,
    /// `"compwi"`, `"largewi"` or explicit override widths.
    #[serde(default = "default_arch")]
    pub arch_mode: String,
    #[serde(default)]
    pub arch_override: Vec<usize>,
    /// Clip level for the posterior-mean predictor; defaults to the
    /// fixture sup bound plus a margin.
    pub clip_bound: Option<f64>,
    #[serde(default = "default_eval_points")]
    pub eval_points: usize,
    /// Slope acceptance half-width around the target exponent.
    #[serde(default = "default_slope_tolerance")]
    pub slope_tolerance: f64,
    /// Starting locations for fits: "zero" (the prior center),
    /// "prior-draw" (a sample from the prior), "live-subnet"
    /// (variance-preserving random locations on the coordinates whose
    /// prior scale is order one, so gradients reach every layer), or
    /// "compositional" (the staged approximant when it fits).
    #[serde(default = "default_init")]
    pub init: String,
    #[serde(default)]
    pub vb: VbSection,
    #[serde(default)]
    pub mcmc: McmcSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VbSection {
    pub steps: usize,
    pub lr: f64,
    pub mc_samples: usize,
    pub minibatch: usize,
    pub eval_every: usize,
    /// Posterior draws averaged into the predictor.
    pub predict_draws: usize,
    /// Cap on the starting scales: coordinates whose prior scale
    /// exceeds this start shrunk, which removes most of the draw noise
    /// of the cold start. `0` disables the cap.
    pub scale_init_cap: f64,
    /// Divergence warm-up steps (0 disables).
    pub kl_warmup: usize,
}

impl Default for VbSection {
    fn default() -> Self {
        Self {
            steps: 3000,
            lr: 0.02,
            mc_samples: 1,
            minibatch: 256,
            eval_every: 250,
            predict_draws: 24,
            scale_init_cap: 0.01,
            kl_warmup: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcSection {
    pub steps: usize,
    pub burnin: usize,
    pub thin: usize,
    /// Kept states averaged into the predictor (evenly strided).
    pub predict_draws: usize,
}

impl Default for McmcSection {
    fn default() -> Self {
        Self { steps: 4000, burnin: 2000, thin: 2, predict_draws: 64 }
    }
}

fn default_design() -> String {
    "fixture-default".into()
}
fn default_alpha() -> f64 {
    0.5
}
fn default_delta() -> f64 {
    0.05
}
fn default_family() -> String {
    "student".into()
}
fn default_nu() -> f64 {
    3.0
}
fn default_schedule() -> String {
    "directed".into()
}
fn default_method() -> String {
    "vb".into()
}
fn default_replications() -> usize {
    1
}
fn default_arch() -> String {
    "compwi".into()
}
fn default_eval_points() -> usize {
    100_000
}
fn default_slope_tolerance() -> f64 {
    0.15
}
fn default_init() -> String {
    "live-subnet".into()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BenchError::Config("n_grid must be strictly increasing".into()));
        }
        if self.replications == 0 {
            return Err(BenchError::Config("replications must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(BenchError::Config("alpha must lie strictly inside (0,1)".into()));
        }
        if !matches!(self.method.as_str(), "vb" | "mcmc" | "both") {
            return Err(BenchError::Config(format!("unknown method `{}`", self.method)));
        }
        if !matches!(
            self.init.as_str(),
            "zero" | "prior-draw" | "live-subnet" | "compositional"
        ) {
            return Err(BenchError::Config(format!("unknown init `{}`", self.init)));
        }
        Ok(())
    }

    pub fn family(&self) -> Result<HeavyTailDensity, BenchError> {
        match self.prior_family.as_str() {
            "cauchy" => Ok(HeavyTailDensity::cauchy()),
            "student" => Ok(HeavyTailDensity::student(self.nu)),
            "gaussian" => Ok(HeavyTailDensity::gaussian()),
            other => Err(BenchError::Config(format!("unknown prior family `{other}`"))),
        }
    }

    pub fn schedule_for(&self, n: usize) -> Result<ScalingSchedule, BenchError> {
        let mode = match self.schedule.as_str() {
            "directed" => ScheduleMode::Directed,
            "constant" => ScheduleMode::Constant,
            other => {
                return Err(BenchError::Config(format!("unknown schedule `{other}`")));
            }
        };
        Ok(ScalingSchedule::new(mode, n, self.delta)?)
    }

    pub fn arch_mode(&self) -> Result<ArchMode, BenchError> {
        match self.arch_mode.as_str() {
            "compwi" => Ok(ArchMode::CompWidth),
            "largewi" => Ok(ArchMode::LargeWidth),
            "override" => {
                if self.arch_override.len() < 3 {
                    return Err(BenchError::Config(
                        "override mode needs arch_override widths".into(),
                    ));
                }
                Ok(ArchMode::Override { widths: self.arch_override.clone() })
            }
            other => Err(BenchError::Config(format!("unknown arch mode `{other}`"))),
        }
    }
}
