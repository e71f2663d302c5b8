//! Tempered-posterior sampling over network coefficients.
//!
//! The target is `-(alpha/2) * RSS(theta) + log prior(theta)` up to
//! the data-only constant. The kernel is a Metropolis random-walk
//! whose per-coordinate scale is proportional to the prior scale
//! `sigma_k` (a single global scale would freeze the coordinates with
//! tiny scales under a directed schedule), mixed with an occasional
//! per-coordinate independence refresh from the prior for mode escape.
//! Scale adaptation runs during burn-in only and is frozen afterwards.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use htbnn_core::data::RegressionData;
use htbnn_core::net::{clip, param_count, Architecture, Network};
use htbnn_core::prior::{
    log_density_scaled, sample_prior, scale_in_log_space, HeavyTailDensity, ScalingSchedule,
};

#[derive(Debug, Error)]
pub enum McmcError {
    #[error("alpha must lie strictly inside (0,1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("{0}")]
    InvalidConfig(String),
    #[error("no finite initial state found after {0} prior draws")]
    InitFailed(usize),
    #[error("chain is empty")]
    EmptyChain,
    #[error(transparent)]
    Net(#[from] htbnn_core::net::NetError),
    #[error(transparent)]
    Prior(#[from] htbnn_core::prior::PriorError),
}

/// Tempered-posterior sampler settings.
#[derive(Debug, Clone)]
pub struct TemperConfig {
    /// Likelihood tempering exponent, strictly inside (0,1).
    pub alpha: f64,
    /// Recorded sweeps after burn-in.
    pub steps: usize,
    pub burnin: usize,
    /// Keep every `thin`-th post-burn-in sweep.
    pub thin: usize,
    pub seed: u64,
    /// Initial random-walk scale as a multiple of `sigma_k`.
    pub step_scale: f64,
    /// Probability of an independence refresh per sweep.
    pub refresh_prob: f64,
    /// Acceptance rate targeted by burn-in adaptation.
    pub target_acceptance: f64,
    /// Coefficients pinned to fixed values (never proposed); used by
    /// low-dimensional oracles.
    pub fixed: Vec<(usize, f64)>,
}

impl Default for TemperConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            steps: 2000,
            burnin: 1000,
            thin: 1,
            seed: 0,
            step_scale: 1.0,
            refresh_prob: 0.1,
            target_acceptance: 0.3,
            fixed: Vec::new(),
        }
    }
}

impl TemperConfig {
    fn validate(&self) -> Result<(), McmcError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(McmcError::AlphaOutOfRange(self.alpha));
        }
        if self.steps == 0 || self.thin == 0 {
            return Err(McmcError::InvalidConfig("steps and thin must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.refresh_prob) {
            return Err(McmcError::InvalidConfig("refresh_prob must lie in [0,1]".into()));
        }
        Ok(())
    }
}

/// Prior over coefficients: base density plus scaling schedule.
#[derive(Clone)]
pub struct CoefficientPrior<'a> {
    pub density: &'a HeavyTailDensity,
    pub schedule: &'a ScalingSchedule,
}

/// Residual sum of squares of the network on the data.
pub fn rss(net: &Network, data: &RegressionData) -> f64 {
    if data.n() == 0 {
        return 0.0;
    }
    let pred = net.forward_batch(&data.x).expect("dimension mismatch");
    (0..data.n()).map(|i| {
        let r = data.y[i] - pred[(i, 0)];
        r * r
    }).sum()
}

/// Log tempered posterior up to the data-only constant:
/// `-(alpha/2) RSS + log prior`.
pub fn log_tempered_posterior(
    net: &Network,
    data: &RegressionData,
    alpha: f64,
    prior: &CoefficientPrior,
) -> f64 {
    -(alpha / 2.0) * rss(net, data)
        + htbnn_core::prior::log_prior_density(net, prior.density, prior.schedule)
}

/// Diagnostics of one chain run.
#[derive(Debug, Clone)]
pub struct ChainDiagnostics {
    pub acceptance: f64,
    pub refresh_acceptance: f64,
    /// Split-chain potential scale reduction of tracked coordinates.
    pub split_rhat: Vec<f64>,
    pub final_log_posterior: f64,
    pub adapted_step_scale: f64,
}

/// Thinned output of a run.
pub struct ChainRun {
    pub samples: Vec<Vec<f64>>,
    pub diagnostics: ChainDiagnostics,
    pub arch: Architecture,
}

struct ChainState<'a> {
    arch: &'a Architecture,
    theta: Vec<f64>,
    log_post: f64,
    /// `log(1/sigma_k)` per coefficient in frozen order.
    log_inv_sigma: Vec<f64>,
    fixed_mask: Vec<bool>,
}

impl<'a> ChainState<'a> {
    fn to_network(&self) -> Network {
        Network::from_coefficients(self.arch, &self.theta).expect("state is consistent")
    }
}

fn coefficient_scales(arch: &Architecture, sched: &ScalingSchedule) -> Vec<f64> {
    Network::zeros(arch)
        .coefficient_positions()
        .map(|(l, i, j)| sched.log_inv_sigma(l, i, j))
        .collect()
}

/// Run a single chain, invoking `on_sample` on every kept state.
///
/// Output is bitwise reproducible for a fixed seed: the random stream
/// is a counter-based generator owned by the chain.
pub fn run_chain_with<F: FnMut(&Network)>(
    data: &RegressionData,
    arch: &Architecture,
    prior: &CoefficientPrior,
    cfg: &TemperConfig,
    mut on_sample: F,
) -> Result<ChainDiagnostics, McmcError> {
    cfg.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let t = param_count(arch).t;
    let log_inv_sigma = coefficient_scales(arch, prior.schedule);
    let mut fixed_mask = vec![false; t];
    for &(k, _) in &cfg.fixed {
        fixed_mask[k] = true;
    }

    // initialize from the prior, retrying on non-finite targets
    let mut state = None;
    for _ in 0..100 {
        let mut theta: Vec<f64> = sample_prior(arch, prior.density, prior.schedule, &mut rng)?
            .coefficients()
            .collect();
        for &(k, v) in &cfg.fixed {
            theta[k] = v;
        }
        let net = Network::from_coefficients(arch, &theta)?;
        let lp = log_tempered_posterior(&net, data, cfg.alpha, prior);
        if lp.is_finite() {
            state = Some(ChainState { arch, theta, log_post: lp, log_inv_sigma, fixed_mask });
            break;
        }
    }
    let mut state = state.ok_or(McmcError::InitFailed(100))?;

    let mut step_scale = cfg.step_scale;
    let mut proposals = 0usize;
    let mut accepts = 0usize;
    let mut refresh_proposals = 0usize;
    let mut refresh_accepts = 0usize;
    let tracked = state.theta.len().min(4);
    let mut track_series: Vec<Vec<f64>> = vec![Vec::new(); tracked];

    let total_sweeps = cfg.burnin + cfg.steps;
    for sweep in 0..total_sweeps {
        let adapting = sweep < cfg.burnin;
        // coordinate sweep with prior-scale-proportional drift
        for k in 0..state.theta.len() {
            if state.fixed_mask[k] {
                continue;
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            let drift = scale_in_log_space(z * step_scale, state.log_inv_sigma[k]);
            let old = state.theta[k];
            let proposal = old + drift;
            let delta = coordinate_delta(&mut state, k, proposal, data, cfg.alpha, prior);
            proposals += 1;
            if delta >= 0.0 || rng.gen::<f64>() < delta.exp() {
                accept_coordinate(&mut state, k, proposal, delta);
                accepts += 1;
            }
            if adapting {
                // diminishing adaptation toward the target rate
                let acc = if delta >= 0.0 { 1.0 } else { delta.exp().min(1.0) };
                let gain = 1.0 / (1.0 + sweep as f64).sqrt();
                step_scale *= ((acc - cfg.target_acceptance) * gain * 0.3).exp();
                step_scale = step_scale.clamp(1e-4, 1e4);
            }
        }
        // independence refresh of one random coordinate
        if cfg.refresh_prob > 0.0 && rng.gen::<f64>() < cfg.refresh_prob {
            let free: Vec<usize> =
                (0..state.theta.len()).filter(|&k| !state.fixed_mask[k]).collect();
            if !free.is_empty() {
                let k = free[rng.gen_range(0..free.len())];
                let zeta = prior.density.sample(&mut rng);
                let proposal = scale_in_log_space(zeta, state.log_inv_sigma[k]);
                // prior proposal cancels against the prior factor
                let delta = likelihood_delta(&mut state, k, proposal, data, cfg.alpha)
                    + prior_delta(&state, k, proposal, prior);
                let q_ratio = log_density_scaled(prior.density, state.theta[k], state.log_inv_sigma[k])
                    - log_density_scaled(prior.density, proposal, state.log_inv_sigma[k]);
                refresh_proposals += 1;
                let log_ratio = delta + q_ratio;
                if log_ratio >= 0.0 || rng.gen::<f64>() < log_ratio.exp() {
                    accept_coordinate(&mut state, k, proposal, delta);
                    refresh_accepts += 1;
                }
            }
        }
        if !adapting {
            let kept = sweep - cfg.burnin;
            for (c, series) in track_series.iter_mut().enumerate() {
                series.push(state.theta[c]);
            }
            if kept % cfg.thin == 0 {
                on_sample(&state.to_network());
            }
        }
    }

    if cfg!(debug_assertions) {
        let recomputed =
            log_tempered_posterior(&state.to_network(), data, cfg.alpha, prior);
        debug_assert!(
            (recomputed - state.log_post).abs() <= 1e-9 * (1.0 + recomputed.abs()),
            "cached log posterior drifted: {} vs {recomputed}",
            state.log_post
        );
    }

    Ok(ChainDiagnostics {
        acceptance: accepts as f64 / proposals.max(1) as f64,
        refresh_acceptance: refresh_accepts as f64 / refresh_proposals.max(1) as f64,
        split_rhat: track_series.iter().map(|s| split_rhat(s)).collect(),
        final_log_posterior: state.log_post,
        adapted_step_scale: step_scale,
    })
}

/// Run a chain and keep every `thin`-th sample.
pub fn run_chain(
    data: &RegressionData,
    arch: &Architecture,
    prior: &CoefficientPrior,
    cfg: &TemperConfig,
) -> Result<ChainRun, McmcError> {
    let mut samples = Vec::new();
    let diagnostics = run_chain_with(data, arch, prior, cfg, |net| {
        samples.push(net.coefficients().collect());
    })?;
    Ok(ChainRun { samples, diagnostics, arch: arch.clone() })
}

/// Change in log posterior if coordinate `k` moves to `value`,
/// leaving the state unchanged.
fn coordinate_delta(
    state: &mut ChainState,
    k: usize,
    value: f64,
    data: &RegressionData,
    alpha: f64,
    prior: &CoefficientPrior,
) -> f64 {
    likelihood_delta(state, k, value, data, alpha) + prior_delta(state, k, value, prior)
}

fn likelihood_delta(
    state: &mut ChainState,
    k: usize,
    value: f64,
    data: &RegressionData,
    alpha: f64,
) -> f64 {
    if data.n() == 0 {
        return 0.0;
    }
    let old = state.theta[k];
    let before = rss_flat(state.arch, &state.theta, data);
    state.theta[k] = value;
    let after = rss_flat(state.arch, &state.theta, data);
    state.theta[k] = old;
    -(alpha / 2.0) * (after - before)
}

/// Forward pass straight off the flat coefficient vector (frozen
/// order), avoiding network reconstruction in the proposal loop.
fn eval_flat(arch: &Architecture, theta: &[f64], x: &[f64]) -> f64 {
    let w = arch.widths();
    let depth = arch.depth();
    let mut cur = x.to_vec();
    let mut next = Vec::new();
    let mut off = 0usize;
    for l in 0..=depth {
        let rows = w[l + 1];
        next.clear();
        for _ in 0..rows {
            let mut acc = theta[off];
            off += 1;
            for xv in cur.iter() {
                acc += theta[off] * xv;
                off += 1;
            }
            next.push(if l == depth { acc } else { acc.max(0.0) });
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur[0]
}

fn rss_flat(arch: &Architecture, theta: &[f64], data: &RegressionData) -> f64 {
    (0..data.n())
        .map(|i| {
            let r = data.y[i] - eval_flat(arch, theta, data.row(i));
            r * r
        })
        .sum()
}

fn prior_delta(state: &ChainState, k: usize, value: f64, prior: &CoefficientPrior) -> f64 {
    let lis = state.log_inv_sigma[k];
    log_density_scaled(prior.density, value, lis)
        - log_density_scaled(prior.density, state.theta[k], lis)
}

fn accept_coordinate(state: &mut ChainState, k: usize, value: f64, delta: f64) {
    state.theta[k] = value;
    state.log_post += delta;
}

/// Split-chain potential scale reduction of a scalar series.
pub fn split_rhat(series: &[f64]) -> f64 {
    let n = series.len() / 2;
    if n < 2 {
        return f64::NAN;
    }
    let halves = [&series[..n], &series[series.len() - n..]];
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / n as f64).collect();
    let grand = (means[0] + means[1]) / 2.0;
    let b = n as f64 * ((means[0] - grand).powi(2) + (means[1] - grand).powi(2));
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, m)| h.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n as f64 - 1.0))
        .sum::<f64>()
        / 2.0;
    if w <= 0.0 {
        return 1.0;
    }
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    (var_plus / w).sqrt()
}

/// Chain metadata stored next to checkpointed networks.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ChainMeta {
    pub alpha: f64,
    pub steps: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    pub acceptance: f64,
    pub refresh_acceptance: f64,
    pub split_rhat: Vec<f64>,
}

/// Write the final kept state in the network format plus a JSON
/// metadata sidecar under `prefix.htnet` / `prefix.meta.json`.
pub fn save_checkpoint(
    run: &ChainRun,
    cfg: &TemperConfig,
    prefix: &std::path::Path,
) -> Result<(), McmcError> {
    let last = run.samples.last().ok_or(McmcError::EmptyChain)?;
    let net = Network::from_coefficients(&run.arch, last)?;
    net.write_to(&prefix.with_extension("htnet"))?;
    let meta = ChainMeta {
        alpha: cfg.alpha,
        steps: cfg.steps,
        burnin: cfg.burnin,
        thin: cfg.thin,
        seed: cfg.seed,
        acceptance: run.diagnostics.acceptance,
        refresh_acceptance: run.diagnostics.refresh_acceptance,
        split_rhat: run.diagnostics.split_rhat.clone(),
    };
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| McmcError::InvalidConfig(e.to_string()))?;
    std::fs::write(prefix.with_extension("meta.json"), json)
        .map_err(|e| McmcError::InvalidConfig(e.to_string()))?;
    Ok(())
}

/// Pointwise posterior-mean curve with empirical 5–95% bands, after
/// clipping every sampled function value to `[-b, b]`.
pub struct PredictionBands {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub fn posterior_predict(
    run: &ChainRun,
    grid: &Array2<f64>,
    b: f64,
) -> Result<PredictionBands, McmcError> {
    if run.samples.is_empty() {
        return Err(McmcError::EmptyChain);
    }
    let m = grid.nrows();
    let mut values = Array2::zeros((run.samples.len(), m));
    for (s, coeffs) in run.samples.iter().enumerate() {
        let net = Network::from_coefficients(&run.arch, coeffs)?;
        let out = net.forward_batch(grid)?;
        for i in 0..m {
            values[(s, i)] = clip(out[(i, 0)], b);
        }
    }
    let mut mean = Vec::with_capacity(m);
    let mut lower = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m);
    for i in 0..m {
        let mut col: Vec<f64> = values.column(i).to_vec();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        mean.push(col.iter().sum::<f64>() / col.len() as f64);
        let lo = ((col.len() as f64 * 0.05) as usize).min(col.len() - 1);
        let hi = ((col.len() as f64 * 0.95) as usize).min(col.len() - 1);
        lower.push(col[lo]);
        upper.push(col[hi]);
    }
    Ok(PredictionBands { mean, lower, upper })
}
