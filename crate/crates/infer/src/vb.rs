//! Heavy-tailed mean-field variational approximation of the tempered
//! posterior.
//!
//! The variational family puts an independent location-scale copy of
//! the base density on every coefficient; a state is the pair
//! `(mu_k, log varsigma_k)` per coordinate. The objective
//! `(alpha/2) E_Q RSS + KL(Q, prior)` equals the divergence to the
//! tempered posterior up to a data constant, so its minimizer is the
//! variational posterior.
//!
//! The likelihood term and its gradient use the reparameterization
//! `theta = mu + varsigma * zeta` with analytic backpropagation
//! through the network; the divergence term is a sum of
//! one-dimensional integrals, evaluated by adaptive quadrature in
//! oracle paths and by the same reparameterized draws during fitting.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use htbnn_core::data::RegressionData;
use htbnn_core::divergence::{l2_px, renyi, DesignSample, McEstimate};
use htbnn_core::net::{param_count, relu, Architecture, Network};
use htbnn_core::prior::{
    log_density_scaled, HeavyTailDensity, Moment, ScalingSchedule,
};
use htbnn_core::quad;

#[derive(Debug, Error)]
pub enum VbError {
    #[error(
        "base density `{family}` lacks the required moment of order {order}: \
         the variational family needs finite second (and, for positive tail \
         power, 1+kappa) moments; use a Student base with nu > 2 instead"
    )]
    MissingMoment { family: String, order: f64 },
    #[error("alpha must lie strictly inside (0,1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("{0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Net(#[from] htbnn_core::net::NetError),
}

/// How the divergence-to-prior term is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlMode {
    /// Per-coordinate adaptive quadrature (deterministic; oracle/test
    /// path). Gradients by centered differences with step 1e-5.
    Quadrature,
    /// Reparameterized draws shared with the likelihood term (fit
    /// path). Gradients analytic.
    MonteCarlo,
}

/// Mean-field state: one location and one log-scale per coefficient.
#[derive(Debug, Clone)]
pub struct VariationalState {
    pub mu: Vec<f64>,
    pub log_s: Vec<f64>,
    arch: Architecture,
    family: HeavyTailDensity,
    prior_log_inv_sigma: Vec<f64>,
    entropy_term: f64,
}

impl VariationalState {
    /// State equal to the prior: zero locations, prior scales.
    pub fn at_prior(
        arch: &Architecture,
        family: &HeavyTailDensity,
        sched: &ScalingSchedule,
    ) -> Result<Self, VbError> {
        let order = 2.0f64.max(1.0 + family.declared().kappa);
        if family.moment(order) == Moment::Infinite {
            return Err(VbError::MissingMoment { family: family.name(), order });
        }
        let prior_log_inv_sigma: Vec<f64> = Network::zeros(arch)
            .coefficient_positions()
            .map(|(l, i, j)| sched.log_inv_sigma(l, i, j))
            .collect();
        let t = param_count(arch).t;
        Ok(Self {
            mu: vec![0.0; t],
            log_s: prior_log_inv_sigma.iter().map(|v| -v).collect(),
            arch: arch.clone(),
            family: family.clone(),
            prior_log_inv_sigma,
            entropy_term: family.expected_log_density(),
        })
    }

    /// State centered at a given coefficient vector with prior scales
    /// (the oracle built from a constructive approximant).
    pub fn centered_at(
        approximant: &Network,
        family: &HeavyTailDensity,
        sched: &ScalingSchedule,
    ) -> Result<Self, VbError> {
        let mut state = Self::at_prior(approximant.arch(), family, sched)?;
        state.mu = approximant.coefficients().collect();
        Ok(state)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn family(&self) -> &HeavyTailDensity {
        &self.family
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn prior_log_inv_sigma(&self) -> &[f64] {
        &self.prior_log_inv_sigma
    }

    /// Draw a coefficient vector `mu + varsigma * zeta`.
    pub fn sample_coefficients<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let zeta = self.family.sample(rng);
                self.mu[k] + self.log_s[k].exp() * zeta
            })
            .collect()
    }

    pub fn sample_network<R: Rng + ?Sized>(&self, rng: &mut R) -> Network {
        Network::from_coefficients(&self.arch, &self.sample_coefficients(rng))
            .expect("state dimensions match the architecture")
    }

    /// Divergence of coordinate `k` to its prior factor by quadrature;
    /// exactly zero at the prior itself.
    pub fn coordinate_kl(&self, k: usize) -> f64 {
        coordinate_kl_quadrature(
            &self.family,
            self.entropy_term,
            self.mu[k],
            self.log_s[k],
            self.prior_log_inv_sigma[k],
        )
    }

    /// Total divergence to the prior by quadrature.
    pub fn kl_to_prior(&self) -> f64 {
        (0..self.len()).map(|k| self.coordinate_kl(k)).sum()
    }
}

/// One-dimensional divergence between two location-scale copies of the
/// same base density, `KL(h_{mu, s}, h_{0, sigma})`.
pub fn coordinate_kl_quadrature(
    family: &HeavyTailDensity,
    entropy_term: f64,
    mu: f64,
    log_s: f64,
    prior_log_inv_sigma: f64,
) -> f64 {
    let lq = -log_s; // log(1 / varsigma)
    let lp = prior_log_inv_sigma;
    if mu == 0.0 && lq == lp {
        return 0.0;
    }
    let s = log_s.exp();
    let cross = quad::integrate_real_line(
        &|u: f64| {
            let theta = mu + s * u;
            let logpi = if theta == 0.0 {
                family.log_density(0.0)
            } else {
                family.log_density_from_log_abs(theta.abs().ln() + lp)
            };
            let w = family.density(u);
            if w == 0.0 { 0.0 } else { w * logpi }
        },
        1e-10,
    );
    ((lq - lp) + entropy_term - cross).max(0.0)
}

/// Estimate of the objective with gradients for every `(mu, log s)`.
#[derive(Debug, Clone)]
pub struct VBObjectiveEstimate {
    pub value: f64,
    pub grad_mu: Vec<f64>,
    pub grad_log_s: Vec<f64>,
    pub mc_samples: usize,
    pub stderr: f64,
}

/// Reparameterized objective estimate.
///
/// `minibatch` draws that many data rows per Monte-Carlo sample and
/// rescales, keeping the estimate unbiased; `None` uses the full data.
#[allow(clippy::too_many_arguments)]
pub fn vb_objective(
    state: &VariationalState,
    data: &RegressionData,
    alpha: f64,
    mc_samples: usize,
    seed: u64,
    kl_mode: KlMode,
    minibatch: Option<usize>,
) -> Result<VBObjectiveEstimate, VbError> {
    vb_objective_weighted(state, data, alpha, mc_samples, seed, kl_mode, minibatch, 1.0)
}

/// Objective with a down-weighted divergence term, used only as an
/// optimization path (warm-up); the reported objective is always the
/// fully weighted one.
#[allow(clippy::too_many_arguments)]
pub(crate) fn vb_objective_weighted(
    state: &VariationalState,
    data: &RegressionData,
    alpha: f64,
    mc_samples: usize,
    seed: u64,
    kl_mode: KlMode,
    minibatch: Option<usize>,
    kl_weight: f64,
) -> Result<VBObjectiveEstimate, VbError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(VbError::AlphaOutOfRange(alpha));
    }
    if mc_samples == 0 {
        return Err(VbError::InvalidConfig("mc_samples must be positive".into()));
    }
    let t = state.len();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut grad_mu = vec![0.0; t];
    let mut grad_log_s = vec![0.0; t];
    let mut values = Vec::with_capacity(mc_samples);

    // antithetic pairing: consecutive samples share |zeta| with
    // opposite signs, cancelling the odd part of the gradient noise
    let mut zeta_base: Vec<f64> = Vec::new();
    for s_idx in 0..mc_samples {
        let zeta: Vec<f64> = if s_idx % 2 == 0 {
            zeta_base = (0..t).map(|_| state.family.sample(&mut rng)).collect();
            zeta_base.clone()
        } else {
            zeta_base.iter().map(|z| -z).collect()
        };
        let theta: Vec<f64> = (0..t)
            .map(|k| state.mu[k] + state.log_s[k].exp() * zeta[k])
            .collect();
        let net = Network::from_coefficients(&state.arch, &theta)?;
        let (rss, grad_theta, scale) = match minibatch {
            None => {
                let (r, g) = rss_with_gradient(&net, &data.x, &data.y);
                (r, g, 1.0)
            }
            Some(b) => {
                let b = b.min(data.n()).max(1);
                let idx: Vec<usize> = (0..b).map(|_| rng.gen_range(0..data.n())).collect();
                let xb = Array2::from_shape_fn((b, data.dim()), |(i, j)| data.x[(idx[i], j)]);
                let yb: Vec<f64> = idx.iter().map(|&i| data.y[i]).collect();
                let (r, g) = rss_with_gradient(&net, &xb, &yb);
                (r, g, data.n() as f64 / b as f64)
            }
        };
        let mut sample_value = 0.5 * alpha * scale * rss;
        for k in 0..t {
            let gl = 0.5 * alpha * scale * grad_theta[k];
            grad_mu[k] += gl;
            grad_log_s[k] += gl * (theta[k] - state.mu[k]);
        }
        if kl_mode == KlMode::MonteCarlo {
            for k in 0..t {
                let lq = -state.log_s[k];
                let lp = state.prior_log_inv_sigma[k];
                let log_q = state.family.log_density(zeta[k]) + lq;
                let log_pi = log_density_scaled(&state.family, theta[k], lp) + lp;
                sample_value += kl_weight * (log_q - log_pi);
                let dlogpi = state.family.log_density_gradient_scaled(theta[k], lp);
                grad_mu[k] += kl_weight * -dlogpi;
                grad_log_s[k] += kl_weight * (-1.0 - dlogpi * (theta[k] - state.mu[k]));
            }
        }
        values.push(sample_value);
    }

    let inv = 1.0 / mc_samples as f64;
    for g in grad_mu.iter_mut().chain(grad_log_s.iter_mut()) {
        *g *= inv;
    }
    let (mut value, stderr) = mean_stderr(&values);

    if kl_mode == KlMode::Quadrature {
        for k in 0..t {
            value += kl_weight * state.coordinate_kl(k);
            let step = 1e-5;
            let kl_at = |mu: f64, log_s: f64| {
                coordinate_kl_quadrature(
                    &state.family,
                    state.entropy_term,
                    mu,
                    log_s,
                    state.prior_log_inv_sigma[k],
                )
            };
            grad_mu[k] += kl_weight
                * (kl_at(state.mu[k] + step, state.log_s[k])
                    - kl_at(state.mu[k] - step, state.log_s[k]))
                / (2.0 * step);
            grad_log_s[k] += kl_weight
                * (kl_at(state.mu[k], state.log_s[k] + step)
                    - kl_at(state.mu[k], state.log_s[k] - step))
                / (2.0 * step);
        }
    }

    Ok(VBObjectiveEstimate { value, grad_mu, grad_log_s, mc_samples, stderr })
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Residual sum of squares and its gradient in every coefficient
/// (frozen order) by analytic backpropagation.
pub fn rss_with_gradient(net: &Network, x: &Array2<f64>, y: &[f64]) -> (f64, Vec<f64>) {
    let layers = net.layers();
    let n = x.nrows();
    // forward, keeping post-activation values per layer
    let mut acts: Vec<Array2<f64>> = Vec::with_capacity(layers.len() + 1);
    acts.push(x.clone());
    for (l, layer) in layers.iter().enumerate() {
        let mut pre = acts[l].dot(&layer.weight().t());
        pre += layer.shift();
        if l + 1 < layers.len() {
            pre.mapv_inplace(relu);
        }
        acts.push(pre);
    }
    let out = acts.last().unwrap();
    let mut rss = 0.0;
    let mut delta = Array2::zeros((n, 1));
    for i in 0..n {
        let r = out[(i, 0)] - y[i];
        rss += r * r;
        delta[(i, 0)] = 2.0 * r;
    }
    // backward
    let mut grads: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(layers.len());
    let mut delta = delta;
    for l in (0..layers.len()).rev() {
        let gw = delta.t().dot(&acts[l]);
        let gv = delta.sum_axis(ndarray::Axis(0));
        if l > 0 {
            let mut back = delta.dot(layers[l].weight());
            // activation mask of the post-relu values
            ndarray::Zip::from(&mut back).and(&acts[l]).for_each(|b, &a| {
                if a <= 0.0 {
                    *b = 0.0;
                }
            });
            delta = back;
        }
        grads.push((gw, gv));
    }
    grads.reverse();
    let mut flat = Vec::with_capacity(net.coefficient_count());
    for (gw, gv) in &grads {
        for i in 0..gw.nrows() {
            flat.push(gv[i]);
            flat.extend(gw.row(i).iter().copied());
        }
    }
    (rss, flat)
}

/// Optimizer settings for [`fit_vb`].
#[derive(Debug, Clone)]
pub struct VbFitConfig {
    pub alpha: f64,
    pub steps: usize,
    pub lr: f64,
    pub mc_samples: usize,
    pub minibatch: Option<usize>,
    pub seed: u64,
    /// Steps between objective evaluations for best-state tracking.
    pub eval_every: usize,
    pub eval_mc_samples: usize,
    /// Divergence mode for the best-state evaluations; quadrature
    /// makes the tracked objective deterministic in the divergence
    /// term, Monte Carlo keeps large fits cheap.
    pub eval_kl: KlMode,
    /// Steps over which the divergence weight ramps from 0 to 1; the
    /// evaluations and the returned best state always use the full
    /// objective. 0 disables the warm-up.
    pub kl_warmup: usize,
    /// Per-coordinate cap on gradient magnitudes before the moment
    /// updates. Heavy-tailed reparameterization draws occasionally
    /// spike; an unclipped spike poisons the second-moment buffer and
    /// freezes the coordinate for thousands of steps. 0 disables.
    pub grad_clip: f64,
    pub max_restarts: usize,
}

impl Default for VbFitConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            steps: 2000,
            lr: 0.02,
            mc_samples: 1,
            minibatch: None,
            seed: 0,
            eval_every: 100,
            eval_mc_samples: 16,
            eval_kl: KlMode::MonteCarlo,
            kl_warmup: 0,
            grad_clip: 1e3,
            max_restarts: 10,
        }
    }
}

/// Objective trace entry: step index and evaluated objective.
pub type FitTrace = Vec<(usize, f64)>;

/// Full fit outcome: the best state by the periodic evaluations, the
/// final optimizer state, and the evaluation trace.
pub struct FitOutcome {
    pub best: VariationalState,
    pub last: VariationalState,
    pub trace: FitTrace,
}

/// Stochastic-gradient fit of the variational state, starting at the
/// prior; returns the best state seen by the periodic evaluations.
pub fn fit_vb(
    data: &RegressionData,
    arch: &Architecture,
    family: &HeavyTailDensity,
    sched: &ScalingSchedule,
    cfg: &VbFitConfig,
) -> Result<(VariationalState, FitTrace), VbError> {
    let state = VariationalState::at_prior(arch, family, sched)?;
    fit_vb_from(state, data, cfg)
}

/// Fit starting from a given state (e.g. an oracle-centered one).
pub fn fit_vb_from(
    state: VariationalState,
    data: &RegressionData,
    cfg: &VbFitConfig,
) -> Result<(VariationalState, FitTrace), VbError> {
    let out = fit_vb_outcome(state, data, cfg)?;
    Ok((out.best, out.trace))
}

/// Fit keeping both the best-evaluated and the final state.
pub fn fit_vb_outcome(
    mut state: VariationalState,
    data: &RegressionData,
    cfg: &VbFitConfig,
) -> Result<FitOutcome, VbError> {
    let t = state.len();
    let mut lr = cfg.lr;
    let mut restarts = 0usize;
    let (mut m1, mut m2) = (vec![0.0; 2 * t], vec![0.0; 2 * t]);
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let eval_seed = cfg.seed ^ 0x9e37_79b9_7f4a_7c15;
    let evaluate = |s: &VariationalState| -> Result<f64, VbError> {
        Ok(vb_objective(s, data, cfg.alpha, cfg.eval_mc_samples, eval_seed, cfg.eval_kl, None)?
            .value)
    };
    let mut best = state.clone();
    let mut best_value = evaluate(&state)?;
    let mut trace: FitTrace = vec![(0, best_value)];

    let mut step = 0usize;
    let mut adam_t = 0usize;
    while step < cfg.steps {
        step += 1;
        adam_t += 1;
        let kl_weight = if cfg.kl_warmup == 0 {
            1.0
        } else {
            (step as f64 / cfg.kl_warmup as f64).min(1.0)
        };
        let est = vb_objective_weighted(
            &state,
            data,
            cfg.alpha,
            cfg.mc_samples,
            cfg.seed.wrapping_add(step as u64),
            KlMode::MonteCarlo,
            cfg.minibatch,
            kl_weight,
        )?;
        let bad = !est.value.is_finite()
            || est.grad_mu.iter().chain(&est.grad_log_s).any(|g| !g.is_finite());
        if bad {
            restarts += 1;
            if restarts > cfg.max_restarts {
                return Err(VbError::InvalidConfig(
                    "objective diverged more times than max_restarts allows".into(),
                ));
            }
            lr *= 0.5;
            state = best.clone();
            m1.fill(0.0);
            m2.fill(0.0);
            adam_t = 0;
            continue;
        }
        let correction1 = 1.0 - b1f(b1, adam_t);
        let correction2 = 1.0 - b1f(b2, adam_t);
        for k in 0..2 * t {
            let mut g = if k < t { est.grad_mu[k] } else { est.grad_log_s[k - t] };
            if cfg.grad_clip > 0.0 {
                g = g.clamp(-cfg.grad_clip, cfg.grad_clip);
            }
            m1[k] = b1 * m1[k] + (1.0 - b1) * g;
            m2[k] = b2 * m2[k] + (1.0 - b2) * g * g;
            let mhat = m1[k] / correction1;
            let vhat = m2[k] / correction2;
            let upd = lr * mhat / (vhat.sqrt() + eps);
            if k < t {
                // locations move in units of their prior scale: the
                // polynomial-tail score of a tightly scaled coordinate
                // is huge noise of random sign, and an unscaled step
                // would random-walk the location into enormous
                // divergence penalties
                state.mu[k] -= upd * (-state.prior_log_inv_sigma()[k]).exp();
            } else if std::env::var("HTBNN_FREEZE_SCALES").is_err() {
                state.log_s[k - t] -= upd;
            }
        }
        if step % cfg.eval_every == 0 || step == cfg.steps {
            let value = evaluate(&state)?;
            trace.push((step, value));
            if value < best_value {
                best_value = value;
                best = state.clone();
            }
        }
    }
    trace.push((cfg.steps, best_value));
    Ok(FitOutcome { best, last: state, trace })
}

fn b1f(b: f64, t: usize) -> f64 {
    b.powi(t as i32)
}

/// Serializable view of a fitted state (locations and log-scales in
/// the frozen coefficient order); rebuild with the architecture,
/// family and schedule it was fitted under.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct StateRecord {
    pub mu: Vec<f64>,
    pub log_s: Vec<f64>,
}

impl VariationalState {
    pub fn to_record(&self) -> StateRecord {
        StateRecord { mu: self.mu.clone(), log_s: self.log_s.clone() }
    }

    pub fn from_record(
        rec: StateRecord,
        arch: &Architecture,
        family: &HeavyTailDensity,
        sched: &ScalingSchedule,
    ) -> Result<Self, VbError> {
        let mut state = Self::at_prior(arch, family, sched)?;
        if rec.mu.len() != state.len() || rec.log_s.len() != state.len() {
            return Err(VbError::InvalidConfig(format!(
                "record length {} does not match the architecture ({} coefficients)",
                rec.mu.len(),
                state.len()
            )));
        }
        state.mu = rec.mu;
        state.log_s = rec.log_s;
        Ok(state)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), VbError> {
        let json = serde_json::to_string(&self.to_record())
            .map_err(|e| VbError::InvalidConfig(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| VbError::InvalidConfig(e.to_string()))
    }
}

/// Right-hand side of the variational risk bound at a given state:
/// `alpha/(2(1-alpha)) * E_Q ||f - f0||^2 + KL(Q, prior)/(n (1-alpha))`,
/// plus the matched Monte-Carlo estimate of `E_Q D_alpha(f, f0)`.
#[derive(Debug, Clone)]
pub struct PacReport {
    pub bound: f64,
    pub quadratic_term: f64,
    pub kl_term: f64,
    pub divergence: McEstimate,
    pub draws: usize,
}

pub fn pac_bound<F: Fn(&[f64]) -> f64>(
    state: &VariationalState,
    f0: F,
    design: &DesignSample,
    alpha: f64,
    n: usize,
    draws: usize,
    seed: u64,
) -> Result<PacReport, VbError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(VbError::AlphaOutOfRange(alpha));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sq = Vec::with_capacity(draws);
    let mut dv = Vec::with_capacity(draws);
    for _ in 0..draws {
        let net = state.sample_network(&mut rng);
        let fnet = |x: &[f64]| net.eval1(x);
        sq.push(l2_px(&fnet, &f0, design).value);
        dv.push(
            renyi(&fnet, &f0, alpha, design)
                .expect("alpha validated above")
                .value,
        );
    }
    let (sq_mean, sq_se) = mean_stderr(&sq);
    let (dv_mean, dv_se) = mean_stderr(&dv);
    let kl = state.kl_to_prior();
    let quadratic_term = alpha / (2.0 * (1.0 - alpha)) * sq_mean;
    let kl_term = kl / (n as f64 * (1.0 - alpha));
    Ok(PacReport {
        bound: quadratic_term + kl_term,
        quadratic_term,
        kl_term,
        divergence: McEstimate { value: dv_mean, stderr: dv_se },
        draws,
    })
    .map(|mut r| {
        // fold the quadratic-term noise into the divergence stderr so a
        // single slack covers both sides of the monitored inequality
        r.divergence.stderr = (r.divergence.stderr.powi(2)
            + (alpha / (2.0 * (1.0 - alpha)) * sq_se).powi(2))
        .sqrt();
        r
    })
}
