//! Rate-grid experiment runner.
//!
//! For every `(n, replication)` cell: draw data, fit the requested
//! methods, evaluate the clipped posterior-mean predictor against the
//! truth on a fresh design sample, and aggregate log-log slopes
//! against the target exponent. Cells run as a parallel work queue;
//! every cell owns seeds derived from `(seed, n, replication)`, so
//! reports are deterministic functions of the configuration.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use htbnn_core::data::{fixture_by_name, DesignSpec, SmoothnessClass, TruthFixture};
use htbnn_core::net::{clip, Architecture, Network};
use htbnn_core::prior::RateSpec;
use htbnn_core::stats::{fit_line, mean_stderr};
use htbnn_infer::mcmc::{run_chain_with, CoefficientPrior, TemperConfig};
use htbnn_infer::vb::{fit_vb_from, KlMode, VariationalState, VbFitConfig};

use crate::arch::choose_architecture;
use crate::config::ExperimentConfig;
use crate::BenchError;

#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub n: usize,
    pub replication: usize,
    pub method: String,
    /// `L^2(P_X)` distance of the clipped posterior-mean predictor to
    /// the truth (square root of the mean squared gap).
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub n: Vec<usize>,
    pub mean_error: Vec<f64>,
    pub stderr: Vec<f64>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub theoretical_exponent: f64,
    pub slope_ok: bool,
    pub monotone_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub fixture: String,
    pub method: String,
    pub theoretical_exponent: f64,
    pub slope_tolerance: f64,
    pub theoretical_architecture: bool,
    pub rows: Vec<ResultRow>,
    pub summaries: Vec<MethodSummary>,
    pub failures: Vec<String>,
    /// When fits start from the staged approximant: whether its active
    /// coefficients sat inside the predicted leading block.
    pub init_block_confined: Option<bool>,
}

/// Target exponent for the fixture/design pair: the slowest-stage
/// compositional exponent, the harmonic-mean exponent for anisotropic
/// products, or the intrinsic-dimension exponent on embedded designs.
pub fn target_exponent(fix: &TruthFixture, design: &DesignSpec, rates: &RateSpec) -> f64 {
    if let (SmoothnessClass::Holder { beta, .. }, DesignSpec::ManifoldEmbedding { intrinsic, .. }) =
        (&fix.class, design)
    {
        return beta / (2.0 * beta + *intrinsic as f64);
    }
    let (betas, ts) = fix.class.rate_stages(fix.dim);
    rates.compositional_exponent(&betas, &ts)
}

fn design_for(cfg: &ExperimentConfig, fix: &TruthFixture) -> Result<DesignSpec, BenchError> {
    match cfg.design.as_str() {
        "fixture-default" => Ok(fix.default_design.clone()),
        "uniform" => Ok(DesignSpec::UniformCube { d: fix.dim }),
        other => Err(BenchError::Config(format!("unknown design `{other}`"))),
    }
}

fn cell_seed(base: u64, n: usize, rep: usize, salt: u64) -> u64 {
    // splitmix-style hash keeps cells independent of scheduling order
    let mut x = base
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((n as u64) << 20)
        .wrapping_add(rep as u64)
        .wrapping_add(salt.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

struct CellOutput {
    rows: Vec<ResultRow>,
    failure: Option<String>,
    init_confined: Option<bool>,
}

/// Root-mean-square gap between a predictor and the truth on a fresh
/// design sample.
fn l2_error(pred: &[f64], truth: &[f64]) -> f64 {
    let m = pred.len() as f64;
    (pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / m)
        .sqrt()
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &ExperimentConfig,
    fix: &TruthFixture,
    design: &DesignSpec,
    n: usize,
    rep: usize,
) -> CellOutput {
    let mut rows = Vec::new();
    let mut init_confined = None;
    let mut run = || -> Result<(), BenchError> {
        let family = cfg.family()?;
        let sched = cfg.schedule_for(n)?;
        let chosen = choose_architecture(n, fix.dim, &cfg.arch_mode()?, cfg.delta);
        let arch = &chosen.arch;
        let clip_b = cfg.clip_bound.unwrap_or(fix.m0 + 0.25);

        let mut data_rng = ChaCha12Rng::seed_from_u64(cell_seed(cfg.seed, n, rep, 1));
        let data = htbnn_core::data::gen_data(fix, design, n, &mut data_rng);
        let mut eval_rng = ChaCha12Rng::seed_from_u64(cell_seed(cfg.seed, n, rep, 2));
        let eval_x = design.sample_matrix(cfg.eval_points, &mut eval_rng);
        let truth: Vec<f64> = (0..cfg.eval_points)
            .map(|i| fix.f0(eval_x.row(i).to_slice().unwrap()))
            .collect();

        let init_state = if cfg.init == "compositional" {
            match compositional_init(fix, n, cfg, arch) {
                Some((net, confined)) => {
                    init_confined = Some(confined);
                    Some(net)
                }
                None => None,
            }
        } else {
            None
        };

        if cfg.method == "vb" || cfg.method == "both" {
            let fit_cfg = VbFitConfig {
                alpha: cfg.alpha,
                steps: cfg.vb.steps,
                lr: cfg.vb.lr,
                mc_samples: cfg.vb.mc_samples,
                minibatch: Some(cfg.vb.minibatch.min(n)),
                seed: cell_seed(cfg.seed, n, rep, 3),
                eval_every: cfg.vb.eval_every,
                eval_mc_samples: 8,
                eval_kl: KlMode::MonteCarlo,
                kl_warmup: cfg.vb.kl_warmup,
                grad_clip: 1e3,
                max_restarts: 10,
            };
            let mut start = match &init_state {
                Some(net) => VariationalState::centered_at(net, &family, &sched)?,
                None if cfg.init == "prior-draw" => {
                    let mut init_rng =
                        ChaCha12Rng::seed_from_u64(cell_seed(cfg.seed, n, rep, 6));
                    let draw = htbnn_core::prior::sample_prior(
                        arch, &family, &sched, &mut init_rng,
                    )?;
                    VariationalState::centered_at(&draw, &family, &sched)?
                }
                None if cfg.init == "live-subnet" => {
                    let net = live_subnet_init(
                        arch,
                        &sched,
                        cell_seed(cfg.seed, n, rep, 6),
                    );
                    VariationalState::centered_at(&net, &family, &sched)?
                }
                None => VariationalState::at_prior(arch, &family, &sched)?,
            };
            if cfg.vb.scale_init_cap > 0.0 {
                let cap = cfg.vb.scale_init_cap.ln();
                for ls in start.log_s.iter_mut() {
                    if *ls > cap {
                        *ls = cap;
                    }
                }
            }
            let (state, _) = fit_vb_from(start, &data, &fit_cfg)?;
            let mut pred_rng =
                ChaCha12Rng::seed_from_u64(cell_seed(cfg.seed, n, rep, 4));
            let draws = cfg.vb.predict_draws.max(1);
            let mut acc = vec![0.0; cfg.eval_points];
            for _ in 0..draws {
                let net = state.sample_network(&mut pred_rng);
                let out = net.forward_batch(&eval_x).expect("matching dims");
                for i in 0..cfg.eval_points {
                    acc[i] += clip(out[(i, 0)], clip_b);
                }
            }
            for v in &mut acc {
                *v /= draws as f64;
            }
            rows.push(ResultRow {
                n,
                replication: rep,
                method: "vb".into(),
                error: l2_error(&acc, &truth),
            });
        }

        if cfg.method == "mcmc" || cfg.method == "both" {
            let prior = CoefficientPrior { density: &family, schedule: &sched };
            let mcfg = TemperConfig {
                alpha: cfg.alpha,
                steps: cfg.mcmc.steps,
                burnin: cfg.mcmc.burnin,
                thin: cfg.mcmc.thin,
                seed: cell_seed(cfg.seed, n, rep, 5),
                ..Default::default()
            };
            let kept_target = (mcfg.steps / mcfg.thin).max(1);
            let stride = (kept_target / cfg.mcmc.predict_draws.max(1)).max(1);
            let mut acc = vec![0.0; cfg.eval_points];
            let mut used = 0usize;
            let mut kept_idx = 0usize;
            run_chain_with(&data, arch, &prior, &mcfg, |net: &Network| {
                if kept_idx % stride == 0 {
                    let out = net.forward_batch(&eval_x).expect("matching dims");
                    for i in 0..cfg.eval_points {
                        acc[i] += clip(out[(i, 0)], clip_b);
                    }
                    used += 1;
                }
                kept_idx += 1;
            })?;
            for v in &mut acc {
                *v /= used.max(1) as f64;
            }
            rows.push(ResultRow {
                n,
                replication: rep,
                method: "mcmc".into(),
                error: l2_error(&acc, &truth),
            });
        }
        Ok(())
    };
    let failure = run().err().map(|e| format!("n={n} rep={rep}: {e}"));
    drop(run);
    CellOutput { rows, failure, init_confined }
}

/// Variance-preserving random locations on the live block: the
/// coordinates whose prior scale is at least `0.05` get independent
/// normal locations scaled by the square root of `2 /` (live fan-in),
/// everything else starts at zero. Gradients then reach every layer,
/// and the divergence pull prunes whatever the data does not support.
fn live_subnet_init(
    arch: &Architecture,
    sched: &htbnn_core::prior::ScalingSchedule,
    seed: u64,
) -> Network {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let live = |l: usize, i: usize, j: usize| (-sched.log_inv_sigma(l, i, j)).exp() >= 0.05;
    let skeleton = Network::zeros(arch);
    let widths = arch.widths().to_vec();
    let coeffs: Vec<f64> = skeleton
        .coefficient_positions()
        .map(|(l, i, j)| {
            if j == 0 || !live(l, i, j) {
                return 0.0;
            }
            let fan: usize = (1..=widths[l - 1])
                .filter(|&jj| live(l, i, jj))
                .count()
                .max(1);
            // Box-Muller off the uniform stream
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen::<f64>();
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            z * (2.0 / fan as f64).sqrt()
        })
        .collect();
    Network::from_coefficients(arch, &coeffs).expect("consistent dimensions")
}

/// Staged-approximant initialization embedded into the host
/// architecture, plus the leading-block confinement check.
fn compositional_init(
    fix: &TruthFixture,
    n: usize,
    cfg: &ExperimentConfig,
    arch: &Architecture,
) -> Option<(Network, bool)> {
    let spec = htbnn_core::data::composition_spec_for(fix.name)?;
    let rates = RateSpec::new(cfg.delta, 0.0);
    let build =
        htbnn_core::construct::compositional_net(&spec, n, &rates, htbnn_core::construct::EmbedMode::Natural)
            .ok()?;
    let synced =
        htbnn_core::net::depth_sync(&build.net, arch.depth().checked_sub(build.net.arch().depth())?)
            .ok()?;
    if !synced.arch().fits_inside(arch) {
        return None;
    }
    let embedded = htbnn_core::net::enlarge(&synced, arch).ok()?;
    let r = build.active_block.max(2 * fix.dim);
    let confined = embedded
        .coefficients()
        .zip(embedded.coefficient_positions())
        .all(|(theta, (_, i, j))| theta == 0.0 || i.max(j) <= r);
    Some((embedded, confined))
}

/// Run the whole grid and aggregate verdicts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RateReport, BenchError> {
    cfg.validate()?;
    let fix = fixture_by_name(&cfg.fixture)?;
    let design = design_for(cfg, &fix)?;
    let rates = RateSpec::new(cfg.delta, 0.0);
    let exponent = target_exponent(&fix, &design, &rates);
    let theoretical = choose_architecture(
        cfg.n_grid[0],
        fix.dim,
        &cfg.arch_mode()?,
        cfg.delta,
    )
    .theoretical;

    let cells: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |r| (n, r)))
        .collect();
    let outputs: Vec<CellOutput> = cells
        .par_iter()
        .map(|&(n, rep)| run_cell(cfg, &fix, &design, n, rep))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut init_block_confined: Option<bool> = None;
    for out in outputs {
        rows.extend(out.rows);
        if let Some(f) = out.failure {
            failures.push(f);
        }
        if let Some(c) = out.init_confined {
            init_block_confined = Some(init_block_confined.unwrap_or(true) && c);
        }
    }
    rows.sort_by_key(|r| (r.n, r.replication, r.method.clone()));

    let summaries = summarize(&rows, &cfg.n_grid, exponent, cfg.slope_tolerance);
    Ok(RateReport {
        fixture: cfg.fixture.clone(),
        method: cfg.method.clone(),
        theoretical_exponent: exponent,
        slope_tolerance: cfg.slope_tolerance,
        theoretical_architecture: theoretical,
        rows,
        summaries,
        failures,
        init_block_confined,
    })
}

/// Aggregate rows into per-method slope and monotonicity verdicts.
pub fn summarize(
    rows: &[ResultRow],
    n_grid: &[usize],
    exponent: f64,
    tolerance: f64,
) -> Vec<MethodSummary> {
    let mut methods: Vec<String> = rows.iter().map(|r| r.method.clone()).collect();
    methods.sort();
    methods.dedup();
    methods
        .into_iter()
        .map(|method| {
            let mut ns = Vec::new();
            let mut means = Vec::new();
            let mut errs = Vec::new();
            for &n in n_grid {
                let vals: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.method == method && r.n == n)
                    .map(|r| r.error)
                    .collect();
                if vals.is_empty() {
                    continue;
                }
                let (m, s) = mean_stderr(&vals);
                ns.push(n);
                means.push(m);
                errs.push(s);
            }
            let (slope, slope_stderr) = if ns.len() >= 2 {
                let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
                let ys: Vec<f64> = means.iter().map(|m| m.max(1e-300).ln()).collect();
                let (s, _, se) = fit_line(&xs, &ys);
                (s, se)
            } else {
                (f64::NAN, f64::NAN)
            };
            let slope_ok = (slope + exponent).abs() <= tolerance;
            let mut violations = 0usize;
            for k in 1..means.len() {
                if means[k] > means[k - 1] + errs[k].max(errs[k - 1]) {
                    violations += 1;
                }
            }
            let monotone_ok = violations <= 1;
            MethodSummary {
                method,
                n: ns,
                mean_error: means,
                stderr: errs,
                slope,
                slope_stderr,
                theoretical_exponent: exponent,
                slope_ok,
                monotone_ok,
            }
        })
        .collect()
}

/// Fresh uniform design matrix helper for oracle paths.
pub fn uniform_design(d: usize, m: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Array2::from_shape_fn((m, d), |_| rng.gen::<f64>())
}
