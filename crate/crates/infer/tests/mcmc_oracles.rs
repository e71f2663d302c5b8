//! Stationarity and correctness oracles for the tempered-posterior
//! sampler, on models small enough for quadrature ground truth.

use std::sync::Arc;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use htbnn_core::data::RegressionData;
use htbnn_core::net::{param_count, Architecture, Network};
use htbnn_core::prior::{
    log_prior_density, HeavyTailDensity, ScalingSchedule, ScheduleMode,
};
use htbnn_core::quad;
use htbnn_core::stats;
use htbnn_infer::mcmc::*;

fn unit_schedule() -> ScalingSchedule {
    ScalingSchedule::new(ScheduleMode::Custom(Arc::new(|_, _, _| 0.0)), 100, 0.05).unwrap()
}

/// Schedule pinning everything except the output shift (position
/// `l = 2, i = 1, j = 0` of the (1,1,1) architecture) to a tiny scale.
fn output_shift_only_schedule() -> ScalingSchedule {
    ScalingSchedule::new(
        ScheduleMode::Custom(Arc::new(|l, _i, j| if l == 2 && j == 0 { 0.0 } else { 14.0 })),
        100,
        0.05,
    )
    .unwrap()
}

fn toy_arch() -> Architecture {
    Architecture::new(vec![1, 1, 1]).unwrap()
}

/// Index of the output shift in the frozen coefficient order of the
/// (1,1,1) architecture: [v1, w1, v2, w2] -> position 2.
const OUT_SHIFT: usize = 2;
const OUT_WEIGHT: usize = 3;

fn const_data(n: usize, y: f64) -> RegressionData {
    RegressionData {
        x: Array2::from_shape_fn((n, 1), |(i, _)| i as f64 / n.max(2) as f64),
        y: vec![y; n],
    }
}

#[test]
fn interpolating_network_scores_exactly_the_prior() {
    let arch = toy_arch();
    let h = HeavyTailDensity::cauchy();
    let sched = unit_schedule();
    let prior = CoefficientPrior { density: &h, schedule: &sched };
    // network with all zeros and output shift 0.7 interpolates y = 0.7
    let mut coeffs = vec![0.0; param_count(&arch).t];
    coeffs[OUT_SHIFT] = 0.7;
    let net = Network::from_coefficients(&arch, &coeffs).unwrap();
    let data = const_data(5, 0.7);
    let lp = log_tempered_posterior(&net, &data, 0.5, &prior);
    assert_eq!(lp, log_prior_density(&net, &h, &sched));
}

#[test]
fn tempering_to_zero_removes_the_likelihood() {
    let arch = toy_arch();
    let h = HeavyTailDensity::cauchy();
    let sched = unit_schedule();
    let prior = CoefficientPrior { density: &h, schedule: &sched };
    let mut coeffs = vec![0.1; param_count(&arch).t];
    coeffs[OUT_SHIFT] = -0.4;
    let net = Network::from_coefficients(&arch, &coeffs).unwrap();
    let data = const_data(8, 1.2);
    let alpha = 1e-8;
    let gap = log_tempered_posterior(&net, &data, alpha, &prior)
        - log_prior_density(&net, &h, &sched);
    assert!(gap.abs() <= alpha * rss(&net, &data));
}

#[test]
fn one_parameter_posterior_mean_matches_quadrature() {
    // f_theta(x) = theta via the output shift; everything else pinned
    let arch = toy_arch();
    let h = HeavyTailDensity::cauchy();
    let sched = output_shift_only_schedule();
    let prior = CoefficientPrior { density: &h, schedule: &sched };
    let data = RegressionData {
        x: Array2::from_shape_fn((3, 1), |(i, _)| i as f64 / 3.0),
        y: vec![0.9, 1.4, 1.1],
    };
    let alpha = 0.5;
    let cfg = TemperConfig {
        alpha,
        steps: 60_000,
        burnin: 5_000,
        thin: 1,
        seed: 11,
        fixed: vec![(0, 0.0), (1, 0.0), (OUT_WEIGHT, 0.0)],
        ..Default::default()
    };
    let run = run_chain(&data, &arch, &prior, &cfg).unwrap();
    let mean_chain = run.samples.iter().map(|s| s[OUT_SHIFT]).sum::<f64>()
        / run.samples.len() as f64;
    // quadrature over the free coordinate
    let target = |theta: f64| {
        let r: f64 = data.y.iter().map(|y| (y - theta) * (y - theta)).sum();
        (h.log_density(theta) - alpha / 2.0 * r).exp()
    };
    let mass = quad::integrate(&target, -50.0, 50.0, 1e-12);
    let mean_quad =
        quad::integrate(&|t: f64| t * target(t), -50.0, 50.0, 1e-12) / mass;
    assert!(
        (mean_chain - mean_quad).abs() < 0.02,
        "chain {mean_chain} vs quadrature {mean_quad}"
    );
}

#[test]
fn zero_data_chain_reproduces_prior_marginals() {
    let arch = toy_arch();
    let h = HeavyTailDensity::student(3.0);
    let sched = unit_schedule();
    let prior = CoefficientPrior { density: &h, schedule: &sched };
    let data = RegressionData { x: Array2::zeros((0, 1)), y: vec![] };
    let cfg = TemperConfig {
        alpha: 0.5,
        steps: 40_000,
        burnin: 2_000,
        thin: 4,
        seed: 3,
        ..Default::default()
    };
    let run = run_chain(&data, &arch, &prior, &cfg).unwrap();
    assert!(run.samples.len() >= 10_000);
    for coord in 0..4 {
        let mut xs: Vec<f64> = run.samples.iter().map(|s| s[coord]).collect();
        let d = stats::ks_distance_to_cdf(&mut xs, |v| h.cdf(v));
        assert!(d < 0.05, "coordinate {coord}: KS distance {d}");
    }
}

#[test]
fn gaussian_substitution_matches_conjugate_posterior() {
    // with a normal base density and f_theta = theta the tempered
    // posterior is normal with precision 1 + alpha n
    let arch = toy_arch();
    let h = HeavyTailDensity::gaussian();
    let sched = output_shift_only_schedule();
    let prior = CoefficientPrior { density: &h, schedule: &sched };
    let n = 6;
    let y = vec![0.4, 0.9, 0.6, 1.3, 0.2, 0.8];
    let data = RegressionData { x: Array2::zeros((n, 1)), y: y.clone() };
    let alpha = 0.5;
    let cfg = TemperConfig {
        alpha,
        steps: 60_000,
        burnin: 5_000,
        seed: 17,
        fixed: vec![(0, 0.0), (1, 0.0), (OUT_WEIGHT, 0.0)],
        ..Default::default()
    };
    let run = run_chain(&data, &arch, &prior, &cfg).unwrap();
    let samples: Vec<f64> = run.samples.iter().map(|s| s[OUT_SHIFT]).collect();
    let mean_chain = samples.iter().sum::<f64>() / samples.len() as f64;
    let precision = 1.0 + alpha * n as f64;
    let mean_true = alpha * y.iter().sum::<f64>() / precision;
    let sd_true = precision.sqrt().recip();
    // crude effective-sample bound: the chain mixes within a few steps
    let mc_err = 3.0 * sd_true * (20.0 / samples.len() as f64).sqrt();
    assert!(
        (mean_chain - mean_true).abs() <= mc_err + 0.01,
        "chain {mean_chain} vs conjugate {mean_true}"
    );
}

#[test]
fn acceptance_rate_lands_in_band_after_adaptation() {
    let arch = toy_arch();
    let h = HeavyTailDensity::student(3.0);
    let sched = output_shift_only_schedule();
    let prior = CoefficientPrior { density: &h, schedule: &sched };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let fix = htbnn_core::data::fixture_by_name("holder-d1-b1").unwrap();
    let data = htbnn_core::data::gen_data(
        &fix,
        &htbnn_core::data::DesignSpec::UniformCube { d: 1 },
        40,
        &mut rng,
    );
    let cfg = TemperConfig { steps: 4000, burnin: 4000, seed: 23, ..Default::default() };
    let run = run_chain(&data, &arch, &prior, &cfg).unwrap();
    let acc = run.diagnostics.acceptance;
    assert!((0.1..=0.6).contains(&acc), "acceptance {acc}");
    for r in &run.diagnostics.split_rhat {
        assert!(*r < 1.2, "split-chain diagnostic {r}");
    }
}

#[test]
fn chains_are_bitwise_reproducible_under_a_seed() {
    let arch = toy_arch();
    let h = HeavyTailDensity::cauchy();
    let sched = unit_schedule();
    let prior = CoefficientPrior { density: &h, schedule: &sched };
    let data = const_data(4, 0.3);
    let cfg = TemperConfig { steps: 500, burnin: 100, seed: 99, ..Default::default() };
    let a = run_chain(&data, &arch, &prior, &cfg).unwrap();
    let b = run_chain(&data, &arch, &prior, &cfg).unwrap();
    assert_eq!(a.samples.len(), b.samples.len());
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        let ba: Vec<u64> = sa.iter().map(|v| v.to_bits()).collect();
        let bb: Vec<u64> = sb.iter().map(|v| v.to_bits()).collect();
        assert_eq!(ba, bb);
    }
}

#[test]
fn log_posterior_is_monotone_in_residuals() {
    let arch = toy_arch();
    let h = HeavyTailDensity::cauchy();
    let sched = unit_schedule();
    let prior = CoefficientPrior { density: &h, schedule: &sched };
    let mut coeffs = vec![0.0; 4];
    coeffs[OUT_SHIFT] = 0.5;
    let net = Network::from_coefficients(&arch, &coeffs).unwrap();
    // same weights, increasingly bad data
    let mut last = f64::INFINITY;
    for gap in [0.0, 0.5, 1.0, 2.0] {
        let data = const_data(10, 0.5 + gap);
        let lp = log_tempered_posterior(&net, &data, 0.5, &prior);
        assert!(lp <= last);
        last = lp;
    }
}

#[test]
fn predict_bands_collapse_and_saturate() {
    let arch = toy_arch();
    let mut coeffs = vec![0.0; 4];
    coeffs[OUT_SHIFT] = 2.0;
    let run = ChainRun {
        samples: vec![coeffs.clone(), coeffs.clone(), coeffs],
        diagnostics: ChainDiagnostics {
            acceptance: 1.0,
            refresh_acceptance: 1.0,
            split_rhat: vec![],
            final_log_posterior: 0.0,
            adapted_step_scale: 1.0,
        },
        arch,
    };
    let grid = Array2::from_shape_fn((5, 1), |(i, _)| i as f64 / 5.0);
    // identical samples: bands collapse onto the mean
    let bands = posterior_predict(&run, &grid, 10.0).unwrap();
    for i in 0..5 {
        assert_eq!(bands.mean[i], 2.0);
        assert_eq!(bands.lower[i], bands.upper[i]);
    }
    // clipping bound below the sampled values saturates everything
    let clipped = posterior_predict(&run, &grid, 1.0).unwrap();
    for i in 0..5 {
        assert_eq!(clipped.mean[i], 1.0);
    }
}

#[test]
fn checkpoint_round_trip() {
    let arch = toy_arch();
    let h = HeavyTailDensity::cauchy();
    let sched = unit_schedule();
    let prior = CoefficientPrior { density: &h, schedule: &sched };
    let data = const_data(4, 0.1);
    let cfg = TemperConfig { steps: 50, burnin: 10, seed: 7, ..Default::default() };
    let run = run_chain(&data, &arch, &prior, &cfg).unwrap();
    let dir = std::env::temp_dir().join("htbnn-chain-ckpt");
    std::fs::create_dir_all(&dir).unwrap();
    let prefix = dir.join("chain0");
    save_checkpoint(&run, &cfg, &prefix).unwrap();
    let net = Network::read_from(&prefix.with_extension("htnet")).unwrap();
    let last: Vec<f64> = run.samples.last().unwrap().clone();
    assert_eq!(net.coefficients().collect::<Vec<_>>(), last);
    let meta: String = std::fs::read_to_string(prefix.with_extension("meta.json")).unwrap();
    assert!(meta.contains("acceptance"));
}
