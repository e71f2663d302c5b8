use std::sync::Arc;

use super::config::{ApproxConfig, TargetFn};
use super::*;
use crate::prior::RateSpec;

fn selector_g(x: f64) -> f64 {
    (x - 0.4).abs() - 0.3
}

/// Single-stage composition reading one of two coordinates.
fn selector_spec() -> CompositionSpec {
    CompositionSpec {
        q: 0,
        dims: vec![2, 1],
        t: vec![1],
        beta: vec![1.0],
        radius: 1.0,
        stages: vec![vec![ComponentFn {
            reads: vec![0],
            eval: Arc::new(|u: &[f64]| selector_g(u[0])),
            partial: None,
        }]],
        grid_constant: 1e-9,
    }
}

/// Two-stage additive composition on four inputs.
fn additive_spec() -> CompositionSpec {
    CompositionSpec {
        q: 1,
        dims: vec![4, 2, 1],
        t: vec![1, 2],
        beta: vec![1.0, 2.0],
        radius: 1.0,
        stages: vec![
            vec![
                ComponentFn {
                    reads: vec![0],
                    eval: Arc::new(|u: &[f64]| (u[0] - 0.4).abs() - 0.3),
                    partial: None,
                },
                ComponentFn {
                    reads: vec![1],
                    eval: Arc::new(|u: &[f64]| 0.3 - (u[0] - 0.6).abs()),
                    partial: None,
                },
            ],
            vec![ComponentFn {
                reads: vec![0, 1],
                eval: Arc::new(|u: &[f64]| u[0] + u[1]),
                partial: Some(Arc::new(|l: &[usize], _u: &[f64]| {
                    match (l[0], l[1]) {
                        (1, 0) | (0, 1) => 1.0,
                        _ => 0.0,
                    }
                })),
            }],
        ],
        grid_constant: 1e-9,
    }
}

#[test]
fn single_stage_reduces_to_wide_net() {
    let spec = selector_spec();
    let rates = RateSpec::new(1.0, 0.0);
    let n = 4096;
    let build = compositional_net(&spec, n, &rates, EmbedMode::Natural).unwrap();
    let m = spec.stage_grid(0, n, &rates);
    // equivalent direct build on [-1,1]
    let eval = |z: &[f64]| selector_g(0.5 * (z[0] + 1.0));
    let partial = |_: &[usize], _: &[f64]| 0.0;
    let mut cfg = ApproxConfig::new(1, 1.0, 1.0, m);
    cfg.constant = 1e-9;
    let direct = wide_net(&TargetFn { eval: &eval, partial: &partial }, &cfg).unwrap();
    for i in 0..100 {
        let x = [i as f64 / 99.0, (i as f64 * 0.37) % 1.0];
        let a = build.net.eval1(&x);
        let b = direct.net.eval1(&[2.0 * x[0] - 1.0]);
        assert!((a - b).abs() <= 1e-12, "x = {x:?}: {a} vs {b}");
    }
}

#[test]
fn selector_error_tracks_rate_and_is_monotone() {
    let spec = selector_spec();
    let rates = RateSpec::new(0.05, 0.0);
    let mut errs = Vec::new();
    for n in [256usize, 1024] {
        let build = compositional_net(&spec, n, &rates, EmbedMode::Natural).unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..2000 {
            let x = [i as f64 / 1999.0, 0.3];
            sup = sup.max((build.net.eval1(&x) - selector_g(x[0])).abs());
        }
        let phi = rates.phi_n(n, &spec.beta, &[1.0]);
        assert!(sup <= phi, "n = {n}: sup {sup} vs phi {phi}");
        errs.push(sup);
    }
    assert!(errs[1] <= errs[0] + 1e-12, "errors {errs:?}");
}

#[test]
fn additive_composition_approximates_the_sum() {
    let spec = additive_spec();
    let rates = RateSpec::new(0.05, 0.0);
    let truth =
        |x: &[f64]| ((x[0] - 0.4).abs() - 0.3) + (0.3 - (x[1] - 0.6).abs());
    let mut sups = Vec::new();
    for n in [1usize << 20, 1 << 30] {
        let build = compositional_net(&spec, n, &rates, EmbedMode::Natural).unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..40 {
            for j in 0..40 {
                let x = [i as f64 / 39.0, j as f64 / 39.0, 0.5, 0.5];
                sup = sup.max((build.net.eval1(&x) - truth(&x)).abs());
            }
        }
        println!("n=2^{} grids {:?} sup {sup}", (n as f64).log2(), build.stage_grids);
        sups.push(sup);
    }
    assert!(sups[1] <= sups[0]);
}

#[test]
fn clamp_values_inside_the_assembly() {
    let net = clamp_net(1);
    assert_eq!(net.eval1(&[1.5]), 1.0);
    assert_eq!(net.eval1(&[-0.3]), 0.0);
    assert!((net.eval1(&[0.4]) - 0.4).abs() < 1e-15);
}

#[test]
fn theoretical_embedding_fits_and_confines_active_block() {
    let spec = selector_spec();
    let rates = RateSpec::new(1.0, 0.0);
    let n = 4096;
    let build = compositional_net(&spec, n, &rates, EmbedMode::Theoretical { delta: 1.0 })
        .unwrap();
    assert!(build.embedded);
    let host_depth = (n as f64).ln().powf(2.0).ceil() as usize;
    assert_eq!(build.net.arch().depth(), host_depth);
    assert_eq!(build.net.arch().max_hidden_width(), 64);
    // all active coefficients confined to the leading block
    let r = build.active_block;
    for (theta, (_, i, j)) in build
        .net
        .coefficients()
        .zip(build.net.coefficient_positions())
    {
        if i.max(j) > r {
            assert_eq!(theta, 0.0, "active coefficient outside block at ({i},{j})");
        }
    }
    // the natural function is preserved by the embedding
    let natural = compositional_net(&spec, n, &rates, EmbedMode::Natural).unwrap();
    for i in 0..50 {
        let x = [i as f64 / 49.0, 0.7];
        assert!((build.net.eval1(&x) - natural.net.eval1(&x)).abs() <= 1e-12);
    }
    // the inserted pass-through layers add a few structured nonzeros
    assert!(build.sparsity >= natural.sparsity);
    assert!(build.sparsity <= 2 * natural.sparsity + 10 * host_depth);
    assert!(build.sparsity < build.net.coefficient_count() / 4);
}

#[test]
fn too_small_n_reports_minimal_threshold() {
    let spec = selector_spec();
    let rates = RateSpec::new(0.05, 0.0);
    let err = compositional_net(&spec, 64, &rates, EmbedMode::Theoretical { delta: 0.05 })
        .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("too small"), "{msg}");
    assert!(msg.contains("smallest workable"), "{msg}");
}

#[test]
fn planned_dims_match_actual_builds() {
    for (d, beta, radius, m) in [(1usize, 1.0f64, 1.0f64, 4usize), (1, 2.0, 1.0, 4), (2, 1.0, 1.1, 4)] {
        let cfg = ApproxConfig::new(d, beta, radius, m);
        let eval = |x: &[f64]| 0.2 * x.iter().sum::<f64>();
        let partial = |l: &[usize], _: &[f64]| {
            if l.iter().sum::<usize>() == 1 { 0.2 } else { 0.0 }
        };
        let build = wide_net(&TargetFn { eval: &eval, partial: &partial }, &cfg).unwrap();
        let (pd, pw) = planned_wide_dims(&cfg);
        assert_eq!(pd, build.net.arch().depth(), "depth for {:?}", (d, beta, m));
        assert!(
            pw >= build.net.arch().max_hidden_width(),
            "planned width {pw} below actual {}",
            build.net.arch().max_hidden_width()
        );
        assert!(pw <= 20 * build.net.arch().max_hidden_width().max(1));
    }
}

#[test]
fn wide_thresholds_and_embedding() {
    let eval = |x: &[f64]| 0.5 * ((x[0] - 0.5).abs() - 0.75);
    let partial = |_: &[usize], _: &[f64]| 0.0;
    let target = TargetFn { eval: &eval, partial: &partial };
    let cfg = ApproxConfig::new(1, 1.0, 1.0, 4);
    let build = wide_net(&target, &cfg).unwrap();
    assert_eq!(build.lemma_depth, wide_depth_threshold(&cfg));
    assert_eq!(build.lemma_width, wide_width_threshold(&cfg));
    // width threshold for d=1, floor(beta)=0 is 128 m
    assert_eq!(build.lemma_width, 128 * 4);
    // below-threshold host is rejected
    assert!(wide_net_embedded(&target, &cfg, build.lemma_depth - 1, 4096).is_err());
    // adequate host preserves the function exactly
    let host_depth = build.net.arch().depth().max(build.lemma_depth) + 3;
    let host_width = build
        .net
        .arch()
        .max_hidden_width()
        .max(build.lemma_width);
    let emb = wide_net_embedded(&target, &cfg, host_depth, host_width).unwrap();
    assert_eq!(emb.net.arch().depth(), host_depth);
    for i in 0..100 {
        let x = -1.0 + 2.0 * i as f64 / 99.0;
        assert!((emb.net.eval1(&[x]) - build.net.eval1(&[x])).abs() <= 1e-12);
    }
}
