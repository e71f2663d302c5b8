use super::config::{ApproxConfig, GridLayout, TargetFn};
use super::taylor::{clamp_net, localized_net, taylor_grid_net, tent_weight};
use super::*;

fn linear_target() -> (impl Fn(&[f64]) -> f64, impl Fn(&[usize], &[f64]) -> f64) {
    (|x: &[f64]| 0.5 * x[0], |_l: &[usize], _x: &[f64]| 0.0)
}

fn kink_target() -> (impl Fn(&[f64]) -> f64, impl Fn(&[usize], &[f64]) -> f64) {
    (
        |x: &[f64]| 0.5 * ((x[0] - 0.5).abs() - 0.75),
        |_l: &[usize], _x: &[f64]| 0.0,
    )
}

/// Distance of `x` to the nearest fine-grid wall of the layout.
fn fine_depth(layout: &GridLayout, m: usize, x: &[f64]) -> f64 {
    let fine = 2.0 / (m * m) as f64;
    x.iter()
        .enumerate()
        .map(|(k, &v)| {
            let pos = (v - layout.origin(k)) / fine;
            let frac = pos - pos.floor();
            frac.min(1.0 - frac) * fine
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn taylor_grid_constant_function_is_exact_on_interiors() {
    let eval = |_: &[f64]| 0.35;
    let partial = |_: &[usize], _: &[f64]| 0.0;
    let cfg = ApproxConfig::new(1, 1.0, 1.0, 4);
    let target = TargetFn { eval: &eval, partial: &partial };
    let (net, report) = taylor_grid_net(&target, &cfg).unwrap();
    assert!(report.coefficient_max <= report.coefficient_cap);
    let layout = GridLayout::unshifted(&cfg);
    let b = cfg.ramp();
    for i in 0..2000 {
        let x = -0.999 + 1.998 * i as f64 / 1999.0;
        if fine_depth(&layout, 4, &[x]) >= 1.5 / b {
            assert!(
                (net.eval1(&[x]) - 0.35).abs() < 1e-10,
                "x = {x}: {}",
                net.eval1(&[x])
            );
        }
    }
}

#[test]
fn taylor_grid_linear_error_scales_like_inverse_square_grid() {
    let (eval, partial) = linear_target();
    let target = TargetFn { eval: &eval, partial: &partial };
    let mut sups = Vec::new();
    for m in [4usize, 8] {
        let cfg = ApproxConfig::new(1, 1.0, 1.0, m);
        let (net, _) = taylor_grid_net(&target, &cfg).unwrap();
        let layout = GridLayout::unshifted(&cfg);
        let b = cfg.ramp();
        let mut sup: f64 = 0.0;
        for i in 0..4000 {
            let x = -0.999 + 1.998 * i as f64 / 3999.0;
            if fine_depth(&layout, m, &[x]) >= 1.5 / b {
                sup = sup.max((net.eval1(&[x]) - eval(&[x])).abs());
            }
        }
        // anchored at the fine-cell corner: worst gap is one fine cell
        assert!(sup <= 1.25 / (m * m) as f64, "m = {m}: sup {sup}");
        assert!(sup >= 0.25 / (m * m) as f64, "m = {m}: sup {sup}");
        sups.push(sup);
    }
    let ratio = sups[0] / sups[1];
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn check_channel_matches_wall_distance_contract() {
    let (eval, partial) = kink_target();
    let target = TargetFn { eval: &eval, partial: &partial };
    let cfg = ApproxConfig::new(1, 1.0, 1.0, 4);
    let parts = localized_net(&target, &cfg).unwrap();
    let layout = GridLayout::unshifted(&cfg);
    let b = cfg.ramp();
    for i in 0..6000 {
        let x = -1.0 + 2.0 * i as f64 / 5999.0;
        let depth = fine_depth(&layout, 4, &[x]);
        let c = parts.check.eval1(&[x]);
        if depth <= 1.0 / b {
            assert!((c - 1.0).abs() < 1e-12, "x={x} depth={depth}: check={c}");
        } else if depth >= 2.0 / b {
            assert!(c.abs() < 1e-12, "x={x} depth={depth}: check={c}");
        } else {
            assert!((-1e-12..=1.0 + 1e-12).contains(&c));
        }
    }
}

#[test]
fn gated_branch_is_exactly_zero_near_walls() {
    let (eval, partial) = kink_target();
    let target = TargetFn { eval: &eval, partial: &partial };
    let cfg = ApproxConfig::new(1, 1.0, 1.0, 4);
    let parts = localized_net(&target, &cfg).unwrap();
    let layout = GridLayout::unshifted(&cfg);
    let b = cfg.ramp();
    let fine = cfg.fine_side();
    let mut checked = 0;
    for cell in 0..16 {
        let wall = -1.0 + cell as f64 * fine;
        for off in [0.0, 0.4 / b, 0.9 / b, -0.4 / b] {
            let x = wall + off;
            if !(-1.0..=1.0).contains(&x) {
                continue;
            }
            assert_eq!(parts.gated.eval1(&[x]), 0.0, "x = {x}");
            checked += 1;
        }
    }
    assert!(checked > 20);
}

#[test]
fn localized_product_tracks_tent_times_target() {
    let (eval, partial) = kink_target();
    let target = TargetFn { eval: &eval, partial: &partial };
    let cfg = ApproxConfig::new(1, 1.0, 1.0, 4);
    let parts = localized_net(&target, &cfg).unwrap();
    let layout = GridLayout::unshifted(&cfg);
    let tol = 4.0 * cfg.accuracy();
    for i in 0..3000 {
        let x = -0.999 + 1.998 * i as f64 / 2999.0;
        let w = tent_weight(&layout, 4, &[x]);
        let truth = w * eval(&[x]);
        let got = parts.product.eval1(&[x]);
        assert!(
            (got - truth).abs() <= tol,
            "x = {x}: got {got}, tent*f = {truth}"
        );
    }
}

#[test]
fn tent_families_sum_to_one_on_the_cube() {
    for d in [1usize, 2] {
        let cfg = ApproxConfig::new(d, 1.0, 1.0, 4);
        let masks = cartesian(&vec![2usize; d]);
        let pts = if d == 1 { 1000 } else { 33 };
        let mut idx = vec![0usize; d];
        loop {
            let x: Vec<f64> = idx
                .iter()
                .map(|&i| -1.0 + 2.0 * i as f64 / (pts - 1) as f64)
                .collect();
            let mut total = 0.0;
            for mask_bits in &masks {
                let mask: Vec<bool> = mask_bits.iter().map(|&b| b == 1).collect();
                let layout = GridLayout::shifted(&cfg, &mask);
                total += tent_weight(&layout, 4, &x);
            }
            assert!((total - 1.0).abs() <= 1e-9, "x = {x:?}: sum {total}");
            let mut k = d;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < pts {
                    break;
                }
                idx[k] = 0;
            }
            if idx.iter().all(|&v| v == 0) {
                break;
            }
        }
    }
}

#[test]
fn wide_net_error_ratio_between_grids() {
    let (eval, partial) = kink_target();
    let target = TargetFn { eval: &eval, partial: &partial };
    let mut sups = Vec::new();
    for m in [4usize, 8, 16] {
        let cfg = ApproxConfig::new(1, 1.0, 1.0, m);
        let build = wide_net(&target, &cfg).unwrap();
        assert!(build.report.coefficient_max <= cfg.coefficient_cap());
        let mut sup: f64 = 0.0;
        for i in 0..10_000 {
            let x = -1.0 + 2.0 * i as f64 / 9999.0;
            sup = sup.max((build.net.eval1(&[x]) - eval(&[x])).abs());
        }
        sups.push(sup);
    }
    // halving the cells quarters the error for beta = 1
    let ratio = sups[0] / sups[1];
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio} from {sups:?}");
    // log-log slope of the error in the grid size: near -2 for beta = 1
    let xs: Vec<f64> = [4.0f64, 8.0, 16.0].iter().map(|m| m.ln()).collect();
    let ys: Vec<f64> = sups.iter().map(|s| s.ln()).collect();
    let (slope, _, _) = crate::stats::fit_line(&xs, &ys);
    assert!(
        (slope + 2.0).abs() <= 0.25,
        "slope {slope} from sups {sups:?}"
    );
}

#[test]
fn wide_net_smooth_target_second_order() {
    // beta = 2 with analytic first derivative
    let w = 0.8 * std::f64::consts::PI;
    let eval = move |x: &[f64]| 0.1 * (w * x[0]).sin();
    let partial = move |l: &[usize], x: &[f64]| {
        assert_eq!(l.iter().sum::<usize>(), 1);
        0.1 * w * (w * x[0]).cos()
    };
    let target = TargetFn { eval: &eval, partial: &partial };
    let mut sups = Vec::new();
    for m in [4usize, 8] {
        let cfg = ApproxConfig::new(1, 2.0, 1.0, m);
        let build = wide_net(&target, &cfg).unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..6000 {
            let x = -1.0 + 2.0 * i as f64 / 5999.0;
            sup = sup.max((build.net.eval1(&[x]) - eval(&[x])).abs());
        }
        sups.push(sup);
    }
    // beta = 2: error should fall roughly like m^{-4}
    let ratio = sups[0] / sups[1];
    assert!(
        (8.0..=32.0).contains(&ratio),
        "ratio {ratio} from {sups:?}"
    );
}

#[test]
fn wide_net_two_dimensional_target() {
    let eval = |x: &[f64]| 0.3 * ((x[0] - 0.2).abs() + (x[1] + 0.3).abs() - 1.0);
    let partial = |_: &[usize], _: &[f64]| 0.0;
    let target = TargetFn { eval: &eval, partial: &partial };
    let cfg = ApproxConfig::new(2, 1.0, 1.1, 4);
    let build = wide_net(&target, &cfg).unwrap();
    let mut sup: f64 = 0.0;
    for i in 0..70 {
        for j in 0..70 {
            let x = [-1.0 + 2.0 * i as f64 / 69.0, -1.0 + 2.0 * j as f64 / 69.0];
            sup = sup.max((build.net.eval1(&x) - eval(&x)).abs());
        }
    }
    assert!(sup <= 40.0 * cfg.accuracy(), "sup = {sup}");
}

#[test]
fn clamp_net_values() {
    let net = clamp_net(1);
    assert_eq!(net.eval1(&[1.5]), 1.0);
    assert_eq!(net.eval1(&[-0.3]), 0.0);
    assert!((net.eval1(&[0.4]) - 0.4).abs() < 1e-15);
}
