use super::*;
use crate::net::Network;

fn grid_max_mult_error(net: &Network, pts: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..pts {
        let x = -1.0 + 2.0 * i as f64 / (pts - 1) as f64;
        for j in 0..pts {
            let y = -1.0 + 2.0 * j as f64 / (pts - 1) as f64;
            worst = worst.max((net.eval1(&[x, y]) - x * y).abs());
        }
    }
    worst
}

#[test]
fn mult_net_meets_error_bound_for_all_depths() {
    for r in 1..=8u32 {
        let net = mult_net(r).unwrap();
        assert_eq!(net.arch().depth(), r as usize);
        assert!(net.arch().max_hidden_width() <= 18);
        assert!(net.max_abs_coefficient() <= 4.0);
        let err = grid_max_mult_error(&net, 101);
        assert!(
            err <= 4.0f64.powi(-(r as i32)),
            "r = {r}: grid error {err} above {}",
            4.0f64.powi(-(r as i32))
        );
    }
}

#[test]
fn mult_net_r1_coarse_error() {
    let net = mult_net(1).unwrap();
    assert!(grid_max_mult_error(&net, 201) <= 0.25);
}

#[test]
fn mult_net_near_zero_inside_guarantee() {
    let net = mult_net(3).unwrap();
    assert!(net.eval1(&[0.0, 0.0]).abs() <= 4.0f64.powi(-3));
    // inputs (0.5, 0.5) within 4^-3 of 0.25
    assert!((net.eval1(&[0.5, 0.5]) - 0.25).abs() <= 4.0f64.powi(-3));
}

#[test]
fn mult_net_r6_dense_grid() {
    let net = mult_net(6).unwrap();
    let err = grid_max_mult_error(&net, 400);
    assert!(err <= 4.0f64.powi(-6), "err = {err:.3e}");
}

#[test]
fn mult_net_bounded_slightly_off_domain() {
    // product trees feed mult with values that can exceed [-1,1] by the
    // inner error; the gadget must stay tame there
    let net = mult_net(4).unwrap();
    // small excursions past the square cost only a proportional error
    for (x, y) in [(1.01, 0.9), (-1.01, -1.01), (1.005, -1.008)] {
        let v = net.eval1(&[x, y]);
        assert!((v - x * y).abs() < 0.1, "({x},{y}): {v}");
    }
    // far off-domain the gadget is still finite and tame
    assert!(net.eval1(&[2.0, 2.0]).abs() < 16.0);
}

#[test]
fn monomial_count_matches_binomial() {
    // binom(d + n, d)
    assert_eq!(monomials(1, 2).len(), 3);
    assert_eq!(monomials(2, 2).len(), 6);
    assert_eq!(monomials(3, 1).len(), 4);
    assert_eq!(monomials(2, 3).len(), 10);
}

#[test]
fn poly_net_degree_zero_is_exact() {
    let net = poly_net(1, 0, &[2.5], 3).unwrap();
    // inputs (x, y1): output 2.5 * y1
    for (x, y) in [(0.3, 0.7), (-1.0, -0.2), (0.9, 1.0)] {
        assert!((net.eval1(&[x, y]) - 2.5 * y).abs() < 1e-12);
    }
}

#[test]
fn poly_net_rejects_small_depth_parameter() {
    // degree 1 needs r >= ceil(log4(2 * 4^4)) = 5
    assert!(poly_net(1, 1, &[1.0, 1.0], 4).is_err());
    assert!(poly_net(1, 1, &[1.0, 1.0], 5).is_ok());
}

#[test]
fn poly_net_width_within_lemma_budget() {
    let c = monomials(1, 2).len();
    let net = poly_net(1, 2, &[1.0, 0.0, 0.0], 7).unwrap();
    assert!(net.arch().max_hidden_width() <= 18 * 3 * c);
    assert_eq!(net.arch().depth(), 7 * 2); // r * ceil(log2(degree+1))
}

#[test]
fn poly_net_monomial_square_error_scales() {
    // p(x, y) = y * x^2 with y pinned to 1: compare against x^2
    let r = 7u32;
    let coeffs = [0.0, 0.0, 1.0]; // monomials: 1, x, x^2
    let net = poly_net(1, 2, &coeffs, r).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..2000 {
        let x = -1.0 + 2.0 * i as f64 / 1999.0;
        let v = net.eval1(&[x, 1.0, 1.0, 1.0]);
        worst = worst.max((v - x * x).abs());
    }
    let scale = 4.0f64.powi(-(r as i32));
    assert!(worst <= 4.0 * scale, "measured c = {}", worst / scale);
}

#[test]
fn poly_net_weighted_sum_of_terms() {
    // p(x, y) = 2 y_1 - 0.5 y_2 x over [-1,1]
    let r = 6u32;
    let net = poly_net(1, 1, &[2.0, -0.5], r).unwrap();
    assert!(net.max_abs_coefficient() <= 4.0);
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let x = -1.0 + 2.0 * i as f64 / 499.0;
        let (y1, y2) = (0.8, -0.6);
        let truth = 2.0 * y1 - 0.5 * y2 * x;
        worst = worst.max((net.eval1(&[x, y1, y2]) - truth).abs());
    }
    assert!(worst <= 8.0 * 4.0f64.powi(-(r as i32)), "worst {worst:.3e}");
}
