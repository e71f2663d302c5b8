use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::net::param_count;
use crate::quad;
use crate::stats;

fn unit_scale_schedule() -> ScalingSchedule {
    ScalingSchedule::new(ScheduleMode::Custom(Arc::new(|_, _, _| 0.0)), 100, 0.05).unwrap()
}

#[test]
fn cauchy_certifies_with_tight_constants() {
    let h = HeavyTailDensity::cauchy();
    let grid = default_certification_grid(1000);
    let cert = certify(&h, &grid);
    assert!(cert.passed(), "failures: {:?}", cert.failures());
    // sup_x x * H̄(x) approaches 1/pi from below
    assert!(cert.tail_mass.grid_constant <= 1.0 / std::f64::consts::PI + 1e-9);
    // analytic envelope: log(1/h(x)) <= (2 + log pi)(1 + log(1 + x))
    assert!(cert.log_density_growth.grid_constant <= 2.0 + std::f64::consts::PI.ln() + 1e-12);
}

#[test]
fn student3_certifies() {
    let h = HeavyTailDensity::student(3.0);
    let cert = certify(&h, &default_certification_grid(1000));
    assert!(cert.passed(), "failures: {:?}", cert.failures());
    assert!(cert.tail_mass.grid_constant <= h.declared().c2);
}

#[test]
fn gaussian_fails_log_density_growth_with_witness() {
    let h = HeavyTailDensity::gaussian();
    let cert = certify(&h, &default_certification_grid(1000));
    assert!(!cert.passed());
    let witness = cert
        .log_density_growth
        .witness
        .expect("expected a witness where the quadratic log-density escapes the envelope");
    assert!(witness > 10.0);
    // the witness really does violate the declared constant
    let envelope = 1.0 + (1.0 + witness).ln();
    assert!(-h.log_density(witness) > h.declared().c1 * envelope);
    assert!(!cert.failures().is_empty());
}

#[test]
fn student3_second_moment_matches_closed_form() {
    // quadrature oracle against nu / (nu - 2) = 3
    let h = HeavyTailDensity::student(3.0);
    match h.moment(2.0) {
        Moment::Finite(m) => assert!((m - 3.0).abs() < 1e-6, "m = {m}"),
        Moment::Infinite => panic!("second moment of student(3) is finite"),
    }
}

#[test]
fn cauchy_second_moment_diverges() {
    let h = HeavyTailDensity::cauchy();
    assert_eq!(h.moment(2.0), Moment::Infinite);
    // first absolute moment also diverges for the Cauchy
    assert_eq!(h.moment(1.0), Moment::Infinite);
}

#[test]
fn first_moments_are_nonnegative() {
    for h in [HeavyTailDensity::student(3.0), HeavyTailDensity::gaussian()] {
        let m = h.moment(1.0).finite().unwrap();
        assert!(m >= 0.0);
    }
}

#[test]
fn unit_scale_sampling_matches_base_cdf() {
    let h = HeavyTailDensity::cauchy();
    let sched = unit_scale_schedule();
    let arch = Architecture::new(vec![1, 1, 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let mut draws = Vec::with_capacity(100_000);
    while draws.len() < 100_000 {
        let net = sample_prior(&arch, &h, &sched, &mut rng).unwrap();
        draws.extend(net.coefficients());
    }
    draws.truncate(100_000);
    let d = stats::ks_distance_to_cdf(&mut draws, |x| h.cdf(x));
    assert!(d < 0.02, "KS distance {d}");
}

#[test]
fn scaled_tail_masses_respect_certified_bound() {
    let h = HeavyTailDensity::cauchy();
    let c2 = h.declared().c2;
    let lis = 5.0; // sigma = e^{-5}
    let sched = ScalingSchedule::new(ScheduleMode::Custom(Arc::new(move |_, _, _| lis)), 100, 0.05)
        .unwrap();
    let arch = Architecture::new(vec![1, 1, 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let n_draws = 100_000;
    let mut coeffs = Vec::with_capacity(n_draws);
    while coeffs.len() < n_draws {
        let net = sample_prior(&arch, &h, &sched, &mut rng).unwrap();
        coeffs.extend(net.coefficients());
    }
    coeffs.truncate(n_draws);
    let sigma = (-lis) as f64;
    for x in [1.0f64, 10.0, 100.0] {
        let threshold = (x.ln() + sigma).exp(); // sigma * x in log space
        let p_hat = coeffs.iter().filter(|c| c.abs() > threshold).count() as f64
            / n_draws as f64;
        let bound = 2.0 * c2 / x;
        let stderr = (p_hat.max(1e-6) * (1.0 - p_hat) / n_draws as f64).sqrt();
        assert!(
            p_hat <= bound + 3.0 * stderr,
            "x = {x}: empirical {p_hat} vs bound {bound}"
        );
    }
}

#[test]
fn equal_scale_coefficients_are_exchangeable() {
    let h = HeavyTailDensity::student(3.0);
    let sched = ScalingSchedule::constant(100, 0.05).unwrap();
    let arch = Architecture::new(vec![1, 1, 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(92);
    let mut a = Vec::with_capacity(100_000);
    let mut b = Vec::with_capacity(100_000);
    for _ in 0..100_000 {
        let net = sample_prior(&arch, &h, &sched, &mut rng).unwrap();
        let coeffs: Vec<f64> = net.coefficients().collect();
        // log-magnitudes: the raw values underflow under the constant schedule
        a.push(if coeffs[0] == 0.0 { -900.0 } else { coeffs[0].abs().ln() });
        b.push(if coeffs[1] == 0.0 { -900.0 } else { coeffs[1].abs().ln() });
    }
    let p = stats::ks_two_sample_pvalue(&mut a, &mut b);
    assert!(p > 0.01, "two-sample KS p-value {p}");
}

#[test]
fn log_prior_density_zero_network() {
    let h = HeavyTailDensity::cauchy();
    let sched = unit_scale_schedule();
    let arch = Architecture::new(vec![2, 3, 1]).unwrap();
    let net = Network::zeros(&arch);
    let t = param_count(&arch).t as f64;
    let expect = t * h.log_density(0.0);
    assert!((log_prior_density(&net, &h, &sched) - expect).abs() < 1e-12);
}

#[test]
fn cauchy_log_density_at_one() {
    // h(1) = 1 / (2 pi)
    let h = HeavyTailDensity::cauchy();
    let v = log_density_scaled(&h, 1.0, 0.0);
    assert!((v - (1.0 / (2.0 * std::f64::consts::PI)).ln()).abs() < 1e-12);
}

#[test]
fn per_coordinate_density_integrates_to_one() {
    let h = HeavyTailDensity::cauchy();
    let lis = 0.0;
    let f = |theta: f64| (lis + log_density_scaled(&h, theta, lis)).exp();
    let mass = quad::integrate(&f, -10.0, 10.0, 1e-10)
        + quad::integrate(&f, 10.0, 1e6, 1e-10)
        + quad::integrate(&f, -1e6, -10.0, 1e-10);
    assert!((0.99..=1.0 + 1e-9).contains(&mass), "mass = {mass}");
}

#[test]
fn log_density_stable_at_extreme_ratios() {
    // theta ~ 1 under sigma = e^{-86}: the ratio is e^{86}, far outside
    // the range where squaring is representable
    let h = HeavyTailDensity::cauchy();
    let v = log_density_scaled(&h, 1.0, 86.0);
    let expect = -std::f64::consts::PI.ln() - 2.0 * 86.0; // -log pi - log(x^2)
    assert!((v - expect).abs() < 1e-9);
    assert!(v.is_finite());
    // student and gaussian paths stay finite / well-defined too
    let s = HeavyTailDensity::student(3.0);
    assert!(log_density_scaled(&s, 1.0, 86.0).is_finite());
    let g = HeavyTailDensity::gaussian();
    assert_eq!(log_density_scaled(&g, 1.0, 400.0), f64::NEG_INFINITY);
}

#[test]
fn sampling_is_reproducible_under_fixed_seed() {
    let h = HeavyTailDensity::student(3.0);
    let sched = ScalingSchedule::directed(256, 0.05).unwrap();
    let arch = Architecture::new(vec![2, 4, 1]).unwrap();
    let a = sample_prior(&arch, &h, &sched, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    let b = sample_prior(&arch, &h, &sched, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    let av: Vec<u64> = a.coefficients().map(f64::to_bits).collect();
    let bv: Vec<u64> = b.coefficients().map(f64::to_bits).collect();
    assert_eq!(av, bv);
}
