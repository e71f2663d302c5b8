use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::minkowski::radius_ladder;
use super::*;
use crate::stats;

#[test]
fn pure_noise_sample_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let fix = TruthFixture {
        name: "zero",
        dim: 1,
        m0: 0.1,
        class: SmoothnessClass::Holder { beta: 1.0, radius: 1.0 },
        eval: std::sync::Arc::new(|_| 0.0),
        partial: None,
        default_design: DesignSpec::UniformCube { d: 1 },
    };
    let n = 10_000;
    let data = gen_data(&fix, &fix.default_design.clone(), n, &mut rng);
    let mean = data.y.iter().sum::<f64>() / n as f64;
    assert!(mean.abs() < 3.0 / (n as f64).sqrt());
    let var = data.y.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1) as f64;
    assert!((0.9..=1.1).contains(&var), "var = {var}");
}

#[test]
fn residuals_pass_normality_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let fix = fixture_by_name("additive").unwrap();
    let design = fix.default_design.clone();
    let data = gen_data(&fix, &design, 10_000, &mut rng);
    let mut residuals: Vec<f64> = (0..data.n())
        .map(|i| data.y[i] - fix.f0(data.row(i)))
        .collect();
    let a2 = stats::anderson_darling_standard_normal(&mut residuals);
    // 1% critical value for a fully specified normal
    assert!(a2 < 3.857, "A^2 = {a2}");
}

#[test]
fn curve_design_points_lie_on_the_curve() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let fix = fixture_by_name("manifold-curve-d3").unwrap();
    let design = fix.default_design.clone();
    let m = design.sample_matrix(500, &mut rng);
    for row in m.rows() {
        let t = row[0];
        assert!((row[1] - t * t).abs() < 1e-12);
        let z = 0.5 * (1.0 + (std::f64::consts::PI * t).sin());
        assert!((row[2] - z).abs() < 1e-12);
    }
}

#[test]
fn fixture_sup_bounds_hold_on_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for fix in fixtures() {
        let design = DesignSpec::UniformCube { d: fix.dim };
        let m = design.sample_matrix(10_000, &mut rng);
        for row in m.rows() {
            let v = fix.f0(row.to_slice().unwrap());
            assert!(
                v.abs() <= fix.m0 + 1e-12,
                "{}: |f0| = {} exceeds declared {}",
                fix.name,
                v.abs(),
                fix.m0
            );
        }
    }
}

#[test]
fn anisotropic_declaration_matches_harmonic_mean() {
    let fix = fixture_by_name("anisotropic").unwrap();
    match &fix.class {
        SmoothnessClass::AnisotropicProduct { betas } => {
            assert!((crate::prior::harmonic_mean(betas) - 0.8).abs() < 1e-12);
        }
        _ => panic!("wrong class"),
    }
}

#[test]
fn additive_declares_stage_zero_driver() {
    let fix = fixture_by_name("additive").unwrap();
    let (betas, ts) = fix.class.rate_stages(fix.dim);
    let r = crate::prior::RateSpec::new(0.05, 0.0);
    let e = r.compositional_exponent(&betas, &ts);
    assert!((e - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn box_counting_recovers_cube_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let design = DesignSpec::UniformCube { d: 2 };
    let pts = design.sample_matrix(100_000, &mut rng);
    let radii = radius_ladder(0.08, 0.005, 6);
    let dim = minkowski_estimate(&pts, &radii);
    assert!((1.8..=2.1).contains(&dim), "estimate {dim}");
}

#[test]
fn box_counting_recovers_segment_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut pts = ndarray::Array2::zeros((20_000, 2));
    for i in 0..pts.nrows() {
        let t: f64 = rand::Rng::gen(&mut rng);
        pts[(i, 0)] = 0.1 + 0.8 * t;
        pts[(i, 1)] = 0.2 + 0.5 * t;
    }
    let radii = radius_ladder(0.08, 0.002, 6);
    let dim = minkowski_estimate(&pts, &radii);
    assert!((0.9..=1.1).contains(&dim), "estimate {dim}");
}

#[test]
fn box_counting_degenerate_cloud_is_zero() {
    let pts = ndarray::Array2::from_elem((500, 3), 0.37);
    let radii = radius_ladder(0.1, 0.01, 5);
    assert_eq!(minkowski_estimate(&pts, &radii), 0.0);
}

#[test]
fn curve_dimension_estimate_near_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let fix = fixture_by_name("manifold-curve-d3").unwrap();
    let pts = fix.default_design.sample_matrix(100_000, &mut rng);
    let radii = radius_ladder(0.08, 0.004, 6);
    let dim = minkowski_estimate(&pts, &radii);
    assert!((dim - 1.0).abs() <= 0.2, "estimate {dim}");
}

#[test]
fn csv_dump_has_header_and_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let fix = fixture_by_name("holder-d2-b1").unwrap();
    let data = gen_data(&fix, &DesignSpec::UniformCube { d: 2 }, 5, &mut rng);
    let csv = data.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x_1,x_2,y");
    assert_eq!(lines.count(), 5);
}
