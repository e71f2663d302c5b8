//! Named fixture catalog.
//!
//! Components are simple kink and trigonometric functions whose Hölder
//! norms are computed analytically; the declared radii include the sup
//! of the function, all controlled partial derivatives and the top
//! Hölder seminorm.

use std::sync::Arc;

use super::{DataError, DesignSpec, SmoothnessClass, TruthFixture};

fn additive() -> TruthFixture {
    // sum of four 1-Lipschitz univariate components, one per input:
    // two centered ramps and two tents, so part of the signal is easy
    // and part carries kinks
    let eval = Arc::new(|x: &[f64]| {
        (x[0] - 0.5) + (0.5 - x[1]) + ((x[2] - 0.5).abs() - 0.25)
            + (0.25 - (x[3] - 0.35).abs())
    });
    TruthFixture {
        name: "additive",
        dim: 4,
        m0: 1.6,
        class: SmoothnessClass::Compositional {
            q: 1,
            dims: vec![4, 4, 1],
            t: vec![1, 4],
            beta: vec![1.0, 4.0],
            radius: 1.0,
        },
        eval,
        partial: None,
        default_design: DesignSpec::UniformCube { d: 4 },
    }
}

fn single_index() -> TruthFixture {
    // g(w . x) with w = (0.6, 0.8); g is 1-Lipschitz.
    let eval = Arc::new(|x: &[f64]| {
        let t = 0.6 * x[0] + 0.8 * x[1];
        (t - 0.7).abs() - 0.35
    });
    TruthFixture {
        name: "single-index",
        dim: 2,
        m0: 0.75,
        class: SmoothnessClass::Compositional {
            q: 1,
            dims: vec![2, 1, 1],
            t: vec![2, 1],
            beta: vec![2.0, 1.0],
            radius: 1.5,
        },
        eval,
        partial: None,
        default_design: DesignSpec::UniformCube { d: 2 },
    }
}

fn holder_d1_lip() -> TruthFixture {
    // 0.5 (|x - 0.5| - 0.75) on [-1,1]: sup 0.375, Lipschitz 0.5,
    // Hölder-1 norm 0.875 <= 1.
    let eval = Arc::new(|x: &[f64]| 0.5 * ((x[0] - 0.5).abs() - 0.75));
    let partial = Arc::new(|l: &[usize], x: &[f64]| {
        assert!(l.iter().sum::<usize>() == 0);
        0.5 * ((x[0] - 0.5).abs() - 0.75)
    });
    TruthFixture {
        name: "holder-d1-b1",
        dim: 1,
        m0: 0.625,
        class: SmoothnessClass::Holder { beta: 1.0, radius: 1.0 },
        eval,
        partial: Some(partial),
        default_design: DesignSpec::UniformCube { d: 1 },
    }
}

fn holder_d1_smooth() -> TruthFixture {
    // 0.25 sin(0.8 pi x): |f| <= 0.25, |f'| <= 0.2 pi ~ 0.63,
    // Lip(f') = 0.25 (0.8 pi)^2 ~ 1.58; Hölder-2 norm <= 2.5.
    let w = 0.8 * std::f64::consts::PI;
    let eval = Arc::new(move |x: &[f64]| 0.25 * (w * x[0]).sin());
    let partial = Arc::new(move |l: &[usize], x: &[f64]| match l.iter().sum::<usize>() {
        0 => 0.25 * (w * x[0]).sin(),
        1 => 0.25 * w * (w * x[0]).cos(),
        _ => panic!("fixture controls derivatives up to first order"),
    });
    TruthFixture {
        name: "holder-d1-b2",
        dim: 1,
        m0: 0.25,
        class: SmoothnessClass::Holder { beta: 2.0, radius: 2.5 },
        eval,
        partial: Some(partial),
        default_design: DesignSpec::UniformCube { d: 1 },
    }
}

fn holder_d2_lip() -> TruthFixture {
    // 0.3 (|x1 - 0.2| + |x2 + 0.3| - 1) on [-1,1]^2.
    let eval =
        Arc::new(|x: &[f64]| 0.3 * ((x[0] - 0.2).abs() + (x[1] + 0.3).abs() - 1.0));
    let partial = Arc::new(|l: &[usize], x: &[f64]| {
        assert!(l.iter().sum::<usize>() == 0);
        0.3 * ((x[0] - 0.2).abs() + (x[1] + 0.3).abs() - 1.0)
    });
    TruthFixture {
        name: "holder-d2-b1",
        dim: 2,
        m0: 0.75,
        class: SmoothnessClass::Holder { beta: 1.0, radius: 1.1 },
        eval,
        partial: Some(partial),
        default_design: DesignSpec::UniformCube { d: 2 },
    }
}

fn anisotropic() -> TruthFixture {
    // product of a rough direction (Lipschitz kink, beta = 1) and a
    // smooth one (sine, beta = 4): harmonic-mean smoothness 0.8.
    let eval = Arc::new(|x: &[f64]| {
        let rough = (x[0] - 0.5).abs() - 0.25;
        let smooth = 0.5 * (std::f64::consts::PI * x[1]).sin();
        4.0 * rough * smooth
    });
    TruthFixture {
        name: "anisotropic",
        dim: 2,
        m0: 0.75,
        class: SmoothnessClass::AnisotropicProduct { betas: vec![1.0, 4.0] },
        eval,
        partial: None,
        default_design: DesignSpec::UniformCube { d: 2 },
    }
}

/// Smooth curve `t -> (t, t^2, (1 + sin(pi t))/2)` inside the cube.
pub(super) fn curve_embedding() -> Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync> {
    Arc::new(|u: &[f64]| {
        let t = u[0];
        vec![t, t * t, 0.5 * (1.0 + (std::f64::consts::PI * t).sin())]
    })
}

fn manifold_curve() -> TruthFixture {
    let eval = Arc::new(|x: &[f64]| {
        0.4 * ((x[0] - 0.3).abs() + 0.5 * x[1] - (x[2] - 0.6).abs() - 0.3)
    });
    TruthFixture {
        name: "manifold-curve-d3",
        dim: 3,
        m0: 0.8,
        class: SmoothnessClass::Holder { beta: 1.0, radius: 1.5 },
        eval,
        partial: None,
        default_design: DesignSpec::ManifoldEmbedding {
            d: 3,
            intrinsic: 1,
            embed: curve_embedding(),
        },
    }
}

/// The full catalog.
pub fn fixtures() -> Vec<TruthFixture> {
    vec![
        additive(),
        single_index(),
        holder_d1_lip(),
        holder_d1_smooth(),
        holder_d2_lip(),
        anisotropic(),
        manifold_curve(),
    ]
}

pub fn fixture_names() -> Vec<&'static str> {
    fixtures().iter().map(|f| f.name).collect()
}

pub fn fixture_by_name(name: &str) -> Result<TruthFixture, DataError> {
    fixtures()
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| DataError::UnknownFixture(name.to_string()))
}

/// Staged composition specs for the fixtures that declare one; used
/// when a constructive approximant seeds inference.
pub fn composition_spec_for(name: &str) -> Option<crate::construct::CompositionSpec> {
    use crate::construct::{ComponentFn, CompositionSpec};
    match name {
        "additive" => Some(CompositionSpec {
            q: 1,
            dims: vec![4, 4, 1],
            t: vec![1, 4],
            beta: vec![1.0, 4.0],
            radius: 1.0,
            stages: vec![
                vec![
                    ComponentFn {
                        reads: vec![0],
                        eval: Arc::new(|u: &[f64]| u[0] - 0.5),
                        partial: None,
                    },
                    ComponentFn {
                        reads: vec![1],
                        eval: Arc::new(|u: &[f64]| 0.5 - u[0]),
                        partial: None,
                    },
                    ComponentFn {
                        reads: vec![2],
                        eval: Arc::new(|u: &[f64]| (u[0] - 0.5).abs() - 0.25),
                        partial: None,
                    },
                    ComponentFn {
                        reads: vec![3],
                        eval: Arc::new(|u: &[f64]| 0.25 - (u[0] - 0.35).abs()),
                        partial: None,
                    },
                ],
                vec![ComponentFn {
                    reads: vec![0, 1, 2, 3],
                    eval: Arc::new(|u: &[f64]| u.iter().sum()),
                    partial: Some(Arc::new(|l: &[usize], _u: &[f64]| {
                        if l.iter().sum::<usize>() == 1 { 1.0 } else { 0.0 }
                    })),
                }],
            ],
            grid_constant: 1e-9,
        }),
        "single-index" => Some(CompositionSpec {
            q: 1,
            dims: vec![2, 1, 1],
            t: vec![2, 1],
            beta: vec![2.0, 1.0],
            radius: 1.5,
            stages: vec![
                vec![ComponentFn {
                    reads: vec![0, 1],
                    eval: Arc::new(|u: &[f64]| 0.6 * u[0] + 0.8 * u[1]),
                    partial: Some(Arc::new(|l: &[usize], _u: &[f64]| match (l[0], l[1]) {
                        (1, 0) => 0.6,
                        (0, 1) => 0.8,
                        _ => 0.0,
                    })),
                }],
                vec![ComponentFn {
                    reads: vec![0],
                    eval: Arc::new(|u: &[f64]| (u[0] - 0.7).abs() - 0.35),
                    partial: None,
                }],
            ],
            grid_constant: 1e-9,
        }),
        _ => None,
    }
}
