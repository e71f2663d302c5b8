//! Monte-Carlo and closed-form divergences of the Gaussian regression
//! model with unit noise.
//!
//! All estimators integrate over the design distribution only; the
//! Gaussian-model part is handled in closed form. For two regression
//! functions the KL divergence is half the squared `L^2(P_X)` distance,
//! its variance term equals the squared distance itself, and the
//! order-`alpha` divergence has the integral form
//! `(alpha - 1)^{-1} log E_X exp(alpha (alpha - 1) (f - g)^2 / 2)`.

use ndarray::Array2;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DivergenceError {
    #[error("alpha must lie strictly inside (0,1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("design sample is empty")]
    EmptyDesign,
}

/// Design points used to integrate over `P_X`; rows are points in the
/// unit cube.
#[derive(Debug, Clone)]
pub struct DesignSample {
    points: Array2<f64>,
}

impl DesignSample {
    pub fn new(points: Array2<f64>) -> Result<Self, DivergenceError> {
        if points.nrows() == 0 {
            return Err(DivergenceError::EmptyDesign);
        }
        debug_assert!(points.iter().all(|v| (0.0..=1.0).contains(v)));
        Ok(Self { points })
    }

    pub fn uniform<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Self {
        let points = Array2::from_shape_fn((m, d), |_| rng.gen::<f64>());
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.rows().into_iter().map(|r| {
            r.to_slice()
                .expect("design matrix is standard-layout")
        })
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
}

fn mean_stderr_of<F: Fn(&[f64]) -> f64>(design: &DesignSample, integrand: F) -> McEstimate {
    let m = design.len() as f64;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for x in design.iter() {
        let v = integrand(x);
        sum += v;
        sumsq += v * v;
    }
    let mean = sum / m;
    let var = (sumsq / m - mean * mean).max(0.0);
    McEstimate {
        value: mean,
        stderr: (var / m).sqrt(),
    }
}

/// Squared `L^2(P_X)` distance `E_X (f - g)^2` by Monte Carlo.
pub fn l2_px<F, G>(f: F, g: G, design: &DesignSample) -> McEstimate
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    mean_stderr_of(design, |x| {
        let d = f(x) - g(x);
        d * d
    })
}

/// KL divergence between the regression models: half the squared
/// distance.
pub fn kl_regression<F, G>(f0: F, f: G, design: &DesignSample) -> McEstimate
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let e = l2_px(f0, f, design);
    McEstimate {
        value: 0.5 * e.value,
        stderr: 0.5 * e.stderr,
    }
}

/// Variance of the log likelihood ratio around its KL mean: equals the
/// squared `L^2(P_X)` distance (identically `2 * kl_regression`).
pub fn kl_variance<F, G>(f0: F, f: G, design: &DesignSample) -> McEstimate
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    l2_px(f0, f, design)
}

/// Order-`alpha` divergence between the regression models via its
/// closed-form integrand; Monte Carlo runs over the design only.
///
/// The exponent `alpha (alpha - 1) (f - g)^2 / 2` is nonpositive for
/// `alpha` in `(0,1)`, so the integrand cannot overflow; this is
/// asserted per point. The standard error is propagated through the
/// outer logarithm by the delta method.
pub fn renyi<F, G>(
    f: F,
    g: G,
    alpha: f64,
    design: &DesignSample,
) -> Result<McEstimate, DivergenceError>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DivergenceError::AlphaOutOfRange(alpha));
    }
    let inner = mean_stderr_of(design, |x| {
        let d = f(x) - g(x);
        let expo = 0.5 * alpha * (alpha - 1.0) * d * d;
        debug_assert!(expo <= 0.0);
        expo.exp()
    });
    let value = inner.value.ln() / (alpha - 1.0);
    let stderr = inner.stderr / (inner.value * (1.0 - alpha));
    Ok(McEstimate { value, stderr })
}

/// Closed-form order-`alpha` divergence for a constant gap `delta`:
/// `alpha * delta^2 / 2`.
pub fn renyi_constant_gap(alpha: f64, delta: f64) -> f64 {
    0.5 * alpha * delta * delta
}

/// Lower-bound factor relating the order-`alpha` divergence to the
/// squared distance for functions bounded by `m0`:
/// `D_alpha >= (alpha/2) exp(-2 m0^2 alpha (1-alpha)) * l2`.
pub fn clip_lower_bound_factor(alpha: f64, m0: f64) -> f64 {
    0.5 * alpha * (-2.0 * m0 * m0 * alpha * (1.0 - alpha)).exp()
}
