//! Ground-truth fixtures, design distributions and regression data.
//!
//! Fixtures declare their smoothness class; the declarations are
//! construction-time assertions (membership of product fixtures in the
//! corresponding anisotropic balls is asserted by how the factors are
//! built, not re-proven numerically). Every fixture carries an analytic
//! sup bound and, where the constructive builders need them, analytic
//! partial derivatives.

mod fixtures;
mod minkowski;

pub use fixtures::{composition_spec_for, fixture_by_name, fixture_names, fixtures};
pub use minkowski::{covering_count, minkowski_estimate, radius_ladder};

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("{0}")]
    InvalidParameter(String),
}

/// Declared smoothness class of a fixture.
#[derive(Debug, Clone)]
pub enum SmoothnessClass {
    /// Nested composition with per-stage active dimensions `t` and
    /// smoothness `beta`; `dims` are the ambient dimensions of each
    /// stage boundary.
    Compositional {
        q: usize,
        dims: Vec<usize>,
        t: Vec<usize>,
        beta: Vec<f64>,
        radius: f64,
    },
    /// Plain Hölder ball membership.
    Holder { beta: f64, radius: f64 },
    /// Coordinatewise product with per-direction smoothness.
    AnisotropicProduct { betas: Vec<f64> },
}

impl SmoothnessClass {
    /// Per-stage `(beta, t)` pairs driving the rate exponent.
    pub fn rate_stages(&self, ambient_dim: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            SmoothnessClass::Compositional { t, beta, .. } => {
                (beta.clone(), t.iter().map(|&v| v as f64).collect())
            }
            SmoothnessClass::Holder { beta, .. } => (vec![*beta], vec![ambient_dim as f64]),
            SmoothnessClass::AnisotropicProduct { betas } => {
                (vec![crate::prior::harmonic_mean(betas)], vec![1.0])
            }
        }
    }
}

/// Design distribution over the unit cube.
#[derive(Clone)]
pub enum DesignSpec {
    UniformCube { d: usize },
    /// Points from a smooth embedding of `[0,1]^intrinsic` into the
    /// cube; `intrinsic < d` by construction.
    ManifoldEmbedding {
        d: usize,
        intrinsic: usize,
        embed: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    },
}

impl fmt::Debug for DesignSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DesignSpec::UniformCube { d } => write!(f, "UniformCube(d={d})"),
            DesignSpec::ManifoldEmbedding { d, intrinsic, .. } => {
                write!(f, "ManifoldEmbedding(d={d}, intrinsic={intrinsic})")
            }
        }
    }
}

impl DesignSpec {
    pub fn dim(&self) -> usize {
        match self {
            DesignSpec::UniformCube { d } => *d,
            DesignSpec::ManifoldEmbedding { d, .. } => *d,
        }
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let p = match self {
            DesignSpec::UniformCube { d } => (0..*d).map(|_| rng.gen::<f64>()).collect(),
            DesignSpec::ManifoldEmbedding { intrinsic, embed, d } => {
                let u: Vec<f64> = (0..*intrinsic).map(|_| rng.gen::<f64>()).collect();
                let p = embed(&u);
                assert_eq!(p.len(), *d, "embedding has wrong ambient dimension");
                p
            }
        };
        assert!(
            p.iter().all(|v| (0.0..=1.0).contains(v)),
            "design point left the unit cube: {p:?}"
        );
        p
    }

    pub fn sample_matrix<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Array2<f64> {
        let d = self.dim();
        let mut out = Array2::zeros((m, d));
        for i in 0..m {
            let p = self.sample_point(rng);
            for j in 0..d {
                out[(i, j)] = p[j];
            }
        }
        out
    }
}

/// Ground-truth regression function with declared class membership.
#[derive(Clone)]
pub struct TruthFixture {
    pub name: &'static str,
    pub dim: usize,
    /// Analytic sup bound on `|f0|` over the cube.
    pub m0: f64,
    pub class: SmoothnessClass,
    pub eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    /// Multi-index partial derivative `(l, x) -> d^l f0(x)`, defined up
    /// to the order the declared smoothness supports; `None` when the
    /// fixture is not used as a construction target.
    pub partial: Option<Arc<dyn Fn(&[usize], &[f64]) -> f64 + Send + Sync>>,
    pub default_design: DesignSpec,
}

impl fmt::Debug for TruthFixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthFixture({}, d={}, m0={})", self.name, self.dim, self.m0)
    }
}

impl TruthFixture {
    pub fn f0(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }
}

/// Observed regression sample: design rows and responses, unit noise.
#[derive(Debug, Clone)]
pub struct RegressionData {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
}

impl RegressionData {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.x.row(i).to_slice().expect("standard layout")
    }

    /// Dump as CSV with columns `x_1..x_d, y`.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::new();
        for j in 1..=d {
            out.push_str(&format!("x_{j},"));
        }
        out.push_str("y\n");
        for i in 0..self.n() {
            for j in 0..d {
                out.push_str(&format!("{:.17e},", self.x[(i, j)]));
            }
            out.push_str(&format!("{:.17e}\n", self.y[i]));
        }
        out
    }
}

/// Generate `n` observations `y = f0(x) + xi`, `xi` standard normal.
pub fn gen_data<R: Rng + ?Sized>(
    fix: &TruthFixture,
    spec: &DesignSpec,
    n: usize,
    rng: &mut R,
) -> RegressionData {
    assert!(n >= 1);
    assert_eq!(fix.dim, spec.dim(), "fixture/design dimension mismatch");
    let x = spec.sample_matrix(n, rng);
    let y = (0..n)
        .map(|i| {
            let xi: f64 = StandardNormal.sample(rng);
            fix.f0(x.row(i).to_slice().unwrap()) + xi
        })
        .collect();
    RegressionData { x, y }
}

#[cfg(test)]
mod tests;
