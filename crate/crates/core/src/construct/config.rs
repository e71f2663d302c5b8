//! Configuration and layout for the grid-localized builders.

use super::{precondition, ConstructError};

/// Parameters of a grid-localized approximation on `[-1, 1]^d`.
#[derive(Debug, Clone, Copy)]
pub struct ApproxConfig {
    pub dim: usize,
    /// Smoothness order; derivatives strictly below it are controlled.
    pub beta: f64,
    /// Smoothness-ball radius (sup of the function, all controlled
    /// derivatives and the top Hölder seminorm), at least 1.
    pub radius: f64,
    /// Cells per axis of the coarse partition; the fine partition has
    /// `grid^2` per axis.
    pub grid: usize,
    /// Constant in the grid-size requirement
    /// `grid^{2 beta} >= constant * (1 ∨ radius)^{4 (beta + 1)}`.
    pub constant: f64,
}

impl ApproxConfig {
    pub fn new(dim: usize, beta: f64, radius: f64, grid: usize) -> Self {
        Self { dim, beta, radius, grid, constant: 1.0 }
    }

    pub fn validate(&self) -> Result<(), ConstructError> {
        if self.dim < 1 {
            return Err(precondition("dimension must be at least 1"));
        }
        if !(self.beta > 0.0) {
            return Err(precondition("smoothness must be positive"));
        }
        if self.radius < 1.0 {
            return Err(precondition("ball radius must be at least 1"));
        }
        if self.grid < 2 {
            return Err(precondition("grid must have at least 2 cells per axis"));
        }
        let lhs = (self.grid as f64).powf(2.0 * self.beta);
        let rhs = self.constant * self.radius.max(1.0).powf(4.0 * (self.beta + 1.0));
        if lhs < rhs {
            return Err(precondition(format!(
                "grid too small: grid^(2 beta) = {lhs:.3} < {rhs:.3} = \
                 constant * (1 ∨ radius)^(4 (beta + 1))"
            )));
        }
        if self.ramp() < self.radius {
            return Err(precondition(
                "ramp steepness below the ball radius; increase the grid",
            ));
        }
        Ok(())
    }

    /// Largest integer strictly below `beta`: the top controlled
    /// derivative order.
    pub fn degree(&self) -> usize {
        let f = self.beta.floor();
        if f == self.beta { f as usize - 1 } else { f as usize }
    }

    /// Indicator sharpness `ceil(grid^{2 (beta + 1)})`; transition
    /// bands have width `1 / ramp`.
    pub fn ramp(&self) -> f64 {
        (self.grid as f64).powf(2.0 * (self.beta + 1.0)).ceil()
    }

    /// Sup bound enforced on the local Taylor branch before gating.
    pub fn gate_level(&self) -> f64 {
        2.0 * self.radius.max(1.0) * (2.0 * self.dim as f64).exp()
    }

    /// Coefficient cap every grid-localized builder must respect.
    pub fn coefficient_cap(&self) -> f64 {
        self.gate_level().max(self.ramp() * self.ramp())
    }

    /// Fine cell side `2 / grid^2`.
    pub fn fine_side(&self) -> f64 {
        2.0 / (self.grid * self.grid) as f64
    }

    /// Coarse cell side `2 / grid`.
    pub fn coarse_side(&self) -> f64 {
        2.0 / self.grid as f64
    }

    /// Target accuracy order `grid^{-2 beta}`.
    pub fn accuracy(&self) -> f64 {
        (self.grid as f64).powf(-2.0 * self.beta)
    }
}

/// Smooth target with analytic derivative access.
pub struct TargetFn<'a> {
    pub eval: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    /// `(multi_index, x) -> partial derivative`; queried for total
    /// orders up to [`ApproxConfig::degree`] only.
    pub partial: &'a (dyn Fn(&[usize], &[f64]) -> f64 + Sync),
}

impl<'a> TargetFn<'a> {
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn derivative(&self, l: &[usize], x: &[f64]) -> f64 {
        if l.iter().all(|&v| v == 0) {
            (self.eval)(x)
        } else {
            (self.partial)(l, x)
        }
    }
}

/// Placement of the coarse/fine grid pair, possibly shifted down by
/// one fine cell along selected axes (shifted axes gain one extra
/// coarse cell so the grid still covers the cube).
#[derive(Debug, Clone)]
pub struct GridLayout {
    pub dim: usize,
    pub grid: usize,
    pub shifted: Vec<bool>,
}

impl GridLayout {
    pub fn unshifted(cfg: &ApproxConfig) -> Self {
        Self { dim: cfg.dim, grid: cfg.grid, shifted: vec![false; cfg.dim] }
    }

    pub fn shifted(cfg: &ApproxConfig, mask: &[bool]) -> Self {
        assert_eq!(mask.len(), cfg.dim);
        Self { dim: cfg.dim, grid: cfg.grid, shifted: mask.to_vec() }
    }

    /// Shifted axes move the whole grid down by half a fine cell, so
    /// the two tent families interleave into a partition of unity.
    pub fn origin(&self, k: usize) -> f64 {
        let half_fine = 1.0 / (self.grid * self.grid) as f64;
        -1.0 - if self.shifted[k] { half_fine } else { 0.0 }
    }

    /// Coarse cells along axis `k`.
    pub fn coarse_count(&self, k: usize) -> usize {
        self.grid + usize::from(self.shifted[k])
    }

    pub fn coarse_counts(&self) -> Vec<usize> {
        (0..self.dim).map(|k| self.coarse_count(k)).collect()
    }

    /// Corner of the coarse cell with per-axis indices `idx`.
    pub fn coarse_corner(&self, idx: &[usize]) -> Vec<f64> {
        let side = 2.0 / self.grid as f64;
        idx.iter()
            .enumerate()
            .map(|(k, &i)| self.origin(k) + i as f64 * side)
            .collect()
    }
}

/// Row-major cartesian product of `0..bounds[k]`.
pub fn cartesian(bounds: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = bounds.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0usize; bounds.len()];
    for _ in 0..total {
        out.push(cur.clone());
        for k in (0..bounds.len()).rev() {
            cur[k] += 1;
            if cur[k] < bounds[k] {
                break;
            }
            cur[k] = 0;
        }
    }
    out
}

pub(crate) fn factorial_of_index(l: &[usize]) -> f64 {
    l.iter()
        .map(|&v| (1..=v).map(|u| u as f64).product::<f64>())
        .product()
}
