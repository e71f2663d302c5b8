//! Box-counting dimension estimate for a point cloud.

use std::collections::HashSet;

use ndarray::Array2;

use crate::stats::fit_line;

/// Number of grid cells of side `2 * radius` occupied by the points
/// (covering count with sup-norm balls of the given radius).
pub fn covering_count(points: &Array2<f64>, radius: f64) -> usize {
    assert!(radius > 0.0);
    let side = 2.0 * radius;
    let mut cells: HashSet<Vec<i64>> = HashSet::new();
    for row in points.rows() {
        let key: Vec<i64> = row.iter().map(|&v| (v / side).floor() as i64).collect();
        cells.insert(key);
    }
    cells.len()
}

/// Least-squares slope of `log N(radius)` against `log(1/radius)` over
/// a decreasing radius sequence.
///
/// A degenerate cloud (every radius covered by one cell) returns 0.
pub fn minkowski_estimate(points: &Array2<f64>, radii: &[f64]) -> f64 {
    assert!(points.nrows() >= 1, "need at least one point");
    assert!(radii.len() >= 2, "need at least two radii");
    assert!(
        radii.windows(2).all(|w| w[0] > w[1]),
        "radii must be strictly decreasing"
    );
    let xs: Vec<f64> = radii.iter().map(|r| (1.0 / r).ln()).collect();
    let ys: Vec<f64> = radii
        .iter()
        .map(|&r| (covering_count(points, r) as f64).ln())
        .collect();
    if ys.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    fit_line(&xs, &ys).0
}

/// Geometric radius ladder from `hi` down to `lo` (inclusive ends).
pub fn radius_ladder(hi: f64, lo: f64, steps: usize) -> Vec<f64> {
    assert!(hi > lo && lo > 0.0 && steps >= 2);
    (0..steps)
        .map(|k| {
            let t = k as f64 / (steps - 1) as f64;
            (hi.ln() + t * (lo.ln() - hi.ln())).exp()
        })
        .collect()
}
