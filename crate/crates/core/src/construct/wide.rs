//! Glued full-cube approximant and the compositional assembly.
//!
//! The full-cube builder sums the tent-weighted gated branches of the
//! `2^d` half-cell grid placements; interleaved tents form an exact
//! partition of unity, so the sum approximates the target on the whole
//! cube at order `grid^{-2 beta}`.
//!
//! The compositional assembly chains stage networks: each stage
//! approximates its components on `[0, 1]`-normalized coordinates with
//! its own grid resolution, clamps intermediate values back into
//! `[0, 1]`, and feeds the next stage.

use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::net::{
    compose, depth_sync, enlarge, parallelize, postcompose_affine, precompose_affine,
    Architecture, Network,
};
use crate::prior::RateSpec;

use super::config::{cartesian, ApproxConfig, GridLayout, TargetFn};
use super::taylor::{
    clamp_net, localized_for_layout, poly_depth_parameter, product_depth_parameter, BuilderReport,
};
use super::{precondition, ConstructError};

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut num = 1usize;
    let mut den = 1usize;
    for i in 0..k {
        num *= n - i;
        den *= i + 1;
    }
    num / den
}

/// Depth any architecture hosting the glued approximant must offer.
pub fn wide_depth_threshold(cfg: &ApproxConfig) -> usize {
    let m2b = (cfg.grid as f64).powf(2.0 * cfg.beta);
    let inner = (cfg.dim.max(cfg.degree() + 1) as f64).log2().ceil() as usize;
    5 + (m2b.log(4.0).ceil() as usize) * (inner + 1)
}

/// Width any architecture hosting the glued approximant must offer.
pub fn wide_width_threshold(cfg: &ApproxConfig) -> usize {
    let d = cfg.dim;
    let deg = cfg.degree();
    64 * binomial(d + deg, d) * (1 << d) * d * d * (deg + 1) * cfg.grid.pow(d as u32)
}

/// Glued approximant build.
#[derive(Debug)]
pub struct WideBuild {
    pub net: Network,
    pub report: BuilderReport,
    /// Architecture floor promised by the width/depth thresholds.
    pub lemma_depth: usize,
    pub lemma_width: usize,
}

/// Sum of the `2^d` shifted tent-weighted branches: approximates the
/// target over the whole cube `[-1, 1]^d`.
pub fn wide_net(target: &TargetFn, cfg: &ApproxConfig) -> Result<WideBuild, ConstructError> {
    cfg.validate()?;
    let mut copies = Vec::with_capacity(1 << cfg.dim);
    for mask_bits in cartesian(&vec![2usize; cfg.dim]) {
        let mask: Vec<bool> = mask_bits.iter().map(|&b| b == 1).collect();
        let layout = GridLayout::shifted(cfg, &mask);
        copies.push(localized_for_layout(target, cfg, &layout)?.product);
    }
    let mut joint = copies[0].clone();
    for c in &copies[1..] {
        joint = parallelize(&joint, c)?;
    }
    let ones = Array2::from_elem((1, copies.len()), 1.0);
    let net = postcompose_affine(&joint, &ones, &Array1::zeros(1))?;
    let report = BuilderReport::capped("wide_net", &net, cfg.coefficient_cap())?;
    Ok(WideBuild {
        net,
        report,
        lemma_depth: wide_depth_threshold(cfg),
        lemma_width: wide_width_threshold(cfg),
    })
}

/// Embed the glued approximant into a rectangular host architecture
/// of `depth` hidden layers and common width `width`.
///
/// The host must offer at least the threshold depth and width and also
/// fit the natural construction; otherwise a precondition error names
/// the violated bound.
pub fn wide_net_embedded(
    target: &TargetFn,
    cfg: &ApproxConfig,
    depth: usize,
    width: usize,
) -> Result<WideBuild, ConstructError> {
    let build = wide_net(target, cfg)?;
    if depth < build.lemma_depth || width < build.lemma_width {
        return Err(precondition(format!(
            "host architecture ({depth}, {width}) below thresholds ({}, {})",
            build.lemma_depth, build.lemma_width
        )));
    }
    let natural_depth = build.net.arch().depth();
    let natural_width = build.net.arch().max_hidden_width();
    if depth < natural_depth || width < natural_width.max(2 * cfg.dim) {
        return Err(precondition(format!(
            "host architecture ({depth}, {width}) cannot fit the natural net \
             ({natural_depth}, {natural_width})"
        )));
    }
    let synced = depth_sync(&build.net, depth - natural_depth)?;
    let mut widths = vec![cfg.dim];
    widths.extend(std::iter::repeat(width).take(depth));
    widths.push(1);
    let net = enlarge(&synced, &Architecture::new(widths)?)?;
    let report = BuilderReport::capped("wide_net_embedded", &net, cfg.coefficient_cap())?;
    Ok(WideBuild { net, report, ..build })
}

/// One component of a composition stage, reading `reads.len()`
/// coordinates of the stage input. Evaluators use the original
/// (unrescaled) argument scale and must accept arguments slightly
/// outside their nominal box (grid corners stick out by up to one
/// coarse cell).
#[derive(Clone)]
pub struct ComponentFn {
    pub reads: Vec<usize>,
    pub eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub partial: Option<Arc<dyn Fn(&[usize], &[f64]) -> f64 + Send + Sync>>,
}

/// Declared compositional structure with component evaluators.
pub struct CompositionSpec {
    pub q: usize,
    /// Ambient dimensions `d_0 .. d_{q+1}` with `d_{q+1} = 1`.
    pub dims: Vec<usize>,
    /// Active dimensions per stage.
    pub t: Vec<usize>,
    /// Smoothness per stage.
    pub beta: Vec<f64>,
    /// Box radius bound `K` of stage domains and ranges.
    pub radius: f64,
    /// `stages[i]` holds the `dims[i+1]` component functions.
    pub stages: Vec<Vec<ComponentFn>>,
    /// Constant of the per-stage grid-size requirement. The
    /// theoretical requirement uses 1; desk-scale assemblies relax it
    /// and surface quality through measured errors instead.
    pub grid_constant: f64,
}

impl CompositionSpec {
    pub fn validate(&self) -> Result<(), ConstructError> {
        let q = self.q;
        if self.dims.len() != q + 2 || self.t.len() != q + 1 || self.beta.len() != q + 1 {
            return Err(precondition("stage vectors must have lengths q+2 / q+1 / q+1"));
        }
        if self.dims[q + 1] != 1 {
            return Err(precondition("the final stage must be scalar"));
        }
        if !(self.radius > 0.0) {
            return Err(precondition("box radius must be positive"));
        }
        if self.stages.len() != q + 1 {
            return Err(precondition("need one component list per stage"));
        }
        for i in 0..=q {
            if self.t[i] > self.dims[i] {
                return Err(precondition(format!(
                    "stage {i}: active dimension {} exceeds ambient {}",
                    self.t[i], self.dims[i]
                )));
            }
            if self.stages[i].len() != self.dims[i + 1] {
                return Err(precondition(format!(
                    "stage {i}: expected {} components, got {}",
                    self.dims[i + 1],
                    self.stages[i].len()
                )));
            }
            for c in &self.stages[i] {
                if c.reads.len() != self.t[i] || c.reads.iter().any(|&r| r >= self.dims[i]) {
                    return Err(precondition(format!(
                        "stage {i}: component must read exactly t_i={} valid coordinates",
                        self.t[i]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Grid resolution of stage `i` for sample size `n`.
    pub fn stage_grid(&self, i: usize, n: usize, rates: &RateSpec) -> usize {
        let bstar = crate::prior::beta_star(&self.beta)[i];
        let ratio = n as f64 / (n as f64).ln().powf(rates.gamma());
        let m = ratio.powf(1.0 / (2.0 * (2.0 * bstar + self.t[i] as f64))).ceil();
        (m as usize).max(2)
    }
}

/// How the assembled composition is hosted.
#[derive(Debug, Clone, Copy)]
pub enum EmbedMode {
    /// Return the natural architecture.
    Natural,
    /// Embed into depth `ceil(log^{1+delta} n)` and common width
    /// `ceil(sqrt n)`; errors report the smallest workable `n`.
    Theoretical { delta: f64 },
}

#[derive(Debug)]
pub struct CompositionalBuild {
    pub net: Network,
    /// Number of nonzero coefficients.
    pub sparsity: usize,
    /// Active coefficients live in the leading `active_block` rows and
    /// columns of every layer (shift column included).
    pub active_block: usize,
    pub report: BuilderReport,
    pub stage_grids: Vec<usize>,
    pub embedded: bool,
}

fn stage_target(
    spec: &CompositionSpec,
    i: usize,
    component: &ComponentFn,
) -> (
    f64,
    Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    Arc<dyn Fn(&[usize], &[f64]) -> f64 + Send + Sync>,
) {
    let k = spec.radius;
    let q = spec.q;
    let beta = spec.beta[i];
    let eval = component.eval.clone();
    let partial = component.partial.clone();
    // argument map z in [-1,1]^t -> original coordinates, with the
    // per-coordinate derivative factor of the chain rule
    let (arg_scale, arg_shift, value_scale, value_shift) = if i == 0 {
        let vs = if q == 0 { 1.0 } else { 1.0 / (2.0 * k) };
        let vsh = if q == 0 { 0.0 } else { 0.5 };
        (0.5, 0.5, vs, vsh)
    } else if i < q {
        (k, 0.0, 1.0 / (2.0 * k), 0.5)
    } else {
        (k, 0.0, 1.0, 0.0)
    };
    let radius = if i == 0 {
        if q == 0 { k.max(1.0) } else { 1.0 }
    } else if i < q {
        (2.0 * k).powf(beta).max(1.0)
    } else {
        (k * (2.0 * k).powf(beta)).max(1.0)
    };
    let map = move |z: &[f64]| -> Vec<f64> {
        z.iter().map(|&v| arg_scale * v + arg_shift).collect()
    };
    let map2 = map.clone();
    let eval2 = eval.clone();
    let eval_fn: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> =
        Arc::new(move |z: &[f64]| value_scale * eval(&map(z)) + value_shift);
    let partial_fn: Arc<dyn Fn(&[usize], &[f64]) -> f64 + Send + Sync> =
        Arc::new(move |l: &[usize], z: &[f64]| {
            let total: usize = l.iter().sum();
            if total == 0 {
                return value_scale * eval2(&map2(z)) + value_shift;
            }
            let p = partial
                .as_ref()
                .expect("composition stage needs analytic partials for beta > 1");
            value_scale * arg_scale.powi(total as i32) * p(l, &map2(z))
        });
    (radius, eval_fn, partial_fn)
}

/// Assemble the staged approximant of a composition.
pub fn compositional_net(
    spec: &CompositionSpec,
    n: usize,
    rates: &RateSpec,
    mode: EmbedMode,
) -> Result<CompositionalBuild, ConstructError> {
    spec.validate()?;
    let (natural, stage_grids) = natural_composition(spec, n, rates)?;
    // the pass-through layers a later embedding may insert occupy the
    // leading 2 d_0 rows and columns, so the block covers them too
    let active_block = natural
        .arch()
        .widths()
        .iter()
        .copied()
        .max()
        .unwrap()
        .max(2 * spec.dims[0]);
    let (net, embedded) = match mode {
        EmbedMode::Natural => (natural, false),
        EmbedMode::Theoretical { delta } => {
            let host_depth = (n as f64).ln().powf(1.0 + delta).ceil() as usize;
            let host_width = (n as f64).sqrt().ceil() as usize;
            let nat_depth = natural.arch().depth();
            let nat_width = natural.arch().max_hidden_width().max(2 * spec.dims[0]);
            if nat_depth > host_depth || nat_width > host_width {
                let minimal = minimal_theoretical_n(spec, rates, delta);
                return Err(precondition(format!(
                    "n = {n} too small for the theoretical host: natural ({nat_depth}, \
                     {nat_width}) vs host ({host_depth}, {host_width}); smallest workable \
                     n is about {minimal:.3e}"
                )));
            }
            let synced = depth_sync(&natural, host_depth - nat_depth)?;
            let mut widths = vec![spec.dims[0]];
            widths.extend(std::iter::repeat(host_width).take(host_depth));
            widths.push(1);
            (enlarge(&synced, &Architecture::new(widths)?)?, true)
        }
    };
    let sparsity = net.count_nonzero();
    let report = BuilderReport::capped("compositional_net", &net, f64::INFINITY)?;
    Ok(CompositionalBuild {
        net,
        sparsity,
        active_block,
        report,
        stage_grids,
        embedded,
    })
}

fn natural_composition(
    spec: &CompositionSpec,
    n: usize,
    rates: &RateSpec,
) -> Result<(Network, Vec<usize>), ConstructError> {
    let mut stage_grids = Vec::with_capacity(spec.q + 1);
    let mut net: Option<Network> = None;
    for i in 0..=spec.q {
        let m_i = spec.stage_grid(i, n, rates);
        stage_grids.push(m_i);
        let mut comps: Vec<Network> = Vec::with_capacity(spec.stages[i].len());
        for component in &spec.stages[i] {
            let (radius, eval, partial) = stage_target(spec, i, component);
            let mut cfg = ApproxConfig::new(spec.t[i], spec.beta[i], radius, m_i);
            cfg.constant = spec.grid_constant;
            let target = TargetFn { eval: &*eval, partial: &*partial };
            let wb = wide_net(&target, &cfg)?;
            // select the read coordinates and map [0,1] -> [-1,1]
            let d_in = spec.dims[i];
            let mut msel = Array2::zeros((spec.t[i], d_in));
            for (row, &r) in component.reads.iter().enumerate() {
                msel[(row, r)] = 2.0;
            }
            let shift = Array1::from_elem(spec.t[i], -1.0);
            comps.push(precompose_affine(&wb.net, &msel, &shift)?);
        }
        let mut stage = comps[0].clone();
        for cnet in &comps[1..] {
            stage = parallelize(&stage, cnet)?;
        }
        if i < spec.q {
            stage = compose(&stage, &clamp_net(spec.dims[i + 1]))?;
        }
        net = Some(match net {
            None => stage,
            Some(prev) => compose(&prev, &stage)?,
        });
    }
    Ok((net.unwrap(), stage_grids))
}

/// Analytic size of the natural assembly at sample size `n`, mirroring
/// the builder arithmetic (pinned to actual builds by tests).
pub fn planned_composition_dims(
    spec: &CompositionSpec,
    n: usize,
    rates: &RateSpec,
) -> (usize, usize) {
    let mut depth = 0usize;
    let mut width = spec.dims[0];
    for i in 0..=spec.q {
        let m_i = spec.stage_grid(i, n, rates);
        let (radius, _, _) = stage_target(spec, i, &spec.stages[i][0]);
        let mut cfg = ApproxConfig::new(spec.t[i], spec.beta[i], radius, m_i);
        cfg.constant = spec.grid_constant;
        let (sd, sw) = planned_wide_dims(&cfg);
        depth += sd + if i < spec.q { 2 } else { 0 };
        width = width.max(sw * spec.dims[i + 1]);
    }
    (depth, width)
}

/// Analytic (depth, max width) of the glued approximant.
pub fn planned_wide_dims(cfg: &ApproxConfig) -> (usize, usize) {
    let d = cfg.dim;
    let m = cfg.grid;
    let deg = cfg.degree();
    let c = binomial(d + deg, d);
    let r_prod = product_depth_parameter(cfg) as usize;
    let poly_depth = if deg == 0 {
        0
    } else {
        poly_depth_parameter(cfg, deg) as usize * ((deg + 1).next_power_of_two().trailing_zeros() as usize).max(1)
    };
    let tent_depth = if d == 1 {
        0
    } else {
        r_prod * (d.next_power_of_two().trailing_zeros() as usize)
    };
    let t_sync = poly_depth.max(tent_depth);
    let depth = 6 + t_sync + 1 + r_prod + 1;
    // widest layers of one placement
    let md = m.pow(d as u32);
    let counts_max = m + 1;
    let l1 = d + 4 * d * (counts_max + 1);
    let l2 = d + 2 * (counts_max).pow(d as u32);
    let l3 = d + 1 + 6 * d * m + 2 * c * md;
    let l4 = d + 1 + (2 * d + 2 * c + 1) * md;
    let l5 = 1 + 5 * d + 2 * c;
    let bridge = 18 * (deg + 1) * c + 9 * d + 4;
    let per_copy = l1.max(l2).max(l3).max(l4).max(l5).max(bridge);
    (depth, per_copy * (1 << d))
}

fn minimal_theoretical_n(spec: &CompositionSpec, rates: &RateSpec, delta: f64) -> f64 {
    // monotone crossover: search over log n
    let fits = |n: usize| -> bool {
        let (dep, wid) = planned_composition_dims(spec, n, rates);
        let host_depth = (n as f64).ln().powf(1.0 + delta);
        let host_width = (n as f64).sqrt();
        (dep as f64) <= host_depth && (wid.max(2 * spec.dims[0]) as f64) <= host_width
    };
    let mut lo = 8usize;
    let mut hi = lo;
    for _ in 0..200 {
        if fits(hi) {
            break;
        }
        if hi > usize::MAX / 4 {
            return f64::INFINITY;
        }
        hi *= 2;
    }
    if !fits(hi) {
        return f64::INFINITY;
    }
    while hi / lo > 2 {
        let mid = ((lo as f64 * hi as f64).sqrt()) as usize;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi as f64
}
