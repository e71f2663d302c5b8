//! Grid-localized Taylor machinery.
//!
//! The stage network locates the input inside a two-level grid
//! (coarse cells of side `2/M`, fine cells of side `2/M^2`), reads the
//! derivative data of the fine cell's corner out of the weights, and
//! exposes everything later builders need as output channels:
//!
//! - clamped, rescaled offsets `x''` inside the fine cell,
//! - derivative values at the estimated corner,
//! - a boundary detector that is exactly 1 within `1/ramp` of a fine
//!   cell wall and exactly 0 at depth `2/ramp`,
//! - tent weights vanishing on fine cell walls,
//! - the estimated corner itself.
//!
//! Cell membership is decided by sharp indicator ramps, so all outputs
//! are exact outside wall bands of width `2/ramp`; inside the bands
//! every channel stays bounded and the detector gates the Taylor
//! branch to zero before it can pollute the glued product.

use ndarray::{Array1, Array2};

use crate::net::{compose, identity_net, postcompose_affine, precompose_affine, stack, Assembler,
    Lin, Network};

use super::config::{cartesian, factorial_of_index, ApproxConfig, GridLayout, TargetFn};
use super::mult::{monomials, mult_net};
use super::{precondition, ConstructError};

/// Channel map of the stage network outputs.
#[derive(Debug, Clone)]
pub struct StageInfo {
    pub dim: usize,
    /// Derivative multi-indices in graded order; zero index first.
    pub derivs: Vec<Vec<usize>>,
}

impl StageInfo {
    pub fn count(&self) -> usize {
        self.derivs.len()
    }

    pub fn x_channel(&self, k: usize) -> usize {
        k
    }

    pub fn y_channel(&self, u: usize) -> usize {
        self.dim + u
    }

    pub fn check_channel(&self) -> usize {
        self.dim + self.count()
    }

    pub fn tent_channel(&self, k: usize) -> usize {
        self.dim + self.count() + 1 + k
    }

    pub fn corner_channel(&self, k: usize) -> usize {
        2 * self.dim + self.count() + 1 + k
    }

    pub fn n_outputs(&self) -> usize {
        3 * self.dim + self.count() + 1
    }
}

/// Structured record of what a builder produced.
#[derive(Debug, Clone)]
pub struct BuilderReport {
    pub builder: &'static str,
    pub depth: usize,
    pub max_width: usize,
    pub coefficient_max: f64,
    pub coefficient_cap: f64,
}

impl BuilderReport {
    pub(crate) fn capped(
        builder: &'static str,
        net: &Network,
        cap: f64,
    ) -> Result<Self, ConstructError> {
        let coefficient_max = net.max_abs_coefficient();
        if coefficient_max > cap {
            return Err(precondition(format!(
                "{builder}: coefficient {coefficient_max:.6e} exceeds the cap {cap:.6e}"
            )));
        }
        Ok(Self {
            builder,
            depth: net.arch().depth(),
            max_width: net.arch().max_hidden_width(),
            coefficient_max,
            coefficient_cap: cap,
        })
    }
}

/// Six-hidden-layer stage network; see the module docs for channels.
pub(crate) fn grid_stage(
    target: &TargetFn,
    cfg: &ApproxConfig,
    layout: &GridLayout,
) -> Result<(Network, StageInfo), ConstructError> {
    cfg.validate()?;
    let d = cfg.dim;
    let m = cfg.grid;
    let fine = cfg.fine_side();
    let coarse = cfg.coarse_side();
    let ramp = cfg.ramp();
    let inv_b = 1.0 / ramp;
    let steep2 = ramp * ramp;
    let msq_half = (m * m) as f64 / 2.0;
    let derivs = monomials(d, cfg.degree());
    let info = StageInfo { dim: d, derivs: derivs.clone() };
    let counts = layout.coarse_counts();
    let coarse_cells = cartesian(&counts);
    let fine_offsets = cartesian(&vec![m; d]);

    let mut asm = Assembler::new(d);

    // ---- layer 1: input carry and coarse grid-line ramps ----
    let idc1: Vec<usize> = (0..d)
        .map(|k| asm.relu(Lin::new().term(k, 1.0).with_bias(1.0)))
        .collect();
    // per axis, per grid line: inner ramps at offsets 1/ramp (cell
    // membership) and 2/ramp (shrunk cells for the wall detector)
    let mut c_lo = vec![Vec::new(); d];
    let mut c_hi = vec![Vec::new(); d];
    let mut s_lo = vec![Vec::new(); d];
    let mut s_hi = vec![Vec::new(); d];
    for k in 0..d {
        for t in 0..=counts[k] {
            let line = layout.origin(k) + t as f64 * coarse;
            c_lo[k].push(asm.relu(Lin::new().term(k, -1.0).with_bias(line + inv_b)));
            c_hi[k].push(asm.relu(Lin::new().term(k, 1.0).with_bias(-(line - inv_b))));
            s_lo[k].push(asm.relu(Lin::new().term(k, -1.0).with_bias(line + 2.0 * inv_b)));
            s_hi[k].push(asm.relu(Lin::new().term(k, 1.0).with_bias(-(line - 2.0 * inv_b))));
        }
    }
    asm.end_layer();

    // ---- layer 2: coarse cell indicators ----
    let idc2: Vec<usize> = idc1.iter().map(|&n| asm.relu(Lin::node(n))).collect();
    let mut z = Vec::with_capacity(coarse_cells.len());
    let mut zs = Vec::with_capacity(coarse_cells.len());
    for idx in &coarse_cells {
        let mut gate = Lin::constant(1.0);
        let mut sgate = Lin::constant(1.0);
        for k in 0..d {
            gate = gate
                .term(c_lo[k][idx[k]], -ramp)
                .term(c_hi[k][idx[k] + 1], -ramp);
            sgate = sgate
                .term(s_lo[k][idx[k]], -ramp)
                .term(s_hi[k][idx[k] + 1], -ramp);
        }
        z.push(asm.relu(gate));
        zs.push(asm.relu(sgate));
    }
    asm.end_layer();

    // channels over layer 2
    let x_of = |k: usize| Lin::node(idc2[k]).with_bias(-1.0);
    let mut corner_hat: Vec<Lin> = Vec::with_capacity(d);
    for k in 0..d {
        let mut lin = Lin::new();
        for (cell, idx) in coarse_cells.iter().enumerate() {
            let corner = layout.coarse_corner(idx);
            lin = lin.term(z[cell], corner[k]);
        }
        corner_hat.push(lin);
    }
    // derivative banks: one channel per (multi-index, fine offset)
    let mut bank: Vec<Vec<Lin>> = Vec::with_capacity(derivs.len());
    for l in &derivs {
        let mut per_offset = Vec::with_capacity(fine_offsets.len());
        for j in &fine_offsets {
            let mut lin = Lin::new();
            for (cell, idx) in coarse_cells.iter().enumerate() {
                let corner = layout.coarse_corner(idx);
                let point: Vec<f64> = (0..d).map(|k| corner[k] + fine * j[k] as f64).collect();
                let val = target.derivative(l, &point);
                debug_assert!(val.is_finite());
                lin = lin.term(z[cell], val);
            }
            per_offset.push(lin);
        }
        bank.push(per_offset);
    }
    // coarse wall detector: 1 within 1/ramp of a coarse wall
    let mut f1 = Lin::constant(1.0);
    for &n in &zs {
        f1 = f1.term(n, -1.0);
    }

    // ---- layer 3: fine ramps relative to the estimated corner ----
    let idc3: Vec<usize> = (0..d).map(|k| asm.relu(x_of(k).with_bias(1.0))).collect();
    let f1c3 = asm.relu(f1);
    let mut f_lo = vec![Vec::new(); d];
    let mut f_hi = vec![Vec::new(); d];
    let mut g_lo = vec![Vec::new(); d];
    let mut g_hi = vec![Vec::new(); d];
    let mut sc_pos = vec![Vec::new(); d];
    let mut sc_neg = vec![Vec::new(); d];
    for k in 0..d {
        for t in 0..m {
            let off = t as f64 * fine;
            let lo = corner_hat[k]
                .clone()
                .plus(&x_of(k).scaled(-1.0))
                .with_bias(off + inv_b);
            let hi = corner_hat[k]
                .clone()
                .scaled(-1.0)
                .plus(&x_of(k))
                .with_bias(-(off + fine) + inv_b);
            f_lo[k].push(asm.relu(lo.clone()));
            f_hi[k].push(asm.relu(hi.clone()));
            g_lo[k].push(asm.relu(lo.with_bias(inv_b)));
            g_hi[k].push(asm.relu(hi.with_bias(inv_b)));
            // corner value of the fine cell, split by sign
            let s = corner_hat[k].clone().with_bias(off);
            sc_pos[k].push(asm.relu(s.clone()));
            sc_neg[k].push(asm.relu(s.scaled(-1.0)));
        }
    }
    let mut sd_pos: Vec<Vec<usize>> = Vec::with_capacity(derivs.len());
    let mut sd_neg: Vec<Vec<usize>> = Vec::with_capacity(derivs.len());
    for per_offset in &bank {
        let mut pos = Vec::with_capacity(per_offset.len());
        let mut neg = Vec::with_capacity(per_offset.len());
        for lin in per_offset {
            pos.push(asm.relu(lin.clone()));
            neg.push(asm.relu(lin.clone().scaled(-1.0)));
        }
        sd_pos.push(pos);
        sd_neg.push(neg);
    }
    asm.end_layer();

    // ---- layer 4: fine cell selections ----
    let idc4: Vec<usize> = idc3.iter().map(|&n| asm.relu(Lin::node(n))).collect();
    let f1c4 = asm.relu(Lin::node(f1c3));
    let mut u_corner = vec![Vec::new(); d]; // (pos, neg) per fine offset
    let mut u_deriv = vec![Vec::new(); derivs.len()];
    let mut ct = Vec::with_capacity(fine_offsets.len());
    for (jpos, j) in fine_offsets.iter().enumerate() {
        let mut dist = Lin::new();
        let mut sdist = Lin::new();
        for k in 0..d {
            dist = dist.term(f_lo[k][j[k]], 1.0).term(f_hi[k][j[k]], 1.0);
            sdist = sdist.term(g_lo[k][j[k]], 1.0).term(g_hi[k][j[k]], 1.0);
        }
        for k in 0..d {
            let s = Lin::node(sc_pos[k][j[k]]).term(sc_neg[k][j[k]], -1.0);
            let up = asm.relu(s.clone().plus(&dist.clone().scaled(-steep2)));
            let un = asm.relu(s.scaled(-1.0).plus(&dist.clone().scaled(-steep2)));
            u_corner[k].push((up, un));
        }
        for (u, _) in derivs.iter().enumerate() {
            let s = Lin::node(sd_pos[u][jpos]).term(sd_neg[u][jpos], -1.0);
            let up = asm.relu(s.clone().plus(&dist.clone().scaled(-steep2)));
            let un = asm.relu(s.scaled(-1.0).plus(&dist.clone().scaled(-steep2)));
            u_deriv[u].push((up, un));
        }
        ct.push(asm.relu(Lin::constant(1.0).plus(&sdist.scaled(-steep2))));
    }
    asm.end_layer();

    // channels over layer 4
    let x4 = |k: usize| Lin::node(idc4[k]).with_bias(-1.0);
    let corner2: Vec<Lin> = (0..d)
        .map(|k| {
            let mut lin = Lin::new();
            for &(p, n) in &u_corner[k] {
                lin = lin.term(p, 1.0).term(n, -1.0);
            }
            lin
        })
        .collect();
    let yhat: Vec<Lin> = (0..derivs.len())
        .map(|u| {
            let mut lin = Lin::new();
            for &(p, n) in &u_deriv[u] {
                lin = lin.term(p, 1.0).term(n, -1.0);
            }
            lin
        })
        .collect();
    let mut f2 = Lin::constant(1.0);
    for &n in &ct {
        f2 = f2.term(n, -1.0);
    }

    // ---- layer 5: wall gate, clamp stage one, tent arms, carries ----
    let chk5 = asm.relu(Lin::constant(1.0).plus(&f2.scaled(-1.0)).term(f1c4, -1.0));
    let mut t1 = Vec::with_capacity(d);
    let mut tent_a = Vec::with_capacity(d);
    let mut tent_b = Vec::with_capacity(d);
    let mut cc5 = Vec::with_capacity(d);
    for k in 0..d {
        let offset = x4(k).plus(&corner2[k].clone().scaled(-1.0));
        t1.push(asm.relu(Lin::constant(1.0).plus(&offset.clone().scaled(-msq_half))));
        tent_a.push(asm.relu(offset.clone().with_bias(-fine / 2.0)));
        tent_b.push(asm.relu(offset.scaled(-1.0).with_bias(fine / 2.0)));
        cc5.push((
            asm.relu(corner2[k].clone()),
            asm.relu(corner2[k].clone().scaled(-1.0)),
        ));
    }
    let mut yc5 = Vec::with_capacity(derivs.len());
    for lin in &yhat {
        yc5.push((asm.relu(lin.clone()), asm.relu(lin.clone().scaled(-1.0))));
    }
    asm.end_layer();

    // ---- layer 6: clamp stage two, tents, final carries ----
    let chk6 = asm.relu(Lin::node(chk5));
    let mut x2 = Vec::with_capacity(d);
    let mut tent = Vec::with_capacity(d);
    let mut cc6 = Vec::with_capacity(d);
    for k in 0..d {
        x2.push(asm.relu(Lin::constant(1.0).term(t1[k], -1.0)));
        tent.push(asm.relu(
            Lin::constant(1.0)
                .term(tent_a[k], -2.0 * msq_half)
                .term(tent_b[k], -2.0 * msq_half),
        ));
        cc6.push((
            asm.relu(Lin::node(cc5[k].0).term(cc5[k].1, -1.0)),
            asm.relu(Lin::node(cc5[k].1).term(cc5[k].0, -1.0)),
        ));
    }
    let mut yc6 = Vec::with_capacity(derivs.len());
    for &(p, n) in &yc5 {
        yc6.push((
            asm.relu(Lin::node(p).term(n, -1.0)),
            asm.relu(Lin::node(n).term(p, -1.0)),
        ));
    }
    asm.end_layer();

    // readout
    let mut outputs = Vec::with_capacity(info.n_outputs());
    for k in 0..d {
        outputs.push(Lin::node(x2[k]));
    }
    for &(p, n) in &yc6 {
        outputs.push(Lin::node(p).term(n, -1.0));
    }
    outputs.push(Lin::constant(1.0).term(chk6, -1.0));
    for k in 0..d {
        outputs.push(Lin::node(tent[k]));
    }
    for &(p, n) in &cc6 {
        outputs.push(Lin::node(p).term(n, -1.0));
    }
    let net = asm.finish(outputs);
    Ok((net, info))
}

/// Polynomial branch consuming the stage outputs and emitting the
/// local Taylor value; `None` when only the zeroth derivative exists.
pub(crate) fn taylor_branch(
    cfg: &ApproxConfig,
    info: &StageInfo,
) -> Result<Option<Network>, ConstructError> {
    let degree = cfg.degree();
    if degree == 0 {
        return Ok(None);
    }
    let d = cfg.dim;
    let c = info.count();
    let fbar = cfg.radius.max(1.0);
    let fine = cfg.fine_side();
    let coeffs: Vec<f64> = info
        .derivs
        .iter()
        .map(|l| {
            let total: usize = l.iter().sum();
            fbar * fine.powi(total as i32) / factorial_of_index(l)
        })
        .collect();
    let r = poly_depth_parameter(cfg, degree);
    let poly = super::mult::poly_net(d, degree, &coeffs, r)?;
    // select (x'', y / fbar) out of the stage channels
    let mut sel = Array2::zeros((d + c, info.n_outputs()));
    for k in 0..d {
        sel[(k, info.x_channel(k))] = 1.0;
    }
    for u in 0..c {
        sel[(d + u, info.y_channel(u))] = 1.0 / fbar;
    }
    Ok(Some(precompose_affine(&poly, &sel, &Array1::zeros(d + c))?))
}

pub(crate) fn poly_depth_parameter(cfg: &ApproxConfig, degree: usize) -> u32 {
    let r_min = (2.0 * 4.0f64.powi(2 * (degree as i32 + 1))).log(4.0).ceil();
    let fbar = cfg.radius.max(1.0);
    let acc = ((cfg.grid as f64).powf(2.0 * cfg.beta) * 4.0 * fbar).log(4.0).ceil() + 1.0;
    r_min.max(acc) as u32
}

/// Depth parameter for the product gadgets gluing branch and weight:
/// their error must sit well below the local polynomial error, or the
/// ceiling jumps make the measured decay lumpy across grid sizes.
pub(crate) fn product_depth_parameter(cfg: &ApproxConfig) -> u32 {
    let target = cfg.gate_level() * (cfg.grid as f64).powf(2.0 * cfg.beta);
    (target.log(4.0).ceil() as u32 + 3).max(1)
}

/// Append `val -> (relu(s*val), relu(-s*val))` and read `s * val` back,
/// keeping the scale-up on a dedicated layer so no merged coefficient
/// exceeds `max(4, s)`.
pub(crate) fn scaled_output(net: &Network, s: f64) -> Result<Network, ConstructError> {
    assert!(net.output_dim() == 1 && s > 0.0);
    let last = net.layers().last().unwrap();
    let mut w = Array2::zeros((2, last.weight().ncols()));
    w.row_mut(0).assign(&last.weight().row(0));
    w.row_mut(1).assign(&last.weight().row(0).mapv(|v| -v));
    let shift = Array1::from(vec![last.shift()[0], -last.shift()[0]]);
    let mut layers = net.layers()[..net.layers().len() - 1].to_vec();
    layers.push(crate::net::Layer::new(w, shift));
    layers.push(crate::net::Layer::new(
        Array2::from_shape_vec((1, 2), vec![s, -s]).unwrap(),
        Array1::zeros(1),
    ));
    Ok(Network::from_layers(layers)?)
}

/// Two-layer clamp of each input coordinate into `[0, 1]`.
pub fn clamp_net(dim: usize) -> Network {
    let mut asm = Assembler::new(dim);
    let t: Vec<usize> = (0..dim)
        .map(|k| asm.relu(Lin::new().term(k, -1.0).with_bias(1.0)))
        .collect();
    asm.end_layer();
    let out: Vec<usize> = t
        .iter()
        .map(|&n| asm.relu(Lin::new().term(n, -1.0).with_bias(1.0)))
        .collect();
    asm.end_layer();
    asm.finish(out.into_iter().map(Lin::node).collect())
}

/// Grid-localized Taylor approximant (ungated): exact cell selection
/// away from fine-cell walls, local polynomial error of order
/// `grid^{-2 beta}` there.
pub fn taylor_grid_net(
    target: &TargetFn,
    cfg: &ApproxConfig,
) -> Result<(Network, BuilderReport), ConstructError> {
    let layout = GridLayout::unshifted(cfg);
    let (stage, info) = grid_stage(target, cfg, &layout)?;
    let net = match taylor_branch(cfg, &info)? {
        None => {
            let mut sel = Array2::zeros((1, info.n_outputs()));
            sel[(0, info.y_channel(0))] = 1.0;
            postcompose_affine(&stage, &sel, &Array1::zeros(1))?
        }
        Some(branch) => compose(&stage, &branch)?,
    };
    let report = BuilderReport::capped(
        "taylor_grid_net",
        &net,
        cfg.radius.max(cfg.ramp() * cfg.ramp()),
    )?;
    Ok((net, report))
}

/// Gated, tent-weighted local approximant for one grid placement.
pub struct LocalizedParts {
    /// Tent-weighted gated branch: approximates `tent(x) * f(x)`
    /// everywhere on the cube.
    pub product: Network,
    /// Ungated local Taylor value.
    pub taylor: Network,
    /// Branch after gating: forced to exactly zero within `1/ramp` of
    /// fine-cell walls.
    pub gated: Network,
    /// Wall detector channel.
    pub check: Network,
    /// Tent weight (product over axes).
    pub weight: Network,
    pub report: BuilderReport,
}

pub fn localized_net(
    target: &TargetFn,
    cfg: &ApproxConfig,
) -> Result<LocalizedParts, ConstructError> {
    localized_for_layout(target, cfg, &GridLayout::unshifted(cfg))
}

pub(crate) fn localized_for_layout(
    target: &TargetFn,
    cfg: &ApproxConfig,
    layout: &GridLayout,
) -> Result<LocalizedParts, ConstructError> {
    let d = cfg.dim;
    let (stage, info) = grid_stage(target, cfg, layout)?;
    let branch = taylor_branch(cfg, &info)?;
    let r_prod = product_depth_parameter(cfg);

    // tent product tree over the d tent channels
    let tent_tree: Option<Network> = if d == 1 {
        None
    } else {
        let mut tree: Option<Network> = None;
        let mut width = d;
        while width > 1 {
            let mut blocks: Vec<Network> = Vec::new();
            let mut i = 0;
            while i + 1 < width {
                blocks.push(mult_net(r_prod)?);
                i += 2;
            }
            if i < width {
                blocks.push(identity_net(1, r_prod as usize));
            }
            let mut level = blocks[0].clone();
            for b in &blocks[1..] {
                level = stack(&level, b)?;
            }
            tree = Some(match tree {
                None => level,
                Some(t) => compose(&t, &level)?,
            });
            width = width.div_ceil(2);
        }
        tree
    };

    let t_p = branch.as_ref().map_or(0, |b| b.arch().depth());
    let t_w = tent_tree.as_ref().map_or(0, |t| t.arch().depth());
    let t_sync = t_p.max(t_w);

    // bridge: stage outputs -> [taylor value, tent weight, wall gate]
    let full = if t_sync == 0 {
        let mut sel = Array2::zeros((3, info.n_outputs()));
        sel[(0, info.y_channel(0))] = 1.0;
        sel[(1, info.tent_channel(0))] = 1.0;
        sel[(2, info.check_channel())] = 1.0;
        postcompose_affine(&stage, &sel, &Array1::zeros(3))?
    } else {
        // block A inputs: either the full stage channel set (the
        // polynomial branch selects internally) or the bare zeroth
        // derivative channel
        let (block_a, a_rows): (Network, Vec<(usize, f64)>) = match &branch {
            Some(b) => {
                // branch already consumes raw stage channels
                let rows: Vec<(usize, f64)> = (0..info.n_outputs()).map(|ch| (ch, 1.0)).collect();
                (b.clone(), rows)
            }
            None => {
                let id = identity_net(1, 1);
                (id, vec![(info.y_channel(0), 1.0)])
            }
        };
        let block_a = sync_single_output(&block_a, t_sync)?;
        let block_b = match &tent_tree {
            Some(t) => sync_single_output(t, t_sync)?,
            None => identity_net(1, t_sync),
        };
        let block_c = identity_net(1, t_sync);
        let combined = stack(&stack(&block_a, &block_b)?, &block_c)?;
        // selection matrix feeding [A inputs | tent inputs | check]
        let a_in = combined.input_dim() - (if d == 1 { 1 } else { d }) - 1;
        let mut sel = Array2::zeros((combined.input_dim(), info.n_outputs()));
        for (row, &(ch, w)) in a_rows.iter().enumerate().take(a_in) {
            sel[(row, ch)] = w;
        }
        let tent_in = if d == 1 { 1 } else { d };
        for k in 0..tent_in {
            sel[(a_in + k, info.tent_channel(k))] = 1.0;
        }
        sel[(a_in + tent_in, info.check_channel())] = 1.0;
        let bridged = precompose_affine(&combined, &sel, &Array1::zeros(combined.input_dim()))?;
        compose(&stage, &bridged)?
    };

    // gate layer and final product
    let gate_level = cfg.gate_level();
    let mut asm = Assembler::new(3);
    let gp = asm.relu(Lin::new().term(0, 1.0 / gate_level).term(2, -1.0));
    let gn = asm.relu(Lin::new().term(0, -1.0 / gate_level).term(2, -1.0));
    let wc = asm.relu(Lin::new().term(1, 1.0));
    asm.end_layer();
    let gate = asm.finish(vec![Lin::node(gp).term(gn, -1.0), Lin::node(wc)]);

    let product_gadget = scaled_output(&mult_net(r_prod)?, gate_level)?;
    let gate_mult = compose(&gate, &product_gadget)?;
    let product = compose(&full, &gate_mult)?;

    // component views
    let pick = |row: usize| -> Result<Network, ConstructError> {
        let mut sel = Array2::zeros((1, 3));
        sel[(0, row)] = 1.0;
        Ok(postcompose_affine(&full, &sel, &Array1::zeros(1))?)
    };
    let taylor = pick(0)?;
    let weight = pick(1)?;
    let check = pick(2)?;
    let mut asm = Assembler::new(3);
    let gp = asm.relu(Lin::new().term(0, 1.0 / gate_level).term(2, -1.0));
    let gn = asm.relu(Lin::new().term(0, -1.0 / gate_level).term(2, -1.0));
    asm.end_layer();
    let gated_readout = asm.finish(vec![Lin::node(gp).scaled(gate_level).term(gn, -gate_level)]);
    let gated = compose(&full, &gated_readout)?;

    let report = BuilderReport::capped("localized_net", &product, cfg.coefficient_cap())?;
    Ok(LocalizedParts { product, taylor, gated, check, weight, report })
}

fn sync_single_output(net: &Network, depth: usize) -> Result<Network, ConstructError> {
    let have = net.arch().depth();
    if have == depth {
        return Ok(net.clone());
    }
    Ok(compose(net, &identity_net(net.output_dim(), depth - have))?)
}

/// Tent weight formula for one placement: product over axes of
/// `(1 - M^2 |corner_k + 1/M^2 - x_k|)_+` with the fine corner of the
/// cell containing `x` (reference implementation for oracles).
pub fn tent_weight(layout: &GridLayout, grid: usize, x: &[f64]) -> f64 {
    let fine = 2.0 / (grid * grid) as f64;
    let mut w = 1.0;
    for (k, &v) in x.iter().enumerate() {
        let cell = ((v - layout.origin(k)) / fine).floor();
        let corner = layout.origin(k) + cell * fine;
        let arm = 1.0 - (corner + fine / 2.0 - v).abs() / (fine / 2.0);
        w *= arm.max(0.0);
    }
    w
}
