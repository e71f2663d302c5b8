//! Sharp cube indicators and weighted cube tests.
//!
//! Both gadgets are exact outside per-coordinate transition bands of
//! width `1/r` hugging the cube walls from inside: the indicator
//! equals `1_{[a,b)}` there, the test equals `s * 1_{[a,b)}`, and in
//! the bands the outputs stay inside `[0,1]` (resp. `[-|s|, |s|]`).
//! The kink offsets `a + 1/r` and `b - 1/r` lie strictly inside
//! `[a, b]`, which keeps every shift below `|a|_inf ∨ |b|_inf`.

use crate::net::{Assembler, Lin, Network};

use super::{precondition, ConstructError};

fn check_cube(a: &[f64], b: &[f64], r: u32) -> Result<(), ConstructError> {
    if r < 1 {
        return Err(precondition("sharpness parameter r must be >= 1"));
    }
    if a.len() != b.len() || a.is_empty() {
        return Err(precondition("cube corners must have equal positive length"));
    }
    let margin = 2.0 / r as f64;
    for k in 0..a.len() {
        if !(b[k] - a[k] >= margin) {
            return Err(precondition(format!(
                "cube side {} is {} < 2/r = {margin}",
                k,
                b[k] - a[k]
            )));
        }
    }
    Ok(())
}

/// Ramp neurons measuring how far `x` sits inside the margin bands:
/// their sum is zero exactly on the inner closed box
/// `prod_k [a_k + 1/r, b_k - 1/r]` and at least `1/r` once any
/// coordinate leaves `[a_k, b_k]`.
fn margin_ramps(asm: &mut Assembler, a: &[f64], b: &[f64], r: u32) -> Vec<usize> {
    let inv_r = 1.0 / r as f64;
    let mut nodes = Vec::with_capacity(2 * a.len());
    for k in 0..a.len() {
        nodes.push(asm.relu(Lin::new().term(k, -1.0).with_bias(a[k] + inv_r)));
        nodes.push(asm.relu(Lin::new().term(k, 1.0).with_bias(-(b[k] - inv_r))));
    }
    nodes
}

/// Indicator gadget for the half-open cube `[a, b)`.
///
/// Depth 2, width `2d`, coefficients at most
/// `max(r, 1/r, |a|_inf, |b|_inf)` (asserted); requires every side to
/// be at least `2/r`.
pub fn indicator_net(a: &[f64], b: &[f64], r: u32) -> Result<Network, ConstructError> {
    check_cube(a, b, r)?;
    let mut asm = Assembler::new(a.len());
    let ramps = margin_ramps(&mut asm, a, b, r);
    asm.end_layer();
    let mut gate = Lin::constant(1.0);
    for n in ramps {
        gate = gate.term(n, -(r as f64));
    }
    let z = asm.relu(gate);
    asm.end_layer();
    let net = asm.finish(vec![Lin::node(z)]);
    let cap = coefficient_cap(a, b, r, false);
    assert!(
        net.max_abs_coefficient() <= cap,
        "indicator coefficient {} above cap {cap}",
        net.max_abs_coefficient()
    );
    Ok(net)
}

/// Weighted test gadget `s * 1_{[a,b)}` with `|s| <= r`.
///
/// Depth 2, width at most `2(2d + 2)`, coefficients at most
/// `max(r^2, 1/r, |a|_inf, |b|_inf)` (asserted).
pub fn test_net(a: &[f64], b: &[f64], s: f64, r: u32) -> Result<Network, ConstructError> {
    check_cube(a, b, r)?;
    if s.abs() > r as f64 {
        return Err(precondition(format!(
            "test weight |s| = {} exceeds the sharpness r = {r}",
            s.abs()
        )));
    }
    let steep = (r as f64) * (r as f64);
    let mut asm = Assembler::new(a.len());
    let ramps = margin_ramps(&mut asm, a, b, r);
    asm.end_layer();
    let mut pos = Lin::constant(s);
    let mut neg = Lin::constant(-s);
    for n in ramps {
        pos = pos.term(n, -steep);
        neg = neg.term(n, -steep);
    }
    let up = asm.relu(pos);
    let un = asm.relu(neg);
    asm.end_layer();
    let net = asm.finish(vec![Lin::node(up).term(un, -1.0)]);
    let cap = coefficient_cap(a, b, r, true);
    assert!(
        net.max_abs_coefficient() <= cap,
        "test coefficient {} above cap {cap}",
        net.max_abs_coefficient()
    );
    Ok(net)
}

fn coefficient_cap(a: &[f64], b: &[f64], r: u32, squared: bool) -> f64 {
    let rf = r as f64;
    let gain = if squared { rf * rf } else { rf };
    let sup = a
        .iter()
        .chain(b)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    gain.max(1.0 / rf).max(sup)
}

/// Points at sup-distance at least `1/r` from the inner wall bands of
/// `[a, b)`: membership means the gadgets are exact at `x`.
pub fn outside_margin_bands(x: &[f64], a: &[f64], b: &[f64], r: u32) -> bool {
    let inv_r = 1.0 / r as f64;
    x.iter().enumerate().all(|(k, &v)| {
        let in_lo = v >= a[k] && v < a[k] + inv_r;
        let in_hi = v > b[k] - inv_r && v <= b[k];
        !(in_lo || in_hi)
    })
}
