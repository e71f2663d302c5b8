//! Multiplication and polynomial gadgets.
//!
//! The product of two numbers in `[-1, 1]` is written as
//! `x y = 4 p^2 - w^2 - (x + y) - 1` with `p = (x + y + 2)/4` and
//! `w = |x - y|/2`, both in `[0, 1]`. Each square is replaced by its
//! piecewise-linear interpolation on a dyadic grid, refined once per
//! hidden layer through the classic sawtooth recursion
//! `g_1 = hat`, `g_{k+1} = hat ∘ g_k`,
//! `interp_m(z) = z - sum_{k<=m} g_k(z) / 4^k`.
//!
//! The interpolation error of `z^2` at grid step `2^-m` is one-sided in
//! `[0, 4^-m / 4]`. Running the `p`-square at depth `m = R` and the
//! `w`-square at `m = R - 1` makes the two error terms `4 e_p` and
//! `-e_w` pull in opposite directions with equal reach, so the total
//! error lands in `[-4^-R, 4^-R]` with exactly `R` hidden layers.

use ndarray::{Array1, Array2};

use crate::net::{parallelize, postcompose_affine, stack, Assembler, Lin, Network};

use super::{precondition, ConstructError};

/// Teeth update: schedule the three hat neurons of `hat(prev)` where
/// `prev` is the affine form of the previous stage's value.
fn teeth(a: &mut Assembler, prev: Lin) -> (usize, usize, usize) {
    let na = a.relu(prev.clone());
    let nb = a.relu(prev.clone().with_bias(-0.5));
    let nc = a.relu(prev.with_bias(-1.0));
    (na, nb, nc)
}

/// Affine form of the sawtooth value held by a teeth triple.
fn teeth_value(t: (usize, usize, usize)) -> Lin {
    Lin::new()
        .term(t.0, 2.0)
        .term(t.1, -4.0)
        .term(t.2, 2.0)
}

/// Product gadget on `[-1, 1]^2`: depth exactly `r`, width 9, all
/// coefficients bounded by 4 (attained), and
/// `|f(x, y) - x y| <= 4^-r` everywhere on the square.
pub fn mult_net(r: u32) -> Result<Network, ConstructError> {
    if r < 1 {
        return Err(precondition("mult_net needs r >= 1"));
    }
    let l = r as usize;
    let mut a = Assembler::new(2);

    // layer 1: p-teeth stage 1, |x-y|/2 split, nothing else
    let p = Lin::new().term(0, 0.25).term(1, 0.25).with_bias(0.5);
    let mut pt = teeth(&mut a, p.clone());
    // running value of the p-interpolation; equals relu(p) = pt.0 here
    let mut up = pt.0;
    let w1 = a.relu(Lin::new().term(0, 0.5).term(1, -0.5));
    let w2 = a.relu(Lin::new().term(0, -0.5).term(1, 0.5));
    a.end_layer();

    if l == 1 {
        // 4 interp_1(p) - w - 4p + 1, with interp_1(p) = up - g_1(p)/4
        let out = Lin::node(up)
            .scaled(4.0)
            .plus(&teeth_value(pt).scaled(-1.0))
            .term(w1, -1.0)
            .term(w2, -1.0)
            .term(pt.0, -4.0)
            .with_bias(1.0);
        return Ok(a.finish(vec![out]));
    }

    // layer 2: p-stage 2, first w-stage, carries
    let w_val = Lin::new().term(w1, 1.0).term(w2, 1.0);
    let mut carry_p = a.relu(Lin::node(pt.0)); // = relu(p)
    let mut uw = a.relu(w_val.clone());
    let mut wt = teeth(&mut a, w_val);
    up = a.relu(Lin::node(up).plus(&teeth_value(pt).scaled(-0.25)));
    pt = teeth(&mut a, teeth_value(pt));
    a.end_layer();

    for stage in 2..l {
        // after this layer: p-teeth at stage+1, w-teeth at stage
        let scale_p = -(4.0f64).powi(-(stage as i32));
        let scale_w = -(4.0f64).powi(-(stage as i32 - 1));
        carry_p = a.relu(Lin::node(carry_p));
        up = a.relu(Lin::node(up).plus(&teeth_value(pt).scaled(scale_p)));
        uw = a.relu(Lin::node(uw).plus(&teeth_value(wt).scaled(scale_w)));
        let new_pt = teeth(&mut a, teeth_value(pt));
        let new_wt = teeth(&mut a, teeth_value(wt));
        pt = new_pt;
        wt = new_wt;
        a.end_layer();
    }

    // readout: 4 interp_L(p) - interp_{L-1}(w) - 4p + 1
    let li = l as i32;
    let out = Lin::node(up)
        .scaled(4.0)
        .plus(&teeth_value(pt).scaled(-4.0 * (4.0f64).powi(-li)))
        .term(uw, -1.0)
        .plus(&teeth_value(wt).scaled((4.0f64).powi(-(li - 1))))
        .term(carry_p, -4.0)
        .with_bias(1.0);
    Ok(a.finish(vec![out]))
}

/// How factors of one monomial term are paired into a product tree.
fn tree_levels(m: usize) -> usize {
    (usize::BITS - (m - 1).leading_zeros()) as usize
}

/// Weighted polynomial gadget.
///
/// Inputs are `(x_1..x_d, y_1..y_c)` with `c = binom(d + degree, d)`;
/// the output approximates `sum_k coeffs[k] * y_k * m_k(x)` over the
/// monomials `m_k` of total degree at most `degree`, listed by
/// [`monomials`]. Depth is `r * ceil(log2(degree + 1))`, width at most
/// `18 (degree + 1) c`, coefficients at most `4 ∨ max |coeffs|`, and
/// the error on `[-1, 1]`-inputs is a small multiple of
/// `max |coeffs| * 4^-r`.
pub fn poly_net(
    d: usize,
    degree: usize,
    coeffs: &[f64],
    r: u32,
) -> Result<Network, ConstructError> {
    let monos = monomials(d, degree);
    let c = monos.len();
    if coeffs.len() != c {
        return Err(precondition(format!(
            "need {} coefficients for degree {} in dimension {}, got {}",
            c,
            degree,
            d,
            coeffs.len()
        )));
    }
    let r_min = (2.0 * 4.0f64.powi(2 * (degree as i32 + 1)))
        .log(4.0)
        .ceil() as u32;
    if r < r_min {
        return Err(precondition(format!(
            "poly_net needs r >= {r_min} for degree {degree}, got {r}"
        )));
    }
    let input_dim = d + c;

    if degree == 0 {
        // single pass-through term: exact
        let net = crate::net::identity_net(input_dim, 1);
        let mut m = Array2::zeros((1, input_dim));
        m[(0, d)] = coeffs[0];
        return Ok(postcompose_affine(&net, &m, &Array1::zeros(1))?);
    }

    let depth_target = r as usize * tree_levels(degree + 1);
    let mut terms = Vec::with_capacity(c);
    for (k, mono) in monos.iter().enumerate() {
        // factor list: the carried y_k then one copy of x_i per power
        let mut selectors: Vec<usize> = vec![d + k];
        for (i, &p) in mono.iter().enumerate() {
            for _ in 0..p {
                selectors.push(i);
            }
        }
        let mut width = selectors.len();
        // pair factors level by level; the first level absorbs the
        // coordinate selection into its input affine map
        let mut level: Option<Network> = None;
        while width > 1 {
            let mut blocks: Vec<Network> = Vec::new();
            let mut i = 0;
            while i + 1 < width {
                blocks.push(mult_net(r)?);
                i += 2;
            }
            if i < width {
                blocks.push(crate::net::identity_net(1, r as usize));
            }
            let mut stage = blocks[0].clone();
            for b in &blocks[1..] {
                stage = stack(&stage, b)?;
            }
            level = Some(match level {
                None => {
                    let mut m = Array2::zeros((width, input_dim));
                    for (row, &s) in selectors.iter().enumerate() {
                        m[(row, s)] = 1.0;
                    }
                    crate::net::precompose_affine(&stage, &m, &Array1::zeros(width))?
                }
                Some(l) => crate::net::compose(&l, &stage)?,
            });
            width = width.div_ceil(2);
        }
        let mut level = match level {
            Some(l) => l,
            None => {
                // bare carried input, no products
                let mut m = Array2::zeros((1, input_dim));
                m[(0, selectors[0])] = 1.0;
                crate::net::precompose_affine(
                    &crate::net::identity_net(1, depth_target),
                    &m,
                    &Array1::zeros(1),
                )?
            }
        };
        let have = level.arch().depth();
        if have < depth_target {
            level = crate::net::compose(&level, &crate::net::identity_net(1, depth_target - have))?;
        }
        terms.push(level);
    }
    let mut joint = terms[0].clone();
    for t in &terms[1..] {
        joint = parallelize(&joint, t)?;
    }
    let m = Array2::from_shape_fn((1, c), |(_, k)| coeffs[k]);
    Ok(postcompose_affine(&joint, &m, &Array1::zeros(1))?)
}

/// All monomial exponent vectors of total degree at most `degree`,
/// graded-lexicographic: binom(d + degree, d) of them.
pub fn monomials(d: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; d];
    fn rec(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, pos: usize, left: usize) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for p in 0..=left {
            cur[pos] = p;
            rec(out, cur, pos + 1, left - p);
        }
        cur[pos] = 0;
    }
    rec(&mut out, &mut cur, 0, degree);
    out.sort_by_key(|m| m.iter().sum::<usize>());
    out
}
