//! Combinators on ReLU networks: composition, parallelization, depth
//! synchronization and width enlargement.
//!
//! All four return networks realizing exactly the expected function
//! (identical operation order, hence bitwise-equal outputs), never an
//! approximation. Inserted identity layers use the two-neuron pair
//! `x = relu(x) - relu(-x)` so that intermediate values of any sign
//! survive.

use ndarray::{Array1, Array2};

use super::{incompatible, Layer, NetError, Network};

/// Network realizing `g ∘ f` (apply `f` first).
///
/// The output affine map of `f` and the first affine map of `g` merge
/// into a single layer, so the result has `depth(f) + depth(g)` hidden
/// layers.
pub fn compose(f: &Network, g: &Network) -> Result<Network, NetError> {
    if f.output_dim() != g.input_dim() {
        return Err(incompatible(
            "compose",
            format!(
                "f outputs {} values, g expects {}",
                f.output_dim(),
                g.input_dim()
            ),
        ));
    }
    let mut layers: Vec<Layer> = f.layers[..f.layers.len() - 1].to_vec();
    let f_last = f.layers.last().unwrap();
    let g_first = &g.layers[0];
    let weight = g_first.weight.dot(&f_last.weight);
    let shift = g_first.weight.dot(&f_last.shift) + &g_first.shift;
    layers.push(Layer::new(weight, shift));
    layers.extend_from_slice(&g.layers[1..]);
    Network::from_layers(layers)
}

/// Network realizing `x -> (f(x), g(x))` for equal input dims and depths.
pub fn parallelize(f: &Network, g: &Network) -> Result<Network, NetError> {
    if f.input_dim() != g.input_dim() {
        return Err(incompatible(
            "parallelize",
            format!("input dims differ: {} vs {}", f.input_dim(), g.input_dim()),
        ));
    }
    if f.arch.depth() != g.arch.depth() {
        return Err(incompatible(
            "parallelize",
            format!("depths differ: {} vs {}", f.arch.depth(), g.arch.depth()),
        ));
    }
    let mut layers = Vec::with_capacity(f.layers.len());
    for (l, (lf, lg)) in f.layers.iter().zip(&g.layers).enumerate() {
        let rows = lf.weight.nrows() + lg.weight.nrows();
        let shared_input = l == 0;
        let cols = if shared_input {
            f.input_dim()
        } else {
            lf.weight.ncols() + lg.weight.ncols()
        };
        let mut weight = Array2::zeros((rows, cols));
        let mut shift = Array1::zeros(rows);
        let (fr, fc) = (lf.weight.nrows(), lf.weight.ncols());
        weight
            .slice_mut(ndarray::s![..fr, ..fc])
            .assign(&lf.weight);
        let gcol = if shared_input { 0 } else { fc };
        weight
            .slice_mut(ndarray::s![fr.., gcol..])
            .assign(&lg.weight);
        shift.slice_mut(ndarray::s![..fr]).assign(&lf.shift);
        shift.slice_mut(ndarray::s![fr..]).assign(&lg.shift);
        layers.push(Layer::new(weight, shift));
    }
    Network::from_layers(layers)
}

/// Network realizing `(u, v) -> (f(u), g(v))` on concatenated inputs;
/// equal depths, all layers block-diagonal.
pub fn stack(f: &Network, g: &Network) -> Result<Network, NetError> {
    if f.arch.depth() != g.arch.depth() {
        return Err(incompatible(
            "stack",
            format!("depths differ: {} vs {}", f.arch.depth(), g.arch.depth()),
        ));
    }
    let mut layers = Vec::with_capacity(f.layers.len());
    for (lf, lg) in f.layers.iter().zip(&g.layers) {
        let rows = lf.weight.nrows() + lg.weight.nrows();
        let cols = lf.weight.ncols() + lg.weight.ncols();
        let mut weight = Array2::zeros((rows, cols));
        let mut shift = Array1::zeros(rows);
        let (fr, fc) = (lf.weight.nrows(), lf.weight.ncols());
        weight.slice_mut(ndarray::s![..fr, ..fc]).assign(&lf.weight);
        weight.slice_mut(ndarray::s![fr.., fc..]).assign(&lg.weight);
        shift.slice_mut(ndarray::s![..fr]).assign(&lf.shift);
        shift.slice_mut(ndarray::s![fr..]).assign(&lg.shift);
        layers.push(Layer::new(weight, shift));
    }
    Network::from_layers(layers)
}

/// Prepend `q` identity layers (width `2 * input_dim` each) to `f`.
pub fn depth_sync(f: &Network, q: usize) -> Result<Network, NetError> {
    if q == 0 {
        return Ok(f.clone());
    }
    let d = f.input_dim();
    let mut layers = Vec::with_capacity(f.layers.len() + q);
    // split layer: (relu(x), relu(-x))
    let mut first = Array2::zeros((2 * d, d));
    for i in 0..d {
        first[(i, i)] = 1.0;
        first[(d + i, i)] = -1.0;
    }
    layers.push(Layer::new(first, Array1::zeros(2 * d)));
    // pass-through layers on the split pair
    for _ in 1..q {
        let mut w = Array2::zeros((2 * d, 2 * d));
        for i in 0..d {
            w[(i, i)] = 1.0;
            w[(i, d + i)] = -1.0;
            w[(d + i, i)] = -1.0;
            w[(d + i, d + i)] = 1.0;
        }
        layers.push(Layer::new(w, Array1::zeros(2 * d)));
    }
    // merge into f's first layer: W (p - m) + v
    let f_first = &f.layers[0];
    let rows = f_first.weight.nrows();
    let mut w = Array2::zeros((rows, 2 * d));
    w.slice_mut(ndarray::s![.., ..d]).assign(&f_first.weight);
    w.slice_mut(ndarray::s![.., d..])
        .assign(&f_first.weight.mapv(|c| -c));
    layers.push(Layer::new(w, f_first.shift.clone()));
    layers.extend_from_slice(&f.layers[1..]);
    Network::from_layers(layers)
}

/// Embed `f` into the componentwise-larger architecture `arch`,
/// padding with zero coefficients. Outputs on the original output
/// coordinates are preserved exactly; padded output coordinates are
/// identically zero.
pub fn enlarge(f: &Network, arch: &super::Architecture) -> Result<Network, NetError> {
    if !f.arch.fits_inside(arch) {
        return Err(incompatible(
            "enlarge",
            format!(
                "target widths {:?} do not dominate {:?}",
                arch.widths(),
                f.arch.widths()
            ),
        ));
    }
    let w = arch.widths();
    let mut layers = Vec::with_capacity(f.layers.len());
    for (l, lf) in f.layers.iter().enumerate() {
        let mut weight = Array2::zeros((w[l + 1], w[l]));
        let mut shift = Array1::zeros(w[l + 1]);
        let (r, c) = (lf.weight.nrows(), lf.weight.ncols());
        weight.slice_mut(ndarray::s![..r, ..c]).assign(&lf.weight);
        shift.slice_mut(ndarray::s![..r]).assign(&lf.shift);
        layers.push(Layer::new(weight, shift));
    }
    Network::from_layers(layers)
}

/// Fold an affine input map `x -> m x + b` into the first layer of
/// `f`, realizing `x -> f(m x + b)` without extra depth.
pub fn precompose_affine(
    f: &Network,
    m: &Array2<f64>,
    b: &Array1<f64>,
) -> Result<Network, NetError> {
    if m.nrows() != f.input_dim() || b.len() != f.input_dim() {
        return Err(incompatible(
            "precompose_affine",
            format!(
                "map produces {} values, network expects {}",
                m.nrows(),
                f.input_dim()
            ),
        ));
    }
    let first = &f.layers[0];
    let weight = first.weight.dot(m);
    let shift = first.weight.dot(b) + &first.shift;
    let mut layers = vec![Layer::new(weight, shift)];
    layers.extend_from_slice(&f.layers[1..]);
    Network::from_layers(layers)
}

/// Fold an affine output map `y -> m y + b` into the last layer of
/// `f`, realizing `x -> m f(x) + b` without extra depth.
pub fn postcompose_affine(
    f: &Network,
    m: &Array2<f64>,
    b: &Array1<f64>,
) -> Result<Network, NetError> {
    if m.ncols() != f.output_dim() || b.len() != m.nrows() {
        return Err(incompatible(
            "postcompose_affine",
            format!(
                "map consumes {} values, network outputs {}",
                m.ncols(),
                f.output_dim()
            ),
        ));
    }
    let last = f.layers.last().unwrap();
    let weight = m.dot(&last.weight);
    let shift = m.dot(&last.shift) + b;
    let mut layers = f.layers[..f.layers.len() - 1].to_vec();
    layers.push(Layer::new(weight, shift));
    Network::from_layers(layers)
}

/// Identity map on `dim` coordinates with `depth >= 1` hidden layers,
/// built from the two-neuron split pair.
pub fn identity_net(dim: usize, depth: usize) -> Network {
    assert!(depth >= 1);
    let mut first = Array2::zeros((2 * dim, dim));
    let mut out = Array2::zeros((dim, 2 * dim));
    for i in 0..dim {
        first[(i, i)] = 1.0;
        first[(dim + i, i)] = -1.0;
        out[(i, i)] = 1.0;
        out[(i, dim + i)] = -1.0;
    }
    let base = Network::from_layers(vec![
        Layer::new(first, Array1::zeros(2 * dim)),
        Layer::new(out, Array1::zeros(dim)),
    ])
    .unwrap();
    depth_sync(&base, depth - 1).unwrap()
}
