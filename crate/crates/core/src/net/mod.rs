//! ReLU network data model and evaluation.
//!
//! A network is an alternation of affine maps and coordinatewise
//! `relu`, ending with an affine map. Networks are immutable after
//! construction; all builders produce new values. The coefficient order
//! is frozen (layer-major, within a layer row-major, with the shift as
//! column 0 of each row) because per-coefficient prior scalings depend
//! on the `(l, i, j)` position of a weight.

mod assemble;
mod calculus;
mod serialize;

pub(crate) use assemble::{Assembler, Lin};
pub use calculus::{
    compose, depth_sync, enlarge, identity_net, parallelize, postcompose_affine,
    precompose_affine, stack,
};

use ndarray::{Array1, Array2};
use thiserror::Error;

/// Rectified linear unit.
#[inline]
pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Truncate `y` to `[-b, b]`.
///
/// Applied samplewise to posterior draws this realises the clipped
/// posterior used for squared-loss statements.
#[inline]
pub fn clip(y: f64, b: f64) -> f64 {
    debug_assert!(b > 0.0);
    (-b).max(y.min(b))
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("width vector needs at least 3 entries (input, one hidden, output), got {0}")]
    TooFewWidths(usize),
    #[error("width entry {index} must be >= 1")]
    ZeroWidth { index: usize },
    #[error("layer {layer}: got weight shape {got:?}, expected {expected:?}")]
    LayerShape {
        layer: usize,
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("layer {layer}: non-finite coefficient")]
    NonFinite { layer: usize },
    #[error("input has length {got}, network expects {expected}")]
    InputDim { got: usize, expected: usize },
    #[error("{op}: {msg}")]
    Incompatible { op: &'static str, msg: String },
    #[error("serialized network is malformed: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn incompatible(op: &'static str, msg: impl Into<String>) -> NetError {
    NetError::Incompatible {
        op,
        msg: msg.into(),
    }
}

/// Depth and width vector of a ReLU network.
///
/// `widths` has `depth + 2` entries: input dimension, the hidden widths,
/// output dimension. All entries are at least one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    widths: Vec<usize>,
}

impl Architecture {
    pub fn new(widths: Vec<usize>) -> Result<Self, NetError> {
        if widths.len() < 3 {
            return Err(NetError::TooFewWidths(widths.len()));
        }
        if let Some(index) = widths.iter().position(|&w| w == 0) {
            return Err(NetError::ZeroWidth { index });
        }
        Ok(Self { widths })
    }

    /// Number of hidden layers.
    pub fn depth(&self) -> usize {
        self.widths.len() - 2
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// Largest hidden width (the common-width `r` of a rectangular net).
    pub fn max_hidden_width(&self) -> usize {
        self.widths[1..self.widths.len() - 1]
            .iter()
            .copied()
            .max()
            .unwrap()
    }

    /// True if `self` fits componentwise inside `other` (same depth).
    pub fn fits_inside(&self, other: &Architecture) -> bool {
        self.widths.len() == other.widths.len()
            && self.widths.iter().zip(&other.widths).all(|(a, b)| a <= b)
    }
}

/// Total coefficient count `T` and the product `V` of `(width + 1)`
/// over input and hidden layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCount {
    pub t: usize,
    /// Saturates at `u128::MAX` for absurdly wide architectures.
    pub v: u128,
}

impl ParamCount {
    pub fn v_f64(&self) -> f64 {
        self.v as f64
    }
}

/// Coefficient count and width product for an architecture.
pub fn param_count(arch: &Architecture) -> ParamCount {
    let w = arch.widths();
    let l = arch.depth();
    let mut t = 0usize;
    for l in 0..=l {
        t += w[l] * w[l + 1];
    }
    for wl in &w[1..] {
        t += wl;
    }
    let mut v: u128 = 1;
    for wl in &w[..w.len() - 1] {
        v = v.saturating_mul(*wl as u128 + 1);
    }
    ParamCount { t, v }
}

/// Sup-norm discrepancy bound between two networks of architecture
/// `arch` whose coefficients differ by at most `delta` and are bounded
/// by `b`: `delta * V * (b ∨ 1)^L * (L + 1)`.
pub fn propagation_bound(arch: &Architecture, delta: f64, b: f64) -> f64 {
    assert!(delta >= 0.0 && b >= 0.0);
    let l = arch.depth();
    let v = param_count(arch).v_f64();
    delta * v * b.max(1.0).powi(l as i32) * (l as f64 + 1.0)
}

/// One affine layer: `x -> weight · x + shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub(crate) weight: Array2<f64>,
    pub(crate) shift: Array1<f64>,
}

impl Layer {
    pub fn new(weight: Array2<f64>, shift: Array1<f64>) -> Self {
        assert_eq!(weight.nrows(), shift.len());
        Self { weight, shift }
    }

    pub fn weight(&self) -> &Array2<f64> {
        &self.weight
    }

    pub fn shift(&self) -> &Array1<f64> {
        &self.shift
    }
}

/// Immutable ReLU network: `depth + 1` affine layers with `relu`
/// between consecutive ones (none after the last).
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    layers: Vec<Layer>,
}

impl Network {
    /// Build from explicit layers, checking shapes and finiteness.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self, NetError> {
        if layers.len() < 2 {
            return Err(NetError::TooFewWidths(layers.len() + 1));
        }
        let mut widths = Vec::with_capacity(layers.len() + 1);
        widths.push(layers[0].weight.ncols());
        for layer in &layers {
            widths.push(layer.weight.nrows());
        }
        let arch = Architecture::new(widths)?;
        let net = Self { arch, layers };
        net.check_consistent()?;
        Ok(net)
    }

    fn check_consistent(&self) -> Result<(), NetError> {
        let w = self.arch.widths();
        for (l, layer) in self.layers.iter().enumerate() {
            let expected = (w[l + 1], w[l]);
            let got = (layer.weight.nrows(), layer.weight.ncols());
            if got != expected || layer.shift.len() != expected.0 {
                return Err(NetError::LayerShape {
                    layer: l + 1,
                    got,
                    expected,
                });
            }
            let finite = layer.weight.iter().all(|c| c.is_finite())
                && layer.shift.iter().all(|c| c.is_finite());
            if !finite {
                return Err(NetError::NonFinite { layer: l + 1 });
            }
        }
        Ok(())
    }

    /// All-zero network of the given architecture.
    pub fn zeros(arch: &Architecture) -> Self {
        let w = arch.widths();
        let layers = (0..=arch.depth())
            .map(|l| Layer::new(Array2::zeros((w[l + 1], w[l])), Array1::zeros(w[l + 1])))
            .collect();
        Self {
            arch: arch.clone(),
            layers,
        }
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.arch.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.arch.output_dim()
    }

    /// Exact forward evaluation; fixed (row-major dot product) order.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        if x.len() != self.input_dim() {
            return Err(NetError::InputDim {
                got: x.len(),
                expected: self.input_dim(),
            });
        }
        let mut h = Array1::from(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            h = layer.weight.dot(&h) + &layer.shift;
            if l != last {
                h.mapv_inplace(relu);
            }
        }
        Ok(h.to_vec())
    }

    /// Forward evaluation of a scalar-output network.
    pub fn eval1(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(self.output_dim(), 1);
        self.forward(x).expect("dimension mismatch")[0]
    }

    /// Batched forward pass; `xs` holds one input per row.
    pub fn forward_batch(&self, xs: &Array2<f64>) -> Result<Array2<f64>, NetError> {
        if xs.ncols() != self.input_dim() {
            return Err(NetError::InputDim {
                got: xs.ncols(),
                expected: self.input_dim(),
            });
        }
        let mut h = xs.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut next = h.dot(&layer.weight.t());
            next += &layer.shift;
            if l != last {
                next.mapv_inplace(relu);
            }
            h = next;
        }
        Ok(h)
    }

    /// Coefficients in the frozen order: layers first, rows within a
    /// layer, and within a row the shift entry before the weight row.
    pub fn coefficients(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|layer| {
            (0..layer.weight.nrows()).flat_map(move |i| {
                std::iter::once(layer.shift[i]).chain(layer.weight.row(i).to_vec())
            })
        })
    }

    /// Positions `(l, i, j)` matching [`Network::coefficients`]:
    /// layer `l` in `1..=depth+1`, row `i` in `1..=r_l`, and `j = 0`
    /// for the shift entry, else the 1-based input index.
    pub fn coefficient_positions(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.layers.iter().enumerate().flat_map(|(l, layer)| {
            let cols = layer.weight.ncols();
            (1..=layer.weight.nrows()).flat_map(move |i| (0..=cols).map(move |j| (l + 1, i, j)))
        })
    }

    pub fn coefficient_count(&self) -> usize {
        param_count(&self.arch).t
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coefficients().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn count_nonzero(&self) -> usize {
        self.coefficients().filter(|c| *c != 0.0).count()
    }

    /// Rebuild a network of architecture `arch` from coefficients in
    /// the frozen order.
    pub fn from_coefficients(arch: &Architecture, coeffs: &[f64]) -> Result<Self, NetError> {
        let expected = param_count(arch).t;
        if coeffs.len() != expected {
            return Err(incompatible(
                "from_coefficients",
                format!("got {} coefficients, architecture needs {expected}", coeffs.len()),
            ));
        }
        let w = arch.widths();
        let mut it = coeffs.iter().copied();
        let mut layers = Vec::with_capacity(arch.depth() + 1);
        for l in 0..=arch.depth() {
            let (rows, cols) = (w[l + 1], w[l]);
            let mut weight = Array2::zeros((rows, cols));
            let mut shift = Array1::zeros(rows);
            for i in 0..rows {
                shift[i] = it.next().unwrap();
                for j in 0..cols {
                    weight[(i, j)] = it.next().unwrap();
                }
            }
            layers.push(Layer::new(weight, shift));
        }
        Self::from_layers(layers)
    }

    /// Write in the self-describing binary format.
    pub fn write_to(&self, path: &std::path::Path) -> Result<(), NetError> {
        serialize::write(self, path)
    }

    /// Read back a network written by [`Network::write_to`].
    pub fn read_from(path: &std::path::Path) -> Result<Self, NetError> {
        serialize::read(path)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serialize::to_bytes(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NetError> {
        serialize::from_bytes(bytes)
    }
}
