//! Layer-by-layer tape for building structured networks.
//!
//! The constructive builders wire many small gadgets into one network.
//! The assembler keeps the invariant of a plain feed-forward MLP: every
//! neuron of the layer under construction reads an affine combination
//! of the *previous* layer's neurons only, so values that must survive
//! several layers are carried through explicit neurons.

use ndarray::{Array1, Array2};

use super::{Layer, Network};

/// Affine form over the nodes of the previous layer: sparse terms plus
/// a constant.
#[derive(Debug, Clone, Default)]
pub struct Lin {
    pub terms: Vec<(usize, f64)>,
    pub bias: f64,
}

impl Lin {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(bias: f64) -> Self {
        Self { terms: Vec::new(), bias }
    }

    pub fn node(idx: usize) -> Self {
        Self { terms: vec![(idx, 1.0)], bias: 0.0 }
    }

    pub fn term(mut self, idx: usize, w: f64) -> Self {
        self.terms.push((idx, w));
        self
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias += bias;
        self
    }

    pub fn plus(mut self, other: &Lin) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self.bias += other.bias;
        self
    }

    pub fn scaled(mut self, c: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= c;
        }
        self.bias *= c;
        self
    }
}

/// Builder accumulating hidden layers; finished with an affine readout.
pub struct Assembler {
    layers: Vec<Layer>,
    prev_width: usize,
    pending: Vec<Lin>,
}

impl Assembler {
    pub fn new(input_dim: usize) -> Self {
        Self {
            layers: Vec::new(),
            prev_width: input_dim,
            pending: Vec::new(),
        }
    }

    /// Schedule `relu(lin)` as a node of the layer under construction;
    /// returns its index in that layer.
    pub fn relu(&mut self, lin: Lin) -> usize {
        debug_assert!(lin.terms.iter().all(|(i, _)| *i < self.prev_width));
        self.pending.push(lin);
        self.pending.len() - 1
    }

    /// Seal the pending layer; its nodes become addressable.
    pub fn end_layer(&mut self) {
        assert!(!self.pending.is_empty(), "sealing an empty layer");
        let rows = self.pending.len();
        let mut weight = Array2::zeros((rows, self.prev_width));
        let mut shift = Array1::zeros(rows);
        for (r, lin) in self.pending.drain(..).enumerate() {
            for (idx, w) in lin.terms {
                weight[(r, idx)] += w;
            }
            shift[r] = lin.bias;
        }
        self.layers.push(Layer::new(weight, shift));
        self.prev_width = rows;
    }

    /// Finish with an affine readout over the last sealed layer.
    pub fn finish(mut self, outputs: Vec<Lin>) -> Network {
        assert!(self.pending.is_empty(), "unsealed pending layer");
        assert!(!self.layers.is_empty(), "network needs at least one hidden layer");
        let rows = outputs.len();
        let mut weight = Array2::zeros((rows, self.prev_width));
        let mut shift = Array1::zeros(rows);
        for (r, lin) in outputs.into_iter().enumerate() {
            debug_assert!(lin.terms.iter().all(|(i, _)| *i < self.prev_width));
            for (idx, w) in lin.terms {
                weight[(r, idx)] += w;
            }
            shift[r] = lin.bias;
        }
        self.layers.push(Layer::new(weight, shift));
        Network::from_layers(self.layers).expect("assembler produced inconsistent layers")
    }
}
