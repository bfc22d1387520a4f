//! Dense feed-forward network with explicit shapes.
//!
//! A [`Network`] is an ordered list of dense layers. Weights are row-major
//! with shape `(out, in)`, so row `j` holds the incoming weights of neuron
//! `j`. Adjacent layers must chain (`in` of layer k+1 equals `out` of layer
//! k) and the final layer always has the identity activation: the network
//! emits logits.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative evaluated at the pre-activation value.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn tag(self) -> char {
        match self {
            Activation::Identity => 'i',
            Activation::Relu => 'r',
        }
    }

    fn from_tag(c: char) -> Result<Self> {
        match c {
            'i' => Ok(Activation::Identity),
            'r' => Ok(Activation::Relu),
            other => Err(Error::Format(format!("unknown activation tag '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// Shape `(out, in)`; row `j` feeds neuron `j`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn param_count(&self) -> usize {
        self.out_dim() * self.in_dim() + self.out_dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    /// Builds a network from explicit layers, validating the chaining
    /// invariant and the logits-output convention.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("network has no layers".into()));
        }
        for w in layers.windows(2) {
            if w[1].in_dim() != w[0].out_dim() {
                return Err(Error::Shape(format!(
                    "layer chaining broken: out {} feeds in {}",
                    w[0].out_dim(),
                    w[1].in_dim()
                )));
            }
        }
        for layer in &layers {
            if layer.bias.len() != layer.out_dim() {
                return Err(Error::Shape("bias length != out dim".into()));
            }
        }
        let last = layers.last().unwrap();
        if last.activation != Activation::Identity {
            return Err(Error::Shape("final activation must be identity".into()));
        }
        Ok(Network { layers })
    }

    /// Seeded init with weights uniform in ±sqrt(6/(in+out)) and zero bias.
    /// `dims` lists the layer widths input-first, e.g. `[2, 32, 32, 3]`;
    /// hidden layers get ReLU, the output layer identity.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Shape("need at least input and output dims".into()));
        }
        let mut rng = Rng::new(seed).split(0x1217);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for k in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[k], dims[k + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut weights = Matrix::zeros(fan_out, fan_in);
            for v in weights.as_mut_slice() {
                *v = rng.uniform(-bound, bound);
            }
            let activation = if k + 1 == dims.len() - 1 {
                Activation::Identity
            } else {
                Activation::Relu
            };
            layers.push(Layer {
                weights,
                bias: vec![0.0; fan_out],
                activation,
            });
        }
        Network::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    /// Exact parameter count d = sum over layers of out*in + out.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn layer_param_counts(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::param_count).collect()
    }

    /// Squared L2 norm of each layer's parameters (weights and bias).
    pub fn layer_energies(&self) -> Vec<f64> {
        self.layers
            .iter()
            .map(|l| {
                l.weights.as_slice().iter().map(|w| w * w).sum::<f64>()
                    + l.bias.iter().map(|b| b * b).sum::<f64>()
            })
            .collect()
    }

    /// Stable architecture descriptor, e.g. `2:32r:32r:3i`.
    pub fn arch_id(&self) -> String {
        let mut s = self.input_dim().to_string();
        for layer in &self.layers {
            s.push(':');
            s.push_str(&layer.out_dim().to_string());
            s.push(layer.activation.tag());
        }
        s
    }

    /// Rebuilds a zeroed network from an [`Network::arch_id`] string.
    pub fn from_arch_id(arch: &str) -> Result<Self> {
        let mut parts = arch.split(':');
        let input: usize = parts
            .next()
            .ok_or_else(|| Error::Format("empty arch id".into()))?
            .parse()
            .map_err(|_| Error::Format(format!("bad arch id '{arch}'")))?;
        let mut layers = Vec::new();
        let mut fan_in = input;
        for part in parts {
            if part.is_empty() {
                return Err(Error::Format(format!("bad arch id '{arch}'")));
            }
            let (num, tag) = part.split_at(part.len() - 1);
            let out: usize = num
                .parse()
                .map_err(|_| Error::Format(format!("bad arch id '{arch}'")))?;
            let activation = Activation::from_tag(tag.chars().next().unwrap())?;
            layers.push(Layer {
                weights: Matrix::zeros(out, fan_in),
                bias: vec![0.0; out],
                activation,
            });
            fan_in = out;
        }
        Network::new(layers)
    }

    /// Forward pass: rows of `batch` are samples, output rows are logits.
    pub fn forward(&self, batch: &Matrix) -> Result<Matrix> {
        Ok(self.forward_trace(batch)?.logits().clone())
    }

    /// Forward pass retaining pre-activations for backpropagation.
    pub fn forward_trace(&self, batch: &Matrix) -> Result<Trace> {
        if batch.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "batch has {} features, network expects {}",
                batch.cols(),
                self.input_dim()
            )));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut current = batch;
        for layer in &self.layers {
            let n = current.rows();
            let mut z = Matrix::zeros(n, layer.out_dim());
            for s in 0..n {
                let x = current.row(s);
                let zr = z.row_mut(s);
                for (j, zj) in zr.iter_mut().enumerate() {
                    let wrow = layer.weights.row(j);
                    let mut acc = layer.bias[j];
                    for (wi, xi) in wrow.iter().zip(x) {
                        acc += wi * xi;
                    }
                    *zj = acc;
                }
            }
            let mut a = z.clone();
            for v in a.as_mut_slice() {
                *v = layer.activation.apply(*v);
            }
            pre.push(z);
            post.push(a);
            current = post.last().unwrap();
        }
        Ok(Trace {
            input: batch.clone(),
            pre,
            post,
        })
    }

    /// Parameters flattened layer-major: per layer, weights row-major then
    /// bias. This is the order the codecs transmit.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.as_slice());
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    /// Overwrites parameters from a flat vector in [`Network::flatten_params`]
    /// order.
    pub fn assign_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "flat parameter vector has {} entries, network needs {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut off = 0;
        for layer in &mut self.layers {
            let nw = layer.weights.as_slice().len();
            layer
                .weights
                .as_mut_slice()
                .copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = layer.bias.len();
            layer.bias.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }
}

/// Forward-pass intermediates for backpropagation.
pub struct Trace {
    pub(crate) input: Matrix,
    /// Pre-activation values per layer.
    pub(crate) pre: Vec<Matrix>,
    /// Post-activation values per layer.
    pub(crate) post: Vec<Matrix>,
}

impl Trace {
    pub fn logits(&self) -> &Matrix {
        self.post.last().unwrap()
    }
}

/// Per-layer gradients, shape-congruent with the owning network.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub d_weights: Matrix,
    pub d_bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            layers: net
                .layers()
                .iter()
                .map(|l| LayerGrad {
                    d_weights: Matrix::zeros(l.out_dim(), l.in_dim()),
                    d_bias: vec![0.0; l.out_dim()],
                })
                .collect(),
        }
    }

    /// Flattened in the same layer-major order as the network parameters.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for lg in &self.layers {
            out.extend_from_slice(lg.d_weights.as_slice());
            out.extend_from_slice(&lg.d_bias);
        }
        out
    }

    pub fn scale(&mut self, c: f64) {
        for lg in &mut self.layers {
            for v in lg.d_weights.as_mut_slice() {
                *v *= c;
            }
            for v in &mut lg.d_bias {
                *v *= c;
            }
        }
    }
}

/// Top-1 accuracy of `net` on `data`; argmax ties resolve to the lowest
/// class index. Errors on an empty dataset.
pub fn accuracy(net: &Network, data: &crate::nn::Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("accuracy over empty dataset".into()));
    }
    let logits = net.forward(data.features())?;
    let mut correct = 0usize;
    for s in 0..logits.rows() {
        let row = logits.row(s);
        let mut best = 0usize;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        if best == data.labels()[s] {
            correct += 1;
        }
    }
    Ok(correct as f64 / logits.rows() as f64)
}
