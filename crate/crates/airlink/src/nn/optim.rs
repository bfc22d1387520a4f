//! SGD with classic momentum.

use crate::error::{Error, Result};
use crate::nn::network::{Gradients, Matrix, Network};

/// Optimizer state: momentum buffers congruent with the network.
#[derive(Debug, Clone)]
pub struct OptState {
    pub learning_rate: f64,
    pub momentum: f64,
    buffers: Vec<(Matrix, Vec<f64>)>,
}

impl OptState {
    pub fn new(net: &Network, learning_rate: f64, momentum: f64) -> Result<Self> {
        if learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        Ok(OptState {
            learning_rate,
            momentum,
            buffers: net
                .layers()
                .iter()
                .map(|l| (Matrix::zeros(l.out_dim(), l.in_dim()), vec![0.0; l.out_dim()]))
                .collect(),
        })
    }
}

/// One update: `v <- m*v + g; w <- w - lr*v`.
pub fn sgd_step(net: &mut Network, grads: &Gradients, state: &mut OptState) -> Result<()> {
    if grads.layers.len() != net.layer_count() || state.buffers.len() != net.layer_count() {
        return Err(Error::Shape("gradient/state layer count mismatch".into()));
    }
    let lr = state.learning_rate;
    let m = state.momentum;
    for ((layer, lg), (vw, vb)) in net
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.buffers)
    {
        if lg.d_weights.rows() != layer.weights.rows()
            || lg.d_weights.cols() != layer.weights.cols()
        {
            return Err(Error::Shape("gradient shape mismatch".into()));
        }
        for ((w, g), v) in layer
            .weights
            .as_mut_slice()
            .iter_mut()
            .zip(lg.d_weights.as_slice())
            .zip(vw.as_mut_slice())
        {
            *v = m * *v + g;
            *w -= lr * *v;
        }
        for ((b, g), v) in layer.bias.iter_mut().zip(&lg.d_bias).zip(vb) {
            *v = m * *v + g;
            *b -= lr * *v;
        }
    }
    Ok(())
}
