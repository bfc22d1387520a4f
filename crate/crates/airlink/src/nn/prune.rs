//! Structured magnitude pruning.
//!
//! Removes whole neurons so the pruned network stays dense and needs no
//! sparsity metadata. For each hidden layer, the `ceil(fraction * out)`
//! neurons with the smallest L1 norm of incoming weights plus bias are
//! removed, along with the matching columns of the next layer. The output
//! layer is never pruned.

use crate::error::{Error, Result};
use crate::nn::network::{Layer, Matrix, Network};

/// L1 score of each neuron in a layer: sum of |incoming weights| + |bias|.
pub fn neuron_l1_scores(layer: &Layer) -> Vec<f64> {
    (0..layer.out_dim())
        .map(|j| {
            layer.weights.row(j).iter().map(|w| w.abs()).sum::<f64>() + layer.bias[j].abs()
        })
        .collect()
}

/// Indices of the `k` lowest-scoring neurons; ties break toward the lowest
/// index.
fn lowest_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(a.cmp(&b)));
    let mut chosen: Vec<usize> = order.into_iter().take(k).collect();
    chosen.sort_unstable();
    chosen
}

fn drop_rows(m: &Matrix, remove: &[usize]) -> Matrix {
    let keep: Vec<usize> = (0..m.rows()).filter(|i| !remove.contains(i)).collect();
    let mut out = Matrix::zeros(keep.len(), m.cols());
    for (r, &i) in keep.iter().enumerate() {
        out.row_mut(r).copy_from_slice(m.row(i));
    }
    out
}

fn drop_cols(m: &Matrix, remove: &[usize]) -> Matrix {
    let keep: Vec<usize> = (0..m.cols()).filter(|j| !remove.contains(j)).collect();
    let mut out = Matrix::zeros(m.rows(), keep.len());
    for r in 0..m.rows() {
        let src = m.row(r);
        for (c, &j) in keep.iter().enumerate() {
            out.row_mut(r)[c] = src[j];
        }
    }
    out
}

/// Removes `ceil(fraction * out)` lowest-L1 neurons from every hidden layer.
/// Refuses if any prune would empty a layer. `fraction = 0` is a no-op.
pub fn prune_structured(net: &Network, fraction: f64) -> Result<Network> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "prune fraction {fraction} outside [0, 1)"
        )));
    }
    if fraction == 0.0 {
        return Ok(net.clone());
    }
    let mut layers: Vec<Layer> = net.layers().to_vec();
    // Hidden layers only; the output layer keeps its neurons.
    for k in 0..layers.len().saturating_sub(1) {
        let out = layers[k].out_dim();
        let remove_count = (fraction * out as f64).ceil() as usize;
        if remove_count >= out {
            return Err(Error::Config(format!(
                "pruning {remove_count} of {out} neurons would empty layer {k}"
            )));
        }
        if remove_count == 0 {
            continue;
        }
        let scores = neuron_l1_scores(&layers[k]);
        let remove = lowest_k(&scores, remove_count);
        layers[k].weights = drop_rows(&layers[k].weights, &remove);
        layers[k].bias = {
            let keep: Vec<f64> = layers[k]
                .bias
                .iter()
                .enumerate()
                .filter(|(j, _)| !remove.contains(j))
                .map(|(_, &b)| b)
                .collect();
            keep
        };
        layers[k + 1].weights = drop_cols(&layers[k + 1].weights, &remove);
    }
    Network::new(layers)
}

/// Hidden-layer widths after applying `prune_structured` repeatedly with
/// `fraction`, stopping when another round would empty a layer. Returns the
/// sequence of parameter counts along the trajectory (starting with the
/// current count). Used to check a prune target is reachable before touching
/// the network.
pub fn prune_trajectory(net: &Network, fraction: f64) -> Vec<usize> {
    let mut widths: Vec<usize> = net.layers().iter().map(Layer::out_dim).collect();
    let input = net.input_dim();
    let param_count = |widths: &[usize]| -> usize {
        let mut total = 0;
        let mut fan_in = input;
        for &w in widths {
            total += w * fan_in + w;
            fan_in = w;
        }
        total
    };
    let mut counts = vec![param_count(&widths)];
    loop {
        let mut next = widths.clone();
        let mut ok = true;
        for k in 0..next.len().saturating_sub(1) {
            let remove = (fraction * next[k] as f64).ceil() as usize;
            if remove >= next[k] {
                ok = false;
                break;
            }
            next[k] -= remove;
        }
        if !ok || next == widths {
            break;
        }
        widths = next;
        counts.push(param_count(&widths));
    }
    counts
}
