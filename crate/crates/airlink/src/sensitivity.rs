//! Per-layer sensitivity estimation and the unequal-error-protection
//! bandwidth allocator.
//!
//! Two sensitivity metrics are offered: the summed squared change in
//! per-sample loss when one layer is perturbed with Gaussian noise, and the
//! top Hessian eigenvalue of the layer estimated by Von Mises (power)
//! iteration with Hessian-vector products taken as central finite
//! differences of the analytic gradient. The allocator normalizes each
//! sensitivity by the layer's energy and greedily expands the
//! best-normalized layer until the next increment would exceed the
//! bandwidth budget.

use serde::{Deserialize, Serialize};

use crate::codec::{ExpansionMode, ExpansionPlan};
use crate::error::{Error, Result};
use crate::nn::{loss_and_grads, per_sample_losses, Dataset, LossSpec, Network};
use crate::rng::Rng;

/// Which metric produced a set of layer sensitivities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityMetric {
    LossBased,
    Hessian,
}

/// Per-layer sensitivity values.
#[derive(Debug, Clone)]
pub struct LayerSensitivity {
    pub metric: SensitivityMetric,
    pub values: Vec<f64>,
}

/// Result of one power-iteration run.
#[derive(Debug, Clone, Copy)]
pub struct EigenEstimate {
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub const DEFAULT_EIGEN_EPSILON: f64 = 1e-6;
pub const DEFAULT_EIGEN_MAX_ITER: usize = 200;

/// Finite-difference step for Hessian-vector products (v is unit length).
const HVP_STEP: f64 = 1e-4;

/// Loss-based sensitivity with a caller-supplied per-sample loss. Averages
/// over `trials` of `sum_j (l(w, I_j) - l(w_perturbed, I_j))^2`, where only
/// layer `layer` is perturbed with Gaussian noise of std `noise_std`.
pub fn loss_sensitivity_with<F>(
    net: &Network,
    layer: usize,
    noise_std: f64,
    trials: usize,
    seed: u64,
    losses: F,
) -> Result<f64>
where
    F: Fn(&Network) -> Result<Vec<f64>>,
{
    if layer >= net.layer_count() {
        return Err(Error::Shape(format!(
            "layer {layer} out of range ({} layers)",
            net.layer_count()
        )));
    }
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let clean = losses(net)?;
    let mut total = 0.0;
    for trial in 0..trials {
        let mut rng = Rng::new(seed)
            .split(0x5e15)
            .split(layer as u64)
            .split(trial as u64);
        let mut perturbed = net.clone();
        {
            let l = &mut perturbed.layers_mut()[layer];
            for w in l.weights.as_mut_slice() {
                *w += rng.gaussian(0.0, noise_std);
            }
            for b in &mut l.bias {
                *b += rng.gaussian(0.0, noise_std);
            }
        }
        let noisy = losses(&perturbed)?;
        total += clean
            .iter()
            .zip(&noisy)
            .map(|(c, n)| (c - n) * (c - n))
            .sum::<f64>();
    }
    Ok(total / trials as f64)
}

/// Loss-based sensitivity of one layer under cross-entropy.
pub fn loss_sensitivity(
    net: &Network,
    data: &Dataset,
    noise_std: f64,
    layer: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    loss_sensitivity_with(net, layer, noise_std, trials, seed, |n| {
        per_sample_losses(n, data.features(), data.labels(), &LossSpec::CrossEntropy)
    })
}

/// Von Mises iteration for the top (largest-magnitude) eigenvalue of the
/// Hessian implied by a gradient oracle. `grad_at` evaluates the analytic
/// gradient at an arbitrary point; Hessian-vector products are central
/// finite differences of it around `w0`. The convergence test tolerates the
/// eigenvector's sign ambiguity. Returns the last Rayleigh quotient with a
/// `converged` flag; non-convergence is not an error.
pub fn hessian_power_iteration<F>(
    w0: &[f64],
    grad_at: F,
    epsilon: f64,
    max_iter: usize,
    seed: u64,
) -> Result<EigenEstimate>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let dim = w0.len();
    if dim == 0 {
        return Err(Error::Empty("cannot probe a zero-dimensional layer".into()));
    }
    let mut rng = Rng::new(seed).split(0xe16e);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
    normalize(&mut v)?;

    let hvp = |v: &[f64]| -> Result<Vec<f64>> {
        let plus: Vec<f64> = w0.iter().zip(v).map(|(w, vi)| w + HVP_STEP * vi).collect();
        let minus: Vec<f64> = w0.iter().zip(v).map(|(w, vi)| w - HVP_STEP * vi).collect();
        let gp = grad_at(&plus)?;
        let gm = grad_at(&minus)?;
        Ok(gp
            .iter()
            .zip(&gm)
            .map(|(p, m)| (p - m) / (2.0 * HVP_STEP))
            .collect())
    };

    let mut lambda = 0.0;
    for iter in 1..=max_iter {
        let hv = hvp(&v)?;
        lambda = v.iter().zip(&hv).map(|(a, b)| a * b).sum::<f64>();
        let norm = hv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-300 {
            // Hessian annihilates v; the associated eigenvalue is zero.
            return Ok(EigenEstimate {
                lambda: 0.0,
                converged: true,
                iterations: iter,
            });
        }
        let v_prev = v.clone();
        for (vi, h) in v.iter_mut().zip(&hv) {
            *vi = h / norm;
        }
        // |v - v_prev| < eps elementwise, up to the sign flip of the
        // eigenvector (negative eigenvalues alternate sign each step).
        let diff_plus = v
            .iter()
            .zip(&v_prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let diff_minus = v
            .iter()
            .zip(&v_prev)
            .map(|(a, b)| (a + b).abs())
            .fold(0.0f64, f64::max);
        if diff_plus.min(diff_minus) < epsilon {
            return Ok(EigenEstimate {
                lambda,
                converged: true,
                iterations: iter,
            });
        }
    }
    Ok(EigenEstimate {
        lambda,
        converged: false,
        iterations: max_iter,
    })
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Numeric("zero probe vector".into()));
    }
    for x in v {
        *x /= norm;
    }
    Ok(())
}

/// Top Hessian eigenvalue of one layer's parameters under the summed
/// cross-entropy loss over `data`.
pub fn hessian_top_eigenvalue(
    net: &Network,
    data: &Dataset,
    layer: usize,
    epsilon: f64,
    max_iter: usize,
    seed: u64,
) -> Result<EigenEstimate> {
    if layer >= net.layer_count() {
        return Err(Error::Shape(format!(
            "layer {layer} out of range ({} layers)",
            net.layer_count()
        )));
    }
    let n = data.len() as f64;
    let w0 = layer_params(net, layer);
    let grad_at = |w: &[f64]| -> Result<Vec<f64>> {
        let mut probe = net.clone();
        set_layer_params(&mut probe, layer, w);
        let (_, grads) = loss_and_grads(
            &probe,
            data.features(),
            data.labels(),
            &LossSpec::CrossEntropy,
        )?;
        // loss_and_grads averages over the batch; Algorithm 1 sums over the
        // dataset.
        let lg = &grads.layers[layer];
        let mut flat = Vec::with_capacity(w.len());
        flat.extend(lg.d_weights.as_slice().iter().map(|g| g * n));
        flat.extend(lg.d_bias.iter().map(|g| g * n));
        Ok(flat)
    };
    hessian_power_iteration(&w0, grad_at, epsilon, max_iter, seed)
}

fn layer_params(net: &Network, layer: usize) -> Vec<f64> {
    let l = &net.layers()[layer];
    let mut out = Vec::with_capacity(l.param_count());
    out.extend_from_slice(l.weights.as_slice());
    out.extend_from_slice(&l.bias);
    out
}

fn set_layer_params(net: &mut Network, layer: usize, flat: &[f64]) {
    let l = &mut net.layers_mut()[layer];
    let nw = l.weights.as_slice().len();
    l.weights.as_mut_slice().copy_from_slice(&flat[..nw]);
    l.bias.copy_from_slice(&flat[nw..]);
}

/// Greedy unequal bandwidth expansion. Starting from factor 1 everywhere,
/// repeatedly picks the layer maximizing `s_i / (r_i * energy_i)` (ties to
/// the lowest index) and increments its factor (+1 in repeat mode, x2 in SK
/// mode). The loop stops the first time the picked layer's increment would
/// exceed the budget, so the pick sequence is independent of the budget and
/// allocations grow monotonically with it.
pub fn allocate_expansion(
    layer_sizes: &[usize],
    sensitivities: &[f64],
    layer_energies: &[f64],
    budget: usize,
    mode: ExpansionMode,
) -> Result<ExpansionPlan> {
    let n = layer_sizes.len();
    if n == 0 {
        return Err(Error::Empty("no layers to allocate".into()));
    }
    if sensitivities.len() != n || layer_energies.len() != n {
        return Err(Error::Shape(
            "sizes, sensitivities, and energies must align".into(),
        ));
    }
    for &e in layer_energies {
        if e.is_nan() || e <= 0.0 {
            return Err(Error::Config("layer energies must be positive".into()));
        }
    }
    for &s in sensitivities {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::Config(
                "sensitivities must be finite and non-negative".into(),
            ));
        }
    }
    let base: usize = layer_sizes.iter().sum();
    if base > budget {
        return Err(Error::Config(format!(
            "budget {budget} below parameter count {base}; prune the network first"
        )));
    }

    let mut factors = vec![1usize; n];
    let mut used = base;
    loop {
        let mut best: Option<usize> = None;
        let mut best_score = f64::NEG_INFINITY;
        for i in 0..n {
            let score = sensitivities[i] / (factors[i] as f64 * layer_energies[i]);
            if score > best_score {
                best_score = score;
                best = Some(i);
            }
        }
        let i = best.expect("non-empty layers");
        let extra = match mode {
            ExpansionMode::Repeat => layer_sizes[i],
            ExpansionMode::Sk => factors[i] * layer_sizes[i],
        };
        if used + extra > budget {
            break;
        }
        factors[i] = match mode {
            ExpansionMode::Repeat => factors[i] + 1,
            ExpansionMode::Sk => factors[i] * 2,
        };
        used += extra;
    }
    Ok(ExpansionPlan { mode, factors })
}
