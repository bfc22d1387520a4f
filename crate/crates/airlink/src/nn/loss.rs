//! Classification losses and exact gradients.
//!
//! Two losses are supported: plain softmax cross-entropy, and a distillation
//! loss combining a temperature-softened teacher term with the hard-label
//! term,
//!
//! ```text
//! L = -t^2 * sum_i  q_i * ln p_i  -  ln p_label,
//! q = softmax(teacher_logits / t),   p = softmax(student_logits).
//! ```
//!
//! The student's probabilities `p` enter both terms unsoftened. Batch loss is
//! the mean of per-sample losses, and gradients match that convention.

use crate::error::{Error, Result};
use crate::nn::network::{Gradients, Matrix, Network};

#[derive(Debug, Clone, Copy)]
pub enum LossSpec<'a> {
    CrossEntropy,
    /// Distillation against fixed teacher logits with temperature `t`.
    Distillation {
        teacher_logits: &'a Matrix,
        temperature: f64,
    },
}

/// Numerically stable softmax of one logit row.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

fn validate_inputs(batch: &Matrix, labels: &[usize], net: &Network) -> Result<()> {
    if batch.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} samples but {} labels",
            batch.rows(),
            labels.len()
        )));
    }
    if batch.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value in batch".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= net.output_dim()) {
        return Err(Error::Shape(format!(
            "label {bad} out of range for {} classes",
            net.output_dim()
        )));
    }
    Ok(())
}

fn validate_spec(spec: &LossSpec, batch: &Matrix, classes: usize) -> Result<()> {
    if let LossSpec::Distillation {
        teacher_logits,
        temperature,
    } = spec
    {
        if teacher_logits.rows() != batch.rows() || teacher_logits.cols() != classes {
            return Err(Error::Shape(format!(
                "teacher logits {}x{} do not match batch {} x {} classes",
                teacher_logits.rows(),
                teacher_logits.cols(),
                batch.rows(),
                classes
            )));
        }
        if teacher_logits.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite teacher logits".into()));
        }
        if *temperature <= 0.0 {
            return Err(Error::Config("temperature must be positive".into()));
        }
    }
    Ok(())
}

/// Per-sample loss values given precomputed logits.
fn sample_losses(logits: &Matrix, labels: &[usize], spec: &LossSpec) -> Vec<f64> {
    let mut out = Vec::with_capacity(logits.rows());
    for s in 0..logits.rows() {
        let p = softmax(logits.row(s));
        let hard = -p[labels[s]].max(f64::MIN_POSITIVE).ln();
        let loss = match spec {
            LossSpec::CrossEntropy => hard,
            LossSpec::Distillation {
                teacher_logits,
                temperature,
            } => {
                let t = *temperature;
                let scaled: Vec<f64> =
                    teacher_logits.row(s).iter().map(|&z| z / t).collect();
                let q = softmax(&scaled);
                let soft: f64 = q
                    .iter()
                    .zip(&p)
                    .map(|(&qi, &pi)| qi * pi.max(f64::MIN_POSITIVE).ln())
                    .sum();
                -t * t * soft + hard
            }
        };
        out.push(loss);
    }
    out
}

/// Mean loss over the batch without computing gradients.
pub fn loss_only(
    net: &Network,
    batch: &Matrix,
    labels: &[usize],
    spec: &LossSpec,
) -> Result<f64> {
    validate_inputs(batch, labels, net)?;
    validate_spec(spec, batch, net.output_dim())?;
    let logits = net.forward(batch)?;
    let losses = sample_losses(&logits, labels, spec);
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Per-sample losses (no reduction); used by the loss-based sensitivity
/// metric which sums squared per-sample differences.
pub fn per_sample_losses(
    net: &Network,
    batch: &Matrix,
    labels: &[usize],
    spec: &LossSpec,
) -> Result<Vec<f64>> {
    validate_inputs(batch, labels, net)?;
    validate_spec(spec, batch, net.output_dim())?;
    let logits = net.forward(batch)?;
    Ok(sample_losses(&logits, labels, spec))
}

/// Mean batch loss and exact gradients for the selected loss.
pub fn loss_and_grads(
    net: &Network,
    batch: &Matrix,
    labels: &[usize],
    spec: &LossSpec,
) -> Result<(f64, Gradients)> {
    validate_inputs(batch, labels, net)?;
    validate_spec(spec, batch, net.output_dim())?;

    let trace = net.forward_trace(batch)?;
    let logits = trace.logits();
    let n = batch.rows();
    let classes = net.output_dim();

    let losses = sample_losses(logits, labels, spec);
    let loss = losses.iter().sum::<f64>() / n as f64;

    // dL/dlogits. Cross-entropy: (p - y)/n. Distillation adds t^2 (p - q)/n.
    let mut delta = Matrix::zeros(n, classes);
    for s in 0..n {
        let p = softmax(logits.row(s));
        let row = delta.row_mut(s);
        match spec {
            LossSpec::CrossEntropy => {
                for (j, r) in row.iter_mut().enumerate() {
                    *r = p[j];
                }
                row[labels[s]] -= 1.0;
            }
            LossSpec::Distillation {
                teacher_logits,
                temperature,
            } => {
                let t = *temperature;
                let scaled: Vec<f64> =
                    teacher_logits.row(s).iter().map(|&z| z / t).collect();
                let q = softmax(&scaled);
                for (j, r) in row.iter_mut().enumerate() {
                    *r = t * t * (p[j] - q[j]) + p[j];
                }
                row[labels[s]] -= 1.0;
            }
        }
        for r in delta.row_mut(s) {
            *r /= n as f64;
        }
    }

    let mut grads = Gradients::zeros_like(net);
    // Walk layers output-to-input accumulating dW = delta^T a_prev.
    let mut delta_cur = delta;
    for k in (0..net.layer_count()).rev() {
        let prev_act: &Matrix = if k == 0 { &trace.input } else { &trace.post[k - 1] };
        let lg = &mut grads.layers[k];
        for s in 0..n {
            let d = delta_cur.row(s);
            let a = prev_act.row(s);
            for (j, &dj) in d.iter().enumerate() {
                if dj == 0.0 {
                    continue;
                }
                let wrow = lg.d_weights.row_mut(j);
                for (wi, &ai) in wrow.iter_mut().zip(a) {
                    *wi += dj * ai;
                }
                lg.d_bias[j] += dj;
            }
        }
        if k > 0 {
            // delta_prev = (delta_cur W_k) ⊙ act'(z_{k-1})
            let below = &net.layers()[k];
            let mut next = Matrix::zeros(n, below.in_dim());
            for s in 0..n {
                let d = delta_cur.row(s);
                let out = next.row_mut(s);
                for (j, &dj) in d.iter().enumerate() {
                    if dj == 0.0 {
                        continue;
                    }
                    let wrow = below.weights.row(j);
                    for (oi, &wji) in out.iter_mut().zip(wrow) {
                        *oi += dj * wji;
                    }
                }
                let z = trace.pre[k - 1].row(s);
                let act = net.layers()[k - 1].activation;
                for (oi, &zi) in next.row_mut(s).iter_mut().zip(z) {
                    *oi *= act.derivative(zi);
                }
            }
            delta_cur = next;
        }
    }

    if !loss.is_finite() {
        return Err(Error::Numeric("loss is not finite".into()));
    }
    Ok((loss, grads))
}

/// Central finite-difference gradients of the batch loss; the independent
/// oracle used by the gradient-correctness tests. Only touches the forward
/// path.
pub fn finite_difference_gradients(
    net: &Network,
    batch: &Matrix,
    labels: &[usize],
    spec: &LossSpec,
    h: f64,
) -> Result<Vec<f64>> {
    let mut probe = net.clone();
    let base = probe.flatten_params();
    let mut grads = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut params = base.clone();
        params[i] = base[i] + h;
        probe.assign_params(&params)?;
        let plus = loss_only(&probe, batch, labels, spec)?;
        params[i] = base[i] - h;
        probe.assign_params(&params)?;
        let minus = loss_only(&probe, batch, labels, spec)?;
        grads.push((plus - minus) / (2.0 * h));
    }
    Ok(grads)
}

/// True when every analytic/finite-difference pair agrees to `rel_tol`
/// relative error, with an absolute floor of 1e-7 below which agreement is
/// assumed (finite differences cannot certify smaller values).
pub fn gradients_agree(analytic: &[f64], numeric: &[f64], rel_tol: f64) -> bool {
    analytic.iter().zip(numeric).all(|(&a, &f)| {
        let diff = (a - f).abs();
        diff <= rel_tol * a.abs().max(f.abs()) || diff <= 1e-7
    })
}
