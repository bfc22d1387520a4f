//! Training strategies for delivery over noisy channels, and end-to-end
//! channel evaluation.
//!
//! Noise injection perturbs a copy of the weights with the same noise the
//! channel would impose (std `sqrt(sigma^2/2)/g` per weight, scaled by
//! `1/sqrt(r_i)` for layers expanded by a plan), computes the loss and
//! gradients through the noisy copy, and applies the update to the clean
//! weights. Variable-SNR training cycles min / max / uniform-random SNR
//! ("sandwich rule"); interpolation training keeps two boundary networks
//! and trains their convex combinations.
//!
//! Every routine derives independent RNG streams for shuffling, noise, and
//! SNR sampling from the config seed, so runs are bit-reproducible and a
//! degenerate SNR range collapses exactly onto fixed-SNR training.

use rayon::prelude::*;

use crate::channel::{equalize, snr_to_noise_variance, transmit, ChannelSpec, NormalizedSignal};
use crate::codec::{decode_network, encode_network, ExpansionPlan, SpiralParams};
use crate::error::{Error, Result};
use crate::nn::{
    accuracy, loss_and_grads, prune_structured, prune_trajectory, sgd_step, Dataset, LossSpec,
    Matrix, Network, OptState,
};
use crate::rng::Rng;

/// SNR target during training: one value or a sandwich-sampled range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrTarget {
    Fixed(f64),
    Range { min_db: f64, max_db: f64 },
}

/// Distillation settings: a frozen teacher and softmax temperature.
#[derive(Debug, Clone)]
pub struct KdConfig {
    pub teacher: Network,
    pub temperature: f64,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub snr: SnrTarget,
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    /// `(start_epoch, learning_rate)` pairs, sorted by epoch.
    pub lr_schedule: Vec<(usize, f64)>,
    pub noise_injection: bool,
    pub kd: Option<KdConfig>,
    pub power: f64,
    /// Expansion plan active during injection (noise scaled by 1/r_i).
    pub plan: Option<ExpansionPlan>,
    pub spiral: SpiralParams,
    pub seed: u64,
}

impl TrainConfig {
    /// Desk-scale defaults: two-stage learning-rate drop, momentum 0.9,
    /// injection at 5 dB.
    pub fn desk(seed: u64) -> Self {
        TrainConfig {
            snr: SnrTarget::Fixed(5.0),
            epochs: 600,
            batch_size: 32,
            momentum: 0.9,
            lr_schedule: vec![(0, 0.01), (300, 0.001)],
            noise_injection: true,
            kd: None,
            power: 1.0,
            plan: None,
            spiral: SpiralParams::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.lr_schedule.is_empty() {
            return Err(Error::Config("learning-rate schedule is empty".into()));
        }
        if self.lr_schedule.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config(
                "learning-rate schedule epochs must increase".into(),
            ));
        }
        if let Some(kd) = &self.kd {
            if kd.temperature <= 0.0 {
                return Err(Error::Config("temperature must be positive".into()));
            }
        }
        if let SnrTarget::Range { min_db, max_db } = self.snr {
            if min_db > max_db {
                return Err(Error::Config("snr range has min > max".into()));
            }
        }
        Ok(())
    }

    fn lr_at(&self, epoch: usize) -> f64 {
        let mut lr = self.lr_schedule[0].1;
        for &(start, rate) in &self.lr_schedule {
            if epoch >= start {
                lr = rate;
            }
        }
        lr
    }
}

/// Per-epoch training statistics.
#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub clean_acc: f64,
    pub noisy_acc: f64,
}

/// Training log: epoch rows plus the per-iteration SNR schedule.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
    pub iteration_snrs: Vec<f64>,
}

impl TrainLog {
    /// CSV rows `epoch,loss,clean_acc,noisy_acc`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,clean_acc,noisy_acc\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6}\n",
                e.epoch, e.loss, e.clean_acc, e.noisy_acc
            ));
        }
        out
    }
}

/// Per-weight noise std the channel would impose on this network at the
/// given SNR: `sqrt(sigma^2/2) / g`, with the gain taken from the actual
/// encoded stream (plan-aware).
pub fn channel_equivalent_noise_std(
    net: &Network,
    snr_db: f64,
    power: f64,
    plan: Option<&ExpansionPlan>,
    spiral: &SpiralParams,
) -> Result<f64> {
    let sigma_sq = snr_to_noise_variance(snr_db);
    if sigma_sq == 0.0 {
        return Ok(0.0);
    }
    let direct;
    let plan = match plan {
        Some(p) => p,
        None => {
            direct = ExpansionPlan::direct(net.layer_count());
            &direct
        }
    };
    let stream = encode_network(net, plan, spiral, power)?;
    Ok((sigma_sq / 2.0).sqrt() / stream.gain)
}

/// Draws a noisy copy of the network with channel-equivalent per-weight
/// noise. With an expansion plan, layer `i`'s injected variance shrinks by
/// `1/r_i`. An infinite SNR returns the network unchanged without touching
/// the RNG.
pub fn inject_noise(
    net: &Network,
    snr_db: f64,
    power: f64,
    plan: Option<&ExpansionPlan>,
    spiral: &SpiralParams,
    rng: &mut Rng,
) -> Result<Network> {
    let sigma_sq = snr_to_noise_variance(snr_db);
    if sigma_sq == 0.0 {
        return Ok(net.clone());
    }
    let direct;
    let plan = match plan {
        Some(p) => {
            p.validate()?;
            if p.factors.len() != net.layer_count() {
                return Err(Error::Shape("plan/network layer count mismatch".into()));
            }
            p
        }
        None => {
            direct = ExpansionPlan::direct(net.layer_count());
            &direct
        }
    };
    let gain = encode_network(net, plan, spiral, power)?.gain;
    let base_std = (sigma_sq / 2.0).sqrt() / gain;
    let mut noisy = net.clone();
    for (layer, &r) in noisy.layers_mut().iter_mut().zip(&plan.factors) {
        let std = base_std / (r as f64).sqrt();
        for w in layer.weights.as_mut_slice() {
            *w += rng.gaussian(0.0, std);
        }
        for b in &mut layer.bias {
            *b += rng.gaussian(0.0, std);
        }
    }
    Ok(noisy)
}

/// SNR used at global iteration `iteration` under the sandwich rule:
/// min, max, then uniform in between, repeating.
fn sandwich_snr(target: SnrTarget, iteration: usize, snr_rng: &mut Rng) -> f64 {
    match target {
        SnrTarget::Fixed(snr) => snr,
        SnrTarget::Range { min_db, max_db } => match iteration % 3 {
            0 => min_db,
            1 => max_db,
            _ => snr_rng.uniform(min_db, max_db),
        },
    }
}

fn batch_of(data: &Dataset, indices: &[usize]) -> (Matrix, Vec<usize>) {
    let sub = data.subset(indices);
    (sub.features().clone(), sub.labels().to_vec())
}

/// One gradient evaluation at (possibly noisy) weights; the additive noise
/// passes gradients straight through to the clean weights.
fn noisy_gradient_step(
    net: &mut Network,
    opt: &mut OptState,
    cfg: &TrainConfig,
    batch: &Matrix,
    labels: &[usize],
    snr_db: f64,
    noise_rng: &mut Rng,
) -> Result<f64> {
    let eval_net = if cfg.noise_injection {
        inject_noise(net, snr_db, cfg.power, cfg.plan.as_ref(), &cfg.spiral, noise_rng)?
    } else {
        net.clone()
    };
    let teacher_logits = match &cfg.kd {
        Some(kd) => Some(kd.teacher.forward(batch)?),
        None => None,
    };
    let spec = match (&cfg.kd, &teacher_logits) {
        (Some(kd), Some(logits)) => LossSpec::Distillation {
            teacher_logits: logits,
            temperature: kd.temperature,
        },
        _ => LossSpec::CrossEntropy,
    };
    let (loss, grads) = loss_and_grads(&eval_net, batch, labels, &spec)?;
    sgd_step(net, &grads, opt)?;
    Ok(loss)
}

/// Noise-injection training. Per batch: draw a noisy copy of the current
/// weights, backpropagate through it, and update the clean weights.
/// Bit-deterministic under the config seed.
pub fn train_noise_injection(
    net: &Network,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(Network, TrainLog)> {
    cfg.validate()?;
    let mut net = net.clone();
    let mut opt = OptState::new(&net, cfg.lr_at(0), cfg.momentum)?;
    let root = Rng::new(cfg.seed);
    let mut shuffle_rng = root.split(1);
    let mut noise_rng = root.split(2);
    let mut snr_rng = root.split(3);
    let mut eval_rng = root.split(4);

    let mut log = TrainLog::default();
    let mut iteration = 0usize;
    for epoch in 0..cfg.epochs {
        opt.learning_rate = cfg.lr_at(epoch);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for indices in data.batch_indices(cfg.batch_size, &mut shuffle_rng) {
            let (batch, labels) = batch_of(data, &indices);
            let snr = sandwich_snr(cfg.snr, iteration, &mut snr_rng);
            log.iteration_snrs.push(snr);
            epoch_loss += noisy_gradient_step(
                &mut net,
                &mut opt,
                cfg,
                &batch,
                &labels,
                snr,
                &mut noise_rng,
            )?;
            batches += 1;
            iteration += 1;
        }
        let clean_acc = accuracy(&net, data)?;
        let noisy_acc = if cfg.noise_injection {
            let snapshot_snr = *log.iteration_snrs.last().unwrap();
            let noisy = inject_noise(
                &net,
                snapshot_snr,
                cfg.power,
                cfg.plan.as_ref(),
                &cfg.spiral,
                &mut eval_rng,
            )?;
            accuracy(&noisy, data)?
        } else {
            clean_acc
        };
        log.epochs.push(EpochStats {
            epoch,
            loss: epoch_loss / batches.max(1) as f64,
            clean_acc,
            noisy_acc,
        });
    }
    Ok((net, log))
}

/// Sandwich-rule variable-SNR training over `[snr_min_db, snr_max_db]`.
pub fn train_variable_snr(
    net: &Network,
    data: &Dataset,
    snr_min_db: f64,
    snr_max_db: f64,
    cfg: &TrainConfig,
) -> Result<(Network, TrainLog)> {
    let mut cfg = cfg.clone();
    cfg.snr = SnrTarget::Range {
        min_db: snr_min_db,
        max_db: snr_max_db,
    };
    train_noise_injection(net, data, &cfg)
}

/// Pruning modes: `Joint` fine-tunes with noise injection after every prune
/// step; `Separate` fine-tunes plainly (injection, if wanted, happens in a
/// later retraining pass).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneMode {
    Joint,
    Separate,
}

#[derive(Debug, Clone)]
pub struct PruneSchedule {
    /// Fraction of remaining neurons removed per iteration.
    pub fraction: f64,
    pub target_param_count: usize,
    pub mode: PruneMode,
}

/// Repeated prune / fine-tune until the parameter count is at or below the
/// target. Fails before touching the network when the target cannot be
/// reached. Fine-tune stages derive their seeds from `cfg.seed` and the
/// stage index.
pub fn prune_finetune(
    net: &Network,
    data: &Dataset,
    cfg: &TrainConfig,
    sched: &PruneSchedule,
) -> Result<(Network, Vec<TrainLog>)> {
    if !(0.0..1.0).contains(&sched.fraction) || sched.fraction == 0.0 {
        return Err(Error::Config("prune fraction must lie in (0, 1)".into()));
    }
    if net.param_count() <= sched.target_param_count {
        return Ok((net.clone(), Vec::new()));
    }
    let reachable = prune_trajectory(net, sched.fraction);
    if *reachable.last().unwrap() > sched.target_param_count {
        return Err(Error::Config(format!(
            "target {} parameters unreachable; pruning bottoms out at {}",
            sched.target_param_count,
            reachable.last().unwrap()
        )));
    }

    let mut current = net.clone();
    let mut logs = Vec::new();
    let mut stage = 0u64;
    while current.param_count() > sched.target_param_count {
        current = prune_structured(&current, sched.fraction)?;
        let mut stage_cfg = cfg.clone();
        stage_cfg.noise_injection = match sched.mode {
            PruneMode::Joint => cfg.noise_injection,
            PruneMode::Separate => false,
        };
        stage_cfg.seed = Rng::new(cfg.seed).split(0xf17e).split(stage).next_u64();
        let (tuned, log) = train_noise_injection(&current, data, &stage_cfg)?;
        current = tuned;
        logs.push(log);
        stage += 1;
    }
    Ok((current, logs))
}

/// Two boundary networks trained at the SNR extremes; intermediate SNRs use
/// their convex combination.
#[derive(Debug, Clone)]
pub struct InterpolationPair {
    pub w_min: Network,
    pub w_max: Network,
    pub snr_min_db: f64,
    pub snr_max_db: f64,
}

/// Interpolation weights for a test SNR: `alpha1` scales the low-SNR
/// boundary. Returns whether the SNR had to be clamped into range.
pub fn interpolation_weights(pair: &InterpolationPair, snr_db: f64) -> (f64, f64, bool) {
    let clamped = snr_db < pair.snr_min_db || snr_db > pair.snr_max_db;
    let snr = snr_db.clamp(pair.snr_min_db, pair.snr_max_db);
    let alpha1 = (pair.snr_max_db - snr).abs() / (pair.snr_max_db - pair.snr_min_db).abs();
    (alpha1, 1.0 - alpha1, clamped)
}

/// Elementwise convex combination of the boundary networks. Endpoints
/// return the boundary bit-for-bit.
pub fn interpolate(pair: &InterpolationPair, snr_db: f64) -> Result<Network> {
    if pair.w_min.arch_id() != pair.w_max.arch_id() {
        return Err(Error::Shape("boundary architectures differ".into()));
    }
    let (alpha1, alpha2, _) = interpolation_weights(pair, snr_db);
    if alpha1 == 1.0 {
        return Ok(pair.w_min.clone());
    }
    if alpha1 == 0.0 {
        return Ok(pair.w_max.clone());
    }
    let a = pair.w_min.flatten_params();
    let b = pair.w_max.flatten_params();
    let mixed: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| alpha1 * x + alpha2 * y)
        .collect();
    let mut out = pair.w_min.clone();
    out.assign_params(&mixed)?;
    Ok(out)
}

/// Interpolation-ensemble training. Both boundaries start from `init`; the
/// three-iteration cycle updates w_min at SNR_min, w_max at SNR_max, then
/// forms the interpolated network at a random SNR and routes its gradient
/// back to the boundaries scaled by the interpolation weights.
pub fn train_interpolation(
    init: &Network,
    data: &Dataset,
    snr_min_db: f64,
    snr_max_db: f64,
    cfg: &TrainConfig,
) -> Result<(InterpolationPair, TrainLog)> {
    cfg.validate()?;
    if snr_min_db >= snr_max_db {
        return Err(Error::Config("need snr_min < snr_max".into()));
    }
    let mut pair = InterpolationPair {
        w_min: init.clone(),
        w_max: init.clone(),
        snr_min_db,
        snr_max_db,
    };
    let mut opt_min = OptState::new(&pair.w_min, cfg.lr_at(0), cfg.momentum)?;
    let mut opt_max = OptState::new(&pair.w_max, cfg.lr_at(0), cfg.momentum)?;
    let root = Rng::new(cfg.seed);
    let mut shuffle_rng = root.split(1);
    let mut noise_rng = root.split(2);
    let mut snr_rng = root.split(3);

    fn kd_spec<'a>(kd: &Option<KdConfig>, teacher_logits: &'a Option<Matrix>) -> LossSpec<'a> {
        match (kd, teacher_logits) {
            (Some(kd), Some(logits)) => LossSpec::Distillation {
                teacher_logits: logits,
                temperature: kd.temperature,
            },
            _ => LossSpec::CrossEntropy,
        }
    }

    let mut log = TrainLog::default();
    let mut iteration = 0usize;
    for epoch in 0..cfg.epochs {
        opt_min.learning_rate = cfg.lr_at(epoch);
        opt_max.learning_rate = cfg.lr_at(epoch);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for indices in data.batch_indices(cfg.batch_size, &mut shuffle_rng) {
            let (batch, labels) = batch_of(data, &indices);
            let teacher_logits = match &cfg.kd {
                Some(kd) => Some(kd.teacher.forward(&batch)?),
                None => None,
            };
            let loss = match iteration % 3 {
                0 => {
                    log.iteration_snrs.push(snr_min_db);
                    let eval = boundary_eval(&pair.w_min, snr_min_db, cfg, &mut noise_rng)?;
                    let (loss, grads) =
                        loss_and_grads(&eval, &batch, &labels, &kd_spec(&cfg.kd, &teacher_logits))?;
                    sgd_step(&mut pair.w_min, &grads, &mut opt_min)?;
                    loss
                }
                1 => {
                    log.iteration_snrs.push(snr_max_db);
                    let eval = boundary_eval(&pair.w_max, snr_max_db, cfg, &mut noise_rng)?;
                    let (loss, grads) =
                        loss_and_grads(&eval, &batch, &labels, &kd_spec(&cfg.kd, &teacher_logits))?;
                    sgd_step(&mut pair.w_max, &grads, &mut opt_max)?;
                    loss
                }
                _ => {
                    let snr = snr_rng.uniform(snr_min_db, snr_max_db);
                    log.iteration_snrs.push(snr);
                    let (alpha1, alpha2, _) = interpolation_weights(&pair, snr);
                    let interp = interpolate(&pair, snr)?;
                    let eval = boundary_eval(&interp, snr, cfg, &mut noise_rng)?;
                    let (loss, mut grads) =
                        loss_and_grads(&eval, &batch, &labels, &kd_spec(&cfg.kd, &teacher_logits))?;
                    // Chain rule through w = a1*w_min + a2*w_max.
                    let mut grads_max = grads.clone();
                    grads.scale(alpha1);
                    grads_max.scale(alpha2);
                    sgd_step(&mut pair.w_min, &grads, &mut opt_min)?;
                    sgd_step(&mut pair.w_max, &grads_max, &mut opt_max)?;
                    loss
                }
            };
            epoch_loss += loss;
            batches += 1;
            iteration += 1;
        }
        let clean_acc = accuracy(&interpolate(&pair, 0.5 * (snr_min_db + snr_max_db))?, data)?;
        log.epochs.push(EpochStats {
            epoch,
            loss: epoch_loss / batches.max(1) as f64,
            clean_acc,
            noisy_acc: clean_acc,
        });
    }
    Ok((pair, log))
}

fn boundary_eval(
    net: &Network,
    snr_db: f64,
    cfg: &TrainConfig,
    noise_rng: &mut Rng,
) -> Result<Network> {
    if cfg.noise_injection {
        inject_noise(net, snr_db, cfg.power, cfg.plan.as_ref(), &cfg.spiral, noise_rng)
    } else {
        Ok(net.clone())
    }
}

/// Mean and sample standard deviation of accuracy over channel trials.
#[derive(Debug, Clone)]
pub struct ChannelEval {
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub per_trial: Vec<f64>,
}

/// Full delivery chain per trial: encode, transmit, equalize (fading),
/// decode, score. Trials run in parallel with seeds derived from
/// `(seed, trial_index)` and reduce in index order.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_over_channel(
    net: &Network,
    data: &Dataset,
    chan: &ChannelSpec,
    plan: &ExpansionPlan,
    spiral: &SpiralParams,
    power: f64,
    trials: usize,
    seed: u64,
) -> Result<ChannelEval> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    chan.validate()?;
    let stream = encode_network(net, plan, spiral, power)?;
    let meta = stream.meta();
    let arch = net.arch_id();
    let sig = NormalizedSignal {
        dims: stream.dims.clone(),
        gain: stream.gain,
        power_budget: power,
    };
    let per_trial: Result<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = Rng::new(seed).split(0xc4a7).split(trial as u64);
            let (received, fades) = transmit(&sig, chan, &mut rng)?;
            let cleaned = match fades {
                Some(fades) => {
                    let eq = equalize(&received, &fades)?;
                    eq.dims[..stream.dims.len()].to_vec()
                }
                None => received,
            };
            let decoded = decode_network(&cleaned, &meta, &arch)?;
            accuracy(&decoded, data)
        })
        .collect();
    let per_trial = per_trial?;
    let mean = per_trial.iter().sum::<f64>() / trials as f64;
    let std = if trials > 1 {
        (per_trial.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (trials - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    Ok(ChannelEval {
        mean_accuracy: mean,
        std_accuracy: std,
        per_trial,
    })
}
