//! Idealized digital separation baseline: prune, quantize uniformly, and
//! deliver over a capacity-achieving channel code.
//!
//! The bit budget for `b` real dims at a given SNR is the Shannon capacity
//! of `b/2` complex symbols. A grid of (prune target, bits-per-weight)
//! combinations is searched for the best dequantized validation accuracy
//! whose payload fits the budget. Under fading without transmitter CSI the
//! sender commits to a fixed rate and the delivery fails (outage) whenever
//! the instantaneous capacity falls below it; with CSIT it adapts to the
//! instantaneous capacity, which upper-bounds any separation scheme. No
//! entropy coding is modeled, which is conservative in the baseline's
//! favor-free direction: payloads are counted exactly, capacity is granted
//! for free.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{accuracy, Dataset, Network};
use crate::pipeline::{prune_finetune, PruneMode, PruneSchedule, SnrTarget, TrainConfig};
use crate::rng::Rng;

/// Delivery scenario for the digital baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Static AWGN; budget is the channel capacity at the test SNR.
    Awgn,
    /// Rayleigh fading, CSI at receiver only: fixed transmit rate, outages
    /// scale the delivered accuracy.
    FadingOutage,
    /// CSI at transmitter and receiver: budget is the instantaneous
    /// capacity averaged over fades.
    FadingCsit,
}

#[derive(Debug, Clone)]
pub struct DigitalConfig {
    pub scenario: Scenario,
    /// Bits-per-weight candidates.
    pub bits_grid: Vec<u32>,
    /// Fractions of the parameter count kept by prune candidates; 1.0 keeps
    /// the network untouched.
    pub keep_ratios: Vec<f64>,
    /// Per-iteration prune fraction for the candidate ladder.
    pub prune_fraction: f64,
    /// Fine-tune settings after each prune step (plain training).
    pub finetune_epochs: usize,
    pub finetune_lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    /// Fixed transmit rate (bits per complex symbol) for the outage
    /// scenario; `None` derives the rate that fits the unpruned q=8 payload
    /// into the bandwidth.
    pub fixed_rate: Option<f64>,
    /// Fade draws for the CSIT capacity average.
    pub csit_fades: usize,
    pub sigma_h: f64,
    pub seed: u64,
}

impl Default for DigitalConfig {
    fn default() -> Self {
        DigitalConfig {
            scenario: Scenario::Awgn,
            bits_grid: vec![1, 2, 3, 4, 6, 8, 12, 16, 24],
            keep_ratios: vec![1.0, 0.75, 0.5, 0.25],
            prune_fraction: 0.2,
            finetune_epochs: 30,
            finetune_lr: 0.01,
            momentum: 0.9,
            batch_size: 32,
            fixed_rate: None,
            csit_fades: 10_000,
            sigma_h: 1.0,
            seed: 0,
        }
    }
}

/// Shannon bit budget for `b` real dims (`b/2` complex symbols) at the
/// given SNR: `floor((b/2) log2(1 + snr_linear))`. Saturates for an
/// infinite SNR.
pub fn bit_budget(b_real_dims: usize, snr_db: f64) -> u64 {
    if snr_db == f64::INFINITY {
        return u64::MAX;
    }
    let snr_linear = 10f64.powf(snr_db / 10.0);
    let bits = (b_real_dims as f64 / 2.0) * (1.0 + snr_linear).log2();
    if bits <= 0.0 {
        0
    } else if bits >= u64::MAX as f64 {
        u64::MAX
    } else {
        bits.floor() as u64
    }
}

/// One uniformly quantized layer: codes plus the range needed to restore
/// values.
#[derive(Debug, Clone)]
pub struct QuantizedLayer {
    pub min: f64,
    pub max: f64,
    pub bits: u32,
    pub codes: Vec<u32>,
}

/// Quantized network reconstructible to a [`Network`].
#[derive(Debug, Clone)]
pub struct QuantizedModel {
    pub arch: String,
    pub layers: Vec<QuantizedLayer>,
}

impl QuantizedModel {
    /// Exact payload: `sum d_i * q` plus a 64-bit range header per layer.
    pub fn payload_bits(&self) -> u64 {
        self.layers
            .iter()
            .map(|l| l.codes.len() as u64 * u64::from(l.bits) + 64)
            .sum()
    }
}

/// Payload of quantizing `net` at `bits` without building the codes.
pub fn payload_bits_for(net: &Network, bits: u32) -> u64 {
    net.layer_param_counts()
        .iter()
        .map(|&d| d as u64 * u64::from(bits) + 64)
        .sum()
}

/// Per-layer uniform quantization over `[min, max]` with `2^bits` levels.
pub fn quantize_uniform(net: &Network, bits: u32) -> Result<QuantizedModel> {
    if bits == 0 {
        return Err(Error::Config("need at least one bit per weight".into()));
    }
    let levels = (1u64 << bits) - 1;
    let mut layers = Vec::with_capacity(net.layer_count());
    for layer in net.layers() {
        let mut params = Vec::with_capacity(layer.param_count());
        params.extend_from_slice(layer.weights.as_slice());
        params.extend_from_slice(&layer.bias);
        let min = params.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = params.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        let codes = params
            .iter()
            .map(|&p| {
                if span == 0.0 {
                    0
                } else {
                    (((p - min) / span * levels as f64).round() as u64).min(levels) as u32
                }
            })
            .collect();
        layers.push(QuantizedLayer {
            min,
            max,
            bits,
            codes,
        });
    }
    Ok(QuantizedModel {
        arch: net.arch_id(),
        layers,
    })
}

/// Restores a network from quantized codes.
pub fn dequantize(model: &QuantizedModel) -> Result<Network> {
    let mut net = Network::from_arch_id(&model.arch)?;
    let counts = net.layer_param_counts();
    if counts.len() != model.layers.len() {
        return Err(Error::Shape("quantized layer count mismatch".into()));
    }
    let mut flat = Vec::with_capacity(counts.iter().sum());
    for (ql, &want) in model.layers.iter().zip(&counts) {
        if ql.codes.len() != want {
            return Err(Error::Shape("quantized code count mismatch".into()));
        }
        let levels = (1u64 << ql.bits) - 1;
        let span = ql.max - ql.min;
        for &c in &ql.codes {
            let v = if span == 0.0 || levels == 0 {
                ql.min
            } else {
                ql.min + span * f64::from(c) / levels as f64
            };
            flat.push(v);
        }
    }
    net.assign_params(&flat)?;
    Ok(net)
}

/// Probability that the instantaneous capacity of a Rayleigh fade falls
/// below `rate` bits per complex symbol:
/// `1 - exp(-sigma^2 (2^R - 1) / sigma_h^2)`.
pub fn outage_probability(rate: f64, snr_avg_db: f64, sigma_h: f64) -> f64 {
    let sigma_sq = crate::channel::snr_to_noise_variance(snr_avg_db);
    1.0 - (-sigma_sq * (2f64.powf(rate) - 1.0) / (sigma_h * sigma_h)).exp()
}

/// Outcome of the separation baseline at one operating point.
#[derive(Debug, Clone)]
pub struct SeparationEval {
    /// Delivered accuracy (outage-scaled in the outage scenario).
    pub accuracy: f64,
    /// Winning (keep_ratio, bits) combination, if any fits.
    pub chosen: Option<(f64, u32)>,
    /// Bit budget the payload had to fit.
    pub budget_bits: f64,
    /// Outage probability (outage scenario only).
    pub outage: Option<f64>,
}

fn csit_average_bits(b_real_dims: usize, snr_db: f64, cfg: &DigitalConfig) -> f64 {
    let sigma_sq = crate::channel::snr_to_noise_variance(snr_db);
    let mut rng = Rng::new(cfg.seed).split(0xc517);
    let scale = cfg.sigma_h / 2f64.sqrt();
    let mut total = 0.0;
    for _ in 0..cfg.csit_fades {
        let re = rng.gaussian(0.0, scale);
        let im = rng.gaussian(0.0, scale);
        let h_sq = re * re + im * im;
        let cap = if sigma_sq == 0.0 {
            f64::INFINITY
        } else {
            (1.0 + h_sq / sigma_sq).log2()
        };
        total += cap;
    }
    b_real_dims as f64 / 2.0 * total / cfg.csit_fades as f64
}

/// Builds the candidate prune ladder, fine-tuning each target plainly.
/// Unreachable targets are skipped.
fn candidate_models(
    net: &Network,
    data: &Dataset,
    cfg: &DigitalConfig,
) -> Result<Vec<(f64, Network)>> {
    let d = net.param_count();
    let mut out = Vec::new();
    for &ratio in &cfg.keep_ratios {
        if ratio >= 1.0 {
            out.push((1.0, net.clone()));
            continue;
        }
        if ratio <= 0.0 {
            continue;
        }
        let target = (ratio * d as f64).ceil() as usize;
        let train_cfg = TrainConfig {
            snr: SnrTarget::Fixed(f64::INFINITY),
            epochs: cfg.finetune_epochs,
            batch_size: cfg.batch_size,
            momentum: cfg.momentum,
            lr_schedule: vec![(0, cfg.finetune_lr)],
            noise_injection: false,
            kd: None,
            power: 1.0,
            plan: None,
            spiral: crate::codec::SpiralParams::default(),
            seed: Rng::new(cfg.seed).split(0xd161).next_u64(),
        };
        let sched = PruneSchedule {
            fraction: cfg.prune_fraction,
            target_param_count: target,
            mode: PruneMode::Separate,
        };
        match prune_finetune(net, data, &train_cfg, &sched) {
            Ok((model, _)) => out.push((ratio, model)),
            Err(Error::Config(_)) => continue, // target unreachable: skip
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Separation-baseline delivery: searches the (prune, bits) grid for the
/// best dequantized accuracy whose payload fits the scenario's bit budget.
/// Returns accuracy 0 when nothing fits.
pub fn evaluate_separation(
    net: &Network,
    data: &Dataset,
    b_real_dims: usize,
    snr_db: f64,
    cfg: &DigitalConfig,
) -> Result<SeparationEval> {
    if cfg.bits_grid.is_empty() || cfg.keep_ratios.is_empty() {
        return Err(Error::Config("empty search grid".into()));
    }
    let (budget_bits, rate, outage) = match cfg.scenario {
        Scenario::Awgn => (bit_budget(b_real_dims, snr_db) as f64, None, None),
        Scenario::FadingCsit => (csit_average_bits(b_real_dims, snr_db, cfg), None, None),
        Scenario::FadingOutage => {
            let rate = cfg
                .fixed_rate
                .unwrap_or_else(|| payload_bits_for(net, 8) as f64 / (b_real_dims as f64 / 2.0));
            let p = outage_probability(rate, snr_db, cfg.sigma_h);
            (
                rate * b_real_dims as f64 / 2.0,
                Some(rate),
                Some(p),
            )
        }
    };
    let _ = rate;

    let mut best: Option<(f64, (f64, u32))> = None;
    for (ratio, model) in candidate_models(net, data, cfg)? {
        for &bits in &cfg.bits_grid {
            if payload_bits_for(&model, bits) as f64 > budget_bits {
                continue;
            }
            let restored = dequantize(&quantize_uniform(&model, bits)?)?;
            let acc = accuracy(&restored, data)?;
            if best.is_none_or(|(b, _)| acc > b) {
                best = Some((acc, (ratio, bits)));
            }
        }
    }

    let (acc, chosen) = match best {
        Some((acc, combo)) => (acc, Some(combo)),
        None => (0.0, None),
    };
    let delivered = match outage {
        Some(p) => (1.0 - p) * acc,
        None => acc,
    };
    Ok(SeparationEval {
        accuracy: delivered,
        chosen,
        budget_bits,
        outage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_budget_examples() {
        assert_eq!(bit_budget(2, 0.0), 1);
        assert_eq!(bit_budget(2, 10.0), 3); // floor(log2(11)) = 3
        assert_eq!(bit_budget(2, -400.0), 0);
        assert_eq!(bit_budget(0, 10.0), 0);
    }

    #[test]
    fn bit_budget_is_monotone() {
        let mut prev = 0;
        for b in [2, 10, 100, 1000] {
            let bits = bit_budget(b, 5.0);
            assert!(bits >= prev);
            prev = bits;
        }
        let mut prev = 0;
        for snr in [-10.0, 0.0, 5.0, 20.0] {
            let bits = bit_budget(100, snr);
            assert!(bits >= prev);
            prev = bits;
        }
    }

    #[test]
    fn one_bit_quantizer_on_two_values() {
        let mut net = Network::from_arch_id("1:1i").unwrap();
        net.assign_params(&[-1.0, 1.0]).unwrap();
        let q = quantize_uniform(&net, 1).unwrap();
        assert_eq!(q.layers[0].codes, vec![0, 1]);
        let back = dequantize(&q).unwrap();
        assert_eq!(back.flatten_params(), vec![-1.0, 1.0]);
    }

    #[test]
    fn constant_layer_quantizes_exactly() {
        let mut net = Network::from_arch_id("1:2i").unwrap();
        net.assign_params(&[0.7, 0.7, 0.7, 0.7]).unwrap();
        let q = quantize_uniform(&net, 4).unwrap();
        assert!(q.layers[0].codes.iter().all(|&c| c == 0));
        let back = dequantize(&q).unwrap();
        assert_eq!(back.flatten_params(), vec![0.7; 4]);
    }

    #[test]
    fn high_bit_round_trip_is_near_lossless() {
        let net = Network::init(&[2, 16, 3], 9).unwrap();
        let back = dequantize(&quantize_uniform(&net, 24).unwrap()).unwrap();
        for ((a, b), layer_span) in back
            .flatten_params()
            .iter()
            .zip(net.flatten_params())
            .zip(net.flatten_params().iter().map(|_| 1.0))
        {
            let _ = layer_span;
            assert!((a - b).abs() < 2f64.powi(-20), "{a} vs {b}");
        }
    }

    #[test]
    fn payload_accounting_is_exact() {
        let net = Network::init(&[2, 4, 3], 1).unwrap();
        let q = quantize_uniform(&net, 8).unwrap();
        let d = net.param_count() as u64;
        assert_eq!(q.payload_bits(), d * 8 + 64 * 2);
        assert_eq!(q.payload_bits(), payload_bits_for(&net, 8));
    }

    #[test]
    fn outage_closed_form_values() {
        // R -> 0+ gives p -> 0.
        assert!(outage_probability(1e-9, 0.0, 1.0) < 1e-8);
        // R=1, 0 dB: 1 - exp(-1).
        let p = outage_probability(1.0, 0.0, 1.0);
        assert!((p - 0.63212).abs() < 1e-5, "{p}");
    }

    #[test]
    fn outage_matches_monte_carlo() {
        let mut rng = Rng::new(99);
        let n = 1_000_000;
        for &rate in &[0.5, 2.0] {
            for &snr in &[0.0, 10.0] {
                let sigma_sq = crate::channel::snr_to_noise_variance(snr);
                let mut outages = 0u64;
                for _ in 0..n {
                    let re = rng.gaussian(0.0, 1.0 / 2f64.sqrt());
                    let im = rng.gaussian(0.0, 1.0 / 2f64.sqrt());
                    let cap = (1.0 + (re * re + im * im) / sigma_sq).log2();
                    if cap < rate {
                        outages += 1;
                    }
                }
                let mc = outages as f64 / n as f64;
                let closed = outage_probability(rate, snr, 1.0);
                assert!(
                    (mc - closed).abs() < 0.01 * closed.max(0.01),
                    "rate {rate} snr {snr}: mc {mc} closed {closed}"
                );
            }
        }
    }

    #[test]
    fn generous_budget_recovers_clean_accuracy() {
        use crate::pipeline::{train_noise_injection, SnrTarget, TrainConfig};
        let data = Dataset::blobs(90, 3, 0.5, 8).unwrap();
        let init = Network::init(&[2, 16, 3], 33).unwrap();
        let mut tc = TrainConfig::desk(3);
        tc.epochs = 80;
        tc.lr_schedule = vec![(0, 0.02)];
        tc.noise_injection = false;
        tc.snr = SnrTarget::Fixed(f64::INFINITY);
        let (net, _) = train_noise_injection(&init, &data, &tc).unwrap();

        let cfg = DigitalConfig {
            finetune_epochs: 0,
            keep_ratios: vec![1.0],
            ..DigitalConfig::default()
        };
        // Enormous bandwidth: the lossless-ish combination fits.
        let eval = evaluate_separation(&net, &data, 1 << 20, 10.0, &cfg).unwrap();
        assert_eq!(eval.accuracy, accuracy(&net, &data).unwrap());
        assert!(eval.chosen.is_some());
    }

    #[test]
    fn certain_outage_delivers_zero() {
        let net = Network::init(&[2, 8, 3], 33).unwrap();
        let data = Dataset::blobs(30, 3, 0.5, 8).unwrap();
        let cfg = DigitalConfig {
            scenario: Scenario::FadingOutage,
            fixed_rate: Some(500.0), // essentially always in outage
            finetune_epochs: 0,
            ..DigitalConfig::default()
        };
        let eval = evaluate_separation(&net, &data, 4096, 0.0, &cfg).unwrap();
        assert!(eval.outage.unwrap() > 0.999999);
        assert!(eval.accuracy < 1e-6);
    }

    #[test]
    fn infeasible_budget_gives_zero_accuracy() {
        let net = Network::init(&[2, 8, 3], 33).unwrap();
        let data = Dataset::blobs(30, 3, 0.5, 8).unwrap();
        let cfg = DigitalConfig {
            finetune_epochs: 0,
            keep_ratios: vec![1.0],
            ..DigitalConfig::default()
        };
        // 2 real dims at -40 dB: budget 0 bits.
        let eval = evaluate_separation(&net, &data, 2, -40.0, &cfg).unwrap();
        assert_eq!(eval.accuracy, 0.0);
        assert!(eval.chosen.is_none());
    }
}
