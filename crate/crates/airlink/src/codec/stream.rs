//! Whole-network encoding: flatten parameters layer-major, expand each
//! layer per an [`ExpansionPlan`], and power-normalize the stream once.
//!
//! The layout (per-layer offset, raw parameter count, expansion factor,
//! decoder search range) plus the global gain form the side information a
//! receiver needs; it is assumed delivered error-free and its cost is not
//! charged against the bandwidth budget.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::channel::normalize_power;
use crate::codec::repeat::{repeat_decode, repeat_encode};
use crate::codec::spiral::{sk_decode_recursive, sk_encode_recursive, SpiralParams};
use crate::error::{Error, Result};
use crate::nn::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionMode {
    /// Integer repetition factors, decode by averaging.
    Repeat,
    /// Power-of-two spiral expansion factors (1, 2, 4, ...).
    Sk,
}

/// Per-layer expansion factors produced by the allocator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPlan {
    pub mode: ExpansionMode,
    pub factors: Vec<usize>,
}

impl ExpansionPlan {
    /// Direct mapping: every layer at factor 1.
    pub fn direct(layer_count: usize) -> Self {
        ExpansionPlan {
            mode: ExpansionMode::Repeat,
            factors: vec![1; layer_count],
        }
    }

    pub fn uniform(mode: ExpansionMode, layer_count: usize, factor: usize) -> Self {
        ExpansionPlan {
            mode,
            factors: vec![factor; layer_count],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.is_empty() {
            return Err(Error::Empty("expansion plan has no layers".into()));
        }
        for &r in &self.factors {
            if r == 0 {
                return Err(Error::Config("expansion factor 0".into()));
            }
            if self.mode == ExpansionMode::Sk && !r.is_power_of_two() {
                return Err(Error::Config(format!(
                    "SK expansion factor {r} is not a power of two"
                )));
            }
        }
        Ok(())
    }

    /// Channel cost in real dims for the given per-layer parameter counts.
    pub fn total_dims(&self, layer_sizes: &[usize]) -> usize {
        self.factors
            .iter()
            .zip(layer_sizes)
            .map(|(&r, &d)| r * d)
            .sum()
    }
}

/// Placement of one layer inside the symbol stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerLayout {
    pub offset: usize,
    pub raw_count: usize,
    pub factor: usize,
    /// Decoder search bound: max |parameter| at encode time times 1.05.
    pub w_max: f64,
}

/// Power-normalized channel input plus everything needed to invert it.
#[derive(Debug, Clone)]
pub struct SymbolStream {
    pub dims: Vec<f64>,
    pub gain: f64,
    pub power: f64,
    pub mode: ExpansionMode,
    pub spiral: SpiralParams,
    pub layout: Vec<LayerLayout>,
}

impl SymbolStream {
    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Side information describing the stream without the dims themselves.
    pub fn meta(&self) -> StreamMeta {
        StreamMeta {
            gain: self.gain,
            power: self.power,
            mode: self.mode,
            spiral: self.spiral,
            layout: self.layout.clone(),
        }
    }
}

/// Error-free side information carried out of band.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamMeta {
    pub gain: f64,
    pub power: f64,
    pub mode: ExpansionMode,
    pub spiral: SpiralParams,
    pub layout: Vec<LayerLayout>,
}

impl StreamMeta {
    pub fn expected_len(&self) -> usize {
        self.layout.iter().map(|l| l.raw_count * l.factor).sum()
    }
}

fn spiral_depth(factor: usize) -> u32 {
    factor.trailing_zeros()
}

/// Encodes all network parameters into one power-normalized stream.
/// Parameters are flattened layer-major (weights row-major, then bias);
/// each layer is expanded by its plan factor; the whole stream is
/// normalized once and the gain recorded.
pub fn encode_network(
    net: &Network,
    plan: &ExpansionPlan,
    spiral: &SpiralParams,
    power: f64,
) -> Result<SymbolStream> {
    plan.validate()?;
    spiral.validate()?;
    if plan.factors.len() != net.layer_count() {
        return Err(Error::Shape(format!(
            "plan has {} layers, network has {}",
            plan.factors.len(),
            net.layer_count()
        )));
    }
    let mut raw = Vec::new();
    let mut layout = Vec::with_capacity(net.layer_count());
    for (layer, &factor) in net.layers().iter().zip(&plan.factors) {
        let mut params = Vec::with_capacity(layer.param_count());
        params.extend_from_slice(layer.weights.as_slice());
        params.extend_from_slice(&layer.bias);
        let w_max = params.iter().fold(0.0f64, |m, &p| m.max(p.abs())) * 1.05;
        layout.push(LayerLayout {
            offset: raw.len(),
            raw_count: params.len(),
            factor,
            w_max,
        });
        match plan.mode {
            ExpansionMode::Repeat => {
                for &p in &params {
                    raw.extend(repeat_encode(p, factor)?);
                }
            }
            ExpansionMode::Sk => {
                if factor == 1 {
                    raw.extend_from_slice(&params);
                } else {
                    let depth = spiral_depth(factor);
                    for &p in &params {
                        raw.extend(sk_encode_recursive(p, spiral, depth));
                    }
                }
            }
        }
    }
    let normalized = normalize_power(&raw, power)?;
    Ok(SymbolStream {
        dims: normalized.dims,
        gain: normalized.gain,
        power,
        mode: plan.mode,
        spiral: *spiral,
        layout,
    })
}

/// Inverts [`encode_network`]: divide by the gain, run each layer's inverse
/// codec, and reshape into the given architecture.
pub fn decode_network(received: &[f64], meta: &StreamMeta, arch: &str) -> Result<Network> {
    let expected = meta.expected_len();
    if received.len() != expected {
        return Err(Error::Shape(format!(
            "received {} dims, stream layout expects {expected}",
            received.len()
        )));
    }
    let mut net = Network::from_arch_id(arch)?;
    let layer_counts = net.layer_param_counts();
    if layer_counts.len() != meta.layout.len() {
        return Err(Error::Shape(format!(
            "layout has {} layers, arch '{arch}' has {}",
            meta.layout.len(),
            layer_counts.len()
        )));
    }
    let mut params = Vec::with_capacity(layer_counts.iter().sum());
    for (ll, &want) in meta.layout.iter().zip(&layer_counts) {
        if ll.raw_count != want {
            return Err(Error::Shape(format!(
                "layout layer holds {} params, arch '{arch}' expects {want}",
                ll.raw_count
            )));
        }
        let span = &received[ll.offset..ll.offset + ll.raw_count * ll.factor];
        match meta.mode {
            ExpansionMode::Repeat => {
                for chunk in span.chunks(ll.factor) {
                    let scaled: Vec<f64> = chunk.iter().map(|y| y / meta.gain).collect();
                    params.push(repeat_decode(&scaled)?);
                }
            }
            ExpansionMode::Sk => {
                if ll.factor == 1 {
                    params.extend(span.iter().map(|y| y / meta.gain));
                } else {
                    let depth = spiral_depth(ll.factor);
                    for chunk in span.chunks(ll.factor) {
                        let scaled: Vec<f64> = chunk.iter().map(|y| y / meta.gain).collect();
                        params.push(sk_decode_recursive(&scaled, &meta.spiral, depth, ll.w_max));
                    }
                }
            }
        }
    }
    net.assign_params(&params)?;
    Ok(net)
}

const STREAM_MAGIC: &[u8; 4] = b"AIRS";
const STREAM_VERSION: u32 = 1;

/// Debug serialization of a stream. Fixed little-endian layout: magic
/// `AIRS`, u32 version, u8 mode (0 repeat / 1 sk), f64 delta, f64 gamma,
/// f64 gain, f64 power, u32 layer count, then per layer u64 offset,
/// u64 raw_count, u32 factor, f64 w_max; finally u64 dim count and the
/// dims as f32.
pub fn write_stream<W: Write>(stream: &SymbolStream, mut w: W) -> Result<()> {
    w.write_all(STREAM_MAGIC)?;
    w.write_all(&STREAM_VERSION.to_le_bytes())?;
    w.write_all(&[match stream.mode {
        ExpansionMode::Repeat => 0u8,
        ExpansionMode::Sk => 1u8,
    }])?;
    w.write_all(&stream.spiral.delta.to_le_bytes())?;
    w.write_all(&stream.spiral.gamma.to_le_bytes())?;
    w.write_all(&stream.gain.to_le_bytes())?;
    w.write_all(&stream.power.to_le_bytes())?;
    w.write_all(&(stream.layout.len() as u32).to_le_bytes())?;
    for ll in &stream.layout {
        w.write_all(&(ll.offset as u64).to_le_bytes())?;
        w.write_all(&(ll.raw_count as u64).to_le_bytes())?;
        w.write_all(&(ll.factor as u32).to_le_bytes())?;
        w.write_all(&ll.w_max.to_le_bytes())?;
    }
    w.write_all(&(stream.dims.len() as u64).to_le_bytes())?;
    for &d in &stream.dims {
        w.write_all(&(d as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_stream<R: Read>(mut r: R) -> Result<SymbolStream> {
    fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        r.read_exact(&mut buf)?;
        Ok(buf)
    }
    let magic: [u8; 4] = read_exact(&mut r)?;
    if &magic != STREAM_MAGIC {
        return Err(Error::Format("bad stream magic".into()));
    }
    let version = u32::from_le_bytes(read_exact(&mut r)?);
    if version != STREAM_VERSION {
        return Err(Error::Format(format!("unsupported stream version {version}")));
    }
    let mode = match read_exact::<1>(&mut r)?[0] {
        0 => ExpansionMode::Repeat,
        1 => ExpansionMode::Sk,
        other => return Err(Error::Format(format!("unknown mode byte {other}"))),
    };
    let delta = f64::from_le_bytes(read_exact(&mut r)?);
    let gamma = f64::from_le_bytes(read_exact(&mut r)?);
    let gain = f64::from_le_bytes(read_exact(&mut r)?);
    let power = f64::from_le_bytes(read_exact(&mut r)?);
    let layers = u32::from_le_bytes(read_exact(&mut r)?) as usize;
    let mut layout = Vec::with_capacity(layers);
    for _ in 0..layers {
        let offset = u64::from_le_bytes(read_exact(&mut r)?) as usize;
        let raw_count = u64::from_le_bytes(read_exact(&mut r)?) as usize;
        let factor = u32::from_le_bytes(read_exact(&mut r)?) as usize;
        let w_max = f64::from_le_bytes(read_exact(&mut r)?);
        layout.push(LayerLayout {
            offset,
            raw_count,
            factor,
            w_max,
        });
    }
    let n = u64::from_le_bytes(read_exact(&mut r)?) as usize;
    let mut dims = Vec::with_capacity(n);
    for _ in 0..n {
        dims.push(f32::from_le_bytes(read_exact(&mut r)?) as f64);
    }
    Ok(SymbolStream {
        dims,
        gain,
        power,
        mode,
        spiral: SpiralParams { delta, gamma },
        layout,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::accuracy;
    use crate::nn::Dataset;
    use crate::rng::Rng;

    fn max_param_diff(a: &Network, b: &Network) -> f64 {
        a.flatten_params()
            .iter()
            .zip(b.flatten_params())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn direct_mapping_is_scaled_flat_params() {
        let net = Network::init(&[2, 4, 3], 5).unwrap();
        let plan = ExpansionPlan::direct(net.layer_count());
        let stream =
            encode_network(&net, &plan, &SpiralParams::default(), 1.0).unwrap();
        let flat = net.flatten_params();
        assert_eq!(stream.len(), net.param_count());
        for (d, p) in stream.dims.iter().zip(&flat) {
            assert!((d - stream.gain * p).abs() < 1e-12);
        }
    }

    #[test]
    fn repeat_two_duplicates_adjacently() {
        let net = Network::init(&[2, 2], 3).unwrap(); // one layer, d = 6
        let plan = ExpansionPlan::uniform(ExpansionMode::Repeat, 1, 2);
        let stream =
            encode_network(&net, &plan, &SpiralParams::default(), 1.0).unwrap();
        assert_eq!(stream.len(), 12);
        for pair in stream.dims.chunks(2) {
            assert_eq!(pair[0], pair[1]);
        }
    }

    #[test]
    fn noiseless_round_trip_repeat_and_sk() {
        let net = Network::init(&[2, 6, 4, 3], 11).unwrap();
        let arch = net.arch_id();
        let spiral = SpiralParams::default();

        let plan = ExpansionPlan::uniform(ExpansionMode::Repeat, 3, 3);
        let stream = encode_network(&net, &plan, &spiral, 1.0).unwrap();
        let decoded = decode_network(&stream.dims, &stream.meta(), &arch).unwrap();
        assert!(max_param_diff(&net, &decoded) < 1e-6);

        let plan = ExpansionPlan {
            mode: ExpansionMode::Sk,
            factors: vec![2, 1, 2],
        };
        let stream = encode_network(&net, &plan, &spiral, 1.0).unwrap();
        let decoded = decode_network(&stream.dims, &stream.meta(), &arch).unwrap();
        assert!(max_param_diff(&net, &decoded) < 1e-3);
    }

    #[test]
    fn noiseless_chain_preserves_accuracy_exactly() {
        let net = Network::init(&[2, 8, 3], 21).unwrap();
        let data = Dataset::blobs(60, 3, 0.6, 4).unwrap();
        let plan = ExpansionPlan::direct(net.layer_count());
        let stream =
            encode_network(&net, &plan, &SpiralParams::default(), 1.0).unwrap();
        let decoded = decode_network(&stream.dims, &stream.meta(), &net.arch_id()).unwrap();
        assert_eq!(
            accuracy(&net, &data).unwrap(),
            accuracy(&decoded, &data).unwrap()
        );
    }

    #[test]
    fn all_zero_received_decodes_to_zero_network() {
        let net = Network::init(&[2, 4, 3], 9).unwrap();
        let plan = ExpansionPlan::direct(net.layer_count());
        let stream =
            encode_network(&net, &plan, &SpiralParams::default(), 1.0).unwrap();
        let zeros = vec![0.0; stream.len()];
        let decoded = decode_network(&zeros, &stream.meta(), &net.arch_id()).unwrap();
        assert!(decoded.flatten_params().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn plan_layer_count_mismatch_rejected() {
        let net = Network::init(&[2, 4, 3], 9).unwrap();
        let plan = ExpansionPlan::direct(1);
        assert!(encode_network(&net, &plan, &SpiralParams::default(), 1.0).is_err());
    }

    #[test]
    fn length_mismatch_rejected() {
        let net = Network::init(&[2, 4, 3], 9).unwrap();
        let plan = ExpansionPlan::direct(net.layer_count());
        let stream =
            encode_network(&net, &plan, &SpiralParams::default(), 1.0).unwrap();
        let short = &stream.dims[..stream.len() - 1];
        assert!(decode_network(short, &stream.meta(), &net.arch_id()).is_err());
    }

    #[test]
    fn direct_mapping_error_variance_propagates_through_gain() {
        // AWGN at 0 dB on a long direct-mapped stream: per-parameter error
        // variance is (sigma^2/2)/g^2 within 5%.
        use crate::channel::{transmit, ChannelSpec};
        let dims = 100_000;
        let mut rng = Rng::new(31);
        let mut net = Network::from_arch_id(&format!("1:{}i", dims / 2)).unwrap();
        let mut params = vec![0.0; net.param_count()];
        for p in &mut params {
            *p = rng.uniform(-1.0, 1.0);
        }
        net.assign_params(&params).unwrap();

        let plan = ExpansionPlan::direct(1);
        let stream = encode_network(&net, &plan, &SpiralParams::default(), 1.0).unwrap();
        let spec = ChannelSpec::awgn(0.0, 77);
        let mut ch_rng = Rng::new(77);
        let sig = crate::channel::NormalizedSignal {
            dims: stream.dims.clone(),
            gain: stream.gain,
            power_budget: 1.0,
        };
        let (received, _) = transmit(&sig, &spec, &mut ch_rng).unwrap();
        let decoded = decode_network(&received, &stream.meta(), &net.arch_id()).unwrap();
        let err_var: f64 = decoded
            .flatten_params()
            .iter()
            .zip(&params)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / params.len() as f64;
        let expect = 0.5 / (stream.gain * stream.gain);
        assert!(
            (err_var - expect).abs() < 0.05 * expect,
            "got {err_var}, expect {expect}"
        );
    }

    #[test]
    fn stream_serialization_round_trips() {
        let net = Network::init(&[2, 5, 4, 3], 13).unwrap();
        let plan = ExpansionPlan {
            mode: ExpansionMode::Sk,
            factors: vec![2, 1, 4],
        };
        let stream =
            encode_network(&net, &plan, &SpiralParams::with_gamma(4.0 * std::f64::consts::PI), 1.0)
                .unwrap();
        let mut buf = Vec::new();
        write_stream(&stream, &mut buf).unwrap();
        let back = read_stream(buf.as_slice()).unwrap();
        assert_eq!(back.mode, stream.mode);
        assert_eq!(back.layout, stream.layout);
        assert_eq!(back.gain, stream.gain);
        assert_eq!(back.len(), stream.len());
        for (a, b) in back.dims.iter().zip(&stream.dims) {
            assert!((a - b).abs() <= (*b as f32).abs() as f64 * 1e-6 + 1e-9);
        }
    }
}
