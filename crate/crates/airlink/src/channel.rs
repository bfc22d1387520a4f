//! Simulated transmission: power normalization, static AWGN, block Rayleigh
//! fading, and receiver-side zero-forcing equalization.
//!
//! Bandwidth is accounted in REAL channel dimensions; one complex symbol is
//! two consecutive real dims. `SNR = 10 log10(1/sigma^2)` defines the total
//! complex noise variance `sigma^2`, so each real dimension sees variance
//! `sigma^2 / 2`.
//!
//! Under fading, an odd-length stream is padded with one zero dim so the
//! final complex symbol is well formed; the returned vector keeps the pad
//! and callers slice back to the original length.

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Awgn,
    RayleighBlock,
}

#[derive(Debug, Clone)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    /// SNR in dB; average SNR under fading. `f64::INFINITY` means noiseless.
    pub snr_db: f64,
    /// Scale of the fading gain, `h ~ CN(0, sigma_h^2)`.
    pub sigma_h: f64,
    pub seed: u64,
    /// Fading block length in real dims; `None` keeps one draw for the whole
    /// stream. Rounded up to a whole number of complex symbols.
    pub block_len: Option<usize>,
}

impl ChannelSpec {
    pub fn awgn(snr_db: f64, seed: u64) -> Self {
        ChannelSpec {
            kind: ChannelKind::Awgn,
            snr_db,
            sigma_h: 1.0,
            seed,
            block_len: None,
        }
    }

    pub fn rayleigh(snr_db: f64, seed: u64) -> Self {
        ChannelSpec {
            kind: ChannelKind::RayleighBlock,
            snr_db,
            sigma_h: 1.0,
            seed,
            block_len: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_h <= 0.0 {
            return Err(Error::Config("sigma_h must be positive".into()));
        }
        Ok(())
    }
}

/// Power-normalized channel input with the gain needed to invert it.
#[derive(Debug, Clone)]
pub struct NormalizedSignal {
    pub dims: Vec<f64>,
    /// Multiplicative gain applied to the raw vector.
    pub gain: f64,
    pub power_budget: f64,
}

/// One fading realization: a complex gain constant over `block_len` real
/// dims.
#[derive(Debug, Clone, Copy)]
pub struct FadeDraw {
    pub h_re: f64,
    pub h_im: f64,
    pub block_len: usize,
}

impl FadeDraw {
    pub fn magnitude_sq(&self) -> f64 {
        self.h_re * self.h_re + self.h_im * self.h_im
    }
}

/// Equalized stream plus indices of blocks erased for vanishing |h|.
#[derive(Debug, Clone)]
pub struct Equalized {
    pub dims: Vec<f64>,
    pub erased_blocks: Vec<usize>,
}

/// Total complex noise variance for an SNR in dB: `sigma^2 = 10^(-snr/10)`.
/// Per-real-dimension variance is half of this.
pub fn snr_to_noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Scales `raw` so its average power per dimension is exactly `power`.
/// Returns the gain for receiver-side inversion. Errors on an all-zero
/// input.
pub fn normalize_power(raw: &[f64], power: f64) -> Result<NormalizedSignal> {
    if raw.is_empty() {
        return Err(Error::Empty("cannot normalize an empty stream".into()));
    }
    if power <= 0.0 {
        return Err(Error::Config("power budget must be positive".into()));
    }
    let energy: f64 = raw.iter().map(|x| x * x).sum();
    if energy == 0.0 {
        return Err(Error::Numeric("cannot normalize an all-zero stream".into()));
    }
    let gain = (power * raw.len() as f64 / energy).sqrt();
    Ok(NormalizedSignal {
        dims: raw.iter().map(|x| gain * x).collect(),
        gain,
        power_budget: power,
    })
}

/// Sends a normalized signal through the channel. AWGN adds independent
/// noise per real dim; fading applies a per-block complex gain to complex
/// symbols and returns the draws for equalization.
pub fn transmit(
    sig: &NormalizedSignal,
    spec: &ChannelSpec,
    rng: &mut Rng,
) -> Result<(Vec<f64>, Option<Vec<FadeDraw>>)> {
    spec.validate()?;
    let sigma_sq = snr_to_noise_variance(spec.snr_db);
    let noise_std = (sigma_sq / 2.0).sqrt();
    match spec.kind {
        ChannelKind::Awgn => {
            let received = if noise_std == 0.0 {
                sig.dims.clone()
            } else {
                sig.dims
                    .iter()
                    .map(|&x| x + rng.gaussian(0.0, noise_std))
                    .collect()
            };
            Ok((received, None))
        }
        ChannelKind::RayleighBlock => {
            let mut padded = sig.dims.clone();
            if padded.len() % 2 == 1 {
                padded.push(0.0);
            }
            let block = spec
                .block_len
                .map(|b| b.div_ceil(2) * 2)
                .unwrap_or(padded.len())
                .max(2);
            let mut received = Vec::with_capacity(padded.len());
            let mut fades = Vec::new();
            let h_scale = spec.sigma_h / 2f64.sqrt();
            let mut offset = 0;
            while offset < padded.len() {
                let len = block.min(padded.len() - offset);
                let h_re = rng.gaussian(0.0, h_scale);
                let h_im = rng.gaussian(0.0, h_scale);
                fades.push(FadeDraw {
                    h_re,
                    h_im,
                    block_len: len,
                });
                for pair in padded[offset..offset + len].chunks(2) {
                    let (x_re, x_im) = (pair[0], pair[1]);
                    let mut y_re = h_re * x_re - h_im * x_im;
                    let mut y_im = h_re * x_im + h_im * x_re;
                    if noise_std > 0.0 {
                        y_re += rng.gaussian(0.0, noise_std);
                        y_im += rng.gaussian(0.0, noise_std);
                    }
                    received.push(y_re);
                    received.push(y_im);
                }
                offset += len;
            }
            Ok((received, Some(fades)))
        }
    }
}

/// Zero-forcing equalization with perfect receiver CSI: each block is scaled
/// by `conj(h)/|h|^2`, leaving `x + conj(h) z / |h|^2`. Blocks with |h|
/// below 1e-12 are zero-filled and reported as erased.
pub fn equalize(received: &[f64], fades: &[FadeDraw]) -> Result<Equalized> {
    let total: usize = fades.iter().map(|f| f.block_len).sum();
    if total != received.len() {
        return Err(Error::Shape(format!(
            "fade blocks cover {total} dims but received has {}",
            received.len()
        )));
    }
    let mut dims = Vec::with_capacity(received.len());
    let mut erased = Vec::new();
    let mut offset = 0;
    for (bi, fade) in fades.iter().enumerate() {
        let mag_sq = fade.magnitude_sq();
        let blockdata = &received[offset..offset + fade.block_len];
        if mag_sq.sqrt() < 1e-12 {
            dims.resize(dims.len() + fade.block_len, 0.0);
            erased.push(bi);
        } else {
            for pair in blockdata.chunks(2) {
                let (y_re, y_im) = (pair[0], pair.get(1).copied().unwrap_or(0.0));
                // y * conj(h) / |h|^2
                let e_re = (y_re * fade.h_re + y_im * fade.h_im) / mag_sq;
                let e_im = (y_im * fade.h_re - y_re * fade.h_im) / mag_sq;
                dims.push(e_re);
                if pair.len() == 2 {
                    dims.push(e_im);
                }
            }
        }
        offset += fade.block_len;
    }
    Ok(Equalized {
        dims,
        erased_blocks: erased,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_conversions() {
        assert!((snr_to_noise_variance(0.0) - 1.0).abs() < 1e-15);
        assert!((snr_to_noise_variance(10.0) - 0.1).abs() < 1e-15);
        assert!((snr_to_noise_variance(-3.0) - 1.9953).abs() < 1e-4);
        assert_eq!(snr_to_noise_variance(f64::INFINITY), 0.0);
    }

    #[test]
    fn normalize_three_four() {
        let sig = normalize_power(&[3.0, 4.0], 1.0).unwrap();
        assert!((sig.gain - 0.28284).abs() < 1e-5);
        assert!((sig.dims[0] - 0.84853).abs() < 1e-5);
        assert!((sig.dims[1] - 1.13137).abs() < 1e-5);
        let avg: f64 = sig.dims.iter().map(|x| x * x).sum::<f64>() / 2.0;
        assert!((avg - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_fixed_point_and_constant() {
        let raw = vec![1.0, -1.0, 1.0, -1.0];
        let sig = normalize_power(&raw, 1.0).unwrap();
        assert!((sig.gain - 1.0).abs() < 1e-15);
        assert_eq!(sig.dims, raw);

        let sig = normalize_power(&[0.3, 0.3, 0.3], 1.0).unwrap();
        for d in &sig.dims {
            assert!((d.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_all_zero() {
        assert!(normalize_power(&[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn noiseless_awgn_is_exact() {
        let sig = normalize_power(&[1.0, 2.0, 3.0], 1.0).unwrap();
        let spec = ChannelSpec::awgn(f64::INFINITY, 1);
        let mut rng = Rng::new(1);
        let (received, fades) = transmit(&sig, &spec, &mut rng).unwrap();
        assert_eq!(received, sig.dims);
        assert!(fades.is_none());
    }

    #[test]
    fn awgn_noise_variance_matches_half_sigma_sq() {
        let n = 1_000_000;
        let sig = NormalizedSignal {
            dims: vec![0.0; n],
            gain: 1.0,
            power_budget: 1.0,
        };
        let spec = ChannelSpec::awgn(0.0, 9);
        let mut rng = Rng::new(9);
        let (received, _) = transmit(&sig, &spec, &mut rng).unwrap();
        let var: f64 = received.iter().map(|y| y * y).sum::<f64>() / n as f64;
        assert!((var - 0.5).abs() < 0.005, "var {var}");
    }

    #[test]
    fn noiseless_fading_applies_h_exactly() {
        let sig = NormalizedSignal {
            dims: vec![1.0, 0.0, 0.5, -0.5],
            gain: 1.0,
            power_budget: 1.0,
        };
        let spec = ChannelSpec::rayleigh(f64::INFINITY, 3);
        let mut rng = Rng::new(3);
        let (received, fades) = transmit(&sig, &spec, &mut rng).unwrap();
        let fades = fades.unwrap();
        assert_eq!(fades.len(), 1);
        let h = fades[0];
        for (k, pair) in sig.dims.chunks(2).enumerate() {
            let want_re = h.h_re * pair[0] - h.h_im * pair[1];
            let want_im = h.h_re * pair[1] + h.h_im * pair[0];
            assert!((received[2 * k] - want_re).abs() < 1e-15);
            assert!((received[2 * k + 1] - want_im).abs() < 1e-15);
        }
    }

    #[test]
    fn equalize_undoes_known_rotations() {
        // h = 2: scale by 1/2.
        let fades = [FadeDraw {
            h_re: 2.0,
            h_im: 0.0,
            block_len: 2,
        }];
        let eq = equalize(&[2.0, 0.0], &fades).unwrap();
        assert_eq!(eq.dims, vec![1.0, 0.0]);

        // h = i: y = i*x rotates (1,0) to (0,1); equalization rotates back.
        let fades = [FadeDraw {
            h_re: 0.0,
            h_im: 1.0,
            block_len: 2,
        }];
        let eq = equalize(&[0.0, 1.0], &fades).unwrap();
        assert!((eq.dims[0] - 1.0).abs() < 1e-15);
        assert!(eq.dims[1].abs() < 1e-15);
    }

    #[test]
    fn noiseless_round_trip_through_fading_is_identity() {
        let sig = normalize_power(&[0.2, -1.4, 0.7, 2.0, -0.3], 1.0).unwrap();
        let spec = ChannelSpec::rayleigh(f64::INFINITY, 17);
        let mut rng = Rng::new(17);
        let (received, fades) = transmit(&sig, &spec, &mut rng).unwrap();
        let eq = equalize(&received, &fades.unwrap()).unwrap();
        assert!(eq.erased_blocks.is_empty());
        // Input length was odd; pad dim is dropped on comparison.
        for (got, want) in eq.dims.iter().zip(&sig.dims) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn vanishing_h_marks_block_erased() {
        let fades = [FadeDraw {
            h_re: 0.0,
            h_im: 0.0,
            block_len: 4,
        }];
        let eq = equalize(&[1.0, 2.0, 3.0, 4.0], &fades).unwrap();
        assert_eq!(eq.erased_blocks, vec![0]);
        assert!(eq.dims.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn rayleigh_gain_power_has_unit_mean() {
        let spec = ChannelSpec {
            kind: ChannelKind::RayleighBlock,
            snr_db: f64::INFINITY,
            sigma_h: 1.0,
            seed: 5,
            block_len: Some(2),
        };
        let n_blocks = 1_000_000;
        let sig = NormalizedSignal {
            dims: vec![1.0; 2 * n_blocks],
            gain: 1.0,
            power_budget: 1.0,
        };
        let mut rng = Rng::new(5);
        let (_, fades) = transmit(&sig, &spec, &mut rng).unwrap();
        let fades = fades.unwrap();
        assert_eq!(fades.len(), n_blocks);
        let mean: f64 =
            fades.iter().map(FadeDraw::magnitude_sq).sum::<f64>() / n_blocks as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean |h|^2 = {mean}");
    }

    // One-sample Kolmogorov-Smirnov check that equalized fading noise is
    // Gaussian with variance sigma^2 / (2 |h|^2) for a fixed h.
    #[test]
    fn equalized_noise_is_gaussian_with_scaled_variance() {
        fn normal_cdf(x: f64) -> f64 {
            // Abramowitz-Stegun 7.1.26 erf approximation, |err| < 1.5e-7.
            let z = x / 2f64.sqrt();
            let t = 1.0 / (1.0 + 0.327_591_1 * z.abs());
            let poly = t
                * (0.254_829_592
                    + t * (-0.284_496_736
                        + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
            let erf = 1.0 - poly * (-z * z).exp();
            let erf = if z >= 0.0 { erf } else { -erf };
            0.5 * (1.0 + erf)
        }

        fn ks_p_value(standardized: &mut [f64]) -> f64 {
            standardized.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = standardized.len() as f64;
            let mut d: f64 = 0.0;
            for (i, &x) in standardized.iter().enumerate() {
                let cdf = normal_cdf(x);
                let lo = i as f64 / n;
                let hi = (i + 1) as f64 / n;
                d = d.max((cdf - lo).abs()).max((hi - cdf).abs());
            }
            let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
            let mut p = 0.0;
            for k in 1..=100 {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                p += sign * (-2.0 * (k as f64 * lambda).powi(2)).exp();
            }
            (2.0 * p).clamp(0.0, 1.0)
        }

        let n = 20_000;
        let snr_db = 5.0;
        let sigma_sq = snr_to_noise_variance(snr_db);
        let sig = NormalizedSignal {
            dims: vec![0.0; n],
            gain: 1.0,
            power_budget: 1.0,
        };
        let spec = ChannelSpec::rayleigh(snr_db, 23);
        let mut rng = Rng::new(23);
        let (received, fades) = transmit(&sig, &spec, &mut rng).unwrap();
        let fades = fades.unwrap();
        let h_sq = fades[0].magnitude_sq();
        let eq = equalize(&received, &fades).unwrap();
        let noise_std = (sigma_sq / (2.0 * h_sq)).sqrt();
        let mut standardized: Vec<f64> = eq.dims.iter().map(|&d| d / noise_std).collect();
        let p = ks_p_value(&mut standardized);
        assert!(p > 0.01, "KS p-value {p}");
    }
}
