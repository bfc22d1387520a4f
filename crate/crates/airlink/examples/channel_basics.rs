//! Channel fundamentals: power normalization, AWGN and block-Rayleigh
//! transmission, and zero-forcing equalization.
//!
//! Run with: cargo run --release --example channel_basics

use airlink::channel::{
    equalize, normalize_power, snr_to_noise_variance, transmit, ChannelSpec,
};
use airlink::rng::Rng;

fn main() {
    // A raw stream gets scaled to unit average power; the gain is side
    // information the receiver uses to undo the scaling.
    let raw = vec![3.0, -4.0, 1.0, 0.5];
    let sig = normalize_power(&raw, 1.0).unwrap();
    let avg: f64 = sig.dims.iter().map(|x| x * x).sum::<f64>() / sig.dims.len() as f64;
    println!("normalized {:?}", sig.dims);
    println!("gain {:.5}, average power {avg:.12}\n", sig.gain);

    // AWGN at a few SNRs: measured per-dim noise variance tracks sigma^2/2.
    println!("{:>8} {:>12} {:>12}", "SNR dB", "sigma^2/2", "measured");
    for snr_db in [0.0, 5.0, 10.0, 20.0] {
        let n = 200_000;
        let silent = airlink::channel::NormalizedSignal {
            dims: vec![0.0; n],
            gain: 1.0,
            power_budget: 1.0,
        };
        let mut rng = Rng::new(7);
        let (received, _) = transmit(&silent, &ChannelSpec::awgn(snr_db, 7), &mut rng).unwrap();
        let var = received.iter().map(|y| y * y).sum::<f64>() / n as f64;
        println!(
            "{snr_db:>8} {:>12.5} {var:>12.5}",
            snr_to_noise_variance(snr_db) / 2.0
        );
    }

    // Block fading: the whole stream sees one complex gain h; perfect CSI
    // at the receiver undoes the rotation, leaving AWGN at a random SNR.
    println!("\nblock Rayleigh fading, 5 dB average SNR:");
    let payload = normalize_power(&[0.8, -0.3, 1.4, 0.2, -1.1, 0.6], 1.0).unwrap();
    for trial in 0..4 {
        let spec = ChannelSpec::rayleigh(5.0, trial);
        let mut rng = Rng::new(trial);
        let (received, fades) = transmit(&payload, &spec, &mut rng).unwrap();
        let fades = fades.unwrap();
        let h = fades[0];
        let eq = equalize(&received, &fades).unwrap();
        let mse: f64 = eq
            .dims
            .iter()
            .zip(&payload.dims)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / payload.dims.len() as f64;
        println!(
            "  trial {trial}: |h|^2 = {:.3}, post-equalization MSE = {:.4} (expect {:.4})",
            h.magnitude_sq(),
            mse,
            snr_to_noise_variance(5.0) / (2.0 * h.magnitude_sq()),
        );
    }
}
