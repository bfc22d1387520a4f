//! Archimedes-spiral bandwidth expansion: encode points, round trips,
//! recursion to 1:4, and the gamma robustness/precision trade-off.
//!
//! Run with: cargo run --release --example spiral_codec

use std::f64::consts::PI;

use airlink::channel::{normalize_power, transmit, ChannelSpec};
use airlink::codec::{
    sk_decode, sk_decode_recursive, sk_encode, sk_encode_recursive, SpiralParams,
};
use airlink::rng::Rng;

fn main() {
    let spiral = SpiralParams::default(); // delta 1, gamma 2*pi
    println!("spiral points (gamma = 2*pi):");
    for w in [-1.0, -0.5, 0.0, 0.25, 0.5, 1.0] {
        let (x1, x2) = sk_encode(w, &spiral);
        println!("  w {w:>5} -> ({x1:>8.4}, {x2:>8.4})");
    }

    // Noiseless round trip and 1:4 recursion.
    let w = 0.37;
    let (x1, x2) = sk_encode(w, &spiral);
    println!("\nround trip: {w} -> {:.6}", sk_decode(x1, x2, &spiral, 1.05));
    let dims = sk_encode_recursive(w, &spiral, 2);
    println!(
        "depth-2 recursion: {w} -> {} dims -> {:.5}",
        dims.len(),
        sk_decode_recursive(&dims, &spiral, 2, 1.05)
    );

    // Gamma trade-off: decode MSE of a power-normalized block of values,
    // 1:2 expansion, across SNRs. Longer spirals (larger gamma) win at
    // high SNR and lose at low SNR when noise jumps between the spiral
    // arms.
    let n = 2000;
    let mut rng = Rng::new(42);
    let values: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    println!("\ndecode MSE, 1:2 SK expansion of {n} values:");
    println!("{:>8} {:>12} {:>12} {:>12}", "SNR dB", "gamma=2pi", "gamma=4pi", "gamma=6pi");
    for snr_db in [0.0, 5.0, 10.0, 20.0] {
        print!("{snr_db:>8}");
        for gamma in [2.0 * PI, 4.0 * PI, 6.0 * PI] {
            let p = SpiralParams::with_gamma(gamma);
            let raw: Vec<f64> = values
                .iter()
                .flat_map(|&w| {
                    let (a, b) = sk_encode(w, &p);
                    [a, b]
                })
                .collect();
            let sig = normalize_power(&raw, 1.0).unwrap();
            let mut ch_rng = Rng::new(1000 + snr_db as u64);
            let (received, _) =
                transmit(&sig, &ChannelSpec::awgn(snr_db, 0), &mut ch_rng).unwrap();
            let mse: f64 = received
                .chunks(2)
                .zip(&values)
                .map(|(pair, &w)| {
                    let decoded =
                        sk_decode(pair[0] / sig.gain, pair[1] / sig.gain, &p, 1.05);
                    (decoded - w) * (decoded - w)
                })
                .sum::<f64>()
                / n as f64;
            print!(" {mse:>12.6}");
        }
        println!();
    }
}
