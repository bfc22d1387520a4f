//! SNR robustness without per-SNR model storage: sandwich-rule variable
//! SNR training versus the two-boundary interpolation ensemble.
//!
//! Run with: cargo run --release --example snr_interpolation

use airlink::channel::ChannelSpec;
use airlink::codec::{ExpansionPlan, SpiralParams};
use airlink::nn::{Dataset, Network};
use airlink::pipeline::{
    evaluate_over_channel, interpolate, train_interpolation, train_noise_injection,
    train_variable_snr, SnrTarget, TrainConfig,
};

fn main() {
    let train = Dataset::blobs(256, 3, 1.2, 7).unwrap();
    let test = Dataset::blobs(256, 3, 1.2, 8).unwrap();
    let (lo, hi) = (-3.0, 10.0);
    let test_snrs = [-3.0, 0.0, 3.5, 7.0, 10.0];
    let init = Network::init(&[2, 32, 32, 3], 1003).unwrap();
    let plan = ExpansionPlan::direct(3);
    let spiral = SpiralParams::default();

    let eval = |net: &Network, snr: f64| {
        evaluate_over_channel(
            net,
            &test,
            &ChannelSpec::awgn(snr, 2),
            &plan,
            &spiral,
            1.0,
            50,
            23,
        )
        .unwrap()
        .mean_accuracy
    };

    // One model per SNR (the storage-hungry reference).
    print!("{:<24}", "per-SNR models");
    for &snr in &test_snrs {
        let mut cfg = TrainConfig::desk(6);
        cfg.snr = SnrTarget::Fixed(snr);
        let (net, _) = train_noise_injection(&init, &train, &cfg).unwrap();
        print!(" {:>8.4}", eval(&net, snr));
    }
    println!();

    // A single model trained over the range with the sandwich rule.
    let cfg = TrainConfig::desk(6);
    let (variable, _) = train_variable_snr(&init, &train, lo, hi, &cfg).unwrap();
    print!("{:<24}", format!("variable ({lo}, {hi}) dB"));
    for &snr in &test_snrs {
        print!(" {:>8.4}", eval(&variable, snr));
    }
    println!();

    // Two boundary networks; intermediate SNRs interpolate between them.
    let (pair, _) = train_interpolation(&init, &train, lo, hi, &cfg).unwrap();
    print!("{:<24}", "interpolation pair");
    for &snr in &test_snrs {
        let net = interpolate(&pair, snr).unwrap();
        print!(" {:>8.4}", eval(&net, snr));
    }
    println!();

    println!("\ncolumns: test SNR {test_snrs:?} dB, direct mapping, 50 draws each.");
    println!("the pair stores 2 models instead of {}.", test_snrs.len());
}
