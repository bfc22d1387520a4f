//! The capacity-bound digital baseline versus analog delivery: quantized
//! payloads against Shannon bit budgets, Rayleigh outage with a fixed
//! rate (the cliff), and the CSIT upper bound.
//!
//! Run with: cargo run --release --example digital_baseline

use airlink::channel::ChannelSpec;
use airlink::codec::{ExpansionPlan, SpiralParams};
use airlink::digital::{
    bit_budget, evaluate_separation, payload_bits_for, DigitalConfig, Scenario,
};
use airlink::nn::{accuracy, Dataset, Network};
use airlink::pipeline::{evaluate_over_channel, train_noise_injection, SnrTarget, TrainConfig};

fn main() {
    let train = Dataset::blobs(256, 3, 1.2, 7).unwrap();
    let test = Dataset::blobs(256, 3, 1.2, 8).unwrap();
    let init = Network::init(&[2, 32, 32, 3], 1004).unwrap();

    let mut plain_cfg = TrainConfig::desk(2);
    plain_cfg.noise_injection = false;
    plain_cfg.snr = SnrTarget::Fixed(f64::INFINITY);
    let (clean_net, _) = train_noise_injection(&init, &train, &plain_cfg).unwrap();
    let (air_net, _) = train_noise_injection(&init, &train, &TrainConfig::desk(2)).unwrap();

    let d = clean_net.param_count();
    let bandwidth = d; // one real dim per parameter for the analog scheme
    println!(
        "model {} ({d} params), clean accuracy {:.4}",
        clean_net.arch_id(),
        accuracy(&clean_net, &test).unwrap()
    );
    println!(
        "q=8 payload {} bits; channel budget at 5 dB: {} bits\n",
        payload_bits_for(&clean_net, 8),
        bit_budget(bandwidth, 5.0)
    );

    // AWGN: digital picks the best (prune, bits) combo that fits capacity.
    let plan = ExpansionPlan::direct(3);
    let spiral = SpiralParams::default();
    println!("AWGN, bandwidth = d real dims:");
    println!("{:>8} {:>10} {:>16} {:>10}", "SNR dB", "digital", "combo", "airnet");
    for snr in [0.0, 5.0, 10.0, 20.0] {
        let dcfg = DigitalConfig {
            finetune_epochs: 40,
            seed: 3,
            ..DigitalConfig::default()
        };
        let sep = evaluate_separation(&clean_net, &test, bandwidth, snr, &dcfg).unwrap();
        let air = evaluate_over_channel(
            &air_net,
            &test,
            &ChannelSpec::awgn(snr, 0),
            &plan,
            &spiral,
            1.0,
            50,
            11,
        )
        .unwrap();
        let combo = match sep.chosen {
            Some((ratio, bits)) => format!("keep {ratio}, q={bits}"),
            None => "infeasible".into(),
        };
        println!("{snr:>8} {:>10.4} {:>16} {:>10.4}", sep.accuracy, combo, air.mean_accuracy);
    }

    // Rayleigh fading: fixed-rate outage (cliff) vs CSIT (upper bound) vs
    // analog graceful degradation. The rate is fixed at 5 bits per complex
    // symbol, which a static channel could carry above ~15 dB.
    println!("\nRayleigh fading, fixed transmit rate 5 bits/symbol:");
    println!(
        "{:>8} {:>10} {:>10} {:>10} {:>10}",
        "SNR dB", "outage p", "digital", "csit", "airnet"
    );
    for snr in [5.0, 10.0, 15.0, 20.0, 25.0, 30.0] {
        let outage_cfg = DigitalConfig {
            scenario: Scenario::FadingOutage,
            fixed_rate: Some(5.0),
            finetune_epochs: 40,
            seed: 3,
            ..DigitalConfig::default()
        };
        let csit_cfg = DigitalConfig {
            scenario: Scenario::FadingCsit,
            finetune_epochs: 40,
            seed: 3,
            ..DigitalConfig::default()
        };
        let sep = evaluate_separation(&clean_net, &test, bandwidth, snr, &outage_cfg).unwrap();
        let csit = evaluate_separation(&clean_net, &test, bandwidth, snr, &csit_cfg).unwrap();
        let air = evaluate_over_channel(
            &air_net,
            &test,
            &ChannelSpec::rayleigh(snr, 0),
            &plan,
            &spiral,
            1.0,
            50,
            13,
        )
        .unwrap();
        println!(
            "{snr:>8} {:>10.3} {:>10.4} {:>10.4} {:>10.4}",
            sep.outage.unwrap(),
            sep.accuracy,
            csit.accuracy,
            air.mean_accuracy
        );
    }
    println!("\nthe fixed-rate column collapses once outages dominate while the");
    println!("analog column degrades smoothly. With capacity to spare (high");
    println!("SNR, genie code) the idealized digital bound wins: analog pays");
    println!("off where bandwidth and SNR are tight.");
}
