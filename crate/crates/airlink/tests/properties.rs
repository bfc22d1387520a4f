//! Property tests for the codec, channel, and allocator invariants.

use proptest::prelude::*;

use airlink::channel::{normalize_power, transmit, ChannelSpec};
use airlink::codec::{sk_decode, sk_encode};
use airlink::codec::{
    decode_network, encode_network, ExpansionMode, ExpansionPlan, SpiralParams,
};
use airlink::nn::Network;
use airlink::sensitivity::allocate_expansion;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_normalization_hits_budget_exactly(
        raw in prop::collection::vec(-100f64..100.0, 1..200),
        power in 0.1f64..10.0,
    ) {
        prop_assume!(raw.iter().any(|&x| x != 0.0));
        let sig = normalize_power(&raw, power).unwrap();
        let avg = sig.dims.iter().map(|x| x * x).sum::<f64>() / sig.dims.len() as f64;
        prop_assert!((avg - power).abs() < 1e-9 * power.max(1.0));
    }

    #[test]
    fn layout_bijection_noiseless(
        hidden in 1usize..10,
        seed in 0u64..1000,
        mode_sel in 0usize..2,
        factor_seed in 0u64..1000,
    ) {
        let net = Network::init(&[2, hidden, 3], seed).unwrap();
        let mode = if mode_sel == 0 { ExpansionMode::Repeat } else { ExpansionMode::Sk };
        let mut frng = airlink::rng::Rng::new(factor_seed);
        let factors: Vec<usize> = (0..net.layer_count())
            .map(|_| match mode {
                ExpansionMode::Repeat => 1 + frng.below(4),
                ExpansionMode::Sk => 1 << frng.below(3),
            })
            .collect();
        let plan = ExpansionPlan { mode, factors };
        let spiral = SpiralParams::default();
        let stream = encode_network(&net, &plan, &spiral, 1.0).unwrap();
        let decoded = decode_network(&stream.dims, &stream.meta(), &net.arch_id()).unwrap();
        let tol = match mode {
            ExpansionMode::Repeat => 1e-9,
            ExpansionMode::Sk => 1e-3,
        };
        for (a, b) in decoded.flatten_params().iter().zip(net.flatten_params()) {
            prop_assert!((a - b).abs() < tol, "{a} vs {b} (mode {mode:?})");
        }
    }

    #[test]
    fn allocator_never_exceeds_budget_and_is_monotone(
        sizes in prop::collection::vec(1usize..40, 1..6),
        sens_seed in 0u64..10_000,
        headroom in 0usize..120,
        extra in 1usize..80,
        mode_sel in 0usize..2,
    ) {
        let mut rng = airlink::rng::Rng::new(sens_seed);
        let sens: Vec<f64> = sizes.iter().map(|_| rng.uniform(0.0, 10.0)).collect();
        let energies: Vec<f64> = sizes.iter().map(|_| rng.uniform(0.1, 5.0)).collect();
        let base: usize = sizes.iter().sum();
        let mode = if mode_sel == 0 { ExpansionMode::Repeat } else { ExpansionMode::Sk };

        let small = allocate_expansion(&sizes, &sens, &energies, base + headroom, mode).unwrap();
        let large =
            allocate_expansion(&sizes, &sens, &energies, base + headroom + extra, mode).unwrap();

        prop_assert!(small.total_dims(&sizes) <= base + headroom);
        prop_assert!(large.total_dims(&sizes) <= base + headroom + extra);
        for (a, b) in small.factors.iter().zip(&large.factors) {
            prop_assert!(b >= a, "factors shrank with a larger budget: {small:?} vs {large:?}");
        }
    }

    #[test]
    fn allocation_invariant_to_common_scaling(
        sizes in prop::collection::vec(1usize..30, 1..5),
        sens_seed in 0u64..10_000,
        scale in 0.01f64..100.0,
        layer_sel in 0usize..5,
    ) {
        let mut rng = airlink::rng::Rng::new(sens_seed);
        let sens: Vec<f64> = sizes.iter().map(|_| rng.uniform(0.1, 10.0)).collect();
        let energies: Vec<f64> = sizes.iter().map(|_| rng.uniform(0.1, 5.0)).collect();
        let base: usize = sizes.iter().sum();
        let budget = base * 3;

        let mut sens2 = sens.clone();
        let mut energies2 = energies.clone();
        let k = layer_sel % sizes.len();
        sens2[k] *= scale;
        energies2[k] *= scale;

        let a = allocate_expansion(&sizes, &sens, &energies, budget, ExpansionMode::Repeat).unwrap();
        let b = allocate_expansion(&sizes, &sens2, &energies2, budget, ExpansionMode::Repeat).unwrap();
        prop_assert_eq!(a.factors, b.factors);
    }
}

// At high SNR the longer spiral decodes more precisely: MSE(gamma=4pi) <
// MSE(gamma=2pi) at 20 dB over 1e4 power-normalized values.
#[test]
fn longer_spiral_wins_at_high_snr() {
    let n = 10_000;
    let mut rng = airlink::rng::Rng::new(2718);
    let values: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let mse_for = |gamma: f64| -> f64 {
        let p = SpiralParams::with_gamma(gamma);
        let raw: Vec<f64> = values
            .iter()
            .flat_map(|&w| {
                let (a, b) = sk_encode(w, &p);
                [a, b]
            })
            .collect();
        let sig = normalize_power(&raw, 1.0).unwrap();
        let mut ch_rng = airlink::rng::Rng::new(31415);
        let (received, _) = transmit(&sig, &ChannelSpec::awgn(20.0, 0), &mut ch_rng).unwrap();
        received
            .chunks(2)
            .zip(&values)
            .map(|(pair, &w)| {
                let decoded = sk_decode(pair[0] / sig.gain, pair[1] / sig.gain, &p, 1.05);
                (decoded - w) * (decoded - w)
            })
            .sum::<f64>()
            / n as f64
    };
    let two_pi = mse_for(2.0 * std::f64::consts::PI);
    let four_pi = mse_for(4.0 * std::f64::consts::PI);
    println!("20 dB decode MSE: gamma=2pi {two_pi:.2e}, gamma=4pi {four_pi:.2e}");
    assert!(four_pi < two_pi);
}
