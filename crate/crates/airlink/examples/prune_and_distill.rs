//! Structured pruning with fine-tuning, knowledge distillation from a
//! wide teacher, and the joint-vs-separate pruning ablation.
//!
//! Run with: cargo run --release --example prune_and_distill

use airlink::channel::ChannelSpec;
use airlink::codec::{ExpansionPlan, SpiralParams};
use airlink::nn::{accuracy, Dataset, Network};
use airlink::pipeline::{
    evaluate_over_channel, prune_finetune, train_noise_injection, KdConfig, PruneMode,
    PruneSchedule, SnrTarget, TrainConfig,
};

fn eval0db(net: &Network, test: &Dataset) -> f64 {
    evaluate_over_channel(
        net,
        test,
        &ChannelSpec::awgn(0.0, 1),
        &ExpansionPlan::direct(net.layer_count()),
        &SpiralParams::default(),
        1.0,
        50,
        5,
    )
    .unwrap()
    .mean_accuracy
}

fn main() {
    let train = Dataset::blobs(256, 3, 1.2, 7).unwrap();
    let test = Dataset::blobs(256, 3, 1.2, 8).unwrap();

    // Wide teacher, trained clean.
    let teacher_init = Network::init(&[2, 128, 128, 3], 9).unwrap();
    let mut teacher_cfg = TrainConfig::desk(5);
    teacher_cfg.noise_injection = false;
    teacher_cfg.snr = SnrTarget::Fixed(f64::INFINITY);
    let (teacher, _) = train_noise_injection(&teacher_init, &train, &teacher_cfg).unwrap();
    println!(
        "teacher {} ({} params): clean acc {:.4}",
        teacher.arch_id(),
        teacher.param_count(),
        accuracy(&teacher, &test).unwrap()
    );

    // Student trained with injection at 5 dB, with and without the
    // distillation term, then pruned to fit half its size.
    let init = Network::init(&[2, 32, 32, 3], 11).unwrap();
    let target = init.param_count() / 2;
    println!(
        "student 2:32r:32r:3i: {} params, prune target {target}\n",
        init.param_count()
    );
    println!("{:<28} {:>8} {:>10} {:>10}", "variant", "params", "clean", "acc@0dB");

    for (label, kd, mode) in [
        ("joint + KD", true, PruneMode::Joint),
        ("joint, no KD", false, PruneMode::Joint),
        ("separate pruning", false, PruneMode::Separate),
    ] {
        let mut cfg = TrainConfig::desk(21);
        if kd {
            cfg.kd = Some(KdConfig {
                teacher: teacher.clone(),
                temperature: 2.0,
            });
        }
        let (base, _) = match mode {
            PruneMode::Joint => train_noise_injection(&init, &train, &cfg).unwrap(),
            PruneMode::Separate => {
                let mut plain = cfg.clone();
                plain.noise_injection = false;
                plain.snr = SnrTarget::Fixed(f64::INFINITY);
                train_noise_injection(&init, &train, &plain).unwrap()
            }
        };
        let sched = PruneSchedule {
            fraction: 0.2,
            target_param_count: target,
            mode,
        };
        let prune_cfg = match mode {
            PruneMode::Joint => cfg.clone(),
            PruneMode::Separate => {
                let mut plain = cfg.clone();
                plain.noise_injection = false;
                plain.snr = SnrTarget::Fixed(f64::INFINITY);
                plain
            }
        };
        let (mut pruned, _) = prune_finetune(&base, &train, &prune_cfg, &sched).unwrap();
        if mode == PruneMode::Separate {
            // Separate ablation: noise-injection retraining happens only
            // after pruning is done.
            let (retrained, _) = train_noise_injection(&pruned, &train, &cfg).unwrap();
            pruned = retrained;
        }
        println!(
            "{label:<28} {:>8} {:>10.4} {:>10.4}",
            pruned.param_count(),
            accuracy(&pruned, &test).unwrap(),
            eval0db(&pruned, &test)
        );
    }
}
