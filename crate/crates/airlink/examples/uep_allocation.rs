//! Unequal error protection: per-layer sensitivities (loss-based and
//! Hessian), the greedy bandwidth allocator, and the accuracy effect of
//! uneven expansion with and without plan-aware retraining.
//!
//! Run with: cargo run --release --example uep_allocation

use airlink::channel::ChannelSpec;
use airlink::codec::{ExpansionMode, ExpansionPlan, SpiralParams};
use airlink::nn::{Dataset, Network};
use airlink::pipeline::{
    channel_equivalent_noise_std, evaluate_over_channel, train_noise_injection, TrainConfig,
};
use airlink::rng::Rng;
use airlink::sensitivity::{allocate_expansion, hessian_top_eigenvalue, loss_sensitivity};

fn main() {
    let train = Dataset::blobs(256, 3, 1.2, 7).unwrap();
    let test = Dataset::blobs(256, 3, 1.2, 8).unwrap();
    let init = Network::init(&[2, 32, 32, 3], 1002).unwrap();
    let cfg = TrainConfig::desk(8);
    let (net, _) = train_noise_injection(&init, &train, &cfg).unwrap();

    // Per-layer sensitivities under both metrics.
    let sizes = net.layer_param_counts();
    let energies = net.layer_energies();
    let noise_std =
        channel_equivalent_noise_std(&net, 5.0, 1.0, None, &SpiralParams::default()).unwrap();
    println!("{:<6} {:>6} {:>10} {:>12} {:>12}", "layer", "d_i", "energy", "s1 (loss)", "|lambda|");
    let mut hessian = Vec::new();
    let mut loss_based = Vec::new();
    for layer in 0..net.layer_count() {
        let s1 = loss_sensitivity(&net, &train, noise_std, layer, 8, 31).unwrap();
        let est = hessian_top_eigenvalue(
            &net,
            &train,
            layer,
            1e-6,
            200,
            Rng::new(8).split(layer as u64).next_u64(),
        )
        .unwrap();
        println!(
            "{layer:<6} {:>6} {:>10.2} {:>12.4} {:>12.2}",
            sizes[layer], energies[layer], s1, est.lambda.abs()
        );
        hessian.push(est.lambda.abs());
        loss_based.push(s1);
    }

    // Allocate a 2x budget with each metric, repeat mode.
    let budget = 2 * net.param_count();
    println!("\nbudget {} real dims (2x the {} parameters):", budget, net.param_count());
    let h_plan =
        allocate_expansion(&sizes, &hessian, &energies, budget, ExpansionMode::Repeat).unwrap();
    let l_plan =
        allocate_expansion(&sizes, &loss_based, &energies, budget, ExpansionMode::Repeat).unwrap();
    let uniform = ExpansionPlan::uniform(ExpansionMode::Repeat, net.layer_count(), 2);
    println!("  hessian UEP factors    {:?} ({} dims)", h_plan.factors, h_plan.total_dims(&sizes));
    println!("  loss-based UEP factors {:?} ({} dims)", l_plan.factors, l_plan.total_dims(&sizes));
    println!("  uniform 2x             {:?} ({} dims)", uniform.factors, uniform.total_dims(&sizes));

    // Evaluate at 0 dB; also retrain with the plan active (injected noise
    // scaled by 1/r_i) and evaluate again.
    let spiral = SpiralParams::default();
    let eval = |net: &Network, plan: &ExpansionPlan| {
        evaluate_over_channel(
            net,
            &test,
            &ChannelSpec::awgn(0.0, 3),
            plan,
            &spiral,
            1.0,
            50,
            17,
        )
        .unwrap()
        .mean_accuracy
    };
    println!("\nmean accuracy at 0 dB, 50 draws:");
    println!("  uniform 2x                 {:.4}", eval(&net, &uniform));
    println!("  hessian UEP                {:.4}", eval(&net, &h_plan));
    println!("  loss-based UEP             {:.4}", eval(&net, &l_plan));

    let mut retrain_cfg = cfg.clone();
    retrain_cfg.plan = Some(h_plan.clone());
    retrain_cfg.epochs = 200;
    retrain_cfg.lr_schedule = vec![(0, 0.005), (100, 0.001)];
    retrain_cfg.seed = 4242;
    let (retrained, _) = train_noise_injection(&net, &train, &retrain_cfg).unwrap();
    println!("  hessian UEP + retraining   {:.4}", eval(&retrained, &h_plan));
}
