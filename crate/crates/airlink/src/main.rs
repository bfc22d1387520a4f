//! Command-line front end. All logic lives in the library; this binary
//! parses arguments, wires files together, and maps errors to exit codes
//! (0 ok, 1 config error, 2 runtime error).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use airlink::channel::{ChannelKind, ChannelSpec, NormalizedSignal};
use airlink::codec::{
    decode_network, encode_network, write_stream, ExpansionMode, ExpansionPlan,
};
use airlink::error::Error;
use airlink::experiments::{
    emit_plot_data, run_sweep, ExperimentConfig, GroupBy, SweepOptions,
};
use airlink::nn::{accuracy, Network};
use airlink::pipeline::{
    evaluate_over_channel, inject_noise, prune_finetune, train_interpolation,
    train_noise_injection, KdConfig, PruneSchedule, SnrTarget, TrainConfig,
};
use airlink::rng::Rng;
use airlink::sensitivity::{
    allocate_expansion, hessian_top_eigenvalue, loss_sensitivity, SensitivityMetric,
};

#[derive(Parser)]
#[command(
    name = "airlink",
    version,
    about = "Train compact networks and deliver them over simulated wireless channels"
)]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed for training / evaluation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output path (model, CSV, plan, or directory depending on command).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model per the config's [task]/[train] sections.
    Train {
        /// Also write the per-epoch training log as CSV.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Prune a trained model down to a parameter target with fine-tuning.
    Prune {
        #[arg(long)]
        model: PathBuf,
        /// Parameter-count target.
        #[arg(long)]
        target: usize,
    },
    /// Emit per-layer sensitivities as CSV.
    Sensitivity {
        #[arg(long)]
        model: PathBuf,
        /// SNR (dB) defining the loss-metric perturbation strength.
        #[arg(long, allow_negative_numbers = true)]
        snr: Option<f64>,
    },
    /// Compute an expansion plan for a bandwidth budget.
    Allocate {
        #[arg(long)]
        model: PathBuf,
        /// Budget in real channel dims.
        #[arg(long)]
        budget: usize,
        /// "repeat" or "sk".
        #[arg(long, default_value = "sk")]
        mode: String,
    },
    /// One shot through the channel: encode, transmit, decode, save.
    Transmit {
        #[arg(long)]
        model: PathBuf,
        /// Expansion plan JSON (from `allocate`); direct mapping if absent.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        snr: f64,
        /// "awgn" or "rayleigh".
        #[arg(long, default_value = "awgn")]
        channel: String,
        /// Fading block length in real dims (default: whole stream).
        #[arg(long)]
        block_len: Option<usize>,
        /// Also dump the transmitted symbol stream (binary).
        #[arg(long)]
        dump_stream: Option<PathBuf>,
    },
    /// Monte-Carlo accuracy of a model over the channel.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        snr: f64,
        #[arg(long, default_value = "awgn")]
        channel: String,
        /// Fading block length in real dims (default: whole stream).
        #[arg(long)]
        block_len: Option<usize>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Run the configured sweep, writing the results CSV.
    Sweep,
    /// Train an interpolation boundary pair.
    InterpTrain {
        #[arg(long, allow_negative_numbers = true)]
        snr_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        snr_max: Option<f64>,
        #[arg(long)]
        out_min: PathBuf,
        #[arg(long)]
        out_max: PathBuf,
    },
    /// Convert a sweep CSV into per-curve plot files.
    PlotData {
        #[arg(long)]
        csv: PathBuf,
        /// Varying axis: "snr" or "bandwidth".
        #[arg(long)]
        group_by: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems are config errors; --help/--version are ok.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    ExperimentConfig::load(path)
}

fn require_out(cli: &Cli) -> Result<PathBuf, Error> {
    cli.out
        .clone()
        .ok_or_else(|| Error::Config("--out is required for this command".into()))
}

fn channel_spec(
    channel: &str,
    snr_db: f64,
    seed: u64,
    block_len: Option<usize>,
) -> Result<ChannelSpec, Error> {
    let kind = match channel {
        "awgn" => ChannelKind::Awgn,
        "rayleigh" => ChannelKind::RayleighBlock,
        other => return Err(Error::Config(format!("unknown channel '{other}'"))),
    };
    Ok(ChannelSpec {
        kind,
        snr_db,
        sigma_h: 1.0,
        seed,
        block_len,
    })
}

/// Builds a TrainConfig from the config file, training the teacher first
/// when distillation is requested.
fn train_config_from(
    cfg: &ExperimentConfig,
    data: &airlink::nn::Dataset,
    seed: u64,
) -> Result<TrainConfig, Error> {
    let kd = match &cfg.train.kd {
        Some(kd_cfg) => {
            let mut dims = vec![cfg.task.features];
            dims.extend(&kd_cfg.teacher_hidden);
            dims.push(cfg.task.classes);
            let init = Network::init(&dims, Rng::new(seed).split(0x7ea).next_u64())?;
            let teacher_cfg = TrainConfig {
                snr: SnrTarget::Fixed(f64::INFINITY),
                epochs: kd_cfg.teacher_epochs,
                batch_size: cfg.train.batch_size,
                momentum: cfg.train.momentum,
                lr_schedule: cfg.train.lr_schedule.iter().map(|s| (s.epoch, s.lr)).collect(),
                noise_injection: false,
                kd: None,
                power: cfg.codec.power,
                plan: None,
                spiral: cfg.codec.spiral(),
                seed: Rng::new(seed).split(0x7eb).next_u64(),
            };
            let (teacher, _) = train_noise_injection(&init, data, &teacher_cfg)?;
            Some(KdConfig {
                teacher,
                temperature: kd_cfg.temperature,
            })
        }
        None => None,
    };
    let snr = match cfg.train.snr_train_db {
        Some(snr) => SnrTarget::Fixed(snr),
        None => SnrTarget::Fixed(5.0),
    };
    Ok(TrainConfig {
        snr,
        epochs: cfg.train.epochs,
        batch_size: cfg.train.batch_size,
        momentum: cfg.train.momentum,
        lr_schedule: cfg.train.lr_schedule.iter().map(|s| (s.epoch, s.lr)).collect(),
        noise_injection: cfg.train.noise_injection,
        kd,
        power: cfg.codec.power,
        plan: None,
        spiral: cfg.codec.spiral(),
        seed: Rng::new(seed).split(0x7e51).next_u64(),
    })
}

fn load_plan(path: &PathBuf) -> Result<ExpansionPlan, Error> {
    let text = std::fs::read_to_string(path)?;
    let plan: ExpansionPlan =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("bad plan file: {e}")))?;
    plan.validate()?;
    Ok(plan)
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Train { log } => {
            let cfg = load_config(&cli)?;
            let out = require_out(&cli)?;
            let (train_data, test_data) = cfg.task.load_datasets()?;
            let tc = train_config_from(&cfg, &train_data, cli.seed)?;
            let init = Network::init(
                &cfg.task.arch_dims(),
                Rng::new(cli.seed).split(0x1417).next_u64(),
            )?;
            let (net, train_log) = train_noise_injection(&init, &train_data, &tc)?;
            airlink::io::save_model(&net, &out)?;
            if let Some(log_path) = log {
                std::fs::write(log_path, train_log.to_csv())?;
            }
            println!(
                "trained {} ({} params), train acc {:.4}, test acc {:.4} -> {}",
                net.arch_id(),
                net.param_count(),
                accuracy(&net, &train_data)?,
                accuracy(&net, &test_data)?,
                out.display()
            );
            Ok(())
        }
        Command::Prune { model, target } => {
            let cfg = load_config(&cli)?;
            let out = require_out(&cli)?;
            let (train_data, test_data) = cfg.task.load_datasets()?;
            let net = airlink::io::load_model(model)?;
            let tc = train_config_from(&cfg, &train_data, cli.seed)?;
            let sched = PruneSchedule {
                fraction: cfg.prune.fraction,
                target_param_count: *target,
                mode: cfg.prune.mode()?,
            };
            let (pruned, _) = prune_finetune(&net, &train_data, &tc, &sched)?;
            airlink::io::save_model(&pruned, &out)?;
            println!(
                "pruned {} -> {} ({} params), test acc {:.4} -> {}",
                net.param_count(),
                pruned.param_count(),
                pruned.arch_id(),
                accuracy(&pruned, &test_data)?,
                out.display()
            );
            Ok(())
        }
        Command::Sensitivity { model, snr } => {
            let cfg = load_config(&cli)?;
            let (train_data, _) = cfg.task.load_datasets()?;
            let net = airlink::io::load_model(model)?;
            let metric = cfg.uep.metric()?;
            let snr_db = snr.or(cfg.train.snr_train_db).unwrap_or(5.0);
            let noise_std = airlink::pipeline::channel_equivalent_noise_std(
                &net,
                snr_db,
                cfg.codec.power,
                None,
                &cfg.codec.spiral(),
            )?;
            let sizes = net.layer_param_counts();
            let energies = net.layer_energies();
            let mut csv = String::from("layer_index,d_i,energy,s1,lambda,normalized_s\n");
            for layer in 0..net.layer_count() {
                let s1 = loss_sensitivity(
                    &net,
                    &train_data,
                    noise_std,
                    layer,
                    cfg.uep.loss_trials,
                    Rng::new(cli.seed).split(0x1055).next_u64(),
                )?;
                let est = hessian_top_eigenvalue(
                    &net,
                    &train_data,
                    layer,
                    cfg.uep.eigen_epsilon,
                    cfg.uep.eigen_max_iter,
                    Rng::new(cli.seed).split(0x4e55).split(layer as u64).next_u64(),
                )?;
                if !est.converged {
                    eprintln!("warning: layer {layer} eigenvalue did not converge");
                }
                let metric_value = match metric {
                    SensitivityMetric::Hessian => est.lambda.abs(),
                    SensitivityMetric::LossBased => s1,
                };
                csv.push_str(&format!(
                    "{layer},{},{:.6e},{:.6e},{:.6e},{:.6e}\n",
                    sizes[layer],
                    energies[layer],
                    s1,
                    est.lambda,
                    metric_value / energies[layer],
                ));
            }
            match &cli.out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Allocate {
            model,
            budget,
            mode,
        } => {
            let cfg = load_config(&cli)?;
            let (train_data, _) = cfg.task.load_datasets()?;
            let net = airlink::io::load_model(model)?;
            let mode = match mode.as_str() {
                "repeat" => ExpansionMode::Repeat,
                "sk" => ExpansionMode::Sk,
                other => return Err(Error::Config(format!("unknown mode '{other}'"))),
            };
            let metric = cfg.uep.metric()?;
            let snr_db = cfg.train.snr_train_db.unwrap_or(5.0);
            let mut sens = Vec::new();
            for layer in 0..net.layer_count() {
                let value = match metric {
                    SensitivityMetric::Hessian => hessian_top_eigenvalue(
                        &net,
                        &train_data,
                        layer,
                        cfg.uep.eigen_epsilon,
                        cfg.uep.eigen_max_iter,
                        Rng::new(cli.seed).split(0x4e55).split(layer as u64).next_u64(),
                    )?
                    .lambda
                    .abs(),
                    SensitivityMetric::LossBased => {
                        let noise_std = airlink::pipeline::channel_equivalent_noise_std(
                            &net,
                            snr_db,
                            cfg.codec.power,
                            None,
                            &cfg.codec.spiral(),
                        )?;
                        loss_sensitivity(
                            &net,
                            &train_data,
                            noise_std,
                            layer,
                            cfg.uep.loss_trials,
                            Rng::new(cli.seed).split(0x1055).next_u64(),
                        )?
                    }
                };
                sens.push(value);
            }
            let plan = allocate_expansion(
                &net.layer_param_counts(),
                &sens,
                &net.layer_energies(),
                *budget,
                mode,
            )?;
            let json = serde_json::to_string_pretty(&plan)
                .map_err(|e| Error::Format(format!("plan serialize: {e}")))?;
            match &cli.out {
                Some(path) => std::fs::write(path, json)?,
                None => println!("{json}"),
            }
            let used = plan.total_dims(&net.layer_param_counts());
            eprintln!(
                "allocated {used} of {budget} real dims ({:.1} of {:.1} complex symbols)",
                used as f64 / 2.0,
                *budget as f64 / 2.0
            );
            Ok(())
        }
        Command::Transmit {
            model,
            plan,
            snr,
            channel,
            block_len,
            dump_stream,
        } => {
            let cfg = load_config(&cli)?;
            let out = require_out(&cli)?;
            let (_, test_data) = cfg.task.load_datasets()?;
            let net = airlink::io::load_model(model)?;
            let plan = match plan {
                Some(path) => load_plan(path)?,
                None => ExpansionPlan::direct(net.layer_count()),
            };
            let spec = channel_spec(channel, *snr, cli.seed, *block_len)?;
            let stream = encode_network(&net, &plan, &cfg.codec.spiral(), cfg.codec.power)?;
            if let Some(path) = dump_stream {
                let mut file = std::fs::File::create(path)?;
                write_stream(&stream, &mut file)?;
            }
            let sig = NormalizedSignal {
                dims: stream.dims.clone(),
                gain: stream.gain,
                power_budget: cfg.codec.power,
            };
            let mut rng = Rng::new(spec.seed).split(0x7a);
            let (received, fades) = airlink::channel::transmit(&sig, &spec, &mut rng)?;
            let cleaned = match fades {
                Some(fades) => {
                    let eq = airlink::channel::equalize(&received, &fades)?;
                    eq.dims[..stream.dims.len()].to_vec()
                }
                None => received,
            };
            let decoded = decode_network(&cleaned, &stream.meta(), &net.arch_id())?;
            airlink::io::save_model(&decoded, &out)?;
            println!(
                "sent {} real dims ({:.1} complex symbols) at {snr} dB over {channel}: accuracy {:.4} -> {:.4}",
                stream.len(),
                stream.len() as f64 / 2.0,
                accuracy(&net, &test_data)?,
                accuracy(&decoded, &test_data)?,
            );
            Ok(())
        }
        Command::Evaluate {
            model,
            plan,
            snr,
            channel,
            block_len,
            trials,
        } => {
            let cfg = load_config(&cli)?;
            let (_, test_data) = cfg.task.load_datasets()?;
            let net = airlink::io::load_model(model)?;
            let plan = match plan {
                Some(path) => load_plan(path)?,
                None => ExpansionPlan::direct(net.layer_count()),
            };
            let spec = channel_spec(channel, *snr, cli.seed, *block_len)?;
            let eval = evaluate_over_channel(
                &net,
                &test_data,
                &spec,
                &plan,
                &cfg.codec.spiral(),
                cfg.codec.power,
                *trials,
                cli.seed,
            )?;
            println!(
                "{channel} @ {snr} dB, {} trials: accuracy {:.4} +/- {:.4}",
                trials, eval.mean_accuracy, eval.std_accuracy
            );
            Ok(())
        }
        Command::Sweep => {
            let mut cfg = load_config(&cli)?;
            if let (Some(out), Some(sweep)) = (&cli.out, cfg.sweep.as_mut()) {
                sweep.out = out.clone();
            }
            let report = run_sweep(&cfg, &SweepOptions::default())?;
            println!(
                "sweep: {} rows written, {} cells skipped -> {}",
                report.rows_written,
                report.cells_skipped,
                report.csv_path.display()
            );
            if !report.failures.is_empty() {
                eprintln!("{} cells failed:", report.failures.len());
                for (cell, err) in &report.failures {
                    eprintln!("  {cell}: {err}");
                }
                return Err(Error::Numeric("some sweep cells failed".into()));
            }
            Ok(())
        }
        Command::InterpTrain {
            snr_min,
            snr_max,
            out_min,
            out_max,
        } => {
            let cfg = load_config(&cli)?;
            let (train_data, test_data) = cfg.task.load_datasets()?;
            let lo = snr_min.unwrap_or(cfg.interp.snr_min_db);
            let hi = snr_max.unwrap_or(cfg.interp.snr_max_db);
            let tc = train_config_from(&cfg, &train_data, cli.seed)?;
            let init = Network::init(
                &cfg.task.arch_dims(),
                Rng::new(cli.seed).split(0x1417).next_u64(),
            )?;
            let (pair, _) = train_interpolation(&init, &train_data, lo, hi, &tc)?;
            airlink::io::save_model(&pair.w_min, out_min)?;
            airlink::io::save_model(&pair.w_max, out_max)?;
            let mut eval_rng = Rng::new(cli.seed).split(0xacc);
            let mid = airlink::pipeline::interpolate(&pair, 0.5 * (lo + hi))?;
            let noisy = inject_noise(
                &mid,
                0.5 * (lo + hi),
                cfg.codec.power,
                None,
                &cfg.codec.spiral(),
                &mut eval_rng,
            )?;
            println!(
                "boundaries at {lo} / {hi} dB saved; midpoint clean acc {:.4}, one noisy draw {:.4}",
                accuracy(&mid, &test_data)?,
                accuracy(&noisy, &test_data)?,
            );
            Ok(())
        }
        Command::PlotData { csv, group_by } => {
            let out = require_out(&cli)?;
            let group = GroupBy::parse(group_by)?;
            let files = emit_plot_data(csv, group, &out)?;
            println!("wrote {} curve files under {}", files.len(), out.display());
            Ok(())
        }
    }
}
