//! A complete experiment: write a sweep config, run every (scheme, SNR,
//! bandwidth, seed) cell with caching, and export per-curve plot data.
//!
//! Run with: cargo run --release --example full_sweep

use airlink::experiments::{
    emit_plot_data, run_sweep, ExperimentConfig, GroupBy, LrStage, SweepOptions, SweepSection,
};

fn main() {
    let dir = std::env::temp_dir().join("airlink_full_sweep");
    std::fs::create_dir_all(&dir).unwrap();

    let mut cfg = ExperimentConfig::desk_default();
    // Trim the reference config so the example finishes in seconds.
    cfg.train.epochs = 120;
    cfg.train.lr_schedule = vec![
        LrStage { epoch: 0, lr: 0.01 },
        LrStage { epoch: 60, lr: 0.001 },
    ];
    cfg.digital.finetune_epochs = 20;
    cfg.sweep = Some(SweepSection {
        schemes: vec![
            "airnet".into(),
            "airnet+sk+uep".into(),
            "airnet+interp".into(),
            "digital".into(),
        ],
        channel: "awgn".into(),
        snr_grid_db: vec![0.0, 5.0, 10.0],
        bandwidth_grid: vec![1251],
        trials: 20,
        seeds: vec![1, 2],
        out: dir.join("results.csv"),
    });

    // The TOML rendering is what the CLI's `sweep` subcommand consumes.
    let config_path = dir.join("desk.toml");
    std::fs::write(&config_path, cfg.to_toml().unwrap()).unwrap();
    println!("config written to {}", config_path.display());

    let opts = SweepOptions {
        cache_dir: Some(dir.join("cache")),
    };
    let report = run_sweep(&cfg, &opts).unwrap();
    println!(
        "sweep: {} rows written, {} skipped -> {}",
        report.rows_written,
        report.cells_skipped,
        report.csv_path.display()
    );
    for (cell, err) in &report.failures {
        eprintln!("failed cell {cell}: {err}");
    }

    println!("\n{}", std::fs::read_to_string(&report.csv_path).unwrap());

    let curves = emit_plot_data(&report.csv_path, GroupBy::Snr, &dir.join("curves")).unwrap();
    println!("plot data ({} curves):", curves.len());
    for path in &curves {
        println!("--- {}", path.file_name().unwrap().to_string_lossy());
        print!("{}", std::fs::read_to_string(path).unwrap());
    }

    // Rerunning is free: every cell is cached.
    let report = run_sweep(&cfg, &opts).unwrap();
    println!(
        "rerun: {} rows written, {} cells skipped (cache hit)",
        report.rows_written, report.cells_skipped
    );
}
