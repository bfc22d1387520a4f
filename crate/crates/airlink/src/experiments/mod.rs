//! Experiment orchestration: config-driven sweeps with content-addressed
//! caching, fixed-schema CSV results, and plot-data export.

mod cache;
mod config;
mod plot;
mod sweep;

pub use cache::{Cache, CACHE_ENV_VAR, CODE_VERSION};
pub use config::{
    CodecSection, DigitalSection, ExperimentConfig, InterpSection, KdSection, LrStage,
    PruneSection, Scheme, SweepSection, TaskSection, TrainSection, UepSection, CONFIG_VERSION,
};
pub use plot::{emit_plot_data, GroupBy};
pub use sweep::{fmt_snr, run_sweep, SweepOptions, SweepReport, CSV_HEADER};
