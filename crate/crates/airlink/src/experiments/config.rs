//! Sweep configuration: a single versioned TOML file.
//!
//! Minimal example:
//!
//! ```toml
//! config_version = 1
//!
//! [task]
//! kind = "blobs"
//! classes = 3
//! features = 2
//! train_samples = 256
//! test_samples = 256
//! spread = 0.55
//! data_seed = 7
//! hidden = [32, 32]
//!
//! [train]
//! epochs = 600
//! batch_size = 32
//! momentum = 0.9
//! lr_schedule = [{ epoch = 0, lr = 0.01 }, { epoch = 300, lr = 0.001 }]
//! snr_train_db = 5.0
//! noise_injection = true
//!
//! [sweep]
//! schemes = ["airnet", "digital"]
//! channel = "awgn"
//! snr_grid_db = [0.0, 5.0, 10.0]
//! bandwidth_grid = [1251]
//! trials = 50
//! seeds = [1, 2]
//! out = "results.csv"
//! ```
//!
//! `[train.kd]`, `[prune]`, `[codec]`, `[uep]`, `[interp]`, and `[digital]`
//! refine the defaults; unknown keys are rejected. A `snr_train_db` of
//! `inf` disables noise during training; omitting it trains each cell at
//! its own test SNR.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Dataset;
use crate::sensitivity::SensitivityMetric;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub config_version: u32,
    pub task: TaskSection,
    pub train: TrainSection,
    #[serde(default)]
    pub prune: PruneSection,
    #[serde(default)]
    pub codec: CodecSection,
    #[serde(default)]
    pub uep: UepSection,
    #[serde(default)]
    pub interp: InterpSection,
    #[serde(default)]
    pub digital: DigitalSection,
    /// Required only by `run_sweep`.
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    /// "blobs" or "csv".
    pub kind: String,
    pub classes: usize,
    pub features: usize,
    #[serde(default = "default_samples")]
    pub train_samples: usize,
    #[serde(default = "default_samples")]
    pub test_samples: usize,
    #[serde(default = "default_spread")]
    pub spread: f64,
    #[serde(default)]
    pub data_seed: u64,
    /// Hidden-layer widths.
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub train_csv: Option<PathBuf>,
    #[serde(default)]
    pub test_csv: Option<PathBuf>,
}

fn default_samples() -> usize {
    256
}

fn default_spread() -> f64 {
    1.2
}

impl TaskSection {
    pub fn arch_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.features];
        dims.extend(&self.hidden);
        dims.push(self.classes);
        dims
    }

    pub fn load_datasets(&self) -> Result<(Dataset, Dataset)> {
        match self.kind.as_str() {
            "blobs" => {
                if self.features != 2 {
                    return Err(Error::Config("blobs task uses 2 features".into()));
                }
                let train =
                    Dataset::blobs(self.train_samples, self.classes, self.spread, self.data_seed)?;
                let test = Dataset::blobs(
                    self.test_samples,
                    self.classes,
                    self.spread,
                    self.data_seed.wrapping_add(1),
                )?;
                Ok((train, test))
            }
            "csv" => {
                let train_path = self
                    .train_csv
                    .as_ref()
                    .ok_or_else(|| Error::Config("csv task needs train_csv".into()))?;
                let test_path = self
                    .test_csv
                    .as_ref()
                    .ok_or_else(|| Error::Config("csv task needs test_csv".into()))?;
                Ok((
                    Dataset::from_csv(train_path, self.features, self.classes)?,
                    Dataset::from_csv(test_path, self.features, self.classes)?,
                ))
            }
            other => Err(Error::Config(format!("unknown task kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrStage {
    pub epoch: usize,
    pub lr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    pub lr_schedule: Vec<LrStage>,
    /// Training SNR; omit to train each cell at its test SNR.
    #[serde(default)]
    pub snr_train_db: Option<f64>,
    #[serde(default = "default_true")]
    pub noise_injection: bool,
    #[serde(default)]
    pub kd: Option<KdSection>,
}

fn default_batch() -> usize {
    32
}

fn default_momentum() -> f64 {
    0.9
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KdSection {
    pub teacher_hidden: Vec<usize>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    pub teacher_epochs: usize,
}

fn default_temperature() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PruneSection {
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    #[serde(default = "default_prune_mode")]
    pub mode: String,
}

fn default_fraction() -> f64 {
    0.1
}

fn default_prune_mode() -> String {
    "joint".into()
}

impl Default for PruneSection {
    fn default() -> Self {
        PruneSection {
            fraction: default_fraction(),
            mode: default_prune_mode(),
        }
    }
}

impl PruneSection {
    pub fn mode(&self) -> Result<crate::pipeline::PruneMode> {
        match self.mode.as_str() {
            "joint" => Ok(crate::pipeline::PruneMode::Joint),
            "separate" => Ok(crate::pipeline::PruneMode::Separate),
            other => Err(Error::Config(format!("unknown prune mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodecSection {
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_power")]
    pub power: f64,
}

fn default_delta() -> f64 {
    1.0
}

fn default_gamma() -> f64 {
    2.0 * std::f64::consts::PI
}

fn default_power() -> f64 {
    1.0
}

impl Default for CodecSection {
    fn default() -> Self {
        CodecSection {
            delta: default_delta(),
            gamma: default_gamma(),
            power: default_power(),
        }
    }
}

impl CodecSection {
    pub fn spiral(&self) -> crate::codec::SpiralParams {
        crate::codec::SpiralParams {
            delta: self.delta,
            gamma: self.gamma,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UepSection {
    #[serde(default = "default_metric")]
    pub metric: String,
    /// Network is pruned to bandwidth / prune_divisor before expansion.
    #[serde(default = "default_divisor")]
    pub prune_divisor: usize,
    #[serde(default = "default_eigen_eps")]
    pub eigen_epsilon: f64,
    #[serde(default = "default_eigen_iters")]
    pub eigen_max_iter: usize,
    #[serde(default = "default_loss_trials")]
    pub loss_trials: usize,
}

fn default_metric() -> String {
    "hessian".into()
}

fn default_divisor() -> usize {
    2
}

fn default_eigen_eps() -> f64 {
    crate::sensitivity::DEFAULT_EIGEN_EPSILON
}

fn default_eigen_iters() -> usize {
    crate::sensitivity::DEFAULT_EIGEN_MAX_ITER
}

fn default_loss_trials() -> usize {
    8
}

impl Default for UepSection {
    fn default() -> Self {
        UepSection {
            metric: default_metric(),
            prune_divisor: default_divisor(),
            eigen_epsilon: default_eigen_eps(),
            eigen_max_iter: default_eigen_iters(),
            loss_trials: default_loss_trials(),
        }
    }
}

impl UepSection {
    pub fn metric(&self) -> Result<SensitivityMetric> {
        match self.metric.as_str() {
            "hessian" => Ok(SensitivityMetric::Hessian),
            "loss_based" => Ok(SensitivityMetric::LossBased),
            other => Err(Error::Config(format!("unknown sensitivity metric '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpSection {
    #[serde(default = "default_interp_min")]
    pub snr_min_db: f64,
    #[serde(default = "default_interp_max")]
    pub snr_max_db: f64,
}

fn default_interp_min() -> f64 {
    -3.0
}

fn default_interp_max() -> f64 {
    10.0
}

impl Default for InterpSection {
    fn default() -> Self {
        InterpSection {
            snr_min_db: default_interp_min(),
            snr_max_db: default_interp_max(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DigitalSection {
    #[serde(default = "default_bits_grid")]
    pub bits_grid: Vec<u32>,
    #[serde(default = "default_keep_ratios")]
    pub keep_ratios: Vec<f64>,
    #[serde(default = "default_digital_fraction")]
    pub prune_fraction: f64,
    #[serde(default = "default_finetune_epochs")]
    pub finetune_epochs: usize,
    #[serde(default = "default_finetune_lr")]
    pub finetune_lr: f64,
    #[serde(default)]
    pub fixed_rate: Option<f64>,
    #[serde(default = "default_csit_fades")]
    pub csit_fades: usize,
}

fn default_bits_grid() -> Vec<u32> {
    vec![1, 2, 3, 4, 6, 8, 12, 16, 24]
}

fn default_keep_ratios() -> Vec<f64> {
    vec![1.0, 0.75, 0.5, 0.25]
}

fn default_digital_fraction() -> f64 {
    0.2
}

fn default_finetune_epochs() -> usize {
    30
}

fn default_finetune_lr() -> f64 {
    0.01
}

fn default_csit_fades() -> usize {
    10_000
}

impl Default for DigitalSection {
    fn default() -> Self {
        DigitalSection {
            bits_grid: default_bits_grid(),
            keep_ratios: default_keep_ratios(),
            prune_fraction: default_digital_fraction(),
            finetune_epochs: default_finetune_epochs(),
            finetune_lr: default_finetune_lr(),
            fixed_rate: None,
            csit_fades: default_csit_fades(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub schemes: Vec<String>,
    #[serde(default = "default_channel")]
    pub channel: String,
    pub snr_grid_db: Vec<f64>,
    pub bandwidth_grid: Vec<usize>,
    pub trials: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

fn default_channel() -> String {
    "awgn".into()
}

/// Delivery schemes a sweep can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Airnet,
    AirnetSkUep,
    AirnetInterp,
    Digital,
    DigitalCsit,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "airnet" => Ok(Scheme::Airnet),
            "airnet+sk+uep" => Ok(Scheme::AirnetSkUep),
            "airnet+interp" => Ok(Scheme::AirnetInterp),
            "digital" => Ok(Scheme::Digital),
            "digital_csit" => Ok(Scheme::DigitalCsit),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scheme::Airnet => "airnet",
            Scheme::AirnetSkUep => "airnet+sk+uep",
            Scheme::AirnetInterp => "airnet+interp",
            Scheme::Digital => "digital",
            Scheme::DigitalCsit => "digital_csit",
        };
        f.write_str(s)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("serialize: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.config_version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config_version {} unsupported (expected {CONFIG_VERSION})",
                self.config_version
            )));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.schemes.is_empty()
                || sweep.snr_grid_db.is_empty()
                || sweep.bandwidth_grid.is_empty()
                || sweep.seeds.is_empty()
            {
                return Err(Error::Config("sweep grids must be non-empty".into()));
            }
            if sweep.trials == 0 {
                return Err(Error::Config("sweep needs at least one trial".into()));
            }
            for s in &sweep.schemes {
                Scheme::parse(s)?;
            }
            match sweep.channel.as_str() {
                "awgn" | "rayleigh" => {}
                other => return Err(Error::Config(format!("unknown channel '{other}'"))),
            }
        }
        self.prune.mode()?;
        self.uep.metric()?;
        if self.task.kind == "csv" {
            for path in [&self.task.train_csv, &self.task.test_csv].into_iter().flatten() {
                if !path.exists() {
                    return Err(Error::Config(format!(
                        "referenced file missing: {}",
                        path.display()
                    )));
                }
            }
        }
        if self.train.lr_schedule.is_empty() {
            return Err(Error::Config("lr_schedule must be non-empty".into()));
        }
        if self.interp.snr_min_db >= self.interp.snr_max_db {
            return Err(Error::Config("interp range needs min < max".into()));
        }
        Ok(())
    }

    /// Desk-scale reference configuration (blobs task, 2-32-32-3 network).
    pub fn desk_default() -> Self {
        ExperimentConfig {
            config_version: CONFIG_VERSION,
            task: TaskSection {
                kind: "blobs".into(),
                classes: 3,
                features: 2,
                train_samples: 256,
                test_samples: 256,
                spread: 1.2,
                data_seed: 7,
                hidden: vec![32, 32],
                train_csv: None,
                test_csv: None,
            },
            train: TrainSection {
                epochs: 600,
                batch_size: 32,
                momentum: 0.9,
                lr_schedule: vec![
                    LrStage { epoch: 0, lr: 0.01 },
                    LrStage { epoch: 300, lr: 0.001 },
                ],
                snr_train_db: Some(5.0),
                noise_injection: true,
                kd: None,
            },
            prune: PruneSection::default(),
            codec: CodecSection::default(),
            uep: UepSection::default(),
            interp: InterpSection::default(),
            digital: DigitalSection::default(),
            sweep: Some(SweepSection {
                schemes: vec!["airnet".into(), "digital".into()],
                channel: "awgn".into(),
                snr_grid_db: vec![0.0, 5.0, 10.0, 20.0],
                bandwidth_grid: vec![1251],
                trials: 50,
                seeds: vec![1, 2, 3],
                out: PathBuf::from("results.csv"),
            }),
        }
    }
}
