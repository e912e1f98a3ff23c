use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::data::SynthConfig;
use crate::error::{Error, Result};
use crate::scheduler::{SchedulerKind, SchedulerSpec, DEFAULT_EPSILON};
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SynthConfig),
    Csv(PathBuf),
}

/// One row of the comparison: a named scheduler.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub name: String,
    pub scheduler: SchedulerSpec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub folds: usize,
    pub val_fraction: f64,
    pub train: TrainConfig,
    pub arms: Vec<Arm>,
    /// Master seed; fold, initialisation and shuffling seeds derive from it.
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_folds")]
    folds: usize,
    #[serde(default = "default_val_fraction")]
    val_fraction: f64,
    out_dir: Option<PathBuf>,
    data: RawData,
    #[serde(default)]
    train: RawTrain,
    arms: Vec<RawArm>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum RawData {
    Synthetic(SynthConfig),
    Csv(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrain {
    #[serde(default = "default_learning_rate")]
    learning_rate: f64,
    #[serde(default = "default_epochs")]
    epochs: usize,
    #[serde(default = "default_batch_size")]
    batch_size: usize,
    #[serde(default = "default_hidden_sizes")]
    hidden_sizes: Vec<usize>,
}

impl Default for RawTrain {
    fn default() -> Self {
        RawTrain {
            learning_rate: default_learning_rate(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            hidden_sizes: default_hidden_sizes(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArm {
    kind: SchedulerKind,
    name: Option<String>,
    #[serde(alias = "L")]
    switch_epoch: Option<usize>,
    #[serde(alias = "E")]
    total_epochs: Option<usize>,
    epsilon: Option<f64>,
}

fn default_folds() -> usize {
    5
}
fn default_val_fraction() -> f64 {
    0.2
}
fn default_learning_rate() -> f64 {
    TrainConfig::default().learning_rate
}
fn default_epochs() -> usize {
    TrainConfig::default().epochs
}
fn default_batch_size() -> usize {
    TrainConfig::default().batch_size
}
fn default_hidden_sizes() -> Vec<usize> {
    TrainConfig::default().hidden_sizes
}

impl ExperimentConfig {
    /// Reads and validates a TOML config. Relative CSV paths resolve against
    /// the config file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
            .map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
                other => other,
            })
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;

        let train = TrainConfig {
            learning_rate: raw.train.learning_rate,
            epochs: raw.train.epochs,
            batch_size: raw.train.batch_size,
            seed: raw.seed,
            hidden_sizes: raw.train.hidden_sizes,
        };
        train.validate().map_err(|e| Error::Config(format!("[train]: {e}")))?;

        let data = match raw.data {
            RawData::Synthetic(s) => {
                s.validate().map_err(|e| Error::Config(format!("[data.synthetic]: {e}")))?;
                DataSource::Synthetic(s)
            }
            RawData::Csv(p) if p.is_relative() => DataSource::Csv(base_dir.join(p)),
            RawData::Csv(p) => DataSource::Csv(p),
        };

        if raw.folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {}", raw.folds)));
        }
        if !(raw.val_fraction > 0.0 && raw.val_fraction < 1.0) {
            return Err(Error::Config(format!(
                "val_fraction must lie in (0, 1), got {}",
                raw.val_fraction
            )));
        }
        if let DataSource::Synthetic(s) = &data {
            if let Some(c) = s.counts.iter().position(|&n| n < raw.folds) {
                return Err(Error::Config(format!(
                    "class {c} has {} samples, fewer than the {} folds",
                    s.counts[c], raw.folds
                )));
            }
        }

        if raw.arms.is_empty() {
            return Err(Error::Config("at least one [[arms]] entry is required".into()));
        }
        let mut names = HashSet::new();
        let mut arms = Vec::with_capacity(raw.arms.len());
        for (i, a) in raw.arms.into_iter().enumerate() {
            let name = a.name.unwrap_or_else(|| a.kind.name().to_string());
            let total = a.total_epochs.unwrap_or(train.epochs);
            if total != train.epochs {
                return Err(Error::Config(format!(
                    "arm {i} (`{name}`): E = {total} does not match train.epochs = {}",
                    train.epochs
                )));
            }
            let switch = a.switch_epoch.unwrap_or(total / 2);
            let scheduler = SchedulerSpec::with_epsilon(
                a.kind,
                switch,
                total,
                a.epsilon.unwrap_or(DEFAULT_EPSILON),
            )
            .map_err(|e| Error::Config(format!("arm {i} (`{name}`): {e}")))?;
            if !names.insert(name.clone()) {
                return Err(Error::Config(format!(
                    "duplicate arm name `{name}`; give repeated kinds distinct `name`s"
                )));
            }
            arms.push(Arm { name, scheduler });
        }

        Ok(ExperimentConfig {
            data,
            folds: raw.folds,
            val_fraction: raw.val_fraction,
            train,
            arms,
            seed: raw.seed,
            out_dir: raw.out_dir,
        })
    }
}
