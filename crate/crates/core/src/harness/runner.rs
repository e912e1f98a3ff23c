use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Arm, DataSource, ExperimentConfig};
use super::seeds::{derive_seed, SeedPurpose};
use crate::data::{generate_synthetic, stratified_kfold, Dataset, FoldPartition};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsReport};
use crate::model::Mlp;
use crate::train::{self, fit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldSeeds {
    pub fold: usize,
    pub init: u64,
    pub shuffle: u64,
}

impl FoldSeeds {
    pub fn derive(master: u64, fold: usize) -> Self {
        FoldSeeds {
            fold,
            init: derive_seed(master, fold as u64, SeedPurpose::Init),
            shuffle: derive_seed(master, fold as u64, SeedPurpose::Shuffle),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub fold: usize,
    pub best_epoch: usize,
    pub metrics: MetricsReport,
    /// Selected parameters, kept so callers can persist them.
    pub model: Mlp<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmReport {
    pub arm: Arm,
    pub folds: Vec<FoldReport>,
    pub mean: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub partition_seed: u64,
    pub fold_seeds: Vec<FoldSeeds>,
    pub arms: Vec<ArmReport>,
}

pub fn load_dataset(source: &DataSource) -> Result<Dataset<f64>> {
    match source {
        DataSource::Synthetic(s) => generate_synthetic(s),
        DataSource::Csv(path) => Dataset::load_csv(path),
    }
}

/// Trains one arm on one fold and scores the selected parameters on the test
/// fold. Initial parameters and the shuffling stream depend only on the fold,
/// so arms differ only in their schedule.
fn run_one(
    dataset: &Dataset<f64>,
    partition: &FoldPartition,
    seeds: &FoldSeeds,
    arm: &Arm,
    config: &ExperimentConfig,
) -> Result<FoldReport> {
    let train_set = dataset.select(&partition.train_ids)?;
    let val_set = dataset.select(&partition.val_ids)?;
    let test_set = dataset.select(&partition.test_ids)?;

    let model = Mlp::init(&config.train.layer_sizes(dataset.feature_dim()), seeds.init)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seeds.shuffle);
    let outcome = fit(model, &train_set, &val_set, &arm.scheduler, &config.train, &mut rng)?;

    let probs = train::predict_all(&outcome.best, &test_set)?;
    let labels: Vec<_> = test_set.iter().map(|s| s.label).collect();
    Ok(FoldReport {
        fold: partition.fold_index,
        best_epoch: outcome.best_epoch,
        metrics: metrics::evaluate(&probs, &labels)?,
        model: outcome.best,
    })
}

/// Runs every (arm, fold) pair. Pairs execute in parallel; results are
/// assembled in config order so the report does not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let dataset = load_dataset(&config.data).map_err(|e| e.context("loading data"))?;
    let partition_seed = derive_seed(config.seed, 0, SeedPurpose::Folds);
    let partitions = stratified_kfold(&dataset, config.folds, config.val_fraction, partition_seed)
        .map_err(|e| e.context("partitioning folds"))?;
    let fold_seeds: Vec<FoldSeeds> = (0..config.folds)
        .map(|f| FoldSeeds::derive(config.seed, f))
        .collect();

    let jobs: Vec<(usize, usize)> = (0..config.arms.len())
        .flat_map(|a| (0..config.folds).map(move |f| (a, f)))
        .collect();
    let results: Vec<Result<FoldReport>> = jobs
        .par_iter()
        .map(|&(a, f)| {
            let arm = &config.arms[a];
            run_one(&dataset, &partitions[f], &fold_seeds[f], arm, config)
                .map_err(|e| e.context(format!("arm `{}`, fold {f}", arm.name)))
        })
        .collect();

    let mut results = results.into_iter();
    let mut arms = Vec::with_capacity(config.arms.len());
    for arm in &config.arms {
        let folds = results
            .by_ref()
            .take(config.folds)
            .collect::<Result<Vec<_>>>()?;
        let per_fold: Vec<MetricsReport> = folds.iter().map(|f| f.metrics).collect();
        let mean = MetricsReport::mean(&per_fold)?;
        arms.push(ArmReport {
            arm: arm.clone(),
            folds,
            mean,
        });
    }
    if arms.is_empty() {
        return Err(Error::Config("no arms to run".into()));
    }

    Ok(ExperimentReport {
        config: config.clone(),
        partition_seed,
        fold_seeds,
        arms,
    })
}
