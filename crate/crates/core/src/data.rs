//! Datasets, the synthetic three-class generator, CSV I/O and stratified
//! k-fold partitioning.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{FineLabel, NUM_CLASSES};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub id: u64,
    pub features: Vec<T>,
    pub label: FineLabel,
}

/// Immutable, ordered collection of samples sharing one feature width.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    samples: Vec<Sample<T>>,
    feature_dim: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(samples: Vec<Sample<T>>) -> Result<Self> {
        let feature_dim = samples
            .first()
            .map(|s| s.features.len())
            .ok_or_else(|| Error::validation("a dataset needs at least one sample"))?;
        if feature_dim == 0 {
            return Err(Error::validation("feature dimension must be positive"));
        }
        let mut ids = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.features.len() != feature_dim {
                return Err(Error::validation(format!(
                    "sample {} has {} features, expected {feature_dim}",
                    s.id,
                    s.features.len()
                )));
            }
            if s.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("sample {} has non-finite features", s.id)));
            }
            if !ids.insert(s.id) {
                return Err(Error::validation(format!("duplicate sample id {}", s.id)));
            }
        }
        Ok(Dataset {
            samples,
            feature_dim,
        })
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for s in &self.samples {
            counts[s.label.index()] += 1;
        }
        counts
    }

    /// Samples whose ids are listed, in the listed order.
    pub fn select(&self, ids: &[u64]) -> Result<Vec<&Sample<T>>> {
        let index: std::collections::HashMap<u64, &Sample<T>> =
            self.samples.iter().map(|s| (s.id, s)).collect();
        ids.iter()
            .map(|id| {
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::validation(format!("unknown sample id {id}")))
            })
            .collect()
    }

    /// Writes `id,label,f1,...,fd` with a header line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["id".to_string(), "label".to_string()];
        header.extend((1..=self.feature_dim).map(|i| format!("f{i}")));
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![s.id.to_string(), s.label.to_string()];
            row.extend(s.features.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `id,label,f1,...,fd`; the header fixes the feature width.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let parse_err = |line: u64, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let header = reader.headers()?.clone();
        if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
            return Err(parse_err(1, "file is empty".into()));
        }
        if header.len() < 3 || &header[0] != "id" || &header[1] != "label" {
            return Err(parse_err(
                1,
                "header must be `id,label,f1,...,fd` with at least one feature".into(),
            ));
        }
        let feature_dim = header.len() - 2;

        let mut samples = Vec::new();
        let mut ids = HashSet::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != header.len() {
                return Err(parse_err(
                    line,
                    format!("expected {} fields, found {}", header.len(), record.len()),
                ));
            }
            let id: u64 = record[0]
                .parse()
                .map_err(|_| parse_err(line, format!("bad id `{}`", &record[0])))?;
            let label = record[1]
                .parse::<usize>()
                .ok()
                .and_then(|v| FineLabel::from_index(v).ok())
                .ok_or_else(|| {
                    parse_err(line, format!("label `{}` is not one of 0, 1, 2", &record[1]))
                })?;
            let features = record
                .iter()
                .skip(2)
                .map(|f| match f.parse::<T>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(parse_err(line, format!("bad feature value `{f}`"))),
                })
                .collect::<Result<Vec<T>>>()?;
            if !ids.insert(id) {
                return Err(parse_err(line, format!("duplicate id {id}")));
            }
            samples.push(Sample {
                id,
                features,
                label,
            });
        }
        if samples.is_empty() {
            return Err(parse_err(1, "no samples".into()));
        }
        debug_assert!(samples.iter().all(|s| s.features.len() == feature_dim));
        Dataset::new(samples)
    }
}

/// Parameters of the synthetic three-blob generator.
///
/// Classes 1 and 2 sit on the first axis at `±separation · overlap / 2`, so
/// `overlap = 0` makes their means coincide and `overlap = 1` spaces them a
/// full `separation` apart. Class 0 is displaced by `separation` along the
/// second axis, orthogonal to the 1–2 axis. All blobs are isotropic
/// Gaussians with standard deviation `noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub counts: [usize; NUM_CLASSES],
    #[serde(default = "SynthConfig::default_feature_dim")]
    pub feature_dim: usize,
    #[serde(default = "SynthConfig::default_separation")]
    pub separation: f64,
    #[serde(default = "SynthConfig::default_overlap")]
    pub overlap: f64,
    #[serde(default = "SynthConfig::default_noise")]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SynthConfig {
    fn default_feature_dim() -> usize {
        2
    }
    fn default_separation() -> f64 {
        3.0
    }
    fn default_overlap() -> f64 {
        0.5
    }
    fn default_noise() -> f64 {
        1.0
    }

    pub fn new(counts: [usize; NUM_CLASSES], seed: u64) -> Self {
        SynthConfig {
            counts,
            feature_dim: Self::default_feature_dim(),
            separation: Self::default_separation(),
            overlap: Self::default_overlap(),
            noise: Self::default_noise(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.counts.contains(&0) {
            return Err(Error::validation(format!(
                "every class needs at least one sample, got counts {:?}",
                self.counts
            )));
        }
        if self.feature_dim < 2 {
            return Err(Error::validation(format!(
                "the synthetic geometry needs at least 2 features, got {}",
                self.feature_dim
            )));
        }
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return Err(Error::validation(format!(
                "separation must be positive, got {}",
                self.separation
            )));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::validation(format!(
                "overlap must lie in [0, 1], got {}",
                self.overlap
            )));
        }
        if !(self.noise.is_finite() && self.noise > 0.0) {
            let what = if self.overlap == 0.0 {
                "zero noise with coincident class 1/2 means is degenerate; "
            } else {
                ""
            };
            return Err(Error::validation(format!(
                "{what}noise must be positive, got {}",
                self.noise
            )));
        }
        Ok(())
    }

    pub fn class_means(&self) -> [Vec<f64>; NUM_CLASSES] {
        let mut means: [Vec<f64>; NUM_CLASSES] = Default::default();
        for m in means.iter_mut() {
            *m = vec![0.0; self.feature_dim];
        }
        means[0][1] = self.separation;
        let half = self.separation * self.overlap / 2.0;
        means[1][0] = -half;
        means[2][0] = half;
        means
    }
}

/// Samples are emitted in a seeded random class order with ids `0..n`.
pub fn generate_synthetic<T: Scalar>(config: &SynthConfig) -> Result<Dataset<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut labels: Vec<FineLabel> = FineLabel::ALL
        .iter()
        .zip(config.counts)
        .flat_map(|(&y, n)| std::iter::repeat_n(y, n))
        .collect();
    labels.shuffle(&mut rng);

    let means = config.class_means();
    let samples = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let features = means[label.index()]
                .iter()
                .map(|&mu| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    T::lit(mu + config.noise * z)
                })
                .collect();
            Sample {
                id: i as u64,
                features,
                label,
            }
        })
        .collect();
    Dataset::new(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// One cross-validation iteration: fold `fold_index` is the test set and the
/// other folds are split into train and validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPartition {
    pub fold_index: usize,
    pub train_ids: Vec<u64>,
    pub val_ids: Vec<u64>,
    pub test_ids: Vec<u64>,
}

impl FoldPartition {
    pub fn split_of(&self, id: u64) -> Option<Split> {
        if self.train_ids.contains(&id) {
            Some(Split::Train)
        } else if self.val_ids.contains(&id) {
            Some(Split::Val)
        } else if self.test_ids.contains(&id) {
            Some(Split::Test)
        } else {
            None
        }
    }
}

/// Stratified k-fold partitions.
///
/// Each class is shuffled with the seeded generator and dealt round-robin
/// into the `k` folds, with the dealing start rotated by the running sample
/// count so fold totals also stay within one class-worth of each other.
/// For partition `i`, the non-test samples of each class are split into
/// validation and training so that every per-class count is within one of
/// its exact proportional share.
pub fn stratified_kfold<T: Scalar>(
    dataset: &Dataset<T>,
    k: usize,
    val_fraction: f64,
    seed: u64,
) -> Result<Vec<FoldPartition>> {
    if k < 2 {
        return Err(Error::validation(format!("need at least 2 folds, got {k}")));
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::validation(format!(
            "val_fraction must lie in (0, 1), got {val_fraction}"
        )));
    }
    let counts = dataset.class_counts();
    for (c, &n) in counts.iter().enumerate() {
        if n < k {
            return Err(Error::validation(format!(
                "class {c} has {n} samples, fewer than the {k} folds"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // folds[class][fold] -> ids in shuffled order
    let mut folds: Vec<Vec<Vec<u64>>> = Vec::with_capacity(NUM_CLASSES);
    let mut offset = 0usize;
    for class in FineLabel::ALL {
        let mut ids: Vec<u64> = dataset
            .samples()
            .iter()
            .filter(|s| s.label == class)
            .map(|s| s.id)
            .collect();
        ids.shuffle(&mut rng);
        let mut per_fold = vec![Vec::new(); k];
        for (i, id) in ids.iter().enumerate() {
            per_fold[(i + offset) % k].push(*id);
        }
        offset = (offset + ids.len()) % k;
        folds.push(per_fold);
    }

    let mut partitions = Vec::with_capacity(k);
    for test_fold in 0..k {
        let mut part = FoldPartition {
            fold_index: test_fold,
            train_ids: Vec::new(),
            val_ids: Vec::new(),
            test_ids: Vec::new(),
        };
        for (class, per_fold) in folds.iter().enumerate() {
            let n = counts[class] as f64;
            let rest: Vec<u64> = (0..k)
                .filter(|&f| f != test_fold)
                .flat_map(|f| per_fold[f].iter().copied())
                .collect();
            let ideal_rest = n * (k - 1) as f64 / k as f64;
            let n_val = choose_val_count(rest.len(), ideal_rest * val_fraction, ideal_rest * (1.0 - val_fraction));
            part.test_ids.extend_from_slice(&per_fold[test_fold]);
            part.val_ids.extend_from_slice(&rest[..n_val]);
            part.train_ids.extend_from_slice(&rest[n_val..]);
        }
        partitions.push(part);
    }
    Ok(partitions)
}

/// Integer validation count for `available` samples minimising the larger of
/// the validation and training deviations from their ideal shares.
fn choose_val_count(available: usize, ideal_val: f64, ideal_train: f64) -> usize {
    let lo = (ideal_val.floor() as i64 - 1).max(0) as usize;
    let hi = ((ideal_val.ceil() as i64 + 1).max(0) as usize).min(available);
    (lo..=hi.max(lo).min(available))
        .min_by(|&a, &b| {
            let dev = |v: usize| {
                let val_dev = (v as f64 - ideal_val).abs();
                let train_dev = ((available - v) as f64 - ideal_train).abs();
                val_dev.max(train_dev)
            };
            dev(a).total_cmp(&dev(b))
        })
        .unwrap_or(0)
}

/// Writes `id,fold_index,split` rows for every partition, ids ascending.
pub fn write_partitions(partitions: &[FoldPartition], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(File::create(path)?);
    writeln!(out, "id,fold_index,split")?;
    for part in partitions {
        let mut rows: Vec<(u64, Split)> = part
            .train_ids
            .iter()
            .map(|&id| (id, Split::Train))
            .chain(part.val_ids.iter().map(|&id| (id, Split::Val)))
            .chain(part.test_ids.iter().map(|&id| (id, Split::Test)))
            .collect();
        rows.sort_by_key(|r| r.0);
        for (id, split) in rows {
            writeln!(out, "{id},{},{}", part.fold_index, split.name())?;
        }
    }
    out.flush()?;
    Ok(())
}
