//! Minibatch SGD on the scheduled combined loss, with best-validation model
//! selection.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::loss::{ProbabilityVector, NUM_CLASSES};
use crate::metrics;
use crate::model::Mlp;
use crate::scalar::Scalar;
use crate::scheduler::SchedulerSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub hidden_sizes: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: Self::default_learning_rate(),
            epochs: Self::default_epochs(),
            batch_size: Self::default_batch_size(),
            seed: 0,
            hidden_sizes: Self::default_hidden_sizes(),
        }
    }
}

impl TrainConfig {
    pub fn default_learning_rate() -> f64 {
        0.05
    }
    pub fn default_epochs() -> usize {
        100
    }
    pub fn default_batch_size() -> usize {
        32
    }
    pub fn default_hidden_sizes() -> Vec<usize> {
        vec![16]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::validation(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be at least 1"));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::validation(format!(
                "hidden layer widths must be positive, got {:?}",
                self.hidden_sizes
            )));
        }
        Ok(())
    }

    /// `[input_dim, hidden..., 3]`.
    pub fn layer_sizes(&self, input_dim: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_sizes.len() + 2);
        sizes.push(input_dim);
        sizes.extend_from_slice(&self.hidden_sizes);
        sizes.push(NUM_CLASSES);
        sizes
    }
}

/// One shuffled pass over `train` at a fixed λ. Returns the mean per-sample
/// combined loss, where each sample's loss is taken at the parameters in
/// force when its batch was processed.
pub fn train_epoch<T: Scalar, R: Rng + ?Sized>(
    model: &mut Mlp<T>,
    train: &[&Sample<T>],
    lambda: T,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<T> {
    if train.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    if config.batch_size == 0 {
        return Err(Error::validation("batch_size must be at least 1"));
    }
    let lr = T::lit(config.learning_rate);
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(rng);

    let mut total = T::zero();
    for batch in order.chunks(config.batch_size) {
        let (loss, grads) = model.batch_loss_and_grad(
            batch
                .iter()
                .map(|&i| (train[i].features.as_slice(), train[i].label)),
            lambda,
        )?;
        total += loss * T::from_usize(batch.len()).unwrap();
        model.sgd_step(&grads, lr);
    }
    Ok(total / T::from_usize(train.len()).unwrap())
}

pub fn predict_all<T: Scalar>(model: &Mlp<T>, samples: &[&Sample<T>]) -> Result<Vec<ProbabilityVector<T>>> {
    samples
        .iter()
        .map(|s| model.predict_proba(&s.features))
        .collect()
}

/// Mean recall over the classes present in `samples`.
pub fn selection_score<T: Scalar>(model: &Mlp<T>, samples: &[&Sample<T>]) -> Result<T> {
    let probs = predict_all(model, samples)?;
    let labels: Vec<_> = samples.iter().map(|s| s.label).collect();
    let recalls = metrics::per_class_recall(&probs, &labels)?;
    let present: Vec<T> = recalls.iter().flatten().copied().collect();
    Ok(present.iter().copied().sum::<T>() / T::from_usize(present.len()).unwrap())
}

#[derive(Debug, Clone)]
pub struct EpochRecord<T> {
    pub epoch: usize,
    pub lambda: T,
    pub train_loss: T,
    pub val_score: T,
}

#[derive(Debug, Clone)]
pub struct FitOutcome<T> {
    /// Parameters from the epoch with the best validation balanced accuracy.
    pub best: Mlp<T>,
    pub best_epoch: usize,
    pub last: Mlp<T>,
    pub history: Vec<EpochRecord<T>>,
}

/// Trains for `scheduler.total_epochs()` epochs, drawing λ once per epoch,
/// and keeps the parameters with the highest validation balanced accuracy
/// (earliest epoch on ties).
pub fn fit<T: Scalar, R: Rng + ?Sized>(
    mut model: Mlp<T>,
    train: &[&Sample<T>],
    val: &[&Sample<T>],
    scheduler: &SchedulerSpec<T>,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<FitOutcome<T>> {
    config.validate()?;
    if val.is_empty() {
        return Err(Error::validation("validation set is empty"));
    }
    let epochs = scheduler.total_epochs();
    let mut best: Option<(T, usize, Mlp<T>)> = None;
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let lambda = scheduler.lambda_at(epoch)?;
        let train_loss = train_epoch(&mut model, train, lambda, config, rng)?;
        if !model.is_finite() {
            return Err(Error::validation(format!(
                "parameters diverged at epoch {epoch}; lower the learning rate"
            )));
        }
        let val_score = selection_score(&model, val)?;
        if best.as_ref().is_none_or(|(s, _, _)| val_score > *s) {
            best = Some((val_score, epoch, model.clone()));
        }
        history.push(EpochRecord {
            epoch,
            lambda,
            train_loss,
            val_score,
        });
    }
    let (_, best_epoch, best_model) =
        best.ok_or_else(|| Error::validation("training ran for zero epochs"))?;
    Ok(FitOutcome {
        best: best_model,
        best_epoch,
        last: model,
        history,
    })
}
