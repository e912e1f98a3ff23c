//! Hard three-class loss, easy grouped binary loss, and their λ-blend.
//!
//! Fine labels are 0 = false recall, 1 = negative, 2 = malignant. The coarse
//! task separates class 0 from the union of classes 1 and 2, with
//! `p(z = 0) = p⁰` and `p(z = 1) = 1 - p⁰`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const NUM_CLASSES: usize = 3;

/// Probabilities are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]` inside every log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum FineLabel {
    FalseRecall = 0,
    Negative = 1,
    Malignant = 2,
}

impl FineLabel {
    pub const ALL: [FineLabel; 3] = [FineLabel::FalseRecall, FineLabel::Negative, FineLabel::Malignant];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Self> {
        match index {
            0 => Ok(FineLabel::FalseRecall),
            1 => Ok(FineLabel::Negative),
            2 => Ok(FineLabel::Malignant),
            _ => Err(Error::validation(format!(
                "label {index} is outside {{0, 1, 2}}"
            ))),
        }
    }

    /// `z = 1{y != 0}`.
    pub fn coarsen(self) -> CoarseLabel {
        match self {
            FineLabel::FalseRecall => CoarseLabel::FalseRecall,
            FineLabel::Negative | FineLabel::Malignant => CoarseLabel::NegativeOrMalignant,
        }
    }
}

impl TryFrom<u8> for FineLabel {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        FineLabel::from_index(v as usize)
    }
}

impl From<FineLabel> for u8 {
    fn from(y: FineLabel) -> u8 {
        y as u8
    }
}

impl fmt::Display for FineLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CoarseLabel {
    FalseRecall = 0,
    NegativeOrMalignant = 1,
}

impl CoarseLabel {
    pub fn index(self) -> usize {
        self as usize
    }
}

pub fn coarsen(y: FineLabel) -> CoarseLabel {
    y.coarsen()
}

/// Model output over the three fine classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityVector<T>([T; NUM_CLASSES]);

impl<T: Scalar> ProbabilityVector<T> {
    /// Accepts components in `[0, 1]` summing to one. Exact zeros and ones are
    /// allowed; the loss functions clamp them.
    pub fn new(p: [T; NUM_CLASSES]) -> Result<Self> {
        if p.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
            return Err(Error::validation(format!(
                "probabilities must lie in [0, 1], got {p:?}"
            )));
        }
        let sum: T = p.iter().copied().sum();
        if (sum - T::one()).abs() > sum_tolerance::<T>() {
            return Err(Error::validation(format!(
                "probabilities must sum to 1, got {p:?} (sum {sum})"
            )));
        }
        Ok(ProbabilityVector(p))
    }

    pub fn uniform() -> Self {
        let third = T::one() / T::lit(3.0);
        ProbabilityVector([third; NUM_CLASSES])
    }

    /// Numerically stable softmax of unnormalised scores.
    pub fn from_scores(scores: &[T; NUM_CLASSES]) -> Self {
        ProbabilityVector(softmax(scores))
    }

    pub fn as_array(&self) -> &[T; NUM_CLASSES] {
        &self.0
    }

    pub fn get(&self, class: usize) -> T {
        self.0[class]
    }

    /// Lowest index wins ties.
    pub fn argmax(&self) -> FineLabel {
        let mut best = 0;
        for c in 1..NUM_CLASSES {
            if self.0[c] > self.0[best] {
                best = c;
            }
        }
        FineLabel::from_index(best).unwrap()
    }

    /// `p(z = 1) = p¹ + p² = 1 - p⁰`.
    pub fn coarse_positive(&self) -> T {
        T::one() - self.0[0]
    }
}

fn sum_tolerance<T: Scalar>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(16.0))
}

pub fn softmax<T: Scalar>(scores: &[T; NUM_CLASSES]) -> [T; NUM_CLASSES] {
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let mut out = [T::zero(); NUM_CLASSES];
    let mut sum = T::zero();
    for (o, &s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    out
}

#[inline]
fn clamped_neg_log<T: Scalar>(p: T) -> T {
    let floor = T::lit(PROB_FLOOR);
    -p.max(floor).min(T::one() - floor).ln()
}

/// `-ln p^(y)`: the one-hot cross-entropy collapses to the true-class term.
pub fn hard_loss<T: Scalar>(p: &ProbabilityVector<T>, y: FineLabel) -> T {
    clamped_neg_log(p.get(y.index()))
}

/// `-((1 - z)·ln p⁰ + z·ln(1 - p⁰))`.
pub fn easy_loss<T: Scalar>(p: &ProbabilityVector<T>, z: CoarseLabel) -> T {
    match z {
        CoarseLabel::FalseRecall => clamped_neg_log(p.get(0)),
        CoarseLabel::NegativeOrMalignant => clamped_neg_log(p.coarse_positive()),
    }
}

fn check_lambda<T: Scalar>(lambda: T) -> Result<()> {
    if lambda >= T::zero() && lambda <= T::one() {
        Ok(())
    } else {
        Err(Error::validation(format!("lambda must lie in [0, 1], got {lambda}")))
    }
}

/// `λ·easy(p, coarsen(y)) + (1 - λ)·hard(p, y)`.
pub fn combined_loss<T: Scalar>(p: &ProbabilityVector<T>, y: FineLabel, lambda: T) -> Result<T> {
    check_lambda(lambda)?;
    Ok(lambda * easy_loss(p, y.coarsen()) + (T::one() - lambda) * hard_loss(p, y))
}

/// Gradient of the combined loss with respect to the pre-softmax scores.
///
/// Returns the loss alongside the gradient so callers that need both only
/// run the softmax once.
pub fn combined_loss_and_grad<T: Scalar>(
    scores: &[T; NUM_CLASSES],
    y: FineLabel,
    lambda: T,
) -> Result<(T, [T; NUM_CLASSES])> {
    check_lambda(lambda)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::validation(format!("scores must be finite, got {scores:?}")));
    }
    let p = softmax(scores);
    let probs = ProbabilityVector(p);
    let loss = lambda * easy_loss(&probs, y.coarsen()) + (T::one() - lambda) * hard_loss(&probs, y);

    let mut grad = [T::zero(); NUM_CLASSES];
    let hard_weight = T::one() - lambda;
    match y.coarsen() {
        CoarseLabel::FalseRecall => {
            // easy and hard parts coincide in form: p - e0 and p - onehot(y)
            for c in 0..NUM_CLASSES {
                let easy = p[c] - delta::<T>(c, 0);
                let hard = p[c] - delta::<T>(c, y.index());
                grad[c] = lambda * easy + hard_weight * hard;
            }
        }
        CoarseLabel::NegativeOrMalignant => {
            // (p⁰ / (1 - p⁰))·(δ₀c - p_c) with 1 - p⁰ taken as p¹ + p², which
            // keeps precision as p⁰ -> 1 and makes the components cancel exactly
            let rest = p[1] + p[2];
            let ratio = p[0] / rest.max(T::lit(PROB_FLOOR));
            for c in 0..NUM_CLASSES {
                let easy = if c == 0 { ratio * rest } else { -ratio * p[c] };
                let hard = p[c] - delta::<T>(c, y.index());
                grad[c] = lambda * easy + hard_weight * hard;
            }
        }
    }
    Ok((loss, grad))
}

pub fn combined_loss_grad<T: Scalar>(
    scores: &[T; NUM_CLASSES],
    y: FineLabel,
    lambda: T,
) -> Result<[T; NUM_CLASSES]> {
    combined_loss_and_grad(scores, y, lambda).map(|(_, g)| g)
}

#[inline]
fn delta<T: Scalar>(a: usize, b: usize) -> T {
    if a == b {
        T::one()
    } else {
        T::zero()
    }
}
