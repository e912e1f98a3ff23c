//! Accuracy, balanced accuracy, macro one-vs-rest AUC and the coarse binary
//! task metrics.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{CoarseLabel, FineLabel, ProbabilityVector, NUM_CLASSES};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub average_auc: f64,
    pub binary_accuracy: f64,
    pub binary_auc: f64,
    pub n_samples: usize,
}

impl MetricsReport {
    pub const COLUMNS: [&'static str; 5] = [
        "accuracy",
        "balanced_accuracy",
        "average_auc",
        "binary_accuracy",
        "binary_auc",
    ];

    /// The five metrics in column order.
    pub fn values(&self) -> [f64; 5] {
        [
            self.accuracy,
            self.balanced_accuracy,
            self.average_auc,
            self.binary_accuracy,
            self.binary_auc,
        ]
    }

    /// Unweighted mean of each metric; `n_samples` is summed.
    pub fn mean(reports: &[MetricsReport]) -> Result<MetricsReport> {
        if reports.is_empty() {
            return Err(Error::validation("cannot average zero reports"));
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Ok(MetricsReport {
            accuracy: avg(|r| r.accuracy),
            balanced_accuracy: avg(|r| r.balanced_accuracy),
            average_auc: avg(|r| r.average_auc),
            binary_accuracy: avg(|r| r.binary_accuracy),
            binary_auc: avg(|r| r.binary_auc),
            n_samples: reports.iter().map(|r| r.n_samples).sum(),
        })
    }
}

fn check_lengths<A, B>(probs: &[A], labels: &[B]) -> Result<()> {
    if probs.len() != labels.len() {
        return Err(Error::validation(format!(
            "{} predictions but {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Err(Error::validation("no samples to evaluate"));
    }
    Ok(())
}

fn ratio<T: Scalar>(num: usize, den: usize) -> T {
    T::lit(num as f64 / den as f64)
}

/// Fraction of samples whose argmax (lowest index on ties) equals the label.
pub fn accuracy<T: Scalar>(probs: &[ProbabilityVector<T>], labels: &[FineLabel]) -> Result<T> {
    check_lengths(probs, labels)?;
    let correct = probs
        .iter()
        .zip(labels)
        .filter(|(p, y)| p.argmax() == **y)
        .count();
    Ok(ratio(correct, labels.len()))
}

/// Recall of each class, `None` where the class is absent.
pub fn per_class_recall<T: Scalar>(
    probs: &[ProbabilityVector<T>],
    labels: &[FineLabel],
) -> Result<[Option<T>; NUM_CLASSES]> {
    check_lengths(probs, labels)?;
    let mut hits = [0usize; NUM_CLASSES];
    let mut totals = [0usize; NUM_CLASSES];
    for (p, y) in probs.iter().zip(labels) {
        totals[y.index()] += 1;
        if p.argmax() == *y {
            hits[y.index()] += 1;
        }
    }
    let mut out = [None; NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        if totals[c] > 0 {
            out[c] = Some(ratio(hits[c], totals[c]));
        }
    }
    Ok(out)
}

/// Unweighted mean of the three per-class recalls.
pub fn balanced_accuracy<T: Scalar>(
    probs: &[ProbabilityVector<T>],
    labels: &[FineLabel],
) -> Result<T> {
    let recalls = per_class_recall(probs, labels)?;
    let mut sum = T::zero();
    for (c, r) in recalls.iter().enumerate() {
        sum += r.ok_or_else(|| {
            Error::validation(format!("class {c} is absent from the labels"))
        })?;
    }
    Ok(sum / T::lit(NUM_CLASSES as f64))
}

/// Mann–Whitney AUC: P(positive outscores negative) + ½·P(tie).
///
/// Sorts once and walks tie groups, counting wins and ties in integers so the
/// result is bit-identical to the pairwise definition.
pub fn auc_binary<T: Scalar>(scores: &[T], targets: &[bool]) -> Result<T> {
    check_lengths(scores, targets)?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::validation("AUC scores must not be NaN"));
    }
    let n_pos = targets.iter().filter(|&&t| t).count() as u64;
    let n_neg = targets.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::validation(
            "AUC needs at least one positive and one negative target",
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));

    // twice the Mann–Whitney U: 2 per win, 1 per tie
    let mut doubled: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if targets[order[j]] {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        doubled += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
        i = j;
    }
    Ok(T::lit(doubled as f64 / (2 * n_pos * n_neg) as f64))
}

fn require_all_classes(labels: &[FineLabel]) -> Result<()> {
    for y in FineLabel::ALL {
        if !labels.contains(&y) {
            return Err(Error::validation(format!(
                "class {} is absent from the labels",
                y.index()
            )));
        }
    }
    Ok(())
}

/// Per-class one-vs-rest AUC using that class's probability as the score.
pub fn one_vs_rest_auc<T: Scalar>(
    probs: &[ProbabilityVector<T>],
    labels: &[FineLabel],
) -> Result<[T; NUM_CLASSES]> {
    check_lengths(probs, labels)?;
    require_all_classes(labels)?;
    let mut out = [T::zero(); NUM_CLASSES];
    for (c, o) in out.iter_mut().enumerate() {
        let scores: Vec<T> = probs.iter().map(|p| p.get(c)).collect();
        let targets: Vec<bool> = labels.iter().map(|y| y.index() == c).collect();
        *o = auc_binary(&scores, &targets)?;
    }
    Ok(out)
}

/// Macro-averaged one-vs-rest AUC.
pub fn average_auc<T: Scalar>(probs: &[ProbabilityVector<T>], labels: &[FineLabel]) -> Result<T> {
    let per_class = one_vs_rest_auc(probs, labels)?;
    Ok(per_class.iter().copied().sum::<T>() / T::lit(NUM_CLASSES as f64))
}

/// Coarse prediction: `z = 0` only when `p⁰ > 0.5`, so an exact 0.5 goes to `z = 1`.
pub fn predict_coarse<T: Scalar>(p: &ProbabilityVector<T>) -> CoarseLabel {
    if p.get(0) > T::lit(0.5) {
        CoarseLabel::FalseRecall
    } else {
        CoarseLabel::NegativeOrMalignant
    }
}

/// `(binary_accuracy, binary_auc)` for the false-recall-vs-rest task, scored
/// by `1 - p⁰`.
pub fn binary_task_metrics<T: Scalar>(
    probs: &[ProbabilityVector<T>],
    labels: &[FineLabel],
) -> Result<(T, T)> {
    check_lengths(probs, labels)?;
    let targets: Vec<bool> = labels
        .iter()
        .map(|y| y.coarsen() == CoarseLabel::NegativeOrMalignant)
        .collect();
    if targets.iter().all(|&t| t) || targets.iter().all(|&t| !t) {
        return Err(Error::validation(
            "binary task metrics need both coarse classes present",
        ));
    }
    let correct = probs
        .iter()
        .zip(labels)
        .filter(|(p, y)| predict_coarse(p) == y.coarsen())
        .count();
    let scores: Vec<T> = probs.iter().map(|p| p.coarse_positive()).collect();
    Ok((ratio(correct, labels.len()), auc_binary(&scores, &targets)?))
}

/// All five metrics at once.
pub fn evaluate<T: Scalar>(
    probs: &[ProbabilityVector<T>],
    labels: &[FineLabel],
) -> Result<MetricsReport> {
    let (binary_accuracy, binary_auc) = binary_task_metrics(probs, labels)?;
    Ok(MetricsReport {
        accuracy: accuracy(probs, labels)?.to_f64_lossy(),
        balanced_accuracy: balanced_accuracy(probs, labels)?.to_f64_lossy(),
        average_auc: average_auc(probs, labels)?.to_f64_lossy(),
        binary_accuracy: binary_accuracy.to_f64_lossy(),
        binary_auc: binary_auc.to_f64_lossy(),
        n_samples: labels.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(p: [f64; 3]) -> ProbabilityVector<f64> {
        ProbabilityVector::new(p).unwrap()
    }

    const Y0: FineLabel = FineLabel::FalseRecall;
    const Y1: FineLabel = FineLabel::Negative;
    const Y2: FineLabel = FineLabel::Malignant;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[pv([1.0, 0.0, 0.0]); 4], &[Y0; 4]).unwrap(), 1.0);
        let probs = [pv([0.2, 0.5, 0.3]), pv([0.6, 0.2, 0.2])];
        assert_eq!(accuracy(&probs, &[Y1, Y2]).unwrap(), 0.5);
        let u = ProbabilityVector::<f64>::uniform();
        assert_eq!(accuracy(&[u; 3], &[Y2; 3]).unwrap(), 0.0);
        assert!(accuracy(&[u; 3], &[Y2; 2]).is_err());
        assert!(accuracy::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn balanced_accuracy_examples() {
        let labels = [Y0, Y1, Y2, Y0, Y1, Y2];
        let perfect: Vec<_> = labels
            .iter()
            .map(|y| {
                let mut p = [0.0; 3];
                p[y.index()] = 1.0;
                pv(p)
            })
            .collect();
        assert_eq!(balanced_accuracy(&perfect, &labels).unwrap(), 1.0);
        let always0 = vec![pv([0.8, 0.1, 0.1]); 6];
        assert!((balanced_accuracy(&always0, &labels).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        match balanced_accuracy(&always0[..2], &[Y0, Y1]) {
            Err(Error::Validation(msg)) => assert!(msg.contains("class 2")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc_binary(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
        assert_eq!(auc_binary(&[0.4; 5], &[true, false, true, false, false]).unwrap(), 0.5);
        assert_eq!(
            auc_binary(&[0.8, 0.6, 0.4, 0.2], &[true, false, true, false]).unwrap(),
            0.75
        );
        assert!(auc_binary(&[0.1, 0.2], &[true, true]).is_err());
        assert!(auc_binary(&[f64::NAN, 0.2], &[true, false]).is_err());
        assert_eq!(auc_binary::<f32>(&[0.8, 0.6, 0.4, 0.2], &[true, false, true, false]).unwrap(), 0.75);
    }

    #[test]
    fn average_auc_examples() {
        let probs = [pv([0.8, 0.1, 0.1]), pv([0.1, 0.8, 0.1]), pv([0.1, 0.1, 0.8])];
        assert_eq!(average_auc(&probs, &[Y0, Y1, Y2]).unwrap(), 1.0);
        assert!(average_auc(&probs, &[Y0, Y1, Y1]).is_err());
    }

    #[test]
    fn binary_threshold() {
        let probs = [pv([0.6, 0.2, 0.2]), pv([0.2, 0.4, 0.4])];
        let (acc, auc) = binary_task_metrics(&probs, &[Y0, Y2]).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(auc, 1.0);
        assert_eq!(predict_coarse(&pv([0.5, 0.25, 0.25])), CoarseLabel::NegativeOrMalignant);
        assert!(binary_task_metrics(&probs, &[Y1, Y2]).is_err());
    }

    fn pairwise_auc(scores: &[f64], targets: &[bool]) -> f64 {
        let mut sum = 0.0;
        let mut pairs = 0u64;
        for (i, &si) in scores.iter().enumerate() {
            if !targets[i] {
                continue;
            }
            for (j, &sj) in scores.iter().enumerate() {
                if targets[j] {
                    continue;
                }
                pairs += 1;
                if si > sj {
                    sum += 1.0;
                } else if si == sj {
                    sum += 0.5;
                }
            }
        }
        sum / pairs as f64
    }

    fn arb_scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
        (2usize..120)
            .prop_flat_map(|n| {
                (
                    prop::collection::vec((0u8..12).prop_map(|v| v as f64 / 11.0), n),
                    prop::collection::vec(any::<bool>(), n),
                )
            })
            .prop_filter("both classes", |(_, t)| t.iter().any(|&v| v) && t.iter().any(|&v| !v))
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise_and_monotone_maps((scores, targets) in arb_scored()) {
            let auc = auc_binary(&scores, &targets).unwrap();
            prop_assert_eq!(auc, pairwise_auc(&scores, &targets));
            let affine: Vec<f64> = scores.iter().map(|s| 3.0 * s - 7.0).collect();
            let cubic: Vec<f64> = scores.iter().map(|s| s * s * s).collect();
            prop_assert_eq!(auc_binary(&affine, &targets).unwrap(), auc);
            prop_assert_eq!(auc_binary(&cubic, &targets).unwrap(), auc);
        }

        #[test]
        fn swapping_classes_one_and_two_changes_nothing(
            raw in prop::collection::vec((prop::array::uniform3(-3.0f64..3.0), 0usize..3), 6..80)
        ) {
            let mut probs: Vec<_> = raw.iter().map(|(s, _)| ProbabilityVector::from_scores(s)).collect();
            let mut labels: Vec<_> = raw.iter().map(|(_, y)| FineLabel::from_index(*y).unwrap()).collect();
            // guarantee every class is present
            labels[0] = Y0;
            labels[1] = Y1;
            labels[2] = Y2;
            let before = evaluate(&probs, &labels).unwrap();
            for p in probs.iter_mut() {
                let a = *p.as_array();
                *p = ProbabilityVector::new([a[0], a[2], a[1]]).unwrap();
            }
            for y in labels.iter_mut() {
                *y = match *y { Y1 => Y2, Y2 => Y1, other => other };
            }
            let after = evaluate(&probs, &labels).unwrap();
            // argmax ties between classes 1 and 2 break differently after the swap
            let tie = raw.iter().any(|(s, _)| s[1] == s[2]);
            if !tie {
                prop_assert_eq!(before.accuracy, after.accuracy);
                prop_assert!((before.balanced_accuracy - after.balanced_accuracy).abs() < 1e-12);
            }
            prop_assert!((before.average_auc - after.average_auc).abs() < 1e-12);
            prop_assert_eq!(before.binary_accuracy, after.binary_accuracy);
            prop_assert_eq!(before.binary_auc, after.binary_auc);
            for v in before.values() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn fine_correctness_implies_binary_correctness(
            s in prop::array::uniform3(-4.0f64..4.0), y in 0usize..3
        ) {
            let p = ProbabilityVector::from_scores(&s);
            let y = FineLabel::from_index(y).unwrap();
            let fine_says_zero = p.argmax() == Y0;
            let threshold_says_zero = predict_coarse(&p) == CoarseLabel::FalseRecall;
            prop_assume!(fine_says_zero == threshold_says_zero);
            if p.argmax() == y {
                prop_assert_eq!(predict_coarse(&p), y.coarsen());
            }
        }

        #[test]
        fn balanced_equals_plain_accuracy_on_balanced_labels(
            raw in prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 1..30)
        ) {
            let probs: Vec<_> = raw.iter().flat_map(|s| {
                let p = ProbabilityVector::from_scores(s);
                [p, p, p]
            }).collect();
            let labels: Vec<_> = (0..probs.len()).map(|i| FineLabel::from_index(i % 3).unwrap()).collect();
            let a = accuracy(&probs, &labels).unwrap();
            let b = balanced_accuracy(&probs, &labels).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn shuffled_labels_give_chance_auc() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 1000;
        let probs: Vec<_> = (0..n)
            .map(|_| {
                let s = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
                ProbabilityVector::from_scores(&s)
            })
            .collect();
        let labels: Vec<_> = (0..n)
            .map(|_| FineLabel::from_index(rng.random_range(0..3)).unwrap())
            .collect();
        let auc = average_auc(&probs, &labels).unwrap();
        assert!((auc - 0.5).abs() < 0.05, "auc {auc}");
    }
}
