//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the training or gradient code it is used to check.

#![allow(dead_code, clippy::needless_range_loop)]

use curricula::Sample;
use curricula::loss::{self, FineLabel, ProbabilityVector};
use curricula::model::Dense;
use curricula::Mlp;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// O(n²) Mann–Whitney AUC over all positive/negative pairs.
pub fn pairwise_auc(scores: &[f64], targets: &[bool]) -> f64 {
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

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Combined loss as a function of raw scores, built from the public loss API.
pub fn loss_of_scores(scores: &[f64; 3], y: FineLabel, lambda: f64) -> f64 {
    let p = ProbabilityVector::from_scores(scores);
    loss::combined_loss(&p, y, lambda).unwrap()
}

/// Central differences of [`loss_of_scores`].
pub fn fd_score_grad(scores: &[f64; 3], y: FineLabel, lambda: f64, h: f64) -> [f64; 3] {
    let mut g = [0.0; 3];
    for c in 0..3 {
        let mut up = *scores;
        let mut down = *scores;
        up[c] += h;
        down[c] -= h;
        g[c] = (loss_of_scores(&up, y, lambda) - loss_of_scores(&down, y, lambda)) / (2.0 * h);
    }
    g
}

/// Mean combined loss of a batch, evaluated only through `predict_proba`.
pub fn batch_loss(model: &Mlp, batch: &[(Vec<f64>, FineLabel)], lambda: f64) -> f64 {
    let total: f64 = batch
        .iter()
        .map(|(x, y)| loss::combined_loss(&model.predict_proba(x).unwrap(), *y, lambda).unwrap())
        .sum();
    total / batch.len() as f64
}

/// Flat views over all parameters, in layer order: weights then biases.
pub fn flat_params(model: &Mlp) -> Vec<f64> {
    model
        .layers()
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
        .collect()
}

pub fn set_flat_param(model: &mut Mlp, mut index: usize, value: f64) {
    for layer in model.layers_mut() {
        let nw = layer.weights.len();
        if index < nw {
            layer.weights[index] = value;
            return;
        }
        index -= nw;
        if index < layer.biases.len() {
            layer.biases[index] = value;
            return;
        }
        index -= layer.biases.len();
    }
    panic!("parameter index out of range");
}

// ---------------------------------------------------------------------------
// Standalone plain three-class cross-entropy trainer.
//
// Mirrors the library's arithmetic order (bias-first dot products, max-shifted
// softmax, per-sample gradient accumulation, multiply by 1/n, w -= lr·g) so a
// λ ≡ 0 library run should reproduce it bit for bit.
// ---------------------------------------------------------------------------

#[derive(Clone)]
pub struct PlainLayer {
    inputs: usize,
    outputs: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Clone)]
pub struct PlainNet {
    layers: Vec<PlainLayer>,
}

impl PlainNet {
    pub fn from_model(model: &Mlp) -> Self {
        PlainNet {
            layers: model
                .layers()
                .iter()
                .map(|l| PlainLayer {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    w: l.weights.clone(),
                    b: l.biases.clone(),
                })
                .collect(),
        }
    }

    pub fn to_model(&self) -> Mlp {
        Mlp::from_layers(
            self.layers
                .iter()
                .map(|l| Dense {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weights: l.w.clone(),
                    biases: l.b.clone(),
                })
                .collect(),
        )
        .unwrap()
    }

    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for (i, l) in self.layers.iter().enumerate() {
            let input = acts.last().unwrap();
            let mut out = Vec::with_capacity(l.outputs);
            for o in 0..l.outputs {
                let mut z = l.b[o];
                for j in 0..l.inputs {
                    z += l.w[o * l.inputs + j] * input[j];
                }
                if i + 1 < self.layers.len() && z < 0.0 {
                    z = 0.0;
                }
                out.push(z);
            }
            acts.push(out);
        }
        acts
    }

    pub fn probs(&self, x: &[f64]) -> [f64; 3] {
        let acts = self.forward(x);
        softmax3(acts.last().unwrap())
    }

    fn train_batch(&mut self, batch: &[&Sample], lr: f64) {
        let mut gw: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.b.len()]).collect();
        for s in batch {
            let acts = self.forward(&s.features);
            let p = softmax3(acts.last().unwrap());
            let mut delta: Vec<f64> = (0..3)
                .map(|c| p[c] - if c == s.label.index() { 1.0 } else { 0.0 })
                .collect();
            for i in (0..self.layers.len()).rev() {
                let l = &self.layers[i];
                let input = &acts[i];
                for o in 0..l.outputs {
                    gb[i][o] += delta[o];
                    for j in 0..l.inputs {
                        gw[i][o * l.inputs + j] += delta[o] * input[j];
                    }
                }
                if i == 0 {
                    break;
                }
                let mut prev = vec![0.0; l.inputs];
                for o in 0..l.outputs {
                    for j in 0..l.inputs {
                        prev[j] += l.w[o * l.inputs + j] * delta[o];
                    }
                }
                for j in 0..l.inputs {
                    if input[j] <= 0.0 {
                        prev[j] = 0.0;
                    }
                }
                delta = prev;
            }
        }
        let inv = 1.0 / batch.len() as f64;
        for (i, l) in self.layers.iter_mut().enumerate() {
            for k in 0..l.w.len() {
                l.w[k] -= lr * (gw[i][k] * inv);
            }
            for k in 0..l.b.len() {
                l.b[k] -= lr * (gb[i][k] * inv);
            }
        }
    }

    /// Mean of the per-class recalls over classes present in `samples`.
    pub fn balanced_recall(&self, samples: &[&Sample]) -> f64 {
        let mut hits = [0usize; 3];
        let mut totals = [0usize; 3];
        for s in samples {
            let p = self.probs(&s.features);
            let mut arg = 0;
            for c in 1..3 {
                if p[c] > p[arg] {
                    arg = c;
                }
            }
            totals[s.label.index()] += 1;
            if arg == s.label.index() {
                hits[s.label.index()] += 1;
            }
        }
        let mut sum = 0.0;
        let mut present = 0usize;
        for c in 0..3 {
            if totals[c] > 0 {
                sum += hits[c] as f64 / totals[c] as f64;
                present += 1;
            }
        }
        sum / present as f64
    }
}

fn softmax3(s: &[f64]) -> [f64; 3] {
    let m = s[0].max(s[1]).max(s[2]);
    let e = [(s[0] - m).exp(), (s[1] - m).exp(), (s[2] - m).exp()];
    let z = e[0] + e[1] + e[2];
    [e[0] / z, e[1] / z, e[2] / z]
}

/// Plain cross-entropy training with best-validation selection, driven by the
/// same seeds the harness would use. Returns the selected network.
pub fn plain_cross_entropy_run(
    init: &Mlp,
    train: &[&Sample],
    val: &[&Sample],
    epochs: usize,
    batch_size: usize,
    lr: f64,
    shuffle_seed: u64,
) -> PlainNet {
    let mut net = PlainNet::from_model(init);
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    let mut best: Option<(f64, PlainNet)> = None;
    for _ in 0..epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| train[i]).collect();
            net.train_batch(&batch, lr);
        }
        let score = net.balanced_recall(val);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, net.clone()));
        }
    }
    best.unwrap().1
}

/// Three well-separated isotropic blobs, `per_class` samples each.
pub fn separable_blobs(per_class: usize, seed: u64) -> curricula::Dataset {
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let centers = [[0.0, 6.0], [-6.0, -3.0], [6.0, -3.0]];
    let mut samples = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            samples.push(Sample {
                id: samples.len() as u64,
                features: vec![center[0] + noise.sample(&mut rng), center[1] + noise.sample(&mut rng)],
                label: FineLabel::from_index(c).unwrap(),
            });
        }
    }
    curricula::Dataset::new(samples).unwrap()
}
