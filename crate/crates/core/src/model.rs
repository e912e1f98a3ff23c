//! Small feedforward softmax classifier with hand-written backprop.
//!
//! Hidden layers use ReLU; the final layer emits three scores that go through
//! a softmax. With no hidden layers this is multinomial logistic regression.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::loss::{self, FineLabel, ProbabilityVector, NUM_CLASSES};
use crate::scalar::Scalar;

/// One fully connected layer. `weights` is row-major `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            biases: vec![T::zero(); outputs],
        }
    }

    #[inline]
    pub fn weight(&self, out: usize, inp: usize) -> T {
        self.weights[out * self.inputs + inp]
    }

    fn forward(&self, x: &[T], out: &mut Vec<T>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let mut acc = self.biases[o];
            for (w, xi) in row.iter().zip(x) {
                acc += *w * *xi;
            }
            out.push(acc);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layer_sizes: Vec<usize>,
    layers: Vec<Dense<T>>,
}

/// Per-sample activations kept for the backward pass. `activations[0]` is the
/// input; `activations[i + 1]` is the output of layer `i` (post-ReLU for
/// hidden layers, raw scores for the last).
#[derive(Debug, Clone, Default)]
pub struct Trace<T> {
    activations: Vec<Vec<T>>,
}

impl<T> Trace<T> {
    pub fn scores(&self) -> &[T] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::validation(format!(
            "layer sizes need an input and an output width, got {layer_sizes:?}"
        )));
    }
    if *layer_sizes.last().unwrap() != NUM_CLASSES {
        return Err(Error::validation(format!(
            "final layer width must be {NUM_CLASSES}, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::validation(format!(
            "layer widths must be positive, got {layer_sizes:?}"
        )));
    }
    Ok(())
}

impl<T: Scalar> Mlp<T> {
    /// Weights ~ N(0, 1) / sqrt(fan_in), biases zero.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let scale = 1.0 / (inputs as f64).sqrt();
                let mut layer = Dense::zeros(inputs, outputs);
                for v in layer.weights.iter_mut() {
                    let draw: f64 = StandardNormal.sample(&mut rng);
                    *v = T::lit(draw * scale);
                }
                layer
            })
            .collect();
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            layers,
        })
    }

    /// All-zero parameters; predicts the uniform distribution everywhere.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let layers = layer_sizes
            .windows(2)
            .map(|w| Dense::zeros(w[0], w[1]))
            .collect();
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            layers,
        })
    }

    pub fn from_layers(layers: Vec<Dense<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::validation("a model needs at least one layer"));
        }
        let mut sizes = vec![layers[0].inputs];
        for (i, layer) in layers.iter().enumerate() {
            if layer.inputs != *sizes.last().unwrap() {
                return Err(Error::validation(format!(
                    "layer {i} expects {} inputs but the previous layer emits {}",
                    layer.inputs,
                    sizes.last().unwrap()
                )));
            }
            if layer.weights.len() != layer.inputs * layer.outputs
                || layer.biases.len() != layer.outputs
            {
                return Err(Error::validation(format!("layer {i} has inconsistent shapes")));
            }
            sizes.push(layer.outputs);
        }
        validate_sizes(&sizes)?;
        let model = Mlp {
            layer_sizes: sizes,
            layers,
        };
        if !model.is_finite() {
            return Err(Error::validation("model parameters must be finite"));
        }
        Ok(model)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    fn check_input(&self, features: &[T]) -> Result<()> {
        if features.len() != self.input_dim() {
            return Err(Error::validation(format!(
                "expected {} features, got {}",
                self.input_dim(),
                features.len()
            )));
        }
        Ok(())
    }

    /// Runs the network, recording every layer output into `trace`.
    pub fn forward_into(&self, features: &[T], trace: &mut Trace<T>) -> Result<()> {
        self.check_input(features)?;
        let depth = self.layers.len();
        trace.activations.resize_with(depth + 1, Vec::new);
        trace.activations[0].clear();
        trace.activations[0].extend_from_slice(features);
        for (i, layer) in self.layers.iter().enumerate() {
            let (done, rest) = trace.activations.split_at_mut(i + 1);
            let out = &mut rest[0];
            layer.forward(&done[i], out);
            if i + 1 < depth {
                for v in out.iter_mut() {
                    *v = v.max(T::zero());
                }
            }
        }
        Ok(())
    }

    pub fn scores(&self, features: &[T]) -> Result<[T; NUM_CLASSES]> {
        let mut trace = Trace::default();
        self.forward_into(features, &mut trace)?;
        let s = trace.scores();
        Ok([s[0], s[1], s[2]])
    }

    pub fn predict_proba(&self, features: &[T]) -> Result<ProbabilityVector<T>> {
        Ok(ProbabilityVector::from_scores(&self.scores(features)?))
    }

    /// Accumulates `dL/dθ` into `grads` given `dL/dscores` for the traced sample.
    pub fn backward(&self, trace: &Trace<T>, score_grad: &[T], grads: &mut Mlp<T>) {
        let mut delta: Vec<T> = score_grad.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &trace.activations[i];
            let g = &mut grads.layers[i];
            for (o, &d) in delta.iter().enumerate().take(layer.outputs) {
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, x) in row.iter_mut().zip(input) {
                    *gw += d * *x;
                }
            }
            if i == 0 {
                break;
            }
            let mut prev = vec![T::zero(); layer.inputs];
            for (o, &d) in delta.iter().enumerate().take(layer.outputs) {
                for (j, p) in prev.iter_mut().enumerate() {
                    *p += layer.weight(o, j) * d;
                }
            }
            // ReLU gate: the stored activation is zero exactly where the unit was off
            for (p, a) in prev.iter_mut().zip(input) {
                if *a <= T::zero() {
                    *p = T::zero();
                }
            }
            delta = prev;
        }
    }

    /// Mean combined loss over `samples` and its gradient.
    pub fn batch_loss_and_grad<'a, I>(&self, samples: I, lambda: T) -> Result<(T, Mlp<T>)>
    where
        I: IntoIterator<Item = (&'a [T], FineLabel)>,
    {
        let mut grads = Mlp::zeros(&self.layer_sizes)?;
        let mut trace = Trace::default();
        let mut total = T::zero();
        let mut count = 0usize;
        for (features, y) in samples {
            self.forward_into(features, &mut trace)?;
            let s = trace.scores();
            let (l, g) = loss::combined_loss_and_grad(&[s[0], s[1], s[2]], y, lambda)?;
            total += l;
            self.backward(&trace, &g, &mut grads);
            count += 1;
        }
        if count == 0 {
            return Err(Error::validation("cannot compute a gradient over an empty batch"));
        }
        let n = T::from_usize(count).unwrap();
        grads.scale(T::one() / n);
        Ok((total / n, grads))
    }

    fn scale(&mut self, factor: T) {
        for layer in &mut self.layers {
            for v in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *v *= factor;
            }
        }
    }

    /// `θ ← θ - learning_rate · grad`.
    pub fn sgd_step(&mut self, grads: &Mlp<T>, learning_rate: T) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= learning_rate * *gw;
            }
            for (b, gb) in layer.biases.iter_mut().zip(&g.biases) {
                *b -= learning_rate * *gb;
            }
        }
    }

    /// Flat text form: a `layer_sizes` header, then for each layer one line per
    /// weight row followed by one line of biases.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let sizes: Vec<String> = self.layer_sizes.iter().map(|s| s.to_string()).collect();
        writeln!(out, "layer_sizes {}", sizes.join(" ")).unwrap();
        for layer in &self.layers {
            for row in layer.weights.chunks(layer.inputs) {
                out.push_str(&join_values(row));
                out.push('\n');
            }
            out.push_str(&join_values(&layer.biases));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, msg: String| Error::validation(format!("model text line {}: {msg}", line + 1));

        let (n, header) = lines
            .next()
            .ok_or_else(|| Error::validation("model text is empty"))?;
        let sizes: Vec<usize> = header
            .strip_prefix("layer_sizes")
            .ok_or_else(|| bad(n, "expected `layer_sizes` header".into()))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(n, format!("bad layer size `{t}`"))))
            .collect::<Result<_>>()?;
        validate_sizes(&sizes)?;

        let mut read_row = |width: usize| -> Result<Vec<T>> {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::validation("model text ends early"))?;
            let row: Vec<T> = line
                .split_whitespace()
                .map(|t| t.parse::<T>().map_err(|_| bad(n, format!("bad value `{t}`"))))
                .collect::<Result<_>>()?;
            if row.len() != width {
                return Err(bad(n, format!("expected {width} values, got {}", row.len())));
            }
            Ok(row)
        };

        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for w in sizes.windows(2) {
            let (inputs, outputs) = (w[0], w[1]);
            let mut weights = Vec::with_capacity(inputs * outputs);
            for _ in 0..outputs {
                weights.extend(read_row(inputs)?);
            }
            let biases = read_row(outputs)?;
            layers.push(Dense {
                inputs,
                outputs,
                weights,
                biases,
            });
        }
        if let Some((n, _)) = lines.next() {
            return Err(bad(n, "trailing content after the last layer".into()));
        }
        Mlp::from_layers(layers)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

fn join_values<T: Scalar>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}
