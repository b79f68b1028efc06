use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NetworkConfig, NeuralError, StreamInputs, StreamKind};
use crate::corpus::Label;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside the loss.
pub const PROB_CLAMP: f64 = 1e-7;

/// Binary cross-entropy with clamped probability.
pub fn bce_loss(p: f64, positive: bool) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if positive {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Dense {
    w: usize,
    b: usize,
    rows: usize,
    cols: usize,
}

impl Dense {
    fn end(&self) -> usize {
        self.b + self.rows
    }

    /// `out = W x + b`.
    fn apply(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                let row = &p[self.w + r * self.cols..self.w + (r + 1) * self.cols];
                p[self.b + r] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    /// Accumulates `dW += d x^T`, `db += d`; returns `W^T d` when asked.
    fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], d: &[f64], want_input: bool) -> Option<Vec<f64>> {
        for (r, &dr) in d.iter().enumerate() {
            if dr == 0.0 {
                continue;
            }
            g[self.b + r] += dr;
            let row = self.w + r * self.cols;
            for (c, &xc) in x.iter().enumerate() {
                g[row + c] += dr * xc;
            }
        }
        want_input.then(|| {
            let mut dx = vec![0.0; self.cols];
            for (r, &dr) in d.iter().enumerate() {
                if dr == 0.0 {
                    continue;
                }
                let row = self.w + r * self.cols;
                for (c, v) in dx.iter_mut().enumerate() {
                    *v += p[row + c] * dr;
                }
            }
            dx
        })
    }
}

/// Flattened parameters: per stream `(W, b)` in declared order, then each
/// hidden layer, then the output layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierModel {
    config: NetworkConfig,
    params: Vec<f64>,
    streams: Vec<Dense>,
    hidden: Vec<Dense>,
    output: Dense,
    rng_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradient(pub Vec<f64>);

struct Cache {
    stream_x: Vec<Option<Vec<f64>>>,
    stream_pre: Vec<Vec<f64>>,
    concat: Vec<f64>,
    hidden_pre: Vec<Vec<f64>>,
    /// Multipliers applied after ReLU (0 or 1/(1-p) under dropout, else 1).
    masks: Vec<Vec<f64>>,
    hidden_out: Vec<Vec<f64>>,
    prob: f64,
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl ClassifierModel {
    fn layout(config: &NetworkConfig) -> (Vec<Dense>, Vec<Dense>, Dense, usize) {
        let mut off = 0;
        let mut dense = |rows: usize, cols: usize| {
            let d = Dense {
                w: off,
                b: off + rows * cols,
                rows,
                cols,
            };
            off = d.end();
            d
        };
        let streams: Vec<Dense> = config.streams.iter().map(|s| dense(s.width, s.input_dim)).collect();
        let mut prev: usize = config.streams.iter().map(|s| s.width).sum();
        let mut hidden = Vec::new();
        for &h in &config.hidden {
            hidden.push(dense(h, prev));
            prev = h;
        }
        let output = dense(1, prev);
        (streams, hidden, output, off)
    }

    /// All parameters zero.
    pub fn zeros(config: NetworkConfig) -> Result<Self, NeuralError> {
        Self::from_params(config, Vec::new(), 0)
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(config: NetworkConfig, rng_seed: u64) -> Result<Self, NeuralError> {
        let mut m = Self::zeros(config)?;
        m.rng_seed = rng_seed;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let layers: Vec<Dense> = m.streams.iter().chain(&m.hidden).chain([&m.output]).copied().collect();
        for d in layers {
            let limit = (6.0 / (d.rows + d.cols) as f64).sqrt();
            for p in &mut m.params[d.w..d.b] {
                *p = rng.random_range(-limit..=limit);
            }
        }
        Ok(m)
    }

    /// Builds a model from a flat parameter vector; an empty vector means zeros.
    pub fn from_params(config: NetworkConfig, params: Vec<f64>, rng_seed: u64) -> Result<Self, NeuralError> {
        config.validate()?;
        let (streams, hidden, output, count) = Self::layout(&config);
        let params = if params.is_empty() { vec![0.0; count] } else { params };
        if params.len() != count {
            return Err(NeuralError::Checkpoint(format!(
                "expected {count} parameters, got {}",
                params.len()
            )));
        }
        Ok(ClassifierModel {
            config,
            params,
            streams,
            hidden,
            output,
            rng_seed,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Parameter range `(weights, biases)` of a stream's dense layer.
    pub fn stream_params(&self, kind: StreamKind) -> Option<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        let i = self.config.streams.iter().position(|s| s.kind == kind)?;
        let d = self.streams[i];
        Some((d.w..d.b, d.b..d.end()))
    }

    /// A disabled stream contributes zeros to the concatenation and needs no input.
    pub fn disable_stream(&mut self, kind: StreamKind) -> Result<(), NeuralError> {
        if kind == StreamKind::AbstractText {
            return Err(NeuralError::InvalidConfig("abstract_text stream cannot be disabled".into()));
        }
        let s = self
            .config
            .streams
            .iter_mut()
            .find(|s| s.kind == kind)
            .ok_or_else(|| NeuralError::InvalidConfig(format!("no stream {kind}")))?;
        s.enabled = false;
        Ok(())
    }

    fn forward_cache(&self, inputs: &StreamInputs, mut dropout: Option<&mut ChaCha8Rng>) -> Result<Cache, NeuralError> {
        let p = &self.params;
        let mut stream_x = Vec::with_capacity(self.streams.len());
        let mut stream_pre = Vec::with_capacity(self.streams.len());
        let mut concat = Vec::new();
        for (spec, d) in self.config.streams.iter().zip(&self.streams) {
            if !spec.enabled {
                stream_x.push(None);
                stream_pre.push(vec![0.0; d.rows]);
                concat.extend(std::iter::repeat_n(0.0, d.rows));
                continue;
            }
            let raw = inputs.get(&spec.kind).ok_or(NeuralError::MissingStream(spec.kind))?;
            if raw.len() != spec.input_dim {
                return Err(NeuralError::DimensionMismatch {
                    stream: spec.kind,
                    expected: spec.input_dim,
                    got: raw.len(),
                });
            }
            let x: Vec<f64> = if spec.kind.is_count() {
                raw.iter().map(|v| v.max(0.0).ln_1p()).collect()
            } else {
                raw.clone()
            };
            let pre = d.apply(p, &x);
            concat.extend(relu(&pre));
            stream_x.push(Some(x));
            stream_pre.push(pre);
        }
        let keep = 1.0 - self.config.dropout;
        let mut hidden_pre = Vec::with_capacity(self.hidden.len());
        let mut masks = Vec::with_capacity(self.hidden.len());
        let mut hidden_out: Vec<Vec<f64>> = Vec::with_capacity(self.hidden.len());
        for d in &self.hidden {
            let input = hidden_out.last().unwrap_or(&concat);
            let pre = d.apply(p, input);
            let mask: Vec<f64> = match dropout.as_deref_mut() {
                Some(rng) if self.config.dropout > 0.0 => (0..d.rows)
                    .map(|_| if rng.random_bool(keep) { 1.0 / keep } else { 0.0 })
                    .collect(),
                _ => vec![1.0; d.rows],
            };
            let out = pre.iter().zip(&mask).map(|(&z, &m)| z.max(0.0) * m).collect();
            hidden_pre.push(pre);
            masks.push(mask);
            hidden_out.push(out);
        }
        let last = hidden_out.last().unwrap_or(&concat);
        let z = self.output.apply(p, last)[0];
        Ok(Cache {
            stream_x,
            stream_pre,
            concat,
            hidden_pre,
            masks,
            hidden_out,
            prob: sigmoid(z),
        })
    }

    /// Inference-mode probability (dropout off).
    pub fn predict_proba(&self, inputs: &StreamInputs) -> Result<f64, NeuralError> {
        Ok(self.forward_cache(inputs, None)?.prob)
    }

    /// Positive iff `probability >= threshold`.
    pub fn classify(&self, inputs: &StreamInputs, threshold: f64) -> Result<Label, NeuralError> {
        Ok(if self.predict_proba(inputs)? >= threshold {
            Label::Positive
        } else {
            Label::Negative
        })
    }

    /// Forward pass with optional training-mode dropout.
    pub fn forward(&self, inputs: &StreamInputs, dropout: Option<&mut ChaCha8Rng>) -> Result<f64, NeuralError> {
        Ok(self.forward_cache(inputs, dropout)?.prob)
    }

    /// Mean loss and its gradient over a batch. With `dropout` set, one
    /// mask per example is drawn in batch order.
    pub fn loss_and_gradient(
        &self,
        batch: &[(&StreamInputs, Label)],
        mut dropout: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, Gradient), NeuralError> {
        if batch.is_empty() {
            return Err(NeuralError::EmptyBatch);
        }
        let p = &self.params;
        let mut g = vec![0.0; p.len()];
        let mut loss = 0.0;
        for (inputs, label) in batch {
            let c = self.forward_cache(inputs, dropout.as_deref_mut())?;
            let y = if label.is_positive() { 1.0 } else { 0.0 };
            loss += bce_loss(c.prob, y == 1.0);
            // The clamp flattens the loss outside [PROB_CLAMP, 1 - PROB_CLAMP].
            let dz = if c.prob < PROB_CLAMP || c.prob > 1.0 - PROB_CLAMP {
                0.0
            } else {
                c.prob - y
            };
            let last = c.hidden_out.last().unwrap_or(&c.concat);
            let mut d = self.output.backward(p, &mut g, last, &[dz], true).unwrap();
            for l in (0..self.hidden.len()).rev() {
                let dpre: Vec<f64> = d
                    .iter()
                    .zip(&c.masks[l])
                    .zip(&c.hidden_pre[l])
                    .map(|((&dv, &m), &z)| if z > 0.0 { dv * m } else { 0.0 })
                    .collect();
                let input = if l == 0 { &c.concat } else { &c.hidden_out[l - 1] };
                d = self.hidden[l].backward(p, &mut g, input, &dpre, true).unwrap();
            }
            let mut off = 0;
            for (i, dense) in self.streams.iter().enumerate() {
                let slice = &d[off..off + dense.rows];
                off += dense.rows;
                let Some(x) = &c.stream_x[i] else { continue };
                let dpre: Vec<f64> = slice
                    .iter()
                    .zip(&c.stream_pre[i])
                    .map(|(&dv, &z)| if z > 0.0 { dv } else { 0.0 })
                    .collect();
                dense.backward(p, &mut g, x, &dpre, false);
            }
        }
        let n = batch.len() as f64;
        g.iter_mut().for_each(|v| *v /= n);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(NeuralError::NonFiniteGradient);
        }
        Ok((loss / n, Gradient(g)))
    }

    /// Mean inference-mode loss over a batch.
    pub fn batch_loss(&self, batch: &[(&StreamInputs, Label)]) -> Result<f64, NeuralError> {
        if batch.is_empty() {
            return Err(NeuralError::EmptyBatch);
        }
        let mut total = 0.0;
        for (x, y) in batch {
            total += bce_loss(self.predict_proba(x)?, y.is_positive());
        }
        Ok(total / batch.len() as f64)
    }
}
