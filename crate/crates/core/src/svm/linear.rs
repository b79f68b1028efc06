use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_data, SvmError};
use crate::corpus::Label;
use crate::features::SparseVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearSvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub rng_seed: u64,
}

impl Default for LinearSvmParams {
    fn default() -> Self {
        LinearSvmParams {
            lambda: 1e-4,
            epochs: 20,
            rng_seed: 0,
        }
    }
}

/// Primal linear SVM: `decision(x) = <w, x> + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weight: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub rng_seed: u64,
    pub examples: usize,
}

impl LinearSvmModel {
    pub fn dimension(&self) -> usize {
        self.weight.len()
    }

    pub fn weight_norm(&self) -> f64 {
        self.weight.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn decision_value(&self, x: &SparseVector) -> Result<f64, SvmError> {
        if x.dim() != self.weight.len() {
            return Err(SvmError::DimensionMismatch {
                expected: self.weight.len(),
                got: x.dim(),
            });
        }
        Ok(x.dot_dense(&self.weight) + self.bias)
    }

    /// `|decision| / ||w||`; falls back to `|decision|` for a zero weight vector.
    pub fn margin_distance(&self, x: &SparseVector) -> Result<f64, SvmError> {
        let d = self.decision_value(x)?.abs();
        let n = self.weight_norm();
        Ok(if n > 0.0 { d / n } else { d })
    }
}

/// `lambda/2 ||w||^2 + mean hinge loss` (bias unregularized).
pub fn linear_objective(model: &LinearSvmModel, data: &[(SparseVector, Label)], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * model.weight.iter().map(|w| w * w).sum::<f64>();
    let hinge: f64 = data
        .iter()
        .map(|(x, y)| (1.0 - y.sign() * (x.dot_dense(&model.weight) + model.bias)).max(0.0))
        .sum();
    reg + hinge / data.len().max(1) as f64
}

/// Stochastic subgradient descent on the hinge loss with L2 penalty.
///
/// Step size is `1 / (lambda * t + 1)`; the returned parameters are the
/// average of the iterates over the final epoch. Examples are visited in a
/// fresh ChaCha8 permutation each epoch, so the result is a pure function
/// of the data order and `rng_seed`.
pub fn train_linear(data: &[(SparseVector, Label)], params: &LinearSvmParams) -> Result<LinearSvmModel, SvmError> {
    let dim = check_data(data)?;
    if !(params.lambda > 0.0) {
        return Err(SvmError::InvalidParameter(format!("lambda must be positive, got {}", params.lambda)));
    }
    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let mut avg_w = vec![0.0f64; dim];
    let mut avg_b = 0.0f64;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut t = 0u64;
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let last = epoch + 1 == params.epochs;
        for &i in &order {
            t += 1;
            let (x, y) = (&data[i].0, data[i].1.sign());
            let eta = 1.0 / (params.lambda * t as f64 + 1.0);
            let margin = y * (x.dot_dense(&w) + b);
            let shrink = 1.0 - eta * params.lambda;
            for wj in &mut w {
                *wj *= shrink;
            }
            if margin < 1.0 {
                for (j, v) in x.entries() {
                    w[j] += eta * y * v;
                }
                b += eta * y;
            }
            if last {
                for (a, wj) in avg_w.iter_mut().zip(&w) {
                    *a += wj;
                }
                avg_b += b;
            }
        }
    }
    if params.epochs > 0 {
        let n = data.len() as f64;
        avg_w.iter_mut().for_each(|a| *a /= n);
        avg_b /= n;
    }
    Ok(LinearSvmModel {
        weight: avg_w,
        bias: avg_b,
        lambda: params.lambda,
        epochs: params.epochs,
        rng_seed: params.rng_seed,
        examples: data.len(),
    })
}
