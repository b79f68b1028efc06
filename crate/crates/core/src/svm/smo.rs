use serde::{Deserialize, Serialize};

use super::{check_data, SvmError};
use crate::corpus::Label;
use crate::features::SparseVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoParams {
    pub c: f64,
    /// `None` means `1 / dimension`.
    pub gamma: Option<f64>,
    pub tolerance: f64,
    /// Full passes over the data; each pass allows `n` pair updates.
    /// `None` means `10 * n`.
    pub max_passes: Option<usize>,
}

impl Default for SmoParams {
    fn default() -> Self {
        SmoParams {
            c: 1.0,
            gamma: None,
            tolerance: 1e-3,
            max_passes: None,
        }
    }
}

pub fn rbf(a: &SparseVector, b: &SparseVector, gamma: f64) -> f64 {
    (-gamma * a.squared_distance(b)).exp()
}

/// Dual solution over the full training set.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub tolerance: f64,
    pub iterations: usize,
    /// `m(alpha) - M(alpha)` at exit.
    pub gap: f64,
}

/// `sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij`.
pub fn dual_objective(alphas: &[f64], data: &[(SparseVector, Label)], gamma: f64) -> f64 {
    let mut quad = 0.0;
    for (i, (xi, yi)) in data.iter().enumerate() {
        if alphas[i] == 0.0 {
            continue;
        }
        for (j, (xj, yj)) in data.iter().enumerate() {
            if alphas[j] == 0.0 {
                continue;
            }
            quad += alphas[i] * alphas[j] * yi.sign() * yj.sign() * rbf(xi, xj, gamma);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Largest KKT violation over the training set for the given dual variables
/// and bias: `alpha = 0 => y f >= 1`, `0 < alpha < C => y f = 1`,
/// `alpha = C => y f <= 1`.
pub fn kkt_violation(alphas: &[f64], bias: f64, c: f64, data: &[(SparseVector, Label)], gamma: f64) -> f64 {
    let eps = 1e-12 * c.max(1.0);
    let mut worst = 0.0f64;
    for ((x, y), &a) in data.iter().zip(alphas) {
        let f: f64 = data
            .iter()
            .zip(alphas)
            .filter(|(_, &a)| a > 0.0)
            .map(|((xj, yj), a)| a * yj.sign() * rbf(xj, x, gamma))
            .sum::<f64>()
            + bias;
        let yf = y.sign() * f;
        let v = if a <= eps {
            (1.0 - yf).max(0.0)
        } else if a >= c - eps {
            (yf - 1.0).max(0.0)
        } else {
            (yf - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// SMO with maximal-violating-pair working set selection.
///
/// Stops when `m(alpha) - M(alpha) < tolerance` where
/// `m = max_{I_up} -y_i G_i` and `M = min_{I_low} -y_i G_i`.
pub fn solve_smo(data: &[(SparseVector, Label)], params: &SmoParams) -> Result<SmoSolution, SvmError> {
    let dim = check_data(data)?;
    let c = params.c;
    if !(c > 0.0) || !c.is_finite() {
        return Err(SvmError::InvalidParameter(format!("C must be positive, got {c}")));
    }
    let gamma = params.gamma.unwrap_or(1.0 / dim.max(1) as f64);
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(SvmError::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if !(params.tolerance > 0.0) {
        return Err(SvmError::InvalidParameter(format!("tolerance must be positive, got {}", params.tolerance)));
    }
    let n = data.len();
    let y: Vec<f64> = data.iter().map(|(_, l)| l.sign()).collect();
    let mut q = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let v = y[i] * y[j] * rbf(&data[i].0, &data[j].0, gamma);
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let mut alpha = vec![0.0f64; n];
    let mut grad = vec![-1.0f64; n];
    let max_iter = params.max_passes.unwrap_or(10 * n).saturating_mul(n);
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    let mut iterations = 0usize;
    let gap = loop {
        let mut i = usize::MAX;
        let mut m = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut big_m = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > m {
                m = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < big_m {
                big_m = v;
                j = t;
            }
        }
        let gap = m - big_m;
        if i == usize::MAX || j == usize::MAX || gap < params.tolerance {
            break gap.max(0.0);
        }
        if iterations >= max_iter {
            return Err(SvmError::NoConvergence {
                iterations,
                max_violation: gap,
            });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qii = q[i * n + i];
        let qjj = q[j * n + j];
        let qij = q[i * n + j];
        if y[i] != y[j] {
            let quad = (qii + qjj + 2.0 * qij).max(1e-12);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(1e-12);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q[t * n + i] * di + q[t * n + j] * dj;
        }
    };

    // Bias: average over free vectors, else midpoint of the feasible range.
    let (mut sum, mut free) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };
    Ok(SmoSolution {
        alphas: alpha,
        bias: -rho,
        gamma,
        c,
        tolerance: params.tolerance,
        iterations,
        gap,
    })
}

/// RBF-kernel SVM keeping only the support vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSvmModel {
    pub dimension: usize,
    pub support_vectors: Vec<SparseVector>,
    /// `alpha_i * y_i` per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub tolerance: f64,
    pub iterations: usize,
    pub examples: usize,
}

impl KernelSvmModel {
    pub fn from_solution(sol: &SmoSolution, data: &[(SparseVector, Label)]) -> Self {
        let mut support_vectors = Vec::new();
        let mut coefficients = Vec::new();
        for ((x, y), &a) in data.iter().zip(&sol.alphas) {
            if a > 0.0 {
                support_vectors.push(x.clone());
                coefficients.push(a * y.sign());
            }
        }
        KernelSvmModel {
            dimension: data.first().map_or(0, |(x, _)| x.dim()),
            support_vectors,
            coefficients,
            bias: sol.bias,
            gamma: sol.gamma,
            c: sol.c,
            tolerance: sol.tolerance,
            iterations: sol.iterations,
            examples: data.len(),
        }
    }

    pub fn decision_value(&self, x: &SparseVector) -> Result<f64, SvmError> {
        if x.dim() != self.dimension {
            return Err(SvmError::DimensionMismatch {
                expected: self.dimension,
                got: x.dim(),
            });
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * rbf(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias)
    }

    pub fn margin_distance(&self, x: &SparseVector) -> Result<f64, SvmError> {
        Ok(self.decision_value(x)?.abs())
    }
}

pub fn train_smo_rbf(data: &[(SparseVector, Label)], params: &SmoParams) -> Result<KernelSvmModel, SvmError> {
    let sol = solve_smo(data, params)?;
    Ok(KernelSvmModel::from_solution(&sol, data))
}
