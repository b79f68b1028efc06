//! Linear (SGD) and RBF-kernel (SMO) support vector machines.

mod linear;
mod smo;

pub use linear::{linear_objective, train_linear, LinearSvmModel, LinearSvmParams};
pub use smo::{dual_objective, kkt_violation, rbf, solve_smo, train_smo_rbf, KernelSvmModel, SmoParams, SmoSolution};

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::features::SparseVector;

pub const SVM_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SvmError {
    #[error("training data is empty")]
    Empty,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("SMO did not converge after {iterations} iterations (max KKT violation {max_violation})")]
    NoConvergence { iterations: usize, max_violation: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Checks the shared preconditions and returns the feature dimension.
pub(crate) fn check_data(data: &[(SparseVector, Label)]) -> Result<usize, SvmError> {
    let first = data.first().ok_or(SvmError::Empty)?;
    let dim = first.0.dim();
    if let Some((x, _)) = data.iter().find(|(x, _)| x.dim() != dim) {
        return Err(SvmError::DimensionMismatch { expected: dim, got: x.dim() });
    }
    let pos = data.iter().any(|(_, y)| y.is_positive());
    let neg = data.iter().any(|(_, y)| !y.is_positive());
    if !(pos && neg) {
        return Err(SvmError::SingleClass);
    }
    Ok(dim)
}

/// Either trained SVM flavor.
#[derive(Clone, Debug, PartialEq)]
pub enum SvmModel {
    Linear(LinearSvmModel),
    Rbf(KernelSvmModel),
}

impl SvmModel {
    pub fn dimension(&self) -> usize {
        match self {
            SvmModel::Linear(m) => m.dimension(),
            SvmModel::Rbf(m) => m.dimension,
        }
    }

    pub fn decision_value(&self, x: &SparseVector) -> Result<f64, SvmError> {
        match self {
            SvmModel::Linear(m) => m.decision_value(x),
            SvmModel::Rbf(m) => m.decision_value(x),
        }
    }

    /// `decision = 0` maps to negative.
    pub fn predict(&self, x: &SparseVector) -> Result<Label, SvmError> {
        Ok(predict_from_decision(self.decision_value(x)?))
    }

    pub fn margin_distance(&self, x: &SparseVector) -> Result<f64, SvmError> {
        match self {
            SvmModel::Linear(m) => m.margin_distance(x),
            SvmModel::Rbf(m) => m.margin_distance(x),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&Checkpoint::from(self)).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, SvmError> {
        let c: Checkpoint = serde_json::from_str(s).map_err(|e| SvmError::Checkpoint(e.to_string()))?;
        c.into_model()
    }
}

pub fn predict_from_decision(d: f64) -> Label {
    if d > 0.0 {
        Label::Positive
    } else {
        Label::Negative
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    dimension: usize,
    #[serde(flatten)]
    body: Body,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Body {
    LinearSvm {
        parameters: LinearParams,
        hyperparameters: LinearHyper,
        training: LinearTraining,
    },
    RbfSvm {
        parameters: KernelParams,
        hyperparameters: KernelHyper,
        training: KernelTraining,
    },
}

#[derive(Serialize, Deserialize)]
struct LinearParams {
    weight: Vec<f64>,
    bias: f64,
}

#[derive(Serialize, Deserialize)]
struct LinearHyper {
    lambda: f64,
    epochs: usize,
}

#[derive(Serialize, Deserialize)]
struct LinearTraining {
    rng_seed: u64,
    examples: usize,
}

#[derive(Serialize, Deserialize)]
struct KernelParams {
    support_vectors: Vec<SparseVector>,
    coefficients: Vec<f64>,
    bias: f64,
}

#[derive(Serialize, Deserialize)]
struct KernelHyper {
    c: f64,
    gamma: f64,
    tolerance: f64,
}

#[derive(Serialize, Deserialize)]
struct KernelTraining {
    iterations: usize,
    examples: usize,
}

impl From<&SvmModel> for Checkpoint {
    fn from(m: &SvmModel) -> Self {
        let body = match m {
            SvmModel::Linear(m) => Body::LinearSvm {
                parameters: LinearParams {
                    weight: m.weight.clone(),
                    bias: m.bias,
                },
                hyperparameters: LinearHyper {
                    lambda: m.lambda,
                    epochs: m.epochs,
                },
                training: LinearTraining {
                    rng_seed: m.rng_seed,
                    examples: m.examples,
                },
            },
            SvmModel::Rbf(m) => Body::RbfSvm {
                parameters: KernelParams {
                    support_vectors: m.support_vectors.clone(),
                    coefficients: m.coefficients.clone(),
                    bias: m.bias,
                },
                hyperparameters: KernelHyper {
                    c: m.c,
                    gamma: m.gamma,
                    tolerance: m.tolerance,
                },
                training: KernelTraining {
                    iterations: m.iterations,
                    examples: m.examples,
                },
            },
        };
        Checkpoint {
            version: SVM_FORMAT_VERSION,
            dimension: m.dimension(),
            body,
        }
    }
}

impl Checkpoint {
    fn into_model(self) -> Result<SvmModel, SvmError> {
        if self.version != SVM_FORMAT_VERSION {
            return Err(SvmError::Checkpoint(format!("unsupported version {}", self.version)));
        }
        let bad = |what: &str| Err(SvmError::Checkpoint(format!("{what} inconsistent with dimension {}", self.dimension)));
        match self.body {
            Body::LinearSvm {
                parameters,
                hyperparameters,
                training,
            } => {
                if parameters.weight.len() != self.dimension {
                    return bad("weight length");
                }
                Ok(SvmModel::Linear(LinearSvmModel {
                    weight: parameters.weight,
                    bias: parameters.bias,
                    lambda: hyperparameters.lambda,
                    epochs: hyperparameters.epochs,
                    rng_seed: training.rng_seed,
                    examples: training.examples,
                }))
            }
            Body::RbfSvm {
                parameters,
                hyperparameters,
                training,
            } => {
                if parameters.support_vectors.iter().any(|v| v.dim() != self.dimension) {
                    return bad("support vector");
                }
                if parameters.support_vectors.len() != parameters.coefficients.len() {
                    return Err(SvmError::Checkpoint("support vector / coefficient count mismatch".into()));
                }
                Ok(SvmModel::Rbf(KernelSvmModel {
                    dimension: self.dimension,
                    support_vectors: parameters.support_vectors,
                    coefficients: parameters.coefficients,
                    bias: parameters.bias,
                    gamma: hyperparameters.gamma,
                    c: hyperparameters.c,
                    tolerance: hyperparameters.tolerance,
                    iterations: training.iterations,
                    examples: training.examples,
                }))
            }
        }
    }
}
