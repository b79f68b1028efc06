use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AdamState, ClassifierModel, NetworkConfig, NeuralError, StreamInputs};
use crate::corpus::Label;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub rng_seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            epochs: 5,
            batch_size: 64,
            lr: 1e-4,
            rng_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedClassifier {
    pub model: ClassifierModel,
    /// Mean training loss per epoch (dropout active).
    pub loss_history: Vec<f64>,
}

/// Mini-batch Adam on binary cross-entropy.
///
/// Initialization, per-epoch shuffles and dropout masks all come from
/// streams seeded by `rng_seed`.
pub fn train(
    config: NetworkConfig,
    data: &[(StreamInputs, Label)],
    params: &TrainParams,
) -> Result<TrainedClassifier, NeuralError> {
    if !(data.iter().any(|(_, y)| y.is_positive()) && data.iter().any(|(_, y)| !y.is_positive())) {
        return Err(NeuralError::SingleClass);
    }
    if params.batch_size == 0 {
        return Err(NeuralError::InvalidConfig("batch size 0".into()));
    }
    let mut model = ClassifierModel::init(config, params.rng_seed)?;
    let mut adam = AdamState::new(model.parameter_count(), params.lr);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(params.rng_seed.wrapping_add(1));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(params.rng_seed.wrapping_add(2));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_history = Vec::with_capacity(params.epochs);
    for _ in 0..params.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for chunk in order.chunks(params.batch_size) {
            let batch: Vec<(&StreamInputs, Label)> = chunk.iter().map(|&i| (&data[i].0, data[i].1)).collect();
            let (loss, grad) = model.loss_and_gradient(&batch, Some(&mut dropout_rng))?;
            adam.update(model.params_mut(), &grad.0)?;
            total += loss * chunk.len() as f64;
        }
        loss_history.push(total / data.len() as f64);
    }
    Ok(TrainedClassifier { model, loss_history })
}
