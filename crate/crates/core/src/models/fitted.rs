use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FittedFeatures, ModelParams, ModelSpec, ModelsError, Resources};
use crate::corpus::{Label, LabeledExample};
use crate::eval::{Learner, ModelError, Predictor};
use crate::neural::{self, read_checkpoint, write_checkpoint, ClassifierModel, StreamInputs, TrainParams};
use crate::svm::{predict_from_decision, train_smo_rbf, SvmModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MANIFEST_FILE: &str = "model.json";
const SVM_FILE: &str = "classifier.json";
const NEURAL_FILE: &str = "classifier.nlcm";

#[derive(Clone, Debug, PartialEq)]
pub enum Classifier {
    Svm(SvmModel),
    Neural(ClassifierModel),
}

/// A trained variant: frozen featurizer plus classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub params: ModelParams,
    pub features: FittedFeatures,
    pub classifier: Classifier,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    spec: ModelSpec,
    params: ModelParams,
    features: FittedFeatures,
    classifier_file: String,
}

impl FittedModel {
    pub fn fit(
        spec: &ModelSpec,
        params: &ModelParams,
        res: &Resources,
        train: &[LabeledExample],
        rng_seed: u64,
    ) -> Result<Self, ModelsError> {
        let ids: Vec<&str> = train.iter().map(|e| e.patent_id.as_str()).collect();
        let features = FittedFeatures::fit(spec, params, res, &ids)?;
        let classifier = match &features {
            FittedFeatures::Neural(nf) => {
                let data = train
                    .iter()
                    .map(|e| Ok((nf.inputs(res, &e.patent_id)?, e.label)))
                    .collect::<Result<Vec<(StreamInputs, Label)>, ModelsError>>()?;
                let tp = TrainParams {
                    epochs: params.neural.epochs,
                    batch_size: params.neural.batch_size,
                    lr: params.neural.learning_rate,
                    rng_seed,
                };
                Classifier::Neural(neural::train(nf.network_config(params), &data, &tp)?.model)
            }
            _ => {
                let data = train
                    .iter()
                    .map(|e| Ok((features.svm_vector(res, &e.patent_id)?, e.label)))
                    .collect::<Result<Vec<_>, ModelsError>>()?;
                Classifier::Svm(SvmModel::Rbf(train_smo_rbf(&data, &params.svm)?))
            }
        };
        Ok(FittedModel {
            spec: spec.clone(),
            params: params.clone(),
            features,
            classifier,
        })
    }

    /// SVM decision value, or neural positive-class probability.
    pub fn score(&self, res: &Resources, id: &str) -> Result<f64, ModelsError> {
        Ok(match (&self.classifier, &self.features) {
            (Classifier::Neural(m), FittedFeatures::Neural(nf)) => m.predict_proba(&nf.inputs(res, id)?)?,
            (Classifier::Svm(m), f) => m.decision_value(&f.svm_vector(res, id)?)?,
            (Classifier::Neural(_), _) => {
                return Err(ModelsError::Format("neural classifier paired with SVM features".into()))
            }
        })
    }

    /// 0 for SVMs, 0.5 for the neural classifier.
    pub fn default_threshold(&self) -> f64 {
        match self.classifier {
            Classifier::Svm(_) => 0.0,
            Classifier::Neural(_) => 0.5,
        }
    }

    /// SVM scores must exceed the threshold; neural scores must reach it.
    pub fn label_for(&self, score: f64, threshold: f64) -> Label {
        match self.classifier {
            Classifier::Svm(_) => predict_from_decision(score - threshold),
            Classifier::Neural(_) if score >= threshold => Label::Positive,
            Classifier::Neural(_) => Label::Negative,
        }
    }

    pub fn predict(&self, res: &Resources, ids: &[&str]) -> Result<Vec<Label>, ModelsError> {
        let t = self.default_threshold();
        ids.iter().map(|id| Ok(self.label_for(self.score(res, id)?, t))).collect()
    }

    /// Writes `model.json` plus the classifier checkpoint into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), ModelsError> {
        let io = |e: std::io::Error| ModelsError::Io(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        let classifier_file = match &self.classifier {
            Classifier::Svm(m) => {
                fs::write(dir.join(SVM_FILE), m.to_json()).map_err(io)?;
                SVM_FILE
            }
            Classifier::Neural(m) => {
                let f = fs::File::create(dir.join(NEURAL_FILE)).map_err(io)?;
                write_checkpoint(m, BufWriter::new(f)).map_err(io)?;
                NEURAL_FILE
            }
        };
        let manifest = Manifest {
            version: MODEL_FORMAT_VERSION,
            spec: self.spec.clone(),
            params: self.params.clone(),
            features: self.features.clone(),
            classifier_file: classifier_file.into(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(dir.join(MANIFEST_FILE), json + "\n").map_err(io)
    }

    pub fn load(dir: &Path) -> Result<Self, ModelsError> {
        let io = |e: std::io::Error| ModelsError::Io(format!("{}: {e}", dir.display()));
        let text = fs::read_to_string(dir.join(MANIFEST_FILE)).map_err(io)?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| ModelsError::Format(e.to_string()))?;
        if m.version != MODEL_FORMAT_VERSION {
            return Err(ModelsError::Format(format!("unsupported model version {}", m.version)));
        }
        let classifier = match m.classifier_file.as_str() {
            SVM_FILE => {
                let s = fs::read_to_string(dir.join(SVM_FILE)).map_err(io)?;
                Classifier::Svm(SvmModel::from_json(&s)?)
            }
            NEURAL_FILE => {
                let f = fs::File::open(dir.join(NEURAL_FILE)).map_err(io)?;
                Classifier::Neural(read_checkpoint(BufReader::new(f))?)
            }
            other => return Err(ModelsError::Format(format!("unknown classifier file {other:?}"))),
        };
        if m.spec.is_neural() != matches!(classifier, Classifier::Neural(_)) {
            return Err(ModelsError::Format("classifier kind does not match the spec".into()));
        }
        Ok(FittedModel {
            spec: m.spec,
            params: m.params,
            features: m.features,
            classifier,
        })
    }
}

/// [`Learner`] adapter for a named variant.
#[derive(Clone)]
pub struct SpecLearner<'a> {
    pub spec: ModelSpec,
    pub params: ModelParams,
    pub resources: Resources<'a>,
}

/// A fitted model bound to the resources it featurizes from.
pub struct BoundModel<'a> {
    pub model: FittedModel,
    pub resources: Resources<'a>,
}

impl<'a> Learner for SpecLearner<'a> {
    type Model = BoundModel<'a>;
    fn fit(&self, train: &[LabeledExample], rng_seed: u64) -> Result<Self::Model, ModelError> {
        let model = FittedModel::fit(&self.spec, &self.params, &self.resources, train, rng_seed)?;
        Ok(BoundModel {
            model,
            resources: self.resources,
        })
    }
}

impl Predictor for BoundModel<'_> {
    fn predict(&self, patent_ids: &[&str]) -> Result<Vec<Label>, ModelError> {
        Ok(self.model.predict(&self.resources, patent_ids)?)
    }
}
