//! Dataset construction, cross-validation, metrics and agreement.

mod bundle;
mod evaluate;
mod metrics;

pub use bundle::{build_bundle, kfold, DatasetBundle, Fold};
pub use evaluate::{
    curve_csv, evaluate, format_table, learning_curve, CurvePoint, FoldMetrics, HoldoutScores, Learner, MetricsReport,
    ModelError, Predictor, DEFAULT_CURVE_SIZES, DEFAULT_FOLDS,
};
pub use metrics::{cohens_kappa, cohens_kappa_keyed, f1, kappa_from_counts, per_class_f1};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Difficulty, Label, LabeledExample};

/// The four evaluation strata.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    HardPos,
    HardNeg,
    EasyPos,
    EasyNeg,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::HardPos, Category::HardNeg, Category::EasyPos, Category::EasyNeg];

    pub fn of(ex: &LabeledExample) -> Category {
        match (ex.difficulty, ex.label) {
            (Difficulty::Hard, Label::Positive) => Category::HardPos,
            (Difficulty::Hard, Label::Negative) => Category::HardNeg,
            (Difficulty::Easy, Label::Positive) => Category::EasyPos,
            (Difficulty::Easy, Label::Negative) => Category::EasyNeg,
        }
    }

    pub fn label(self) -> Label {
        match self {
            Category::HardPos | Category::EasyPos => Label::Positive,
            Category::HardNeg | Category::EasyNeg => Label::Negative,
        }
    }

    pub fn is_hard(self) -> bool {
        matches!(self, Category::HardPos | Category::HardNeg)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::HardPos => "Hard+",
            Category::HardNeg => "Hard-",
            Category::EasyPos => "Easy+",
            Category::EasyNeg => "Easy-",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("category counts unusable ({counts}): {reason}")]
    Categories { counts: String, reason: String },
    #[error("cannot split {n} items into {k} folds")]
    InvalidFolds { k: usize, n: usize },
    #[error("invalid learning-curve size {size}: {reason}")]
    InvalidSize { size: usize, reason: String },
    #[error("fold {fold}: {message}")]
    Model { fold: usize, message: String },
    #[error("kappa: {0}")]
    Kappa(String),
}
