use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bundle::{kfold, DatasetBundle};
use super::metrics::per_class_f1;
use super::{Category, EvalError};
use crate::corpus::{Label, LabeledExample};

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_CURVE_SIZES: [usize; 5] = [400, 200, 100, 48, 24];

pub type ModelError = Box<dyn std::error::Error + Send + Sync>;

/// Something that can be trained on labeled patents.
pub trait Learner {
    type Model: Predictor;
    fn fit(&self, train: &[LabeledExample], rng_seed: u64) -> Result<Self::Model, ModelError>;
}

/// A trained classifier over patent ids.
pub trait Predictor {
    fn predict(&self, patent_ids: &[&str]) -> Result<Vec<Label>, ModelError>;
}

/// Recall within each single-class holdout category; `None` when the
/// category is empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HoldoutScores {
    pub metric: String,
    pub hard_pos: Option<f64>,
    pub hard_neg: Option<f64>,
    pub easy_pos: Option<f64>,
    pub easy_neg: Option<f64>,
}

impl HoldoutScores {
    fn get_mut(&mut self, c: Category) -> &mut Option<f64> {
        match c {
            Category::HardPos => &mut self.hard_pos,
            Category::HardNeg => &mut self.hard_neg,
            Category::EasyPos => &mut self.easy_pos,
            Category::EasyNeg => &mut self.easy_neg,
        }
    }

    pub fn get(&self, c: Category) -> Option<f64> {
        match c {
            Category::HardPos => self.hard_pos,
            Category::HardNeg => self.hard_neg,
            Category::EasyPos => self.easy_pos,
            Category::EasyNeg => self.easy_neg,
        }
    }
}

/// Per-fold F1s. A cell is `None` when its class neither occurs in the
/// subset nor is predicted there (zero F1 denominator).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub hard_pos: Option<f64>,
    pub hard_neg: Option<f64>,
    pub easy_pos: Option<f64>,
    pub easy_neg: Option<f64>,
    pub holdout: HoldoutScores,
}

fn mean_defined(vals: impl Iterator<Item = Option<f64>>) -> f64 {
    let (sum, n) = vals.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl FoldMetrics {
    pub fn overall(&self) -> f64 {
        let hard = mean_defined([self.hard_pos, self.hard_neg].into_iter());
        let easy = mean_defined([self.easy_pos, self.easy_neg].into_iter());
        (hard + easy) / 2.0
    }
}

/// Per-category F1 averaged over the folds where it is defined. "+" is
/// positive-class F1 and "-" negative-class F1, each computed within its
/// difficulty subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub hard_pos: f64,
    pub hard_neg: f64,
    pub easy_pos: f64,
    pub easy_neg: f64,
    pub hard_avg: f64,
    pub easy_avg: f64,
    pub overall: f64,
    /// Sample standard deviation of per-fold Overall.
    pub overall_std: f64,
    pub holdout: HoldoutScores,
    pub folds: usize,
    pub fold_metrics: Vec<FoldMetrics>,
}

impl MetricsReport {
    pub fn from_folds(fold_metrics: Vec<FoldMetrics>) -> Self {
        let n = fold_metrics.len().max(1) as f64;
        let mean = |f: fn(&FoldMetrics) -> Option<f64>| mean_defined(fold_metrics.iter().map(f));
        let (hp, hn, ep, en) = (
            mean(|m| m.hard_pos),
            mean(|m| m.hard_neg),
            mean(|m| m.easy_pos),
            mean(|m| m.easy_neg),
        );
        let hard_avg = (hp + hn) / 2.0;
        let easy_avg = (ep + en) / 2.0;
        let overall = (hard_avg + easy_avg) / 2.0;
        let overall_std = if fold_metrics.len() > 1 {
            let mu = fold_metrics.iter().map(FoldMetrics::overall).sum::<f64>() / n;
            (fold_metrics.iter().map(|m| (m.overall() - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut holdout = HoldoutScores {
            metric: "recall".into(),
            ..Default::default()
        };
        for c in Category::ALL {
            let vals: Vec<f64> = fold_metrics.iter().filter_map(|m| m.holdout.get(c)).collect();
            if !vals.is_empty() {
                *holdout.get_mut(c) = Some(vals.iter().sum::<f64>() / vals.len() as f64);
            }
        }
        MetricsReport {
            hard_pos: hp,
            hard_neg: hn,
            easy_pos: ep,
            easy_neg: en,
            hard_avg,
            easy_avg,
            overall,
            overall_std,
            holdout,
            folds: fold_metrics.len(),
            fold_metrics,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn model_err(fold: usize, e: ModelError) -> EvalError {
    EvalError::Model {
        fold,
        message: e.to_string(),
    }
}

/// k-fold cross-validation on the balanced set, with every fold's model
/// also scored on the holdout.
pub fn evaluate<L: Learner>(learner: &L, bundle: &DatasetBundle, k: usize, rng_seed: u64) -> Result<MetricsReport, EvalError> {
    let folds = kfold(&bundle.balanced, Category::of, k, rng_seed)?;
    let holdout_ids: Vec<&str> = bundle.holdout.iter().map(|e| e.patent_id.as_str()).collect();
    let mut out = Vec::with_capacity(k);
    for (fi, fold) in folds.iter().enumerate() {
        let train: Vec<LabeledExample> = fold.train.iter().map(|&i| bundle.balanced[i].clone()).collect();
        let model = learner
            .fit(&train, rng_seed.wrapping_add(fi as u64))
            .map_err(|e| model_err(fi, e))?;
        let test: Vec<&LabeledExample> = fold.test.iter().map(|&i| &bundle.balanced[i]).collect();
        let ids: Vec<&str> = test.iter().map(|e| e.patent_id.as_str()).collect();
        let preds = model.predict(&ids).map_err(|e| model_err(fi, e))?;
        if preds.len() != ids.len() {
            return Err(model_err(fi, format!("{} predictions for {} items", preds.len(), ids.len()).into()));
        }
        let subset = |hard: bool| -> (Option<f64>, Option<f64>) {
            let (p, g): (Vec<Label>, Vec<Label>) = test
                .iter()
                .zip(&preds)
                .filter(|(e, _)| Category::of(e).is_hard() == hard)
                .map(|(e, p)| (*p, e.label))
                .unzip();
            let (pos, neg) = per_class_f1(&p, &g);
            let seen = |l: Label| p.contains(&l) || g.contains(&l);
            (seen(Label::Positive).then_some(pos), seen(Label::Negative).then_some(neg))
        };
        let (hard_pos, hard_neg) = subset(true);
        let (easy_pos, easy_neg) = subset(false);

        let hold_preds = model.predict(&holdout_ids).map_err(|e| model_err(fi, e))?;
        let mut totals: BTreeMap<Category, (usize, usize)> = BTreeMap::new();
        for (e, p) in bundle.holdout.iter().zip(&hold_preds) {
            let t = totals.entry(Category::of(e)).or_default();
            t.0 += (*p == e.label) as usize;
            t.1 += 1;
        }
        let mut holdout = HoldoutScores {
            metric: "recall".into(),
            ..Default::default()
        };
        for (c, (hit, total)) in totals {
            *holdout.get_mut(c) = Some(hit as f64 / total as f64);
        }
        out.push(FoldMetrics {
            fold: fi,
            hard_pos,
            hard_neg,
            easy_pos,
            easy_neg,
            holdout,
        });
    }
    Ok(MetricsReport::from_folds(out))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub size: usize,
    pub overall: f64,
    pub report: MetricsReport,
}

/// Evaluates on nested, category-balanced subsets of the balanced set.
pub fn learning_curve<L: Learner>(
    learner: &L,
    bundle: &DatasetBundle,
    sizes: &[usize],
    k: usize,
    rng_seed: u64,
) -> Result<Vec<CurvePoint>, EvalError> {
    let per_cat = bundle.balanced_counts().values().copied().min().unwrap_or(0);
    for &s in sizes {
        let reason = if s == 0 || s % 4 != 0 {
            Some("must be a positive multiple of 4".to_string())
        } else if s / 4 > per_cat {
            Some(format!("exceeds the balanced set ({} per category)", per_cat))
        } else if s < k {
            Some(format!("fewer items than the {k} folds"))
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(EvalError::InvalidSize { size: s, reason });
        }
    }
    // Rank within each category once; a subset of size s keeps the first s/4.
    let mut rank = vec![usize::MAX; bundle.balanced.len()];
    {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
        for c in Category::ALL {
            let mut members: Vec<usize> = (0..bundle.balanced.len())
                .filter(|&i| Category::of(&bundle.balanced[i]) == c)
                .collect();
            members.shuffle(&mut rng);
            for (r, i) in members.into_iter().enumerate() {
                rank[i] = r;
            }
        }
    }
    let mut out = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let sub = DatasetBundle {
            balanced: bundle
                .balanced
                .iter()
                .zip(&rank)
                .filter(|(_, &r)| r < s / 4)
                .map(|(e, _)| e.clone())
                .collect(),
            holdout: bundle.holdout.clone(),
            counts: bundle.counts.clone(),
            rng_seed: bundle.rng_seed,
        };
        let report = evaluate(learner, &sub, k, rng_seed)?;
        out.push(CurvePoint {
            size: s,
            overall: report.overall,
            report,
        });
    }
    Ok(out)
}

/// `size,overall` rows.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["size", "overall"]).expect("in-memory write");
    for p in points {
        w.write_record([p.size.to_string(), format!("{:.6}", p.overall)])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Aligned text table: Hard +/-, Easy +/-, averages, holdout recall.
pub fn format_table(rows: &[(String, MetricsReport)]) -> String {
    let name_w = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(5);
    let cell = |v: Option<f64>| v.map_or_else(|| "   -  ".to_string(), |x| format!("{x:6.3}"));
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:name_w$}  {:^13}  {:^13}  {:^22}  {:^22}",
        "", "Hard", "Easy", "Average", "Holdout (recall)"
    );
    let _ = writeln!(
        s,
        "{:name_w$}  {:>6} {:>6}  {:>6} {:>6}  {:>6} {:>6} {:>8}  {:>6} {:>6} {:>8}",
        "Model", "+", "-", "+", "-", "Hard", "Easy", "Overall", "Hard-", "Easy+", "Easy-"
    );
    for (name, r) in rows {
        let _ = writeln!(
            s,
            "{:name_w$}  {} {}  {} {}  {} {} {:>8}  {} {} {:>8}",
            name,
            cell(Some(r.hard_pos)),
            cell(Some(r.hard_neg)),
            cell(Some(r.easy_pos)),
            cell(Some(r.easy_neg)),
            cell(Some(r.hard_avg)),
            cell(Some(r.easy_avg)),
            cell(Some(r.overall)),
            cell(r.holdout.hard_neg),
            cell(r.holdout.easy_pos),
            cell(r.holdout.easy_neg),
        );
    }
    s
}
