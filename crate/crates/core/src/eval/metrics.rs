use std::collections::BTreeMap;

use super::EvalError;
use crate::corpus::Label;

/// `2tp / (2tp + fp + fn)`, or 0 when the denominator is 0.
pub fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let den = 2 * tp + fp + fn_;
    if den == 0 {
        0.0
    } else {
        2.0 * tp as f64 / den as f64
    }
}

/// `(positive-class F1, negative-class F1)` over aligned predictions.
pub fn per_class_f1(preds: &[Label], golds: &[Label]) -> (f64, f64) {
    assert_eq!(preds.len(), golds.len(), "predictions and gold labels must align");
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (p, g) in preds.iter().zip(golds) {
        match (p.is_positive(), g.is_positive()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    // For the negative class, tn plays tp and the error roles swap.
    (f1(tp, fp, fn_), f1(tn, fn_, fp))
}

/// Kappa from a 2x2 agreement table: `a` both positive, `b` first positive
/// only, `c` second positive only, `d` both negative.
pub fn kappa_from_counts(a: usize, b: usize, c: usize, d: usize) -> Result<f64, EvalError> {
    let n = (a + b + c + d) as f64;
    if n == 0.0 {
        return Err(EvalError::Kappa("no items".into()));
    }
    let po = (a + d) as f64 / n;
    let pa = (a + b) as f64 / n;
    let pb = (a + c) as f64 / n;
    let pe = pa * pb + (1.0 - pa) * (1.0 - pb);
    if pe >= 1.0 {
        return Ok(1.0);
    }
    Ok((po - pe) / (1.0 - pe))
}

/// Kappa over two aligned label vectors.
pub fn cohens_kappa(a: &[Label], b: &[Label]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::Kappa(format!("{} vs {} labels", a.len(), b.len())));
    }
    let (mut pp, mut pn, mut np, mut nn) = (0, 0, 0, 0);
    for (x, y) in a.iter().zip(b) {
        match (x.is_positive(), y.is_positive()) {
            (true, true) => pp += 1,
            (true, false) => pn += 1,
            (false, true) => np += 1,
            (false, false) => nn += 1,
        }
    }
    kappa_from_counts(pp, pn, np, nn)
}

/// Kappa over two raters' labels keyed by item; the item sets must match.
pub fn cohens_kappa_keyed(a: &BTreeMap<String, Label>, b: &BTreeMap<String, Label>) -> Result<f64, EvalError> {
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        return Err(EvalError::Kappa("raters labeled different item sets".into()));
    }
    let la: Vec<Label> = a.values().copied().collect();
    let lb: Vec<Label> = b.values().copied().collect();
    cohens_kappa(&la, &lb)
}
