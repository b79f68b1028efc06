use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::FeatureError;

pub const PCA_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_COMPONENTS: usize = 50;

/// Mean and top principal directions of a training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    version: u32,
    mean: Vec<f64>,
    /// Row-major, `k` rows of length `d`.
    components: Vec<Vec<f64>>,
    explained_variance: Vec<f64>,
}

impl PcaProjection {
    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("projection serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, FeatureError> {
        let p: PcaProjection = serde_json::from_str(s).map_err(|e| FeatureError::Format(e.to_string()))?;
        if p.version != PCA_FORMAT_VERSION {
            return Err(FeatureError::Format(format!("unsupported PCA version {}", p.version)));
        }
        if p.components.iter().any(|c| c.len() != p.mean.len()) {
            return Err(FeatureError::Format("component length differs from mean".into()));
        }
        Ok(p)
    }
}

/// Fits the top-`k` principal directions via the eigendecomposition of the
/// sample covariance. `k` is clamped to `min(d, n - 1)`.
///
/// Component signs are fixed so the largest-magnitude entry is positive.
pub fn pca_fit<V: AsRef<[f64]>>(vectors: &[V], k: usize) -> Result<PcaProjection, FeatureError> {
    let n = vectors.len();
    if n < 2 {
        return Err(FeatureError::Pca("need at least two training vectors".into()));
    }
    let d = vectors[0].as_ref().len();
    if let Some(v) = vectors.iter().find(|v| v.as_ref().len() != d) {
        return Err(FeatureError::DimensionMismatch {
            expected: d,
            got: v.as_ref().len(),
        });
    }
    let k_eff = k.min(d).min(n - 1);
    if k_eff < k {
        log::warn!("PCA components clamped from {k} to {k_eff} (d = {d}, n = {n})");
    }

    let mut mean = vec![0.0; d];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v.as_ref()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |i, j| vectors[i].as_ref()[j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let total_var: f64 = cov.diagonal().iter().sum();
    if total_var <= 1e-12 {
        return Err(FeatureError::Pca("training data has zero variance".into()));
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(k_eff);
    let mut explained = Vec::with_capacity(k_eff);
    for &c in order.iter().take(k_eff) {
        let mut row: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
        let pivot = row.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            row.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(row);
        explained.push(eig.eigenvalues[c].max(0.0));
    }
    Ok(PcaProjection {
        version: PCA_FORMAT_VERSION,
        mean,
        components,
        explained_variance: explained,
    })
}

/// `components * (v - mean)`.
pub fn pca_project(v: &[f64], proj: &PcaProjection) -> Result<Vec<f64>, FeatureError> {
    if v.len() != proj.input_dim() {
        return Err(FeatureError::DimensionMismatch {
            expected: proj.input_dim(),
            got: v.len(),
        });
    }
    Ok(proj
        .components
        .iter()
        .map(|c| c.iter().zip(v).zip(&proj.mean).map(|((w, x), m)| w * (x - m)).sum())
        .collect())
}

/// Maps projected coordinates back to the input space.
pub fn pca_reconstruct(z: &[f64], proj: &PcaProjection) -> Vec<f64> {
    let mut out = proj.mean.clone();
    for (coef, comp) in z.iter().zip(&proj.components) {
        for (o, w) in out.iter_mut().zip(comp) {
            *o += coef * w;
        }
    }
    out
}
