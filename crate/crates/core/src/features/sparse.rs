use serde::{Deserialize, Serialize};

/// Sparse real vector with strictly increasing indices and no stored zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
    normalized: bool,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
            normalized: false,
        }
    }

    /// Builds from `(index, value)` pairs in any order; duplicates are summed
    /// and zeros dropped.
    ///
    /// Panics if an index is out of range.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        Self::from_sorted(dim, merged)
    }

    pub(crate) fn from_sorted(dim: usize, pairs: Vec<(usize, f64)>) -> Self {
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            assert!(i < dim, "index {i} out of range for dimension {dim}");
            if v != 0.0 {
                indices.push(i as u32);
                values.push(v);
            }
        }
        SparseVector {
            dim,
            indices,
            values,
            normalized: false,
        }
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        Self::from_sorted(dense.len(), dense.iter().copied().enumerate().collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| (i as usize, v))
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&(index as u32)) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Scales to unit L2 norm; the zero vector is left as is.
    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for v in &mut self.values {
                *v /= n;
            }
        }
        self.normalized = true;
    }

    pub fn scale(&mut self, factor: f64) {
        if factor == 0.0 {
            self.indices.clear();
            self.values.clear();
        } else {
            for v in &mut self.values {
                *v *= factor;
            }
        }
        self.normalized = false;
    }

    pub fn map_values(&mut self, f: impl Fn(f64) -> f64) {
        let pairs: Vec<(usize, f64)> = self.entries().map(|(i, v)| (i, f(v))).collect();
        *self = Self::from_sorted(self.dim, pairs);
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b, mut acc) = (0, 0, 0.0);
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    /// Dot product with a dense vector of at least `dim` entries.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn squared_distance(&self, other: &SparseVector) -> f64 {
        (self.norm_squared() + other.norm_squared() - 2.0 * self.dot(other)).max(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.entries() {
            out[i] = v;
        }
        out
    }

    /// Places `other` after `self`: the result has dimension `self.dim + other.dim`.
    pub fn concat(&self, other: &SparseVector) -> SparseVector {
        let offset = self.dim;
        let pairs = self
            .entries()
            .chain(other.entries().map(|(i, v)| (i + offset, v)))
            .collect();
        Self::from_sorted(self.dim + other.dim, pairs)
    }
}
