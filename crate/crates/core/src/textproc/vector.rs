use serde::{Deserialize, Serialize};

use super::TextError;

/// Sparse vector with entries sorted by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dimension: usize,
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn zeros(dimension: usize) -> Self {
        Self { dimension, entries: Vec::new() }
    }

    /// Builds from arbitrary `(index, weight)` pairs; duplicates are summed
    /// and zero weights dropped.
    pub fn from_pairs(dimension: usize, pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut entries: Vec<(u32, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, w) in entries {
            debug_assert!((i as usize) < dimension);
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += w,
                _ => merged.push((i, w)),
            }
        }
        merged.retain(|&(_, w)| w != 0.0);
        Self { dimension, entries: merged }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.entries.iter_mut().for_each(|e| e.1 /= n);
        }
        self
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i], other.entries[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.1 * b.1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for &(i, w) in &self.entries {
            out[i as usize] = w;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVector {
    values: Vec<f64>,
}

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(dimension: usize) -> Self {
        Self { values: vec![0.0; dimension] }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= n);
        }
        self
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }
}

/// A dense embedding block next to a sparse TF-IDF block, each unit length
/// (or zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridVector {
    pub dense: DenseVector,
    pub sparse: SparseVector,
}

impl HybridVector {
    pub fn is_zero(&self) -> bool {
        self.dense.is_zero() && self.sparse.is_zero()
    }
}

/// Equal-weight hybrid cosine.
pub fn cosine(a: &HybridVector, b: &HybridVector) -> Result<f64, TextError> {
    weighted_cosine(a, b, 0.5)
}

/// Cosine of the concatenations `[√w·dense, √(1−w)·sparse]`.
///
/// When both blocks of both vectors are unit length this is
/// `w·dense_cos + (1−w)·sparse_cos`. A zero block drops out of the norm, so a
/// nonzero vector always has similarity 1 with itself. Zero vectors score 0.
pub fn weighted_cosine(a: &HybridVector, b: &HybridVector, dense_weight: f64) -> Result<f64, TextError> {
    if a.dense.dimension() != b.dense.dimension() {
        return Err(TextError::DimensionMismatch { left: a.dense.dimension(), right: b.dense.dimension() });
    }
    if a.sparse.dimension() != b.sparse.dimension() {
        return Err(TextError::DimensionMismatch { left: a.sparse.dimension(), right: b.sparse.dimension() });
    }
    let w = dense_weight;
    let dot = w * a.dense.dot(&b.dense) + (1.0 - w) * a.sparse.dot(&b.sparse);
    let norm_sq = |v: &HybridVector| w * v.dense.norm().powi(2) + (1.0 - w) * v.sparse.norm().powi(2);
    let denom = (norm_sq(a) * norm_sq(b)).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / denom).clamp(-1.0, 1.0))
}
