use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use super::OutletScore;

/// Largest sample for which the p-value comes from all permutations.
pub const EXACT_PERMUTATION_LIMIT: usize = 10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least 3 pairs, got {0}")]
    TooFew(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("constant input, correlation undefined")]
    Constant,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("label {0} is not one of the classes")]
    UnknownClass(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::Constant);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Rank correlation with a two-sided p-value: exact over all permutations
/// up to [`EXACT_PERMUTATION_LIMIT`] pairs, Student t with n - 2 degrees of
/// freedom above that.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFew(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let r = pearson(&rx, &ry)?;
    let n = x.len();
    let p_value = if n <= EXACT_PERMUTATION_LIMIT { permutation_p(&rx, &ry) } else { t_p(r, n) };
    Ok(Correlation { r, p_value, n })
}

fn t_p(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Share of orderings of `ry` whose |covariance with rx| reaches the
/// observed one. Ranks are multiples of 1/2 and keep their sum, so twice the
/// centered ranks are integers and the covariance can be tracked exactly,
/// one swap at a time.
fn permutation_p(rx: &[f64], ry: &[f64]) -> f64 {
    let n = rx.len();
    // 2 * (rank - (n + 1) / 2)
    let centered = |r: &[f64]| -> Vec<i64> { r.iter().map(|v| (2.0 * v) as i64 - (n as i64 + 1)).collect() };
    let cx = centered(rx);
    let mut ys = centered(ry);
    let mut cov: i64 = cx.iter().zip(&ys).map(|(a, b)| a * b).sum();
    let observed = cov.abs();
    let (mut hits, mut total) = (1u64, 1u64);
    let mut c = vec![0usize; n];
    // Heap's algorithm.
    let mut i = 1;
    while i < n {
        if c[i] < i {
            let j = if i % 2 == 0 { 0 } else { c[i] };
            cov += (cx[j] - cx[i]) * (ys[i] - ys[j]);
            ys.swap(j, i);
            total += 1;
            hits += u64::from(cov.abs() >= observed);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    hits as f64 / total as f64
}

/// Spearman correlation between outlet scores and an external rating per
/// outlet id. Outlets missing from either side are left out.
pub fn correlate(scores: &[OutletScore], ratings: &BTreeMap<String, f64>) -> Result<Correlation, StatsError> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        scores.iter().filter_map(|s| ratings.get(&s.outlet_id).map(|r| (s.mean, *r))).unzip();
    spearman(&x, &y)
}
