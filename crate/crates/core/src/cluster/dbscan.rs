//! DBSCAN over hybrid vectors with distance `1 - cosine`.
//!
//! Points are visited in ascending index order and a border point joins the
//! first cluster whose expansion reaches it, so labels are reproducible.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ClusterError;
use crate::textproc::{weighted_cosine, HybridVector};

/// Above this many points `dbscan` pre-buckets candidates with random
/// hyperplane hashing instead of scanning every pair.
pub const EXACT_NEIGHBOR_LIMIT: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    /// Neighborhood radius on cosine distance, in (0, 2].
    pub eps: f64,
    /// Neighbors (the point itself included) needed for a core point.
    pub min_points: usize,
    /// Weight of the dense block in the hybrid cosine; the sparse block gets
    /// the rest.
    #[serde(default = "half")]
    pub dense_weight: f64,
}

fn half() -> f64 {
    0.5
}

impl DbscanParams {
    pub const ARTICLE_EPS: f64 = 0.04;
    pub const STATEMENT_EPS: f64 = 0.07;
    pub const MIN_POINTS: usize = 2;

    pub fn new(eps: f64, min_points: usize) -> Result<Self, ClusterError> {
        let p = Self { eps, min_points, dense_weight: 0.5 };
        p.validate()?;
        Ok(p)
    }

    pub fn articles() -> Self {
        Self { eps: Self::ARTICLE_EPS, min_points: Self::MIN_POINTS, dense_weight: 0.5 }
    }

    pub fn statements() -> Self {
        Self { eps: Self::STATEMENT_EPS, min_points: Self::MIN_POINTS, dense_weight: 0.5 }
    }

    pub fn with_dense_weight(mut self, w: f64) -> Self {
        self.dense_weight = w;
        self
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if !(self.eps > 0.0 && self.eps <= 2.0) {
            return Err(ClusterError::InvalidParams(format!("eps {} outside (0, 2]", self.eps)));
        }
        if self.min_points < 1 {
            return Err(ClusterError::InvalidParams("min_points must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.dense_weight) {
            return Err(ClusterError::InvalidParams(format!("dense_weight {} outside [0, 1]", self.dense_weight)));
        }
        Ok(())
    }
}

/// Per-point cluster label; `None` is noise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<Option<usize>>,
    pub cores: Vec<bool>,
    pub clusters: usize,
}

impl ClusterAssignment {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Member indices of each cluster, in label order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.clusters];
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(c) = l {
                out[*c].push(i);
            }
        }
        out
    }

    pub fn noise(&self) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, l)| l.is_none()).map(|(i, _)| i).collect()
    }

    /// Relabels clusters in order of their smallest member.
    pub fn canonical(&self) -> Vec<Option<usize>> {
        let mut map = HashMap::new();
        self.labels
            .iter()
            .map(|l| {
                l.map(|c| {
                    let next = map.len();
                    *map.entry(c).or_insert(next)
                })
            })
            .collect()
    }
}

/// Textbook DBSCAN expansion over precomputed neighbor lists (each list
/// includes the point itself).
pub fn dbscan_from_neighbors(neighbors: &[Vec<usize>], min_points: usize) -> ClusterAssignment {
    let n = neighbors.len();
    let cores: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_points).collect();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut clusters = 0;
    let mut queue = VecDeque::new();

    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        if !cores[start] {
            continue;
        }
        let cluster = clusters;
        clusters += 1;
        labels[start] = Some(cluster);
        queue.extend(neighbors[start].iter().copied());
        while let Some(q) = queue.pop_front() {
            if labels[q].is_none() {
                labels[q] = Some(cluster);
            }
            if visited[q] {
                continue;
            }
            visited[q] = true;
            if cores[q] {
                queue.extend(neighbors[q].iter().copied());
            }
        }
    }
    ClusterAssignment { labels, cores, clusters }
}

pub fn dbscan(points: &[HybridVector], params: &DbscanParams) -> Result<ClusterAssignment, ClusterError> {
    let search = if points.len() <= EXACT_NEIGHBOR_LIMIT { NeighborSearch::Exact } else { NeighborSearch::default_bucketed() };
    dbscan_with(points, params, search)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborSearch {
    /// Every pair is compared.
    Exact,
    /// Only pairs sharing a random-hyperplane signature of the dense block in
    /// at least one of `tables` tables are compared. May miss neighbors.
    Bucketed { bits: u32, tables: u32, seed: u64 },
}

impl NeighborSearch {
    pub fn default_bucketed() -> Self {
        NeighborSearch::Bucketed { bits: 8, tables: 10, seed: 0x5eed }
    }
}

pub fn dbscan_with(
    points: &[HybridVector],
    params: &DbscanParams,
    search: NeighborSearch,
) -> Result<ClusterAssignment, ClusterError> {
    params.validate()?;
    if points.is_empty() {
        return Ok(ClusterAssignment { labels: vec![], cores: vec![], clusters: 0 });
    }
    let dense_dim = points[0].dense.dimension();
    let sparse_dim = points[0].sparse.dimension();
    if let Some(p) = points.iter().find(|p| p.dense.dimension() != dense_dim || p.sparse.dimension() != sparse_dim) {
        return Err(ClusterError::Dimension { expected: (dense_dim, sparse_dim), got: (p.dense.dimension(), p.sparse.dimension()) });
    }
    let within = |i: usize, j: usize| {
        let sim = weighted_cosine(&points[i], &points[j], params.dense_weight).expect("dimensions checked");
        1.0 - sim <= params.eps
    };
    let neighbors: Vec<Vec<usize>> = match search {
        NeighborSearch::Exact => (0..points.len())
            .into_par_iter()
            .map(|i| (0..points.len()).filter(|&j| i == j || within(i, j)).collect())
            .collect(),
        NeighborSearch::Bucketed { bits, tables, seed } => {
            let candidates = bucket_candidates(points, bits, tables, seed);
            candidates
                .into_par_iter()
                .enumerate()
                .map(|(i, cands)| {
                    let mut nb: Vec<usize> = cands.into_iter().filter(|&j| i == j || within(i, j)).collect();
                    nb.sort_unstable();
                    nb
                })
                .collect()
        }
    };
    Ok(dbscan_from_neighbors(&neighbors, params.min_points))
}

fn bucket_candidates(points: &[HybridVector], bits: u32, tables: u32, seed: u64) -> Vec<Vec<usize>> {
    let dim = points[0].dense.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<HashSet<usize>> = (0..points.len()).map(|i| HashSet::from([i])).collect();
    for _ in 0..tables {
        let planes: Vec<Vec<f64>> = (0..bits)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let sig = planes.iter().enumerate().fold(0u64, |acc, (b, plane)| {
                let side: f64 = plane.iter().zip(p.dense.values()).map(|(a, x)| a * x).sum();
                if side >= 0.0 { acc | (1 << b) } else { acc }
            });
            buckets.entry(sig).or_default().push(i);
        }
        for members in buckets.values() {
            for &i in members {
                candidates[i].extend(members.iter().copied());
            }
        }
    }
    candidates.into_iter().map(|s| s.into_iter().collect()).collect()
}
