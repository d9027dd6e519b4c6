//! First and second nearest neighbors of every point.
//!
//! All search paths order candidates by `(squared distance, index)`, so ties
//! go to the lowest index and every path returns bitwise-identical results.
//! Work is split across threads, and because the candidate order is total the
//! output does not depend on the number of threads.

mod brute;
mod kdtree;

use rayon::prelude::*;

use crate::dataset::{DistanceMatrix, Kernel, Metric, PointSet};
use crate::error::{Error, Result};

use kdtree::KdTree;

/// Distances and indices of a point's two nearest neighbors.
///
/// `0 < r1 <= r2`; `idx1`, `idx2` differ from each other and from the point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NeighborInfo {
    pub r1: f64,
    pub r2: f64,
    pub idx1: usize,
    pub idx2: usize,
}

impl NeighborInfo {
    /// `r2 / r1`.
    pub fn mu(&self) -> f64 {
        self.r2 / self.r1
    }
}

/// Which search to run for coordinate data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Search {
    Brute,
    Accelerated,
    /// The kd-tree when a probe shows it prunes well, else brute force.
    #[default]
    Auto,
}

/// The two best `(squared distance, index)` candidates seen so far.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Best2 {
    pub(crate) d: [f64; 2],
    pub(crate) idx: [usize; 2],
}

impl Best2 {
    pub(crate) fn new() -> Self {
        Self {
            d: [f64::INFINITY; 2],
            idx: [usize::MAX; 2],
        }
    }

    #[inline]
    fn less(d: f64, j: usize, bd: f64, bj: usize) -> bool {
        d < bd || (d == bd && j < bj)
    }

    #[inline]
    pub(crate) fn offer(&mut self, d: f64, j: usize) {
        if Self::less(d, j, self.d[1], self.idx[1]) {
            if Self::less(d, j, self.d[0], self.idx[0]) {
                self.d[1] = self.d[0];
                self.idx[1] = self.idx[0];
                self.d[0] = d;
                self.idx[0] = j;
            } else {
                self.d[1] = d;
                self.idx[1] = j;
            }
        }
    }

    /// Largest squared distance that could still enter the pair.
    #[inline]
    pub(crate) fn bound(&self) -> f64 {
        self.d[1]
    }
}

/// Exhaustive O(N^2) search.
pub fn two_nearest_brute(ps: &PointSet, metric: &Metric) -> Result<Vec<NeighborInfo>> {
    metric.check(ps)?;
    let kernel = metric.kernel()?;
    finish_squared(brute::all_pairs(ps, kernel), |i| {
        zero_pairs_coords(ps, kernel, i)
    })
}

/// kd-tree search; exact, with the same tie-breaking as [`two_nearest_brute`].
///
/// Handles periodic boxes as well as the Euclidean metric.
pub fn two_nearest_accelerated(ps: &PointSet, metric: &Metric) -> Result<Vec<NeighborInfo>> {
    metric.check(ps)?;
    let kernel = metric.kernel()?;
    let tree = KdTree::build(ps);
    let best: Vec<Best2> = (0..ps.n())
        .into_par_iter()
        .map(|i| tree.two_nearest(i, kernel))
        .collect();
    finish_squared(best, |i| zero_pairs_coords(ps, kernel, i))
}

/// Per-row two smallest off-diagonal entries.
pub fn two_nearest_from_matrix(dm: &DistanceMatrix) -> Result<Vec<NeighborInfo>> {
    let n = dm.n();
    let best: Vec<Best2> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = Best2::new();
            for (j, &d) in dm.row(i).iter().enumerate() {
                if j != i {
                    best.offer(d, j);
                }
            }
            best
        })
        .collect();
    let mut pairs = Vec::new();
    for (i, b) in best.iter().enumerate() {
        if b.d[0] == 0.0 {
            pairs.extend(
                dm.row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, &d)| j > i && d == 0.0)
                    .map(|(j, _)| (i, j)),
            );
        }
    }
    if !pairs.is_empty() {
        return Err(Error::DuplicatePoints(pairs));
    }
    Ok(best
        .into_iter()
        .map(|b| NeighborInfo {
            r1: b.d[0],
            r2: b.d[1],
            idx1: b.idx[0],
            idx2: b.idx[1],
        })
        .collect())
}

/// Queries used to estimate the kd-tree's cost in [`Search::Auto`].
const PROBE_QUERIES: usize = 32;
/// Cost of one kd-tree distance evaluation relative to one pair of the tiled
/// brute force, which is vectorized and visits each pair once.
const KD_EVAL_COST: usize = 8;

/// Dispatches on `search`. `Auto` runs the kd-tree on a few evenly spaced
/// queries and falls back to brute force when pruning saves too little.
pub fn two_nearest(ps: &PointSet, metric: &Metric, search: Search) -> Result<Vec<NeighborInfo>> {
    match search {
        Search::Brute => two_nearest_brute(ps, metric),
        Search::Accelerated => two_nearest_accelerated(ps, metric),
        Search::Auto => {
            metric.check(ps)?;
            let kernel = metric.kernel()?;
            let n = ps.n();
            let tree = KdTree::build(ps);
            let probes = PROBE_QUERIES.min(n);
            let evals: usize = (0..probes)
                .map(|k| tree.two_nearest_counted(k * n / probes, kernel).1)
                .sum();
            if evals * KD_EVAL_COST > probes * n / 2 {
                return two_nearest_brute(ps, metric);
            }
            let best: Vec<Best2> = (0..n)
                .into_par_iter()
                .map(|i| tree.two_nearest(i, kernel))
                .collect();
            finish_squared(best, |i| zero_pairs_coords(ps, kernel, i))
        }
    }
}

fn finish_squared(
    best: Vec<Best2>,
    zero_pairs: impl Fn(usize) -> Vec<(usize, usize)>,
) -> Result<Vec<NeighborInfo>> {
    let pairs: Vec<(usize, usize)> = best
        .iter()
        .enumerate()
        .filter(|(_, b)| b.d[0] == 0.0)
        .flat_map(|(i, _)| zero_pairs(i))
        .collect();
    if !pairs.is_empty() {
        return Err(Error::DuplicatePoints(pairs));
    }
    Ok(best
        .into_iter()
        .map(|b| NeighborInfo {
            r1: b.d[0].sqrt(),
            r2: b.d[1].sqrt(),
            idx1: b.idx[0],
            idx2: b.idx[1],
        })
        .collect())
}

fn zero_pairs_coords(ps: &PointSet, kernel: Kernel<'_>, i: usize) -> Vec<(usize, usize)> {
    let q = ps.row(i);
    (i + 1..ps.n())
        .filter(|&j| kernel.sq_dist(q, ps.row(j)) == 0.0)
        .map(|j| (i, j))
        .collect()
}
