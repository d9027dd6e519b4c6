//! Block decimation: `d_hat` as a function of subsample size.
//!
//! For each block size the data are shuffled once and cut into disjoint blocks
//! of exactly that many points; neighbors are recomputed inside every block,
//! so smaller blocks probe larger length scales. A range of block sizes over
//! which the mean estimate stays flat identifies the number of relevant
//! directions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{DistanceMatrix, Metric, PointSet};
use crate::error::{Error, Result};
use crate::estimator::{estimate_id, EstimatorOptions};
use crate::neighbors::{two_nearest, two_nearest_from_matrix, Search};

pub const MIN_BLOCK_SIZE: usize = 3;

/// Data to decimate.
#[derive(Debug, Clone, Copy)]
pub enum ScanInput<'a> {
    Points {
        points: &'a PointSet,
        metric: &'a Metric,
    },
    Matrix(&'a DistanceMatrix),
}

impl ScanInput<'_> {
    pub fn n_total(&self) -> usize {
        match self {
            ScanInput::Points { points, .. } => points.n(),
            ScanInput::Matrix(dm) => dm.n(),
        }
    }

    fn estimate_block(&self, indices: &[usize], opts: &EstimatorOptions) -> Result<f64> {
        let ni = match *self {
            ScanInput::Points { points, metric } => {
                two_nearest(&points.subset(indices)?, metric, Search::Auto)?
            }
            ScanInput::Matrix(dm) => two_nearest_from_matrix(&dm.subset(indices)?)?,
        };
        Ok(estimate_id(&ni, opts)?.d_hat)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScanPoint {
    pub block_size: usize,
    pub d_mean: f64,
    /// Population standard deviation across blocks (0 for a single block).
    pub d_std: f64,
    pub n_blocks: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScanCurve {
    /// Ordered by increasing block size.
    pub points: Vec<ScanPoint>,
    pub seed: u64,
}

/// Shuffles `0..n_total` and cuts it into `floor(n_total / block_size)`
/// disjoint blocks; leftover indices are unused.
///
/// The shuffle is seeded by `seed` on a stream selected by `block_size`, so
/// different block sizes get independent partitions.
pub fn decimate(n_total: usize, block_size: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if block_size < MIN_BLOCK_SIZE {
        return Err(Error::BlockTooSmall { block_size });
    }
    if block_size > n_total {
        return Err(Error::BlockTooLarge {
            block_size,
            n_total,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block_size as u64);
    let mut order: Vec<usize> = (0..n_total).collect();
    order.shuffle(&mut rng);
    Ok(order
        .chunks_exact(block_size)
        .map(<[usize]>::to_vec)
        .collect())
}

/// Geometric grid `n_total, n_total/2, n_total/4, ...` down to `min_block`,
/// returned in increasing order.
pub fn default_block_sizes(n_total: usize, min_block: usize) -> Vec<usize> {
    let floor = min_block.max(MIN_BLOCK_SIZE);
    let mut sizes = Vec::new();
    let mut b = n_total;
    while b >= floor {
        sizes.push(b);
        b /= 2;
    }
    if sizes.is_empty() && n_total >= MIN_BLOCK_SIZE {
        sizes.push(n_total);
    }
    sizes.reverse();
    sizes
}

/// Runs [`estimate_id`] on every block of every requested size.
///
/// Blocks are estimated in parallel; results are gathered by block index so
/// the curve is a deterministic function of the inputs and `seed`. Errors are
/// annotated with the block size and index that produced them.
pub fn scan(
    input: ScanInput<'_>,
    block_sizes: &[usize],
    opts: &EstimatorOptions,
    seed: u64,
) -> Result<ScanCurve> {
    let n_total = input.n_total();
    let mut sizes = block_sizes.to_vec();
    sizes.sort_unstable();
    if let Some(w) = sizes.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateBlockSize(w[0]));
    }
    let mut points = Vec::with_capacity(sizes.len());
    for &block_size in &sizes {
        let blocks = decimate(n_total, block_size, seed)?;
        let results: Vec<Result<f64>> = blocks
            .par_iter()
            .map(|idx| input.estimate_block(idx, opts))
            .collect();
        let mut values = Vec::with_capacity(results.len());
        for (block_index, r) in results.into_iter().enumerate() {
            values.push(r.map_err(|e| Error::InBlock {
                block_size,
                block_index,
                source: Box::new(e),
            })?);
        }
        let k = values.len() as f64;
        let d_mean = values.iter().sum::<f64>() / k;
        let d_std = (values.iter().map(|v| (v - d_mean).powi(2)).sum::<f64>() / k).sqrt();
        points.push(ScanPoint {
            block_size,
            d_mean,
            d_std,
            n_blocks: values.len(),
        });
    }
    Ok(ScanCurve { points, seed })
}

/// Range of block sizes over which `d_mean` is flat.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PlateauReport {
    pub found: bool,
    pub lo: Option<usize>,
    pub hi: Option<usize>,
    pub d_plateau: Option<f64>,
}

impl PlateauReport {
    fn none() -> Self {
        Self {
            found: false,
            lo: None,
            hi: None,
            d_plateau: None,
        }
    }

    /// Whether `block_size` lies inside the plateau.
    pub fn contains(&self, block_size: usize) -> bool {
        matches!((self.lo, self.hi), (Some(lo), Some(hi)) if (lo..=hi).contains(&block_size))
    }
}

fn spread_ok(values: &[f64], rel_tol: f64) -> Option<f64> {
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &v in values {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    let mean = sum / values.len() as f64;
    ((max - min) <= rel_tol * mean.abs()).then_some(mean)
}

/// Finds the contiguous run of at least `min_points` curve points with
/// `(max - min) / mean <= rel_tol` that spans the widest range of log block
/// size. Earlier runs win ties.
pub fn detect_plateau(curve: &ScanCurve, rel_tol: f64, min_points: usize) -> PlateauReport {
    let pts = &curve.points;
    let d: Vec<f64> = pts.iter().map(|p| p.d_mean).collect();
    let min_points = min_points.max(1);
    let mut best: Option<(f64, usize, usize, f64)> = None;
    for i in 0..pts.len() {
        for j in i + min_points - 1..pts.len() {
            if let Some(mean) = spread_ok(&d[i..=j], rel_tol) {
                let width = (pts[j].block_size as f64 / pts[i].block_size as f64).ln();
                if best.map_or(true, |b| width > b.0) {
                    best = Some((width, i, j, mean));
                }
            }
        }
    }
    match best {
        Some((_, i, j, mean)) => PlateauReport {
            found: true,
            lo: Some(pts[i].block_size),
            hi: Some(pts[j].block_size),
            d_plateau: Some(mean),
        },
        None => PlateauReport::none(),
    }
}
