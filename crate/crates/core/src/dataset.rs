//! Point sets, metrics and precomputed distance matrices.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Relative tolerance for accepting an asymmetric distance matrix.
pub const SYMMETRY_RTOL: f64 = 1e-9;

/// `n` points in `dim` coordinates, stored row-major.
///
/// Every coordinate is finite and there are at least three points, so each
/// point has a first and second neighbor. Exact duplicates are allowed here;
/// neighbor search rejects them.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl PointSet {
    /// Validates a table of rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::RaggedRows {
                    row: i,
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, dim)
    }

    /// Validates a row-major buffer of `data.len() / dim` points.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(if data.is_empty() {
                Error::TooFewPoints(0)
            } else {
                Error::EmptyDimension
            });
        }
        if data.len() % dim != 0 {
            return Err(Error::RaggedRows {
                row: data.len() / dim,
                expected: dim,
                found: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        let n = data.len() / dim;
        if n < 3 {
            return Err(Error::TooFewPoints(n));
        }
        Ok(Self { data, n, dim })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// The points at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self::from_flat(data, self.dim)
    }

    /// Every coordinate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_flat(self.data.iter().map(|v| v * c).collect(), self.dim)
    }

    /// Removes all but the first row of every group of bitwise-equal rows
    /// (`-0.0` and `0.0` compare equal). Returns the reduced set and the
    /// original indices of the rows that were kept.
    pub fn without_duplicates(&self) -> Result<(Self, Vec<usize>)> {
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(self.n);
        let mut kept = Vec::with_capacity(self.n);
        for (i, row) in self.rows().enumerate() {
            if seen.insert(row_key(row), i).is_none() {
                kept.push(i);
            }
        }
        Ok((self.subset(&kept)?, kept))
    }
}

fn row_key(row: &[f64]) -> Vec<u64> {
    // adding 0.0 maps -0.0 to +0.0
    row.iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// How distances between points are measured.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    /// Euclidean distance on a torus with the given box lengths, using the
    /// minimum-image displacement `min(|d|, L - |d|)` per coordinate.
    Periodic { box_lengths: Vec<f64> },
    /// Distances come from a [`DistanceMatrix`]; there are no coordinates.
    Precomputed,
}

impl Metric {
    pub fn periodic(box_lengths: Vec<f64>) -> Result<Self> {
        if box_lengths.is_empty() {
            return Err(Error::InvalidMetric(
                "periodic metric needs at least one box length".into(),
            ));
        }
        if let Some(l) = box_lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidMetric(format!(
                "box lengths must be positive, got {l}"
            )));
        }
        Ok(Metric::Periodic { box_lengths })
    }

    /// Checks that the metric can be evaluated on `ps`: the box has one length
    /// per coordinate and every point lies inside it. Points are never wrapped.
    pub fn check(&self, ps: &PointSet) -> Result<()> {
        match self {
            Metric::Euclidean => Ok(()),
            Metric::Precomputed => Err(Error::InvalidMetric(
                "precomputed metric needs a distance matrix, not coordinates".into(),
            )),
            Metric::Periodic { box_lengths } => {
                if box_lengths.len() != ps.dim() {
                    return Err(Error::DimensionMismatch {
                        left: box_lengths.len(),
                        right: ps.dim(),
                    });
                }
                for (row, p) in ps.rows().enumerate() {
                    for (col, (&v, &l)) in p.iter().zip(box_lengths).enumerate() {
                        if !(0.0..l).contains(&v) {
                            return Err(Error::OutsideBox {
                                row,
                                col,
                                value: v,
                                box_length: l,
                            });
                        }
                    }
                }
                Ok(())
            }
        }
    }

    pub(crate) fn kernel(&self) -> Result<Kernel<'_>> {
        match self {
            Metric::Euclidean => Ok(Kernel::Euclidean),
            Metric::Periodic { box_lengths } => Ok(Kernel::Periodic(box_lengths)),
            Metric::Precomputed => Err(Error::InvalidMetric(
                "precomputed metric has no coordinate kernel".into(),
            )),
        }
    }
}

/// Squared-distance kernel shared by every neighbor search path, so that all
/// of them produce bitwise-identical distances.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Kernel<'a> {
    Euclidean,
    Periodic(&'a [f64]),
}

/// Minimum-image length of an absolute displacement `d` in a box of side `l`.
///
/// Written as a compare-select so that it vectorizes; inputs are finite.
#[inline]
pub(crate) fn min_image(d: f64, l: f64) -> f64 {
    let w = l - d;
    if w < d {
        w
    } else {
        d
    }
}

impl Kernel<'_> {
    #[inline]
    pub(crate) fn sq_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        match *self {
            Kernel::Euclidean => {
                for (x, y) in a.iter().zip(b) {
                    let d = x - y;
                    acc += d * d;
                }
            }
            Kernel::Periodic(box_lengths) => {
                for ((x, y), l) in a.iter().zip(b).zip(box_lengths) {
                    let m = min_image((x - y).abs(), *l);
                    acc += m * m;
                }
            }
        }
        acc
    }
}

/// Distance between two points under a coordinate metric.
pub fn distance(a: &[f64], b: &[f64], metric: &Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if let Metric::Periodic { box_lengths } = metric {
        if box_lengths.len() != a.len() {
            return Err(Error::DimensionMismatch {
                left: box_lengths.len(),
                right: a.len(),
            });
        }
    }
    Ok(metric.kernel()?.sq_dist(a, b).sqrt())
}

/// A dense, symmetric `n x n` matrix of non-negative distances with a zero
/// diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    data: Vec<f64>,
    n: usize,
}

impl DistanceMatrix {
    /// Validates a row-major `n x n` buffer. Entries that differ from their
    /// transpose by at most [`SYMMETRY_RTOL`] (relative) are averaged.
    pub fn from_flat(mut data: Vec<f64>, n: usize) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::NotSquare {
                rows: n,
                row: 0,
                cols: data.len() / n.max(1),
            });
        }
        if n < 3 {
            return Err(Error::TooFewPoints(n));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / n,
                col: pos % n,
            });
        }
        if let Some(pos) = data.iter().position(|v| *v < 0.0) {
            return Err(Error::NegativeDistance {
                i: pos / n,
                j: pos % n,
                value: data[pos],
            });
        }
        for i in 0..n {
            let v = data[i * n + i];
            if v != 0.0 {
                return Err(Error::NonzeroDiagonal { i, value: v });
            }
            for j in i + 1..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if a != b {
                    if (a - b).abs() > SYMMETRY_RTOL * a.max(b) {
                        return Err(Error::AsymmetricMatrix { i, j, a, b });
                    }
                    let m = 0.5 * (a + b);
                    data[i * n + j] = m;
                    data[j * n + i] = m;
                }
            }
        }
        Ok(Self { data, n })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    row: i,
                    cols: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, n)
    }

    /// All pairwise distances of `ps` under a coordinate metric.
    pub fn from_points(ps: &PointSet, metric: &Metric) -> Result<Self> {
        metric.check(ps)?;
        let kernel = metric.kernel()?;
        let n = ps.n();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = kernel.sq_dist(ps.row(i), ps.row(j)).sqrt();
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Ok(Self { data, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// The sub-matrix over `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let m = indices.len();
        if m < 3 {
            return Err(Error::TooFewPoints(m));
        }
        let mut data = Vec::with_capacity(m * m);
        for &i in indices {
            let row = self.row(i);
            data.extend(indices.iter().map(|&j| row[j]));
        }
        Ok(Self { data, n: m })
    }

    /// Removes all but the first member of every group of points at zero
    /// distance from each other. Returns the reduced matrix and the original
    /// indices that were kept.
    pub fn without_duplicates(&self) -> Result<(Self, Vec<usize>)> {
        let mut dropped = vec![false; self.n];
        let mut kept = Vec::with_capacity(self.n);
        for i in 0..self.n {
            if dropped[i] {
                continue;
            }
            kept.push(i);
            for (j, &d) in self.row(i).iter().enumerate().skip(i + 1) {
                if d == 0.0 {
                    dropped[j] = true;
                }
            }
        }
        Ok((self.subset(&kept)?, kept))
    }
}
