//! Exhaustive pair search over column-major tiles.
//!
//! Coordinates are transposed so that one coordinate of a tile of candidates
//! is contiguous, and the distance loop runs across candidates. Each pair
//! still accumulates its coordinates in order `0..dim` with the kernel's
//! arithmetic, so the squared distances are bitwise those of `Kernel::sq_dist`.
//! Every unordered pair is evaluated once and offered to both ends; the
//! lexicographic `Best2` makes the result independent of offer order and of
//! how the work is split across threads.

use rayon::prelude::*;

use crate::dataset::{min_image, Kernel, PointSet};

use super::Best2;

const TILE: usize = 128;

struct Columns {
    data: Vec<f64>,
    n: usize,
}

impl Columns {
    fn new(ps: &PointSet) -> Self {
        let (n, dim) = (ps.n(), ps.dim());
        let mut data = vec![0.0; n * dim];
        for (i, row) in ps.rows().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                data[k * n + i] = v;
            }
        }
        Self { data, n }
    }

    #[inline]
    fn column(&self, k: usize, start: usize, end: usize) -> &[f64] {
        &self.data[k * self.n + start..k * self.n + end]
    }
}

/// Squared distances from `q` to candidates `start..end`, written to `acc`.
#[inline]
fn tile_distances(
    cols: &Columns,
    q: &[f64],
    kernel: Kernel<'_>,
    start: usize,
    end: usize,
    acc: &mut [f64],
) {
    let acc = &mut acc[..end - start];
    acc.fill(0.0);
    match kernel {
        Kernel::Euclidean => {
            for (k, &x) in q.iter().enumerate() {
                for (a, &y) in acc.iter_mut().zip(cols.column(k, start, end)) {
                    let d = x - y;
                    *a += d * d;
                }
            }
        }
        Kernel::Periodic(box_lengths) => {
            for (k, (&x, &l)) in q.iter().zip(box_lengths).enumerate() {
                for (a, &y) in acc.iter_mut().zip(cols.column(k, start, end)) {
                    let m = min_image((x - y).abs(), l);
                    *a += m * m;
                }
            }
        }
    }
}

fn merge(mut a: Vec<Best2>, b: Vec<Best2>) -> Vec<Best2> {
    for (x, y) in a.iter_mut().zip(b) {
        for s in 0..2 {
            if y.idx[s] != usize::MAX {
                x.offer(y.d[s], y.idx[s]);
            }
        }
    }
    a
}

/// Two nearest neighbors of every point, as squared distances.
pub(crate) fn all_pairs(ps: &PointSet, kernel: Kernel<'_>) -> Vec<Best2> {
    let n = ps.n();
    let cols = Columns::new(ps);
    let tiles = n.div_ceil(TILE);
    (0..tiles)
        .into_par_iter()
        .fold(
            || (vec![Best2::new(); n], vec![0.0; TILE]),
            |(mut best, mut acc), t| {
                let start = t * TILE;
                let end = (start + TILE).min(n);
                // pairs (i, j) with i < j and j in this tile
                for i in 0..end - 1 {
                    let lo = start.max(i + 1);
                    tile_distances(&cols, ps.row(i), kernel, lo, end, &mut acc);
                    let mut bi = best[i];
                    for (off, &d) in acc[..end - lo].iter().enumerate() {
                        let j = lo + off;
                        bi.offer(d, j);
                        best[j].offer(d, i);
                    }
                    best[i] = bi;
                }
                (best, acc)
            },
        )
        .map(|(best, _)| best)
        .reduce(|| vec![Best2::new(); n], merge)
}
