//! Exact kd-tree for two-nearest-neighbor queries.
//!
//! Nodes carry tight bounding boxes (the min and max coordinates of their
//! points). The pruning bound is accumulated in the same coordinate order and
//! with the same per-axis arithmetic as the distance kernel, so by
//! monotonicity of rounding it never exceeds the computed distance to any
//! point in the box. Pruning only when the bound is strictly above the current
//! second-best distance keeps equal-distance candidates with lower indices
//! reachable, which makes results identical to brute force, ties included.

use crate::dataset::{min_image, Kernel, PointSet};

use super::Best2;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Inner { left: usize, right: usize },
}

#[derive(Debug)]
pub(crate) struct KdTree<'a> {
    ps: &'a PointSet,
    /// Original indices in tree order; leaves own contiguous ranges.
    order: Vec<usize>,
    nodes: Vec<NodeKind>,
    /// Per-node bounding boxes, `dim` values per node.
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<'a> KdTree<'a> {
    pub(crate) fn build(ps: &'a PointSet) -> Self {
        let mut tree = KdTree {
            ps,
            order: (0..ps.n()).collect(),
            nodes: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
        };
        tree.build_node(0, ps.n());
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let dim = self.ps.dim();
        let id = self.nodes.len();
        self.nodes.push(NodeKind::Leaf { start, end });

        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &self.order[start..end] {
            for (k, &v) in self.ps.row(i).iter().enumerate() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        let (axis, spread) = lo.iter().zip(&hi).map(|(l, h)| h - l).enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (k, s)| if s > acc.1 { (k, s) } else { acc },
        );
        self.lo.extend_from_slice(&lo);
        self.hi.extend_from_slice(&hi);

        if end - start <= LEAF_SIZE || spread <= 0.0 {
            return id;
        }
        let mid = start + (end - start) / 2;
        let ps = self.ps;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            ps.row(a)[axis].total_cmp(&ps.row(b)[axis])
        });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = NodeKind::Inner { left, right };
        id
    }

    /// Lower bound on the squared distance from `q` to any point in `node`,
    /// or `None` once it exceeds `cutoff`.
    #[inline]
    fn bound(&self, node: usize, q: &[f64], kernel: Kernel<'_>, cutoff: f64) -> Option<f64> {
        let dim = q.len();
        let lo = &self.lo[node * dim..(node + 1) * dim];
        let hi = &self.hi[node * dim..(node + 1) * dim];
        let mut acc = 0.0;
        for k in 0..dim {
            let (x, l, h) = (q[k], lo[k], hi[k]);
            let g = match kernel {
                Kernel::Euclidean => {
                    if x < l {
                        l - x
                    } else if x > h {
                        x - h
                    } else {
                        0.0
                    }
                }
                Kernel::Periodic(box_lengths) => {
                    let len = box_lengths[k];
                    let (near, far) = if x < l {
                        (l - x, h - x)
                    } else if x > h {
                        (x - h, x - l)
                    } else {
                        (0.0, 0.0)
                    };
                    // min-image distance is unimodal in the raw displacement,
                    // so its minimum over the interval sits at an endpoint
                    min_image(near, len).min(min_image(far, len))
                }
            };
            acc += g * g;
            if acc > cutoff {
                return None;
            }
        }
        Some(acc)
    }

    /// Two nearest neighbors of point `i` of the indexed set, as squared
    /// distances.
    pub(crate) fn two_nearest(&self, i: usize, kernel: Kernel<'_>) -> Best2 {
        self.two_nearest_counted(i, kernel).0
    }

    /// Like [`KdTree::two_nearest`], also returning the number of distance
    /// evaluations.
    pub(crate) fn two_nearest_counted(&self, i: usize, kernel: Kernel<'_>) -> (Best2, usize) {
        let mut best = Best2::new();
        let mut evals = 0;
        let q = self.ps.row(i);
        self.search(0, i, q, kernel, &mut best, &mut evals);
        (best, evals)
    }

    fn search(
        &self,
        node: usize,
        i: usize,
        q: &[f64],
        kernel: Kernel<'_>,
        best: &mut Best2,
        evals: &mut usize,
    ) {
        match self.nodes[node] {
            NodeKind::Leaf { start, end } => {
                *evals += end - start;
                for &j in &self.order[start..end] {
                    if j != i {
                        best.offer(kernel.sq_dist(q, self.ps.row(j)), j);
                    }
                }
            }
            NodeKind::Inner { left, right } => {
                let bl = self.bound(left, q, kernel, best.bound());
                let br = self.bound(right, q, kernel, best.bound());
                let (first, second) = match (bl, br) {
                    (Some(a), Some(b)) if b < a => ((right, b), Some((left, a))),
                    (Some(a), b) => ((left, a), b.map(|b| (right, b))),
                    (None, Some(b)) => ((right, b), None),
                    (None, None) => return,
                };
                if first.1 <= best.bound() {
                    self.search(first.0, i, q, kernel, best, evals);
                }
                if let Some((node, b)) = second {
                    if b <= best.bound() {
                        self.search(node, i, q, kernel, best, evals);
                    }
                }
            }
        }
    }
}
