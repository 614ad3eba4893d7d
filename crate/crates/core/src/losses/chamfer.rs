//! Chamfer distance with its gradient.
//!
//! Nearest neighbours are exact. Clouds above [`BRUTE_FORCE_MAX`] points go
//! through a 3-d tree; ties in distance resolve to the lowest index on both
//! paths, so the two always agree bit for bit.

use crate::camera::{GradientCloud, PointCloud};
use crate::error::Result;

/// Largest cloud searched by a linear scan.
pub const BRUTE_FORCE_MAX: usize = 64;

#[inline]
pub(crate) fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
fn better(d: f64, i: usize, best: (f64, usize)) -> bool {
    d < best.0 || (d == best.0 && i < best.1)
}

#[derive(Clone, Copy, Debug)]
struct Node {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct KdTree<'a> {
    points: &'a [[f64; 3]],
    nodes: Vec<Node>,
    root: Option<usize>,
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [[f64; 3]]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut tree = Self { points, nodes: Vec::with_capacity(points.len()), root: None };
        tree.root = tree.build(&mut order, 0);
        tree
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> Option<usize> {
        if idx.is_empty() {
            return None;
        }
        let axis = depth % 3;
        let pts = self.points;
        idx.sort_unstable_by(|&a, &b| pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b)));
        let mid = idx.len() / 2;
        let point = idx[mid];
        let (lo, rest) = idx.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = self.build(lo, depth + 1);
        let right = self.build(hi, depth + 1);
        self.nodes.push(Node { point, axis, left, right });
        Some(self.nodes.len() - 1)
    }

    /// Index and squared distance of the nearest point (lowest index on ties).
    pub fn nearest(&self, q: &[f64; 3]) -> Option<(usize, f64)> {
        let root = self.root?;
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(root, q, &mut best);
        Some((best.1, best.0))
    }

    fn search(&self, node: usize, q: &[f64; 3], best: &mut (f64, usize)) {
        let n = self.nodes[node];
        let p = &self.points[n.point];
        let d = dist2(p, q);
        if better(d, n.point, *best) {
            *best = (d, n.point);
        }
        let diff = q[n.axis] - p[n.axis];
        let (near, far) = if diff < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
        if let Some(c) = near {
            self.search(c, q, best);
        }
        // `<=` keeps equal-distance candidates on the far side reachable.
        if diff * diff <= best.0 {
            if let Some(c) = far {
                self.search(c, q, best);
            }
        }
    }
}

fn nearest_linear(points: &[[f64; 3]], q: &[f64; 3]) -> (usize, f64) {
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, p) in points.iter().enumerate() {
        let d = dist2(p, q);
        if better(d, i, best) {
            best = (d, i);
        }
    }
    (best.1, best.0)
}

/// For every query point, the index of and squared distance to its nearest
/// neighbour in `targets`.
pub fn nearest_neighbors(targets: &[[f64; 3]], queries: &[[f64; 3]]) -> Vec<(usize, f64)> {
    if targets.len() <= BRUTE_FORCE_MAX {
        queries.iter().map(|q| nearest_linear(targets, q)).collect()
    } else {
        let tree = KdTree::new(targets);
        queries.iter().map(|q| tree.nearest(q).expect("non-empty tree")).collect()
    }
}

/// Symmetric sum of squared nearest-neighbour distances and its gradient
/// with respect to `a`.
pub fn chamfer(a: &PointCloud, b: &PointCloud) -> Result<(f64, GradientCloud)> {
    let (pa, pb) = (a.points(), b.points());
    let a_to_b = nearest_neighbors(pb, pa);
    let b_to_a = nearest_neighbors(pa, pb);

    // Two directional sums added once, so swapping the arguments is exact.
    let forward: f64 = a_to_b.iter().map(|&(_, d)| d).sum();
    let backward: f64 = b_to_a.iter().map(|&(_, d)| d).sum();
    let value = forward + backward;

    let mut grad = vec![[0.0; 3]; pa.len()];
    for (i, &(j, _)) in a_to_b.iter().enumerate() {
        for k in 0..3 {
            grad[i][k] += 2.0 * (pa[i][k] - pb[j][k]);
        }
    }
    for (j, &(i, _)) in b_to_a.iter().enumerate() {
        for k in 0..3 {
            grad[i][k] += 2.0 * (pa[i][k] - pb[j][k]);
        }
    }
    Ok((value, grad))
}
