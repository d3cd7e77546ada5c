//! Symmetric Chamfer distance with an exact k-d tree nearest neighbor.

use crate::scene::PointCloud;
use crate::{Error, Result, Vec3};

/// Static median-split k-d tree over 3D points.
pub struct KdTree {
    points: Vec<Vec3>,
    nodes: Vec<Node>,
}

struct Node {
    /// Splitting axis, or usize::MAX for leaves.
    axis: usize,
    split: f64,
    /// Children indices for inner nodes, point range for leaves.
    left: usize,
    right: usize,
    start: usize,
    end: usize,
}

const LEAF_SIZE: usize = 16;

impl KdTree {
    pub fn build(points: &[Vec3]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        if !points.is_empty() {
            build_node(points, &mut order, 0, points.len(), &mut nodes);
        }
        let reordered: Vec<Vec3> = order.iter().map(|&i| points[i]).collect();
        Self {
            points: reordered,
            nodes,
        }
    }

    /// Exact nearest neighbor: (squared distance, point). Panics on an
    /// empty tree.
    pub fn nearest(&self, query: Vec3) -> (f64, Vec3) {
        assert!(!self.points.is_empty(), "nearest neighbor on empty tree");
        let mut best = (f64::INFINITY, Vec3::zeros());
        self.search(0, query, &mut best);
        best
    }

    fn search(&self, node: usize, query: Vec3, best: &mut (f64, Vec3)) {
        let n = &self.nodes[node];
        if n.axis == usize::MAX {
            for p in &self.points[n.start..n.end] {
                let d2 = (p - query).norm_squared();
                if d2 < best.0 {
                    *best = (d2, *p);
                }
            }
            return;
        }
        let delta = query[n.axis] - n.split;
        let (near, far) = if delta <= 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.search(near, query, best);
        if delta * delta < best.0 {
            self.search(far, query, best);
        }
    }
}

fn build_node(
    points: &[Vec3],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    nodes.push(Node {
        axis: usize::MAX,
        split: 0.0,
        left: 0,
        right: 0,
        start,
        end,
    });
    let count = end - start;
    if count <= LEAF_SIZE {
        return id;
    }
    // longest-extent axis
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for &i in order[..count].iter() {
        let p = points[i];
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let mut axis = 0;
    for a in 1..3 {
        if hi[a] - lo[a] > hi[axis] - lo[axis] {
            axis = a;
        }
    }
    let mid = count / 2;
    order[..count].select_nth_unstable_by(mid, |&a, &b| {
        points[a][axis].partial_cmp(&points[b][axis]).unwrap()
    });
    let split = points[order[mid]][axis];
    let (left_slice, right_slice) = order.split_at_mut(mid);
    let left = build_node(points, left_slice, start, start + mid, nodes);
    let right = build_node(points, right_slice, start + mid, end, nodes);
    nodes[id].axis = axis;
    nodes[id].split = split;
    nodes[id].left = left;
    nodes[id].right = right;
    id
}

/// Mean nearest-neighbor (Euclidean) distance from each point of `from`
/// to the tree built over `to`.
fn directed_mean(from: &[Vec3], to: &KdTree) -> f64 {
    let sum: f64 = from.iter().map(|p| to.nearest(*p).0.sqrt()).sum();
    sum / from.len() as f64
}

/// Symmetric Chamfer distance:
/// 0.5 (mean_a min_b |a-b| + mean_b min_a |a-b|), Euclidean.
pub fn chamfer_l1(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Dimension(
            "chamfer distance needs two non-empty point sets".into(),
        ));
    }
    let tree_a = KdTree::build(&a.points);
    let tree_b = KdTree::build(&b.points);
    Ok(0.5 * (directed_mean(&a.points, &tree_b) + directed_mean(&b.points, &tree_a)))
}
