//! Exact k-nearest-neighbour search over a static KD-tree.
//!
//! The tree uses median splits cycling x → y → z. Points are ordered by
//! `(coordinate, original index)` when splitting, and neighbours are ordered
//! by `(squared distance, original index)`, so both construction and queries
//! are fully deterministic for a given input ordering.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{distance_squared, Point3};

pub const DEFAULT_LEAF_SIZE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3>,
    /// Point indices, permuted so that every leaf owns a contiguous range.
    order: Vec<usize>,
    nodes: Vec<Node>,
    root: usize,
}

/// A neighbour returned by [`KdTree::knn_with_distances`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance_squared: f64,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance_squared
            .total_cmp(&other.distance_squared)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdTree {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        Self::build_with_leaf_size(cloud, DEFAULT_LEAF_SIZE)
    }

    pub fn build_with_leaf_size(cloud: &PointCloud, leaf_size: usize) -> Result<Self> {
        cloud.require_nonempty()?;
        if leaf_size == 0 {
            return Err(Error::InvalidParameter("leaf size must be positive".into()));
        }
        let points = cloud.points().to_vec();
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / leaf_size + 1);
        let root = build_node(&points, &mut order, 0, 0, leaf_size, &mut nodes);
        Ok(Self {
            points,
            order,
            nodes,
            root,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, self.root)
    }

    /// Indices of the `k` nearest points to `query`, nearest first.
    pub fn knn(&self, query: Point3, k: usize) -> Result<Vec<usize>> {
        Ok(self
            .knn_with_distances(query, k)?
            .into_iter()
            .map(|n| n.index)
            .collect())
    }

    pub fn knn_with_distances(&self, query: Point3, k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if k > self.points.len() {
            return Err(Error::InvalidParameter(format!(
                "k = {k} exceeds the {} indexed points",
                self.points.len()
            )));
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(self.root, query, k, &mut heap);
        Ok(heap.into_sorted_vec())
    }

    fn search(&self, id: usize, query: Point3, k: usize, heap: &mut BinaryHeap<Neighbor>) {
        match self.nodes[id] {
            Node::Leaf { start, end } => {
                for &index in &self.order[start..end] {
                    let candidate = Neighbor {
                        index,
                        distance_squared: distance_squared(query, self.points[index]),
                    };
                    if heap.len() < k {
                        heap.push(candidate);
                    } else if candidate < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(candidate);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff <= 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, k, heap);
                // `<=` keeps equidistant candidates reachable for the index tie-break.
                let reach = diff * diff;
                if heap.len() < k
                    || reach <= heap.peek().map_or(f64::INFINITY, |w| w.distance_squared)
                {
                    self.search(far, query, k, heap);
                }
            }
        }
    }
}

fn build_node(
    points: &[Point3],
    order: &mut [usize],
    offset: usize,
    depth: usize,
    leaf_size: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let n = order.len();
    if n <= leaf_size {
        nodes.push(Node::Leaf {
            start: offset,
            end: offset + n,
        });
        return nodes.len() - 1;
    }

    let axis = depth % 3;
    let left_len = n.div_ceil(2);
    let key = |&a: &usize, &b: &usize| points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b));
    order.select_nth_unstable_by(left_len - 1, key);
    let value = points[order[left_len - 1]][axis];

    let id = nodes.len();
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (lo, hi) = order.split_at_mut(left_len);
    let left = build_node(points, lo, offset, depth + 1, leaf_size, nodes);
    let right = build_node(points, hi, offset + left_len, depth + 1, leaf_size, nodes);
    nodes[id] = Node::Split {
        axis,
        value,
        left,
        right,
    };
    id
}

/// Linear-scan k-nearest neighbours with the same ordering as the tree.
#[cfg(test)]
fn brute_force_knn(points: &[Point3], query: Point3, k: usize) -> Vec<usize> {
    let mut all: Vec<Neighbor> = points
        .iter()
        .enumerate()
        .map(|(index, &p)| Neighbor {
            index,
            distance_squared: distance_squared(query, p),
        })
        .collect();
    all.sort();
    all.truncate(k);
    all.into_iter().map(|n| n.index).collect()
}
