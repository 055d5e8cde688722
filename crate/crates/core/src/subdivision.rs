//! Splitting a full reconstruction into fixed-size subsets.
//!
//! The number of subsets is `ceil(N_all / n_input)`. Reference points are
//! chosen by farthest point sampling, and each subset is the reference plus
//! its `n_input - 1` nearest neighbours. An optional connectivity-aware mode
//! grows each subset breadth-first over the mutual k-nearest-neighbour graph
//! instead, so that fragments separated by a gap are not pulled in.

use std::collections::{HashMap, HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::distance_squared;
use crate::spatial_index::KdTree;

pub const DEFAULT_SUBSET_SIZE: usize = 4096;
pub const DEFAULT_GRAPH_NEIGHBORS: usize = 8;

pub fn subset_count(total_points: usize, subset_size: usize) -> Result<usize> {
    if total_points == 0 || subset_size == 0 {
        return Err(Error::InvalidParameter(
            "point count and subset size must both be positive".into(),
        ));
    }
    Ok(total_points.div_ceil(subset_size))
}

/// Greedy farthest point sampling.
///
/// The first sample is the point farthest from the centroid; each later one
/// maximises the minimum distance to the samples so far. Ties go to the lowest
/// index. Any prefix of the result equals the result for a smaller `m`.
pub fn farthest_point_sample(cloud: &PointCloud, m: usize) -> Result<Vec<usize>> {
    let points = cloud.points();
    if m == 0 || m > points.len() {
        return Err(Error::InvalidParameter(format!(
            "sample count {m} must be in 1..={}",
            points.len()
        )));
    }
    let centroid = cloud.centroid().ok_or(Error::EmptyCloud)?;

    let argmax = |values: &[f64]| -> usize {
        let mut best = 0;
        for (i, &v) in values.iter().enumerate().skip(1) {
            if v > values[best] {
                best = i;
            }
        }
        best
    };

    let from_centroid: Vec<f64> = points
        .iter()
        .map(|&p| distance_squared(p, centroid))
        .collect();
    let first = argmax(&from_centroid);

    let mut selected = Vec::with_capacity(m);
    selected.push(first);
    let mut min_dist: Vec<f64> = points
        .iter()
        .map(|&p| distance_squared(p, points[first]))
        .collect();
    while selected.len() < m {
        let next = argmax(&min_dist);
        selected.push(next);
        let anchor = points[next];
        min_dist
            .par_iter_mut()
            .zip(points.par_iter())
            .for_each(|(d, &p)| {
                let candidate = distance_squared(p, anchor);
                if candidate < *d {
                    *d = candidate;
                }
            });
    }
    Ok(selected)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum GatherMode {
    /// Plain k-nearest neighbours of the reference.
    #[default]
    Nearest,
    /// Breadth-first growth over the mutual `graph_neighbors`-NN graph, topped
    /// up with plain nearest neighbours when the component is too small.
    Connected { graph_neighbors: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetPlan {
    pub subset_size: usize,
    pub total_points: usize,
    pub mode: GatherMode,
    pub references: Vec<usize>,
    pub subsets: Vec<Vec<usize>>,
}

impl SubsetPlan {
    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }
}

pub fn extract_subsets(
    cloud: &PointCloud,
    tree: &KdTree,
    subset_size: usize,
    mode: GatherMode,
) -> Result<SubsetPlan> {
    let n = cloud.len();
    if subset_size == 0 {
        return Err(Error::InvalidParameter(
            "subset size must be positive".into(),
        ));
    }
    if n < subset_size {
        return Err(Error::InvalidParameter(format!(
            "cloud has {n} points, fewer than the subset size {subset_size}"
        )));
    }
    if tree.len() != n {
        return Err(Error::LengthMismatch {
            what: "kd-tree",
            expected: n,
            actual: tree.len(),
        });
    }
    if let GatherMode::Connected { graph_neighbors } = mode {
        if graph_neighbors == 0 || graph_neighbors >= n {
            return Err(Error::InvalidParameter(format!(
                "graph neighbourhood {graph_neighbors} must be in 1..{n}"
            )));
        }
    }

    let count = subset_count(n, subset_size)?;
    let references = farthest_point_sample(cloud, count)?;
    let subsets = references
        .par_iter()
        .map(|&r| match mode {
            GatherMode::Nearest => nearest_subset(cloud, tree, r, subset_size),
            GatherMode::Connected { graph_neighbors } => {
                connected_subset(cloud, tree, r, subset_size, graph_neighbors)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SubsetPlan {
        subset_size,
        total_points: n,
        mode,
        references,
        subsets,
    })
}

fn nearest_subset(
    cloud: &PointCloud,
    tree: &KdTree,
    reference: usize,
    size: usize,
) -> Result<Vec<usize>> {
    let mut subset = tree.knn(cloud.points()[reference], size)?;
    // Only possible with more than `size` exact duplicates of the reference.
    if !subset.contains(&reference) {
        subset.pop();
        subset.insert(0, reference);
    }
    Ok(subset)
}

fn connected_subset(
    cloud: &PointCloud,
    tree: &KdTree,
    reference: usize,
    size: usize,
    graph_k: usize,
) -> Result<Vec<usize>> {
    let points = cloud.points();
    let mut cache: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut neighbours = |i: usize| -> Result<Vec<usize>> {
        if let Some(v) = cache.get(&i) {
            return Ok(v.clone());
        }
        let mut v = tree.knn(points[i], graph_k + 1)?;
        v.retain(|&j| j != i);
        v.truncate(graph_k);
        cache.insert(i, v.clone());
        Ok(v)
    };

    let mut subset = vec![reference];
    let mut visited: HashSet<usize> = HashSet::from([reference]);
    let mut queue = VecDeque::from([reference]);
    'bfs: while let Some(u) = queue.pop_front() {
        for v in neighbours(u)? {
            if visited.contains(&v) || !neighbours(v)?.contains(&u) {
                continue;
            }
            visited.insert(v);
            subset.push(v);
            queue.push_back(v);
            if subset.len() == size {
                break 'bfs;
            }
        }
    }

    if subset.len() < size {
        for j in nearest_subset(cloud, tree, reference, size)? {
            if subset.len() == size {
                break;
            }
            if visited.insert(j) {
                subset.push(j);
            }
        }
    }
    Ok(subset)
}
