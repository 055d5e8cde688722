//! Normal estimation from local covariance and the relative-angle feature.
//!
//! A point's normal is the eigenvector of the smallest eigenvalue of the
//! covariance of its neighbourhood (the point and its `k - 1` nearest
//! neighbours). Eigenvector signs are arbitrary, so every normal is flipped
//! to face the same side as a cloud-wide reference direction: the normal of
//! the best-fit plane through the whole cloud, oriented toward `+z`.
//!
//! The relative angle of a point is `acos(|n_i · n_avg|)`, where `n_avg` is
//! the mean of all normals rescaled to unit length.

use rayon::prelude::*;

use crate::cloud::{NormalField, PointCloud, RelativeAngleField};
use crate::error::{Error, Result};
use crate::geometry::{dot, normalized, scale, sub, Point3, SymmetricEigen3, SymmetricMatrix3};
use crate::spatial_index::KdTree;

pub const DEFAULT_NEIGHBORHOOD: usize = 30;

/// Normals must have unit length within this tolerance to be accepted by
/// [`relative_angles`].
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Below this norm the mean normal has no meaningful direction.
pub const MIN_MEAN_NORM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCovariance {
    pub centroid: Point3,
    pub matrix: SymmetricMatrix3,
    pub eigen: SymmetricEigen3,
}

impl LocalCovariance {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3> + Clone) -> Option<Self> {
        let mut sum = [0.0; 3];
        let mut count = 0usize;
        for p in points.clone() {
            sum[0] += p[0];
            sum[1] += p[1];
            sum[2] += p[2];
            count += 1;
        }
        if count == 0 {
            return None;
        }
        let inv = 1.0 / count as f64;
        let centroid = scale(sum, inv);
        let mut matrix = SymmetricMatrix3::ZERO;
        for p in points {
            matrix.add_outer(sub(*p, centroid));
        }
        let matrix = matrix.scaled(inv);
        Some(Self {
            centroid,
            matrix,
            eigen: matrix.eigen(),
        })
    }

    /// Unit eigenvector of the smallest eigenvalue (sign arbitrary).
    pub fn normal(&self) -> Point3 {
        self.eigen.vectors[0]
    }
}

/// Normal of the whole cloud's best-fit plane, oriented toward `+z`
/// (then `+y`, then `+x` when it lies in the respective plane).
pub fn orientation_reference(cloud: &PointCloud) -> Result<Point3> {
    cloud.require_nonempty()?;
    let cov = LocalCovariance::from_points(cloud.points()).ok_or(Error::EmptyCloud)?;
    let mut r = cov.normal();
    for axis in [2, 1, 0] {
        if r[axis].abs() > 1e-12 {
            if r[axis] < 0.0 {
                r = scale(r, -1.0);
            }
            break;
        }
    }
    Ok(r)
}

pub fn estimate_normals(cloud: &PointCloud, tree: &KdTree, k: usize) -> Result<NormalField> {
    let reference = orientation_reference(cloud)?;
    estimate_normals_oriented(cloud, tree, k, reference)
}

/// Like [`estimate_normals`] with an explicit orientation reference.
pub fn estimate_normals_oriented(
    cloud: &PointCloud,
    tree: &KdTree,
    k: usize,
    reference: Point3,
) -> Result<NormalField> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "neighbourhood size must be at least 3 for a defined normal, got {k}"
        )));
    }
    if k > cloud.len() {
        return Err(Error::InvalidParameter(format!(
            "neighbourhood size {k} exceeds the cloud's {} points",
            cloud.len()
        )));
    }
    if tree.len() != cloud.len() {
        return Err(Error::LengthMismatch {
            what: "kd-tree",
            expected: cloud.len(),
            actual: tree.len(),
        });
    }

    let points = cloud.points();
    let normals = points
        .par_iter()
        .map(|&p| {
            let neighbours = tree.knn(p, k)?;
            let cov = LocalCovariance::from_points(neighbours.iter().map(|&i| &points[i]))
                .expect("k >= 3 neighbours");
            let n = cov.normal();
            Ok(if dot(n, reference) < 0.0 {
                scale(n, -1.0)
            } else {
                n
            })
        })
        .collect::<Result<Vec<Point3>>>()?;
    Ok(NormalField::new(normals, k))
}

/// Arithmetic mean of the normals, rescaled to unit length.
pub fn average_normal(normals: &NormalField) -> Result<Point3> {
    average_of(normals.normals())
}

pub(crate) fn average_of(normals: &[Point3]) -> Result<Point3> {
    if normals.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut sum = [0.0; 3];
    for n in normals {
        sum[0] += n[0];
        sum[1] += n[1];
        sum[2] += n[2];
    }
    let mean = scale(sum, 1.0 / normals.len() as f64);
    normalized(mean, MIN_MEAN_NORM).ok_or_else(|| {
        Error::Degenerate("normals cancel out; the average direction is undefined".into())
    })
}

pub fn relative_angles(normals: &NormalField, average: Point3) -> Result<RelativeAngleField> {
    let is_unit = |v: Point3| (dot(v, v).sqrt() - 1.0).abs() <= UNIT_TOLERANCE;
    if !is_unit(average) {
        return Err(Error::InvalidParameter(
            "average normal is not unit length".into(),
        ));
    }
    if let Some(i) = normals.normals().iter().position(|&n| !is_unit(n)) {
        return Err(Error::InvalidParameter(format!(
            "normal {i} is not unit length"
        )));
    }
    let angles = normals
        .normals()
        .iter()
        .map(|&n| dot(n, average).abs().clamp(0.0, 1.0).acos())
        .collect();
    Ok(RelativeAngleField::new(angles, average))
}

/// Average normal of the field followed by the per-point relative angles.
pub fn relative_angle_field(normals: &NormalField) -> Result<RelativeAngleField> {
    let average = average_normal(normals)?;
    relative_angles(normals, average)
}
