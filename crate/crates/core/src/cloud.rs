//! Core point-cloud containers and the per-point fields that travel with them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;

/// Ordered list of 3D points with finite coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point3>,
}

impl PointCloud {
    /// Validates that every coordinate is finite.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if let Some(index) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn require_nonempty(&self) -> Result<()> {
        if self.points.is_empty() {
            Err(Error::EmptyCloud)
        } else {
            Ok(())
        }
    }

    /// New cloud made of the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
        }
    }

    pub fn centroid(&self) -> Option<Point3> {
        if self.points.is_empty() {
            return None;
        }
        let mut sum = [0.0; 3];
        for p in &self.points {
            sum[0] += p[0];
            sum[1] += p[1];
            sum[2] += p[2];
        }
        let n = self.points.len() as f64;
        Some([sum[0] / n, sum[1] / n, sum[2] / n])
    }

    /// Per-axis `(min, max)` bounds.
    pub fn bounds(&self) -> Option<(Point3, Point3)> {
        let first = *self.points.first()?;
        let mut lo = first;
        let mut hi = first;
        for p in &self.points[1..] {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        Some((lo, hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Undamaged,
    Damaged,
}

impl Label {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Label::Undamaged),
            1 => Some(Label::Damaged),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Label::Undamaged => 0,
            Label::Damaged => 1,
        }
    }

    pub fn is_damaged(self) -> bool {
        self == Label::Damaged
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Undamaged => Label::Damaged,
            Label::Damaged => Label::Undamaged,
        }
    }
}

/// Per-point damage annotation, index-aligned with a [`PointCloud`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelField {
    labels: Vec<Label>,
}

impl LabelField {
    pub fn new(labels: Vec<Label>) -> Self {
        Self { labels }
    }

    pub fn uniform(label: Label, len: usize) -> Self {
        Self {
            labels: vec![label; len],
        }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn damaged_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_damaged()).count()
    }

    pub fn select(&self, indices: &[usize]) -> LabelField {
        LabelField {
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn check_aligned(&self, n: usize) -> Result<()> {
        check_len("label field", n, self.labels.len())
    }
}

/// Unit normals, index-aligned with a cloud, plus the neighbourhood size
/// they were estimated with.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalField {
    normals: Vec<Point3>,
    neighborhood: usize,
}

impl NormalField {
    pub fn new(normals: Vec<Point3>, neighborhood: usize) -> Self {
        Self {
            normals,
            neighborhood,
        }
    }

    pub fn normals(&self) -> &[Point3] {
        &self.normals
    }

    pub fn neighborhood(&self) -> usize {
        self.neighborhood
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> NormalField {
        NormalField {
            normals: indices.iter().map(|&i| self.normals[i]).collect(),
            neighborhood: self.neighborhood,
        }
    }

    pub fn check_aligned(&self, n: usize) -> Result<()> {
        check_len("normal field", n, self.normals.len())
    }
}

/// Relative angles in radians, in `[0, π/2]`, together with the average
/// normal they were measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeAngleField {
    angles: Vec<f64>,
    average_normal: Point3,
}

impl RelativeAngleField {
    pub fn new(angles: Vec<f64>, average_normal: Point3) -> Self {
        Self {
            angles,
            average_normal,
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn average_normal(&self) -> Point3 {
        self.average_normal
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn check_aligned(&self, n: usize) -> Result<()> {
        check_len("angle field", n, self.angles.len())
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            actual,
        })
    }
}
