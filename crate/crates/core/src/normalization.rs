//! Global and axis-specific normalisation into `[-0.5, 0.5]`, and seeded
//! random rotations.
//!
//! Coordinates are first shifted by the per-axis minimum and divided by the
//! scale factor(s), which maps them into `[0, range / k]`. The midpoint of the
//! resulting bounding box is then subtracted, centring the cloud on the
//! origin. Under global normalisation the longest axis spans exactly
//! `[-0.5, 0.5]`; under axis-specific normalisation every non-degenerate axis
//! does.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{Point3, Rotation};

/// Axis ranges below this (absolutely, or relative to the largest range) are
/// treated as flat and get a unit scale factor.
pub const DEGENERATE_RANGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationKind {
    Global,
    AxisSpecific,
}

impl NormalizationKind {
    pub const ALL: [NormalizationKind; 2] =
        [NormalizationKind::Global, NormalizationKind::AxisSpecific];

    pub fn name(self) -> &'static str {
        match self {
            NormalizationKind::Global => "global",
            NormalizationKind::AxisSpecific => "axis-specific",
        }
    }
}

impl std::fmt::Display for NormalizationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for NormalizationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(NormalizationKind::Global),
            "axis" | "axis-specific" => Ok(NormalizationKind::AxisSpecific),
            other => Err(Error::InvalidParameter(format!(
                "unknown normalization `{other}` (expected `global` or `axis-specific`)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub kind: NormalizationKind,
    /// Per-axis divisors. All three are equal under global normalisation.
    pub scale: Point3,
    pub min: Point3,
    pub max: Point3,
    /// Translation subtracted after scaling (midpoint of the scaled box).
    pub offset: Point3,
}

impl NormalizationParams {
    pub fn apply(&self, p: Point3) -> Point3 {
        let mut out = [0.0; 3];
        for a in 0..3 {
            out[a] = (p[a] - self.min[a]) / self.scale[a] - self.offset[a];
        }
        out
    }
}

pub fn normalize(
    cloud: &PointCloud,
    kind: NormalizationKind,
) -> Result<(PointCloud, NormalizationParams)> {
    if cloud.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "normalization needs at least 2 points, got {}",
            cloud.len()
        )));
    }
    let (min, max) = cloud.bounds().ok_or(Error::EmptyCloud)?;
    let range = [max[0] - min[0], max[1] - min[1], max[2] - min[2]];
    let largest = range[0].max(range[1]).max(range[2]);
    if largest < DEGENERATE_RANGE_TOLERANCE {
        return Err(Error::Degenerate(
            "all three axis ranges are zero; the cloud is a single location".into(),
        ));
    }
    let degenerate =
        |r: f64| r < DEGENERATE_RANGE_TOLERANCE || r < DEGENERATE_RANGE_TOLERANCE * largest;

    let scale = match kind {
        NormalizationKind::Global => [largest; 3],
        NormalizationKind::AxisSpecific => range.map(|r| if degenerate(r) { 1.0 } else { r }),
    };

    let mut offset = [0.0; 3];
    for a in 0..3 {
        offset[a] = 0.5 * (max[a] - min[a]) / scale[a];
    }

    let params = NormalizationParams {
        kind,
        scale,
        min,
        max,
        offset,
    };
    let points = cloud.points().iter().map(|&p| params.apply(p)).collect();
    Ok((PointCloud::new(points)?, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationDescription {
    pub seed: u64,
    /// Z-Y-X angles in radians.
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub matrix: [[f64; 3]; 3],
}

/// Samples a rotation uniformly from SO(3) (Shoemake's unit-quaternion
/// method) using a seeded ChaCha generator.
pub fn sample_rotation(seed: u64) -> Rotation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let u3: f64 = rng.gen();
    let tau = std::f64::consts::TAU;
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let (x, y) = (a * (tau * u2).sin(), a * (tau * u2).cos());
    let (z, w) = (b * (tau * u3).sin(), b * (tau * u3).cos());
    Rotation::from_quaternion(w, x, y, z)
}

pub fn rotate_with(cloud: &PointCloud, rotation: &Rotation) -> PointCloud {
    let points = cloud.points().iter().map(|&p| rotation.apply(p)).collect();
    PointCloud::new(points).expect("rotation of finite points is finite")
}

/// Rotates the cloud about the origin by a rotation drawn from `seed`.
pub fn rotate(cloud: &PointCloud, seed: u64) -> (PointCloud, RotationDescription) {
    let rotation = sample_rotation(seed);
    let (yaw, pitch, roll) = rotation.to_euler();
    let description = RotationDescription {
        seed,
        yaw,
        pitch,
        roll,
        matrix: rotation.matrix,
    };
    (rotate_with(cloud, &rotation), description)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{distance_squared, norm, sub};

    fn three_points() -> PointCloud {
        PointCloud::new(vec![[0.0, 0.0, 0.0], [4.0, 0.0, 0.0], [4.0, 2.0, 0.0]]).unwrap()
    }

    fn assert_points(actual: &PointCloud, expected: &[Point3]) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.points().iter().zip(expected) {
            for k in 0..3 {
                assert!((a[k] - e[k]).abs() < 1e-12, "{a:?} vs {e:?}");
            }
        }
    }

    #[test]
    fn global_hand_fixture() {
        let (out, params) = normalize(&three_points(), NormalizationKind::Global).unwrap();
        assert_eq!(params.scale, [4.0; 3]);
        assert_points(
            &out,
            &[[-0.5, -0.25, 0.0], [0.5, -0.25, 0.0], [0.5, 0.25, 0.0]],
        );
    }

    #[test]
    fn axis_specific_hand_fixture() {
        let (out, params) = normalize(&three_points(), NormalizationKind::AxisSpecific).unwrap();
        assert_eq!(params.scale, [4.0, 2.0, 1.0]);
        assert_points(
            &out,
            &[[-0.5, -0.5, 0.0], [0.5, -0.5, 0.0], [0.5, 0.5, 0.0]],
        );
    }

    #[test]
    fn unit_box_is_a_fixed_point() {
        let c =
            PointCloud::new(vec![[-0.5, -0.5, -0.5], [0.5, 0.5, 0.5], [0.1, -0.2, 0.3]]).unwrap();
        for kind in NormalizationKind::ALL {
            let (out, _) = normalize(&c, kind).unwrap();
            assert_points(&out, c.points());
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        let one = PointCloud::new(vec![[1.0, 2.0, 3.0]]).unwrap();
        assert!(normalize(&one, NormalizationKind::Global).is_err());
        let same = PointCloud::new(vec![[1.0, 2.0, 3.0]; 4]).unwrap();
        assert!(matches!(
            normalize(&same, NormalizationKind::AxisSpecific),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn parse_kind() {
        assert_eq!(
            "axis".parse::<NormalizationKind>().unwrap(),
            NormalizationKind::AxisSpecific
        );
        assert_eq!(
            "global".parse::<NormalizationKind>().unwrap(),
            NormalizationKind::Global
        );
        assert!("minmax".parse::<NormalizationKind>().is_err());
    }

    #[test]
    fn rotation_is_seeded_isometry() {
        let c = PointCloud::new(vec![[1.0, 2.0, 3.0], [-4.0, 0.5, 2.0], [0.0, 0.0, 7.0]]).unwrap();
        let (a, da) = rotate(&c, 42);
        let (b, db) = rotate(&c, 42);
        assert_eq!(a, b);
        assert_eq!(da, db);
        let r = Rotation { matrix: da.matrix };
        assert!((r.determinant() - 1.0).abs() < 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                let d0 = distance_squared(c.points()[i], c.points()[j]).sqrt();
                let d1 = distance_squared(a.points()[i], a.points()[j]).sqrt();
                assert!((d0 - d1).abs() <= 1e-9 * d0.max(1.0));
            }
        }
        let (c2, _) = rotate(&c, 43);
        assert!(norm(sub(c2.points()[0], a.points()[0])) > 1e-6);
    }

    #[test]
    fn zero_angles_leave_cloud_unchanged() {
        let c = three_points();
        assert_eq!(rotate_with(&c, &Rotation::from_euler(0.0, 0.0, 0.0)), c);
    }
}
