//! Deterministic synthetic defect surfaces.
//!
//! A surface is a height field sampled on a jittered grid: a near-flat base
//! plane with low-amplitude, long-wavelength value noise (undamaged), cut by
//! cracks (polyline grooves) and spalls (disk-shaped craters) whose floors
//! carry high-amplitude, short-wavelength roughness (damaged). A point's
//! label is its membership in a damage region.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::{Label, LabelField, PointCloud};
use crate::error::{Error, Result};

/// Damaged fraction targeted by [`SurfaceSpec::random`].
pub const DEFAULT_DAMAGE_FRACTION: f64 = 0.28;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackSpec {
    pub path: Vec<[f64; 2]>,
    pub width: f64,
    pub depth: f64,
    pub roughness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpallSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub depth: f64,
    pub roughness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub width: f64,
    pub height: f64,
    /// Points per unit area.
    pub density: f64,
    /// Maximum deviation of undamaged points from the base plane.
    pub roughness: f64,
    /// Feature size of the undamaged surface noise.
    pub roughness_wavelength: f64,
    /// Feature size of the roughness inside damage regions.
    pub damage_wavelength: f64,
    pub cracks: Vec<CrackSpec>,
    pub spalls: Vec<SpallSpec>,
    pub seed: u64,
}

impl SurfaceSpec {
    /// Undamaged plane with the default extent and density.
    pub fn plain(seed: u64) -> Self {
        Self {
            width: 160.0,
            height: 100.0,
            density: 4.0,
            roughness: 0.05,
            roughness_wavelength: 12.0,
            damage_wavelength: 3.0,
            cracks: Vec::new(),
            spalls: Vec::new(),
            seed,
        }
    }

    /// Default surface with cracks and spalls placed from `seed` until about
    /// [`DEFAULT_DAMAGE_FRACTION`] of the area is damaged.
    pub fn random(seed: u64) -> Self {
        let mut spec = Self::plain(seed);
        spec.add_random_damage(DEFAULT_DAMAGE_FRACTION);
        spec
    }

    /// Adds randomly placed cracks and spalls (alternating) until the damaged
    /// area fraction, estimated on a unit grid, reaches `target`.
    pub fn add_random_damage(&mut self, target: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_da3a_9e00_0001);
        let (w, h) = (self.width, self.height);
        let mut turn = 0usize;
        while self.damage_fraction_estimate() < target && turn < 200 {
            if turn.is_multiple_of(2) {
                let segments = rng.gen_range(3..6);
                let mut p = [rng.gen_range(0.1..0.9) * w, rng.gen_range(0.1..0.9) * h];
                let mut heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let mut path = vec![p];
                for _ in 0..segments {
                    heading += rng.gen_range(-0.6..0.6);
                    let len = rng.gen_range(10.0..22.0);
                    let next = [
                        (p[0] + len * heading.cos()).clamp(0.05 * w, 0.95 * w),
                        (p[1] + len * heading.sin()).clamp(0.05 * h, 0.95 * h),
                    ];
                    path.push(next);
                    p = next;
                }
                self.cracks.push(CrackSpec {
                    path,
                    width: rng.gen_range(3.0..5.0),
                    depth: rng.gen_range(1.5..2.5),
                    roughness: rng.gen_range(0.6..0.9),
                });
            } else {
                let radius = rng.gen_range(7.0..12.0);
                self.spalls.push(SpallSpec {
                    center: [
                        rng.gen_range(radius..w - radius),
                        rng.gen_range(radius..h - radius),
                    ],
                    radius,
                    depth: rng.gen_range(2.0..3.5),
                    roughness: rng.gen_range(0.7..1.0),
                });
            }
            turn += 1;
        }
    }

    /// Fraction of unit-grid cell centres inside some damage region.
    pub fn damage_fraction_estimate(&self) -> f64 {
        let nx = self.width.ceil().max(1.0) as usize;
        let ny = self.height.ceil().max(1.0) as usize;
        let mut hit = 0usize;
        for j in 0..ny {
            for i in 0..nx {
                let x = (i as f64 + 0.5) * self.width / nx as f64;
                let y = (j as f64 + 0.5) * self.height / ny as f64;
                if self.damage_at(x, y).is_some() {
                    hit += 1;
                }
            }
        }
        hit as f64 / (nx * ny) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{what} must be positive, got {v}"
                )))
            }
        };
        positive(self.width, "width")?;
        positive(self.height, "height")?;
        positive(self.density, "density")?;
        positive(self.roughness_wavelength, "roughness wavelength")?;
        positive(self.damage_wavelength, "damage wavelength")?;
        if !(self.roughness >= 0.0 && self.roughness.is_finite()) {
            return Err(Error::InvalidParameter(
                "roughness must be non-negative".into(),
            ));
        }
        let inside =
            |p: [f64; 2]| p[0] >= 0.0 && p[0] <= self.width && p[1] >= 0.0 && p[1] <= self.height;
        for c in &self.cracks {
            positive(c.width, "crack width")?;
            positive(c.depth, "crack depth")?;
            if c.roughness < 0.0 {
                return Err(Error::InvalidParameter(
                    "crack roughness must be non-negative".into(),
                ));
            }
            if c.path.is_empty() || !c.path.iter().all(|&p| inside(p)) {
                return Err(Error::InvalidParameter(
                    "crack path must lie within the extent".into(),
                ));
            }
        }
        for s in &self.spalls {
            positive(s.radius, "spall radius")?;
            positive(s.depth, "spall depth")?;
            if s.roughness < 0.0 {
                return Err(Error::InvalidParameter(
                    "spall roughness must be non-negative".into(),
                ));
            }
            if !inside(s.center) {
                return Err(Error::InvalidParameter(
                    "spall centre must lie within the extent".into(),
                ));
            }
        }
        Ok(())
    }

    /// Depression depth and roughness amplitude at `(x, y)` if it is damaged.
    /// Overlapping regions take the deepest depression and strongest roughness.
    fn damage_at(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let mut found: Option<(f64, f64)> = None;
        let mut merge = |depth: f64, rough: f64| {
            found = Some(match found {
                None => (depth, rough),
                Some((d, r)) => (d.max(depth), r.max(rough)),
            });
        };
        for c in &self.cracks {
            let half = 0.5 * c.width;
            let d = polyline_distance(&c.path, [x, y]);
            if d < half {
                let t = d / half;
                merge(c.depth * (1.0 - t * t), c.roughness);
            }
        }
        for s in &self.spalls {
            let r = ((x - s.center[0]).powi(2) + (y - s.center[1]).powi(2)).sqrt();
            if r < s.radius {
                let t = r / s.radius;
                // Flat-bottomed crater with steep walls.
                merge(s.depth * (1.0 - t.powi(4)), s.roughness);
            }
        }
        found
    }
}

fn polyline_distance(path: &[[f64; 2]], p: [f64; 2]) -> f64 {
    if path.len() == 1 {
        return ((p[0] - path[0][0]).powi(2) + (p[1] - path[0][1]).powi(2)).sqrt();
    }
    path.windows(2)
        .map(|seg| {
            let (a, b) = (seg[0], seg[1]);
            let ab = [b[0] - a[0], b[1] - a[1]];
            let ap = [p[0] - a[0], p[1] - a[1]];
            let len2 = ab[0] * ab[0] + ab[1] * ab[1];
            let t = if len2 > 0.0 {
                ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let q = [a[0] + t * ab[0] - p[0], a[1] + t * ab[1] - p[1]];
            (q[0] * q[0] + q[1] * q[1]).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Smoothly interpolated lattice noise with values in `[-1, 1]`.
#[derive(Debug, Clone, Copy)]
struct ValueNoise {
    seed: u64,
    wavelength: f64,
}

impl ValueNoise {
    fn lattice(&self, ix: i64, iy: i64) -> f64 {
        let h = splitmix64(self.seed ^ splitmix64((ix as u64) ^ splitmix64(iy as u64)));
        (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let (u, v) = (x / self.wavelength, y / self.wavelength);
        let (x0, y0) = (u.floor(), v.floor());
        let (fx, fy) = (u - x0, v - y0);
        let s = |t: f64| t * t * (3.0 - 2.0 * t);
        let (sx, sy) = (s(fx), s(fy));
        let (ix, iy) = (x0 as i64, y0 as i64);
        let a = self.lattice(ix, iy);
        let b = self.lattice(ix + 1, iy);
        let c = self.lattice(ix, iy + 1);
        let d = self.lattice(ix + 1, iy + 1);
        let top = a + sx * (b - a);
        let bottom = c + sx * (d - c);
        top + sy * (bottom - top)
    }
}

/// Two-octave noise, still bounded by `[-1, 1]`.
fn fractal(seed: u64, wavelength: f64, x: f64, y: f64) -> f64 {
    let a = ValueNoise { seed, wavelength }.sample(x, y);
    let b = ValueNoise {
        seed: splitmix64(seed),
        wavelength: 0.5 * wavelength,
    }
    .sample(x, y);
    (2.0 * a + b) / 3.0
}

/// Samples the surface described by `spec`.
pub fn generate(spec: &SurfaceSpec) -> Result<(PointCloud, LabelField)> {
    spec.validate()?;
    let spacing = 1.0 / spec.density.sqrt();
    let nx = (spec.width / spacing).floor() as usize;
    let ny = (spec.height / spacing).floor() as usize;
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter(
            "extent is smaller than one sample cell at this density".into(),
        ));
    }

    let base_seed = splitmix64(spec.seed);
    let damage_seed = splitmix64(base_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Vec::with_capacity(nx * ny);
    let mut labels = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = (i as f64 + rng.gen::<f64>()) * spacing;
            let y = (j as f64 + rng.gen::<f64>()) * spacing;
            let jitter: f64 = rng.gen_range(-1.0..1.0);
            let base = spec.roughness * fractal(base_seed, spec.roughness_wavelength, x, y);
            let (z, label) = match spec.damage_at(x, y) {
                None => (base, Label::Undamaged),
                Some((depth, rough)) => {
                    let texture = fractal(damage_seed, spec.damage_wavelength, x, y);
                    let z = base - depth + rough * (0.85 * texture + 0.15 * jitter);
                    (z, Label::Damaged)
                }
            };
            points.push([x, y, z]);
            labels.push(label);
        }
    }
    Ok((PointCloud::new(points)?, LabelField::new(labels)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_surface_is_undamaged_and_bounded() {
        let spec = SurfaceSpec {
            width: 30.0,
            height: 20.0,
            ..SurfaceSpec::plain(3)
        };
        let (cloud, labels) = generate(&spec).unwrap();
        assert_eq!(cloud.len(), labels.len());
        assert_eq!(labels.damaged_count(), 0);
        assert!(cloud.points().iter().all(|p| p[2].abs() <= spec.roughness));
        assert!(cloud
            .points()
            .iter()
            .all(|p| (0.0..=30.0).contains(&p[0]) && (0.0..=20.0).contains(&p[1])));
    }

    #[test]
    fn same_seed_same_cloud() {
        let mut spec = SurfaceSpec {
            width: 40.0,
            height: 30.0,
            ..SurfaceSpec::plain(11)
        };
        spec.add_random_damage(0.2);
        assert!(!spec.cracks.is_empty());
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        let other = generate(&SurfaceSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a.0, other.0);
    }

    #[test]
    fn random_spec_hits_damage_target() {
        let spec = SurfaceSpec::random(5);
        spec.validate().unwrap();
        let f = spec.damage_fraction_estimate();
        assert!((0.28..0.36).contains(&f), "{f}");
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut s = SurfaceSpec::plain(0);
        s.density = 0.0;
        assert!(generate(&s).is_err());
        let mut s = SurfaceSpec::plain(0);
        s.width = 0.0;
        assert!(generate(&s).is_err());
        let mut s = SurfaceSpec::plain(0);
        s.spalls.push(SpallSpec {
            center: [500.0, 5.0],
            radius: 1.0,
            depth: 1.0,
            roughness: 0.1,
        });
        assert!(generate(&s).is_err());
        let mut s = SurfaceSpec::plain(0);
        s.cracks.push(CrackSpec {
            path: vec![[1.0, 1.0], [2.0, 2.0]],
            width: 1.0,
            depth: 0.0,
            roughness: 0.1,
        });
        assert!(generate(&s).is_err());
    }

    #[test]
    fn polyline_distance_cases() {
        let path = [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]];
        assert!((polyline_distance(&path, [5.0, 3.0]) - 3.0).abs() < 1e-12);
        assert!((polyline_distance(&path, [12.0, 5.0]) - 2.0).abs() < 1e-12);
        assert!((polyline_distance(&path, [-3.0, -4.0]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn noise_is_bounded() {
        for i in 0..2000 {
            let x = i as f64 * 0.37 - 300.0;
            let y = i as f64 * 0.11 + 7.0;
            assert!(fractal(9, 3.0, x, y).abs() <= 1.0);
        }
    }
}
