//! Small fixed-size linear algebra used throughout the crate: 3-vectors as
//! `[f64; 3]`, symmetric 3x3 matrices and their eigen-decomposition.

pub type Point3 = [f64; 3];

#[inline]
pub fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Point3, b: Point3) -> Point3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Point3, s: f64) -> Point3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

/// Squared Euclidean distance. Every distance comparison in the crate goes
/// through this function so that tree search and linear scans agree bit for
/// bit.
#[inline]
pub fn distance_squared(a: Point3, b: Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Returns `None` for vectors shorter than `min_len`.
pub fn normalized(a: Point3, min_len: f64) -> Option<Point3> {
    let len = norm(a);
    if len > min_len && len.is_finite() {
        Some(scale(a, 1.0 / len))
    } else {
        None
    }
}

/// Symmetric 3x3 matrix stored as its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricMatrix3 {
    pub m00: f64,
    pub m01: f64,
    pub m02: f64,
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

/// Eigen-decomposition of a symmetric 3x3 matrix. Eigenvalues are sorted
/// ascending and `vectors[i]` is the unit eigenvector of `values[i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricEigen3 {
    pub values: [f64; 3],
    pub vectors: [Point3; 3],
}

impl SymmetricMatrix3 {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);

    pub const fn new(m00: f64, m01: f64, m02: f64, m11: f64, m12: f64, m22: f64) -> Self {
        Self {
            m00,
            m01,
            m02,
            m11,
            m12,
            m22,
        }
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Self::new(
            rows[0][0], rows[0][1], rows[0][2], rows[1][1], rows[1][2], rows[2][2],
        )
    }

    pub fn to_rows(&self) -> [[f64; 3]; 3] {
        [
            [self.m00, self.m01, self.m02],
            [self.m01, self.m11, self.m12],
            [self.m02, self.m12, self.m22],
        ]
    }

    pub fn trace(&self) -> f64 {
        self.m00 + self.m11 + self.m22
    }

    pub fn determinant(&self) -> f64 {
        self.m00 * (self.m11 * self.m22 - self.m12 * self.m12)
            - self.m01 * (self.m01 * self.m22 - self.m12 * self.m02)
            + self.m02 * (self.m01 * self.m12 - self.m11 * self.m02)
    }

    pub fn mul_vec(&self, v: Point3) -> Point3 {
        let r = self.to_rows();
        [dot(r[0], v), dot(r[1], v), dot(r[2], v)]
    }

    /// Adds the outer product `d dᵀ`.
    #[inline]
    pub fn add_outer(&mut self, d: Point3) {
        self.m00 += d[0] * d[0];
        self.m01 += d[0] * d[1];
        self.m02 += d[0] * d[2];
        self.m11 += d[1] * d[1];
        self.m12 += d[1] * d[2];
        self.m22 += d[2] * d[2];
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(
            self.m00 * s,
            self.m01 * s,
            self.m02 * s,
            self.m11 * s,
            self.m12 * s,
            self.m22 * s,
        )
    }

    /// Cyclic Jacobi eigen-decomposition.
    ///
    /// Sweeps rotate away the off-diagonal entries until they are negligible
    /// relative to the matrix norm. For 3x3 input this converges in a handful
    /// of sweeps to eigenvalues accurate to a few ulps of the largest
    /// magnitude, with exactly orthonormal (to rounding) eigenvectors.
    /// The procedure is fully deterministic.
    #[allow(clippy::needless_range_loop)]
    pub fn eigen(&self) -> SymmetricEigen3 {
        let mut a = self.to_rows();
        let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

        let scale_ref = a
            .iter()
            .flat_map(|row| row.iter())
            .fold(0.0_f64, |acc, x| acc.max(x.abs()));

        if scale_ref > 0.0 && scale_ref.is_finite() {
            for _sweep in 0..64 {
                let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
                if off <= f64::EPSILON * 1e-3 * scale_ref {
                    break;
                }
                for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
                    let apq = a[p][q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;

                    // A <- Jᵀ A J
                    for k in 0..3 {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..3 {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;

                    for row in v.iter_mut() {
                        let vkp = row[p];
                        let vkq = row[q];
                        row[p] = c * vkp - s * vkq;
                        row[q] = s * vkp + c * vkq;
                    }
                }
            }
        }

        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]).then(i.cmp(&j)));

        let column = |j: usize| -> Point3 { [v[0][j], v[1][j], v[2][j]] };
        SymmetricEigen3 {
            values: [
                a[order[0]][order[0]],
                a[order[1]][order[1]],
                a[order[2]][order[2]],
            ],
            vectors: [column(order[0]), column(order[1]), column(order[2])],
        }
    }
}

/// Proper rotation stored as a row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub matrix: [[f64; 3]; 3],
}

impl Rotation {
    pub const IDENTITY: Self = Self {
        matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Intrinsic Z-Y-X (yaw, pitch, roll) angles in radians.
    pub fn from_euler(yaw: f64, pitch: f64, roll: f64) -> Self {
        let (sy, cy) = yaw.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let (sr, cr) = roll.sin_cos();
        Self {
            matrix: [
                [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
                [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
                [-sp, cp * sr, cp * cr],
            ],
        }
    }

    /// Rotation from a (not necessarily unit) quaternion `w + xi + yj + zk`.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        let (w, x, y, z) = (w / n, x / n, y / n, z / n);
        Self {
            matrix: [
                [
                    1.0 - 2.0 * (y * y + z * z),
                    2.0 * (x * y - w * z),
                    2.0 * (x * z + w * y),
                ],
                [
                    2.0 * (x * y + w * z),
                    1.0 - 2.0 * (x * x + z * z),
                    2.0 * (y * z - w * x),
                ],
                [
                    2.0 * (x * z - w * y),
                    2.0 * (y * z + w * x),
                    1.0 - 2.0 * (x * x + y * y),
                ],
            ],
        }
    }

    /// Z-Y-X angles `(yaw, pitch, roll)` reproducing this rotation.
    pub fn to_euler(&self) -> (f64, f64, f64) {
        let m = &self.matrix;
        let pitch = (-m[2][0]).clamp(-1.0, 1.0).asin();
        if m[2][0].abs() < 1.0 - 1e-12 {
            (m[1][0].atan2(m[0][0]), pitch, m[2][1].atan2(m[2][2]))
        } else {
            // Gimbal lock: fold roll into yaw.
            ((-m[0][1]).atan2(m[1][1]), pitch, 0.0)
        }
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        [
            dot(self.matrix[0], p),
            dot(self.matrix[1], p),
            dot(self.matrix[2], p),
        ]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.matrix;
        dot(m[0], cross(m[1], m[2]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix_eigen() {
        let m = SymmetricMatrix3::new(0.5, 0.0, 0.0, 0.5, 0.0, 0.0);
        let e = m.eigen();
        assert_eq!(e.values, [0.0, 0.5, 0.5]);
        assert_eq!(e.vectors[0], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn zero_matrix_is_identity_basis() {
        let e = SymmetricMatrix3::ZERO.eigen();
        assert_eq!(e.values, [0.0; 3]);
        assert_eq!(
            e.vectors,
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        );
    }

    #[test]
    fn eigenpairs_satisfy_definition() {
        let m = SymmetricMatrix3::new(4.0, 1.0, -2.0, 3.0, 0.5, 1.0);
        let e = m.eigen();
        for i in 0..3 {
            let av = m.mul_vec(e.vectors[i]);
            let lv = scale(e.vectors[i], e.values[i]);
            assert!(norm(sub(av, lv)) < 1e-12);
            assert!((norm(e.vectors[i]) - 1.0).abs() < 1e-12);
        }
        assert!(dot(e.vectors[0], e.vectors[1]).abs() < 1e-12);
        assert!(dot(e.vectors[0], e.vectors[2]).abs() < 1e-12);
        assert!(dot(e.vectors[1], e.vectors[2]).abs() < 1e-12);
        assert!((e.values.iter().sum::<f64>() - m.trace()).abs() < 1e-12);
    }

    #[test]
    fn euler_round_trip() {
        let r = Rotation::from_euler(0.3, -0.7, 2.1);
        let (y, p, ro) = r.to_euler();
        let back = Rotation::from_euler(y, p, ro);
        for i in 0..3 {
            for j in 0..3 {
                assert!((r.matrix[i][j] - back.matrix[i][j]).abs() < 1e-12);
            }
        }
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_euler_is_identity() {
        assert_eq!(Rotation::from_euler(0.0, 0.0, 0.0), Rotation::IDENTITY);
    }
}
