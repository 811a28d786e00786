//! Rigid motions of the plane and of space.

use serde::{Deserialize, Serialize};

use super::vector::{wrap_angle, Vec2, Vec3};

/// Drift of `R^T R` from identity above which a composed rotation is re-orthonormalized.
pub const ORTHONORMAL_DRIFT: f64 = 1e-12;

pub trait RigidMotion: Sized {
    type Point;

    fn identity() -> Self;
    fn apply(&self, p: Self::Point) -> Self::Point;
    /// `self ∘ other`: applies `other` first, then `self`.
    fn then_after(&self, other: &Self) -> Self;
    fn inverse(&self) -> Self;
}

/// `a ∘ b`: the motion that applies `b`, then `a`.
pub fn compose<M: RigidMotion>(a: &M, b: &M) -> M {
    a.then_after(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion2 {
    /// Counterclockwise rotation in radians, kept in `(-pi, pi]`.
    pub angle: f64,
    pub translation: Vec2,
}

impl RigidMotion2 {
    pub fn new(angle: f64, translation: Vec2) -> Self {
        Self {
            angle: wrap_angle(angle),
            translation,
        }
    }

    pub fn rotation(angle: f64) -> Self {
        Self::new(angle, Vec2::ZERO)
    }

    pub fn translation(t: Vec2) -> Self {
        Self::new(0.0, t)
    }

    /// Rotation by `angle` about `pivot`.
    pub fn rotation_about(angle: f64, pivot: Vec2) -> Self {
        let t = pivot - pivot.rotated(angle);
        Self::new(angle, t)
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.angle.sin_cos();
        [[c, -s], [s, c]]
    }
}

impl RigidMotion for RigidMotion2 {
    type Point = Vec2;

    fn identity() -> Self {
        Self::new(0.0, Vec2::ZERO)
    }

    fn apply(&self, p: Vec2) -> Vec2 {
        p.rotated(self.angle) + self.translation
    }

    fn then_after(&self, other: &Self) -> Self {
        Self::new(
            self.angle + other.angle,
            other.translation.rotated(self.angle) + self.translation,
        )
    }

    fn inverse(&self) -> Self {
        Self::new(-self.angle, -(self.translation.rotated(-self.angle)))
    }
}

pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion3 {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RigidMotion3 {
    /// Rotation about a (not necessarily unit) axis by `angle` radians (Rodrigues).
    pub fn axis_angle(axis: Vec3, angle: f64, translation: Vec3) -> Self {
        let k = axis.normalized();
        let (s, c) = angle.sin_cos();
        let v = 1.0 - c;
        let rotation = [
            [c + k.x * k.x * v, k.x * k.y * v - k.z * s, k.x * k.z * v + k.y * s],
            [k.y * k.x * v + k.z * s, c + k.y * k.y * v, k.y * k.z * v - k.x * s],
            [k.z * k.x * v - k.y * s, k.z * k.y * v + k.x * s, c + k.z * k.z * v],
        ];
        Self {
            rotation,
            translation,
        }
    }

    pub fn determinant(&self) -> f64 {
        det3(&self.rotation)
    }

    /// Largest entry of `|R^T R - I|`.
    pub fn orthonormal_drift(&self) -> f64 {
        let r = &self.rotation;
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    fn reorthonormalize(&mut self) {
        // Gram-Schmidt on the columns, third column rebuilt by cross product.
        let col = |m: &Mat3, j: usize| Vec3::new(m[0][j], m[1][j], m[2][j]);
        let c0 = col(&self.rotation, 0).normalized();
        let c1 = col(&self.rotation, 1);
        let c1 = (c1 - c0 * c0.dot(c1)).normalized();
        let c2 = c0.cross(c1);
        for (j, c) in [c0, c1, c2].into_iter().enumerate() {
            self.rotation[0][j] = c.x;
            self.rotation[1][j] = c.y;
            self.rotation[2][j] = c.z;
        }
    }
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat_vec(a: &Mat3, v: Vec3) -> Vec3 {
    Vec3::new(
        a[0][0] * v.x + a[0][1] * v.y + a[0][2] * v.z,
        a[1][0] * v.x + a[1][1] * v.y + a[1][2] * v.z,
        a[2][0] * v.x + a[2][1] * v.y + a[2][2] * v.z,
    )
}

fn transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

impl RigidMotion for RigidMotion3 {
    type Point = Vec3;

    fn identity() -> Self {
        Self {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: Vec3::ZERO,
        }
    }

    fn apply(&self, p: Vec3) -> Vec3 {
        mat_vec(&self.rotation, p) + self.translation
    }

    fn then_after(&self, other: &Self) -> Self {
        let mut out = Self {
            rotation: mat_mul(&self.rotation, &other.rotation),
            translation: mat_vec(&self.rotation, other.translation) + self.translation,
        };
        if out.orthonormal_drift() > ORTHONORMAL_DRIFT {
            out.reorthonormalize();
        }
        out
    }

    fn inverse(&self) -> Self {
        let rt = transpose(&self.rotation);
        Self {
            translation: -mat_vec(&rt, self.translation),
            rotation: rt,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use std::f64::consts::FRAC_PI_2;

    fn random_motion2(s: &mut Stream) -> RigidMotion2 {
        RigidMotion2::new(
            s.uniform(-3.2, 3.2),
            Vec2::new(s.uniform(-10.0, 10.0), s.uniform(-10.0, 10.0)),
        )
    }

    fn random_motion3(s: &mut Stream) -> RigidMotion3 {
        let axis = Vec3::new(s.uniform(-1.0, 1.0), s.uniform(-1.0, 1.0), s.uniform(-1.0, 1.0) + 1e-3);
        RigidMotion3::axis_angle(
            axis,
            s.uniform(-3.2, 3.2),
            Vec3::new(s.uniform(-5.0, 5.0), s.uniform(-5.0, 5.0), s.uniform(-5.0, 5.0)),
        )
    }

    #[test]
    fn identity_composition() {
        let id = RigidMotion2::identity();
        assert_eq!(compose(&id, &id), id);
    }

    #[test]
    fn quarter_turns() {
        let r = RigidMotion2::rotation(FRAC_PI_2);
        let p = compose(&r, &r).apply(Vec2::new(1.0, 0.0));
        assert!((p.x + 1.0).abs() < 1e-12 && p.y.abs() < 1e-12);
    }

    #[test]
    fn rotation_after_translation_matches_matrix_oracle() {
        // dense homogeneous-matrix oracle
        let a = RigidMotion2::rotation(30f64.to_radians());
        let b = RigidMotion2::translation(Vec2::new(1.0, 0.0));
        let m = compose(&a, &b);
        let (s, c) = 30f64.to_radians().sin_cos();
        let ha = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        let hb = [[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let h = mat_mul(&ha, &hb);
        let mut st = Stream::new(11);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let p = Vec2::new(st.uniform(-5.0, 5.0), st.uniform(-5.0, 5.0));
            let q = m.apply(p);
            let ox = h[0][0] * p.x + h[0][1] * p.y + h[0][2];
            let oy = h[1][0] * p.x + h[1][1] * p.y + h[1][2];
            worst = worst.max((q.x - ox).abs()).max((q.y - oy).abs());
        }
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn composition_is_associative() {
        let mut s = Stream::new(5);
        for _ in 0..1000 {
            let (a, b, c) = (random_motion3(&mut s), random_motion3(&mut s), random_motion3(&mut s));
            let left = compose(&compose(&a, &b), &c);
            let right = compose(&a, &compose(&b, &c));
            let p = Vec3::new(0.3, -1.2, 2.0);
            assert!((left.apply(p) - right.apply(p)).norm() < 1e-9);
        }
    }

    #[test]
    fn inverse_round_trips_to_identity_2d_and_3d() {
        let mut s = Stream::new(17);
        for _ in 0..10_000 {
            let m = random_motion2(&mut s);
            let id = compose(&m, &m.inverse());
            assert!(wrap_angle(id.angle).abs() < 1e-9);
            assert!(id.translation.norm() < 1e-9);

            let m3 = random_motion3(&mut s);
            let id3 = compose(&m3.inverse(), &m3);
            assert!(id3.translation.norm() < 1e-9);
            for i in 0..3 {
                for j in 0..3 {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((id3.rotation[i][j] - target).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn rotation_part_stays_special_orthogonal() {
        let mut s = Stream::new(23);
        let mut acc = RigidMotion3::identity();
        for _ in 0..5000 {
            acc = compose(&random_motion3(&mut s), &acc);
        }
        assert!(acc.orthonormal_drift() < 1e-9);
        assert!((acc.determinant() - 1.0).abs() < 1e-9);
    }
}
