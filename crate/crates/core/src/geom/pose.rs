use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Tolerance on `‖RᵀR − I‖∞` accepted when constructing a pose.
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-6;

/// Drift above which composed rotations are projected back onto SO(3).
const DRIFT_REPAIR_THRESHOLD: f64 = 1e-8;

/// A rigid-body transform `x ↦ R·x + t`.
///
/// Camera poses are stored camera-to-world: a point in camera coordinates
/// maps to world coordinates through the pose, and the translation is the
/// camera center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidPose {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().all(|v| v.is_finite()) || !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::arg("pose contains non-finite entries"));
        }
        let drift = orthonormality_error(&rotation);
        if drift > ORTHONORMALITY_TOLERANCE {
            return Err(Error::arg(format!(
                "rotation is not orthonormal (‖RᵀR − I‖∞ = {drift:.3e})"
            )));
        }
        if rotation.determinant() <= 0.0 {
            return Err(Error::arg("rotation has negative determinant"));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Builds a pose from an arbitrary 3×3 matrix by projecting it onto the
    /// nearest rotation (polar decomposition).
    pub fn from_nearest_rotation(matrix: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        Self::new(orthonormalize(&matrix), translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Camera center of a camera-to-world pose.
    pub fn center(&self) -> Vector3<f64> {
        self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidPose) -> RigidPose {
        let mut rotation = self.rotation * other.rotation;
        if orthonormality_error(&rotation) > DRIFT_REPAIR_THRESHOLD {
            rotation = orthonormalize(&rotation);
        }
        RigidPose {
            rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidPose {
        let rt = self.rotation.transpose();
        RigidPose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Maps a world point into the local frame of this pose.
    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }

    /// Same rotation, translation multiplied by `factor`.
    pub fn with_scaled_translation(&self, factor: f64) -> RigidPose {
        RigidPose {
            rotation: self.rotation,
            translation: self.translation * factor,
        }
    }

    /// Applies a local perturbation `[ω, v]`: rotation `R·Exp(ω)`,
    /// translation `t + R·v`. This is `self ∘ (Exp(ω), v)`.
    pub fn retract(&self, delta: &[f64; 6]) -> RigidPose {
        let local = RigidPose {
            rotation: rotation_exp(&Vector3::new(delta[0], delta[1], delta[2])),
            translation: Vector3::new(delta[3], delta[4], delta[5]),
        };
        self.compose(&local)
    }
}

/// `i⁻¹ ∘ j`, the transform taking frame `j` coordinates into frame `i`.
pub fn relative(i: &RigidPose, j: &RigidPose) -> RigidPose {
    i.inverse().compose(j)
}

/// `‖RᵀR − I‖∞` (max absolute entry).
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).amax()
}

/// Nearest proper rotation in the Frobenius sense (polar factor via SVD).
pub fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    r
}

/// Geodesic angle of a rotation, in `[0, π]`.
///
/// Equal to `arccos((tr R − 1)/2)` but evaluated as `atan2(sin, cos)` with
/// the sine taken from the skew part, which stays accurate near 0 and π
/// where the clamped arccos loses about half the significant digits.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let skew = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    (skew.norm() / 2.0).atan2(cos)
}

/// Angle between two directions in `[0, π]`. Returns 0 when either vector
/// is shorter than 1e-9.
pub fn translation_direction_angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na < 1e-9 || nb < 1e-9 {
        return 0.0;
    }
    a.cross(b).norm().atan2(a.dot(b))
}

/// Rodrigues map from a rotation vector to a rotation matrix.
pub fn rotation_exp(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta = omega.norm();
    let k = omega.cross_matrix();
    if theta < 1e-12 {
        return Matrix3::identity() + k;
    }
    let a = theta.sin() / theta;
    let b = (1.0 - theta.cos()) / (theta * theta);
    Matrix3::identity() + k * a + k * k * b
}

pub fn rotation_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rotation_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rotation_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Camera-to-world pose of a camera at `eye` looking at `target`, with the
/// camera's +y axis pointing as close to `down` as possible (x right,
/// y down, z forward).
pub fn look_at(eye: &Vector3<f64>, target: &Vector3<f64>, down: &Vector3<f64>) -> Result<RigidPose> {
    let forward = target - eye;
    if forward.norm() < 1e-12 {
        return Err(Error::arg("look_at: eye and target coincide"));
    }
    let z = forward.normalize();
    let x = down.cross(&z);
    if x.norm() < 1e-9 {
        return Err(Error::arg("look_at: viewing direction parallel to down vector"));
    }
    let x = x.normalize();
    let y = z.cross(&x);
    let rotation = Matrix3::from_columns(&[x, y, z]);
    RigidPose::new(rotation, *eye)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn sample_pose(seed: u64) -> RigidPose {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let w = Vector3::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let t = Vector3::new(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
        );
        RigidPose::new(rotation_exp(&w), t).unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let p = sample_pose(1);
        let q = RigidPose::identity().compose(&p);
        assert_eq!(q, p);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        for seed in 0..50 {
            let p = sample_pose(seed);
            let q = p.compose(&p.inverse());
            assert!((q.rotation() - Matrix3::identity()).amax() < 1e-9);
            assert!(q.translation().amax() < 1e-9);
        }
    }

    #[test]
    fn rz_angles_add() {
        let a = RigidPose::new(rotation_z(30f64.to_radians()), Vector3::zeros()).unwrap();
        let b = RigidPose::new(rotation_z(60f64.to_radians()), Vector3::zeros()).unwrap();
        // Oracle: explicit entries of Rz(90°).
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((a.compose(&b).rotation() - expected).amax() < 1e-9);
    }

    #[test]
    fn relative_of_self_is_identity() {
        let p = sample_pose(7);
        let r = relative(&p, &p);
        assert!((r.rotation() - Matrix3::identity()).amax() < 1e-12);
        assert!(r.translation().amax() < 1e-12);
    }

    #[test]
    fn relative_matches_homogeneous_inverse() {
        for seed in 0..20 {
            let (pi, pj) = (sample_pose(seed), sample_pose(seed + 100));
            let to_h = |p: &RigidPose| {
                let mut m = nalgebra::Matrix4::identity();
                m.fixed_view_mut::<3, 3>(0, 0).copy_from(p.rotation());
                m.fixed_view_mut::<3, 1>(0, 3).copy_from(p.translation());
                m
            };
            let oracle = to_h(&pi).try_inverse().unwrap() * to_h(&pj);
            let r = relative(&pi, &pj);
            assert!((oracle.fixed_view::<3, 3>(0, 0) - r.rotation()).amax() < 1e-9);
            assert!((oracle.fixed_view::<3, 1>(0, 3) - r.translation()).amax() < 1e-9);
        }
    }

    #[test]
    fn rotation_angle_known_values() {
        assert_eq!(rotation_angle(&Matrix3::identity()), 0.0);
        // trace(Rz(θ)) = 1 + 2cosθ
        assert!((rotation_angle(&rotation_z(FRAC_PI_2)) - FRAC_PI_2).abs() < 1e-12);
        assert!((rotation_angle(&rotation_x(PI)) - PI).abs() < 1e-7);
    }

    #[test]
    fn rotation_angle_agrees_with_arccos_away_from_the_ends() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let axis = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0f64..1.0),
            );
            let r = rotation_exp(&(axis.normalize() * rng.gen_range(0.01..PI - 0.01)));
            let oracle = ((r.trace() - 1.0) / 2.0).acos();
            assert!((rotation_angle(&r) - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_angle_clamps_overshooting_trace() {
        let m = Matrix3::identity() * (1.0 + 1e-15);
        assert_eq!(rotation_angle(&m), 0.0);
    }

    #[test]
    fn direction_angle_cases() {
        let x = Vector3::x();
        assert_eq!(translation_direction_angle(&x, &x), 0.0);
        assert!((translation_direction_angle(&x, &Vector3::y()) - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(translation_direction_angle(&x, &Vector3::zeros()), 0.0);
    }

    #[test]
    fn rejects_reflection_and_skew() {
        let reflection = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(RigidPose::new(reflection, Vector3::zeros()).is_err());
        let skewed = Matrix3::identity() * 1.01;
        assert!(RigidPose::new(skewed, Vector3::zeros()).is_err());
    }

    #[test]
    fn long_composition_chains_stay_orthonormal() {
        let step = sample_pose(3);
        let mut acc = RigidPose::identity();
        for _ in 0..100 {
            acc = acc.compose(&step);
            assert!(orthonormality_error(acc.rotation()) <= ORTHONORMALITY_TOLERANCE);
        }
    }

    #[test]
    fn look_at_points_forward_axis_at_target() {
        let eye = Vector3::new(1.0, -2.0, 3.0);
        let pose = look_at(&eye, &Vector3::zeros(), &Vector3::new(0.0, 1.0, 0.0)).unwrap();
        let local = pose.inverse_transform_point(&Vector3::zeros());
        assert!(local.x.abs() < 1e-12 && local.y.abs() < 1e-12 && local.z > 0.0);
    }
}
