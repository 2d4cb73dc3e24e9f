use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::geom::RigidPose;

pub const FEATURE_CHANNELS: usize = 9;
/// Color plus feature channels carried by every splat.
pub const PAYLOAD_CHANNELS: usize = 3 + FEATURE_CHANNELS;

/// One anisotropic 3D Gaussian. The covariance is kept factored as an
/// orientation and per-axis standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrimitive {
    pub mean: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub scale: Vector3<f64>,
    pub opacity: f64,
    pub color: [f64; 3],
    pub feature: [f64; FEATURE_CHANNELS],
}

impl GaussianPrimitive {
    /// Isotropic, axis-aligned Gaussian with zero features.
    pub fn isotropic(mean: Vector3<f64>, sigma: f64, opacity: f64, color: [f64; 3]) -> Self {
        Self {
            mean,
            orientation: UnitQuaternion::identity(),
            scale: Vector3::repeat(sigma),
            opacity,
            color,
            feature: [0.0; FEATURE_CHANNELS],
        }
    }

    /// Builds a primitive from a raw `(w, x, y, z)` quaternion without
    /// renormalizing it; [`validate`](Self::validate) checks the norm.
    pub fn from_raw_quaternion(wxyz: [f64; 4]) -> UnitQuaternion<f64> {
        UnitQuaternion::new_unchecked(Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]))
    }

    pub fn validate(&self) -> Result<()> {
        let qn = self.orientation.quaternion().norm();
        if !((qn - 1.0).abs() <= 1e-6) {
            return Err(Error::arg(format!("quaternion norm {qn} is not unit")));
        }
        if !self.scale.iter().all(|&s| s > 1e-8 && s < 1e6) {
            return Err(Error::arg(format!(
                "scale {:?} outside (1e-8, 1e6)",
                self.scale.as_slice()
            )));
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return Err(Error::arg(format!("opacity {} outside [0, 1]", self.opacity)));
        }
        if !self
            .mean
            .iter()
            .chain(&self.color)
            .chain(&self.feature)
            .all(|v| v.is_finite())
        {
            return Err(Error::arg("primitive has non-finite entries"));
        }
        Ok(())
    }

    /// `R·diag(σ²)·Rᵀ`.
    pub fn covariance(&self) -> Matrix3<f64> {
        let r = self.orientation.to_rotation_matrix().into_inner();
        let s2 = Matrix3::from_diagonal(&self.scale.component_mul(&self.scale));
        r * s2 * r.transpose()
    }

    /// Color followed by the feature channels.
    pub fn payload(&self) -> [f64; PAYLOAD_CHANNELS] {
        let mut p = [0.0; PAYLOAD_CHANNELS];
        p[..3].copy_from_slice(&self.color);
        p[3..].copy_from_slice(&self.feature);
        p
    }
}

/// Maps a primitive through a rigid transform: the mean is transformed and
/// the orientation left-multiplied by the pose rotation. Everything else is
/// copied unchanged.
pub fn transform_local(g: &GaussianPrimitive, pose: &RigidPose) -> GaussianPrimitive {
    let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*pose.rotation()));
    GaussianPrimitive {
        mean: pose.transform_point(&g.mean),
        orientation: rot * g.orientation,
        ..*g
    }
}
