use nalgebra::{Matrix2, Matrix2x3, Vector2};

use crate::geom::{Intrinsics, RigidPose};
use crate::splat::GaussianPrimitive;

/// Variance added to both diagonal entries of every projected covariance.
pub const COVARIANCE_REGULARIZATION: f64 = 0.3;
/// The Jacobian is evaluated with `x/z`, `y/z` clamped to this multiple of
/// the half field of view, so splats far outside the frustum keep bounded
/// footprints instead of image-covering ones.
pub const FRUSTUM_GUARD: f64 = 1.3;

/// A Gaussian's screen-space footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenSplat {
    pub mean: Vector2<f64>,
    pub covariance: Matrix2<f64>,
    pub depth: f64,
}

/// EWA projection of a world Gaussian into a camera (camera-to-world pose).
/// Returns `None` when the Gaussian's view depth is at or before `near`.
pub fn project(g: &GaussianPrimitive, camera: &RigidPose, k: &Intrinsics, near: f64) -> Option<ScreenSplat> {
    let view = camera.inverse_transform_point(&g.mean);
    if view.z <= near {
        return None;
    }
    let w = camera.rotation().transpose();
    let cov_view = w * g.covariance() * w.transpose();
    let z = view.z;
    let lim_x = FRUSTUM_GUARD * k.cx.max(k.width as f64 - k.cx) / k.fx;
    let lim_y = FRUSTUM_GUARD * k.cy.max(k.height as f64 - k.cy) / k.fy;
    let x = (view.x / z).clamp(-lim_x, lim_x) * z;
    let y = (view.y / z).clamp(-lim_y, lim_y) * z;
    let jac = Matrix2x3::new(k.fx / z, 0.0, -k.fx * x / (z * z), 0.0, k.fy / z, -k.fy * y / (z * z));
    let mut cov = jac * cov_view * jac.transpose();
    cov[(0, 1)] = 0.5 * (cov[(0, 1)] + cov[(1, 0)]);
    cov[(1, 0)] = cov[(0, 1)];
    cov[(0, 0)] += COVARIANCE_REGULARIZATION;
    cov[(1, 1)] += COVARIANCE_REGULARIZATION;
    Some(ScreenSplat {
        mean: k.project(&view),
        covariance: cov,
        depth: z,
    })
}
