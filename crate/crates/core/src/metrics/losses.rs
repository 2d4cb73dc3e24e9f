use serde::{Deserialize, Serialize};

use super::image::mse;
use crate::error::{Error, Result};
use crate::geom::{relative, rotation_angle, Intrinsics, RigidPose};
use crate::raster::FeatureImage;
use crate::splat::WorldScene;

/// Loss term weights. LPIPS is not computed; its weight is kept at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub mse: f64,
    pub lpips_placeholder: f64,
    pub intrinsic: f64,
    pub extrinsic: f64,
    pub opacity: f64,
    pub huber_delta: f64,
    pub lambda_t: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            mse: 1.0,
            lpips_placeholder: 0.0,
            intrinsic: 0.5,
            extrinsic: 0.1,
            opacity: 0.01,
            huber_delta: 1.0,
            lambda_t: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.mse,
            self.lpips_placeholder,
            self.intrinsic,
            self.extrinsic,
            self.opacity,
            self.huber_delta,
            self.lambda_t,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::arg("loss weights must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Huber penalty of a scalar residual.
pub fn huber(x: f64, delta: f64) -> f64 {
    let a = x.abs();
    if a <= delta {
        0.5 * x * x
    } else {
        delta * (a - 0.5 * delta)
    }
}

/// Geodesic angle (radians) between the true and predicted relative
/// rotations of views `i ← j`.
pub fn rotation_pair_loss(pred: &[RigidPose], gt: &[RigidPose], i: usize, j: usize) -> f64 {
    let p = relative(&pred[i], &pred[j]);
    let g = relative(&gt[i], &gt[j]);
    rotation_angle(&(g.rotation().transpose() * p.rotation()))
}

/// Mean over ordered pairs of the relative rotation angle plus `λ_t` times
/// the element-summed Huber penalty on the relative translation.
pub fn loss_extrinsic(pred: &[RigidPose], gt: &[RigidPose], weights: &LossWeights) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::arg(format!(
            "{} predicted poses vs {} ground truth",
            pred.len(),
            gt.len()
        )));
    }
    let n = pred.len();
    if n < 2 {
        return Err(Error::arg("extrinsic loss needs at least two views"));
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dt = relative(&pred[i], &pred[j]).translation() - relative(&gt[i], &gt[j]).translation();
            let h: f64 = dt.iter().map(|&x| huber(x, weights.huber_delta)).sum();
            sum += rotation_pair_loss(pred, gt, i, j) + weights.lambda_t * h;
        }
    }
    Ok(sum / (n * (n - 1)) as f64)
}

/// Mean Euclidean error of `(fx, fy)` over views.
pub fn loss_intrinsic(pred: &[[f64; 2]], gt: &[[f64; 2]]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::arg(format!(
            "{} predicted focals vs {} ground truth",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| ((p[0] - g[0]).powi(2) + (p[1] - g[1]).powi(2)).sqrt())
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Mean opacity (an ℓ1 penalty, opacities being non-negative).
pub fn loss_opacity(scene: &WorldScene) -> f64 {
    if scene.is_empty() {
        return 0.0;
    }
    scene.iter().map(|g| g.opacity).sum::<f64>() / scene.len() as f64
}

/// A camera as predicted or given: extrinsics plus intrinsics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraEstimate {
    pub pose: RigidPose,
    pub intrinsics: Intrinsics,
}

/// Unweighted terms and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub mse: f64,
    /// Always 0.
    pub lpips: f64,
    /// False: LPIPS is not evaluated.
    pub lpips_evaluated: bool,
    pub intrinsic: f64,
    pub extrinsic: f64,
    pub opacity: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// Weighted terms in the order mse, lpips, intrinsic, extrinsic, opacity.
    pub fn weighted_terms(&self, w: &LossWeights) -> [f64; 5] {
        [
            w.mse * self.mse,
            w.lpips_placeholder * self.lpips,
            w.intrinsic * self.intrinsic,
            w.extrinsic * self.extrinsic,
            w.opacity * self.opacity,
        ]
    }
}

/// Combined training objective over target renders and context cameras.
pub fn total_loss(
    renders: &[FeatureImage],
    targets: &[FeatureImage],
    pred_cams: &[CameraEstimate],
    gt_cams: &[CameraEstimate],
    scene: &WorldScene,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    weights.validate()?;
    if renders.len() != targets.len() || renders.is_empty() {
        return Err(Error::arg(format!(
            "need matching non-empty render/target lists, got {} and {}",
            renders.len(),
            targets.len()
        )));
    }
    let mut photometric = 0.0;
    for (r, t) in renders.iter().zip(targets) {
        photometric += mse(&r.rgb(), &t.rgb())?;
    }
    photometric /= renders.len() as f64;
    let pred_poses: Vec<_> = pred_cams.iter().map(|c| c.pose).collect();
    let gt_poses: Vec<_> = gt_cams.iter().map(|c| c.pose).collect();
    let pred_focals: Vec<_> = pred_cams.iter().map(|c| c.intrinsics.focals()).collect();
    let gt_focals: Vec<_> = gt_cams.iter().map(|c| c.intrinsics.focals()).collect();
    let mut out = LossBreakdown {
        mse: photometric,
        lpips: 0.0,
        lpips_evaluated: false,
        intrinsic: loss_intrinsic(&pred_focals, &gt_focals)?,
        extrinsic: loss_extrinsic(&pred_poses, &gt_poses, weights)?,
        opacity: loss_opacity(scene),
        total: 0.0,
    };
    out.total = out.weighted_terms(weights).iter().sum();
    Ok(out)
}
