use crate::error::{Error, Result};
use crate::geom::{relative, rotation_angle, translation_direction_angle, RigidPose};

/// AUC thresholds in degrees used for reporting.
pub const DEFAULT_THRESHOLDS: [f64; 3] = [5.0, 10.0, 20.0];
/// Alternative threshold set.
pub const ALT_THRESHOLDS: [f64; 3] = [5.0, 10.0, 15.0];

/// Angular error of the relative pose `i → j`: the larger of the rotation
/// discrepancy and the angle between relative translation directions, in
/// degrees.
pub fn pair_error(pred_i: &RigidPose, pred_j: &RigidPose, gt_i: &RigidPose, gt_j: &RigidPose) -> f64 {
    let p = relative(pred_i, pred_j);
    let g = relative(gt_i, gt_j);
    let rot = rotation_angle(&(g.rotation().transpose() * p.rotation()));
    let trans = translation_direction_angle(p.translation(), g.translation());
    rot.max(trans).to_degrees()
}

/// Errors for every ordered pair `i ≠ j`.
pub fn pair_errors(pred: &[RigidPose], gt: &[RigidPose]) -> Result<Vec<f64>> {
    if pred.len() != gt.len() {
        return Err(Error::arg(format!(
            "{} predicted poses vs {} ground truth",
            pred.len(),
            gt.len()
        )));
    }
    if pred.len() < 2 {
        return Err(Error::arg("pose AUC needs at least two views"));
    }
    let n = pred.len();
    let mut out = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.push(pair_error(&pred[i], &pred[j], &gt[i], &gt[j]));
            }
        }
    }
    Ok(out)
}

/// Sorted per-pair errors with the thresholds they are summarized at.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseErrorCurve {
    pub errors: Vec<f64>,
    pub thresholds: Vec<f64>,
}

impl PoseErrorCurve {
    pub fn new(mut errors: Vec<f64>, thresholds: &[f64]) -> Self {
        errors.sort_by(f64::total_cmp);
        Self {
            errors,
            thresholds: thresholds.to_vec(),
        }
    }

    /// Exact integral of the recall curve `r(x) = #{e < x}/n` over
    /// `[0, τ]`, divided by `τ`.
    pub fn auc(&self, threshold: f64) -> f64 {
        if self.errors.is_empty() || threshold <= 0.0 {
            return 0.0;
        }
        let area: f64 = self.errors.iter().map(|&e| (threshold - e).max(0.0)).sum();
        area / (threshold * self.errors.len() as f64)
    }

    pub fn aucs(&self) -> Vec<f64> {
        self.thresholds.iter().map(|&t| self.auc(t)).collect()
    }
}

/// Pose AUC at each threshold (degrees).
pub fn pose_auc(pred: &[RigidPose], gt: &[RigidPose], thresholds: &[f64]) -> Result<Vec<f64>> {
    Ok(PoseErrorCurve::new(pair_errors(pred, gt)?, thresholds).aucs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rotation_exp;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pose(rng: &mut ChaCha8Rng) -> RigidPose {
        let w = Vector3::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let t = Vector3::new(
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        );
        RigidPose::new(rotation_exp(&w), t).unwrap()
    }

    #[test]
    fn perfect_poses_score_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let poses: Vec<_> = (0..6).map(|_| random_pose(&mut rng)).collect();
        for v in pose_auc(&poses, &poses, &DEFAULT_THRESHOLDS).unwrap() {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn errors_at_threshold_contribute_nothing() {
        let curve = PoseErrorCurve::new(vec![5.0; 4], &[5.0]);
        assert_eq!(curve.auc(5.0), 0.0);
        assert!((curve.auc(10.0) - 0.5).abs() < 1e-15);
    }

    /// Numerically integrates the step recall curve with a fine midpoint
    /// rule between breakpoints.
    fn integrate_recall(errors: &[f64], tau: f64) -> f64 {
        let mut points: Vec<f64> = errors.iter().copied().filter(|&e| e < tau).collect();
        points.push(0.0);
        points.push(tau);
        points.sort_by(f64::total_cmp);
        let mut area = 0.0;
        for w in points.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let recall = errors.iter().filter(|&&e| e < mid).count() as f64 / errors.len() as f64;
            area += recall * (w[1] - w[0]);
        }
        area / tau
    }

    #[test]
    fn matches_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let gt: Vec<_> = (0..4).map(|_| random_pose(&mut rng)).collect();
            let pred: Vec<_> = gt
                .iter()
                .map(|p| {
                    let d: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-0.15..0.15));
                    p.retract(&d)
                })
                .collect();
            let mut errors = Vec::new();
            for i in 0..4 {
                for j in 0..4 {
                    if i == j {
                        continue;
                    }
                    let rp = pred[i].rotation().transpose() * pred[j].rotation();
                    let rg = gt[i].rotation().transpose() * gt[j].rotation();
                    let tp = pred[i].rotation().transpose() * (pred[j].translation() - pred[i].translation());
                    let tg = gt[i].rotation().transpose() * (gt[j].translation() - gt[i].translation());
                    let cos_r = (((rg.transpose() * rp).trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
                    let cos_t = (tp.dot(&tg) / (tp.norm() * tg.norm())).clamp(-1.0, 1.0);
                    errors.push(cos_r.acos().max(cos_t.acos()).to_degrees());
                }
            }
            let got = pose_auc(&pred, &gt, &DEFAULT_THRESHOLDS).unwrap();
            for (k, &tau) in DEFAULT_THRESHOLDS.iter().enumerate() {
                assert!((got[k] - integrate_recall(&errors, tau)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = vec![RigidPose::identity(); 3];
        assert!(pose_auc(&p, &p[..2], &DEFAULT_THRESHOLDS).is_err());
        assert!(pose_auc(&p[..1], &p[..1], &DEFAULT_THRESHOLDS).is_err());
    }
}
