use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{transform_local, GaussianPrimitive, WorldScene};
use crate::error::{Error, Result};
use crate::geom::RigidPose;

/// Opacity below which assembled Gaussians are dropped.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoseSource {
    GroundTruth,
    Predicted,
}

/// Direction of the first-chunk scale ratio applied to ground-truth poses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AlignmentMode {
    /// `Scale(pred) / Scale(gt)`: rescales ground truth into the predicted
    /// frame, so assembly is independent of the ground-truth units.
    #[default]
    PredictedScaleConsistent,
    /// `Scale(gt) / Scale(pred)`, the ratio as literally written. Kept for
    /// comparison; it is not invariant to ground-truth units.
    GtOverPredicted,
}

/// What "camera translation" means when measuring a pose set's extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ScaleMeasure {
    /// The pose translation vectors themselves.
    #[default]
    Translations,
    /// `−Rᵀt`, the camera centers if the poses were world-to-camera.
    Centers,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyConfig {
    pub pose_source: PoseSource,
    pub alignment_mode: AlignmentMode,
    pub scale_measure: ScaleMeasure,
    pub prune_threshold: f64,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        Self {
            pose_source: PoseSource::GroundTruth,
            alignment_mode: AlignmentMode::default(),
            scale_measure: ScaleMeasure::default(),
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
        }
    }
}

impl AssemblyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.prune_threshold) {
            return Err(Error::arg("prune threshold must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Largest pairwise distance between the measured camera translations.
pub fn pose_set_scale(poses: &[RigidPose], measure: ScaleMeasure) -> f64 {
    let points: Vec<Vector3<f64>> = poses
        .iter()
        .map(|p| match measure {
            ScaleMeasure::Translations => *p.translation(),
            ScaleMeasure::Centers => -(p.rotation().transpose() * p.translation()),
        })
        .collect();
    let mut best: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

/// Global factor applied to ground-truth translations, computed once from
/// the first chunk. Returns 1 when either pose set has no spatial extent.
pub fn scale_factor(
    gt_first_chunk: &[RigidPose],
    pred_first_chunk: &[RigidPose],
    mode: AlignmentMode,
    measure: ScaleMeasure,
) -> Result<f64> {
    if gt_first_chunk.len() != pred_first_chunk.len() {
        return Err(Error::arg(format!(
            "scale alignment needs index-aligned pose sets ({} vs {})",
            gt_first_chunk.len(),
            pred_first_chunk.len()
        )));
    }
    let gt = pose_set_scale(gt_first_chunk, measure);
    let pred = pose_set_scale(pred_first_chunk, measure);
    if gt < 1e-9 || pred < 1e-9 {
        return Ok(1.0);
    }
    Ok(match mode {
        AlignmentMode::PredictedScaleConsistent => pred / gt,
        AlignmentMode::GtOverPredicted => gt / pred,
    })
}

/// Appends every view's local Gaussians to `scene`, transformed by that
/// view's pose with its translation multiplied by `factor`.
pub fn assemble(
    mut scene: WorldScene,
    locals: &[Vec<GaussianPrimitive>],
    poses: &[RigidPose],
    factor: f64,
    stamp: usize,
) -> Result<WorldScene> {
    if locals.len() != poses.len() {
        return Err(Error::arg(format!(
            "assembly needs one pose per view ({} views, {} poses)",
            locals.len(),
            poses.len()
        )));
    }
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::arg(format!("scale factor must be positive, got {factor}")));
    }
    for (view, pose) in locals.iter().zip(poses) {
        let assembly_pose = pose.with_scaled_translation(factor);
        for g in view {
            scene.push(transform_local(g, &assembly_pose), stamp);
        }
    }
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{rotation_exp, RigidPose};
    use rand::{Rng, SeedableRng};

    fn cloud(seed: u64, n: usize) -> Vec<RigidPose> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let w = Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                let t = Vector3::new(
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                );
                RigidPose::new(rotation_exp(&w), t).unwrap()
            })
            .collect()
    }

    #[test]
    fn identical_sets_give_unit_factor() {
        let p = cloud(1, 8);
        let f = scale_factor(
            &p,
            &p,
            AlignmentMode::PredictedScaleConsistent,
            ScaleMeasure::Translations,
        )
        .unwrap();
        assert_eq!(f, 1.0);
    }

    #[test]
    fn doubled_ground_truth_halves() {
        let pred = cloud(2, 8);
        let gt: Vec<_> = pred.iter().map(|p| p.with_scaled_translation(2.0)).collect();
        let f = scale_factor(
            &gt,
            &pred,
            AlignmentMode::PredictedScaleConsistent,
            ScaleMeasure::Translations,
        )
        .unwrap();
        assert!((f - 0.5).abs() < 1e-15);
        let lit = scale_factor(&gt, &pred, AlignmentMode::GtOverPredicted, ScaleMeasure::Translations).unwrap();
        assert!((lit - 2.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_extent_falls_back_to_one() {
        let same = vec![RigidPose::identity(); 8];
        let other = cloud(3, 8);
        let f = scale_factor(
            &same,
            &other,
            AlignmentMode::PredictedScaleConsistent,
            ScaleMeasure::Translations,
        )
        .unwrap();
        assert_eq!(f, 1.0);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(scale_factor(
            &cloud(1, 8),
            &cloud(1, 7),
            AlignmentMode::default(),
            ScaleMeasure::default()
        )
        .is_err());
    }

    #[test]
    fn scale_matches_brute_force_over_pairs() {
        for seed in 0..10 {
            let p = cloud(seed, 8);
            let mut oracle: f64 = 0.0;
            for a in &p {
                for b in &p {
                    oracle = oracle.max((a.translation() - b.translation()).norm());
                }
            }
            assert_eq!(pose_set_scale(&p, ScaleMeasure::Translations), oracle);
        }
    }

    #[test]
    fn assembly_cases() {
        let g = GaussianPrimitive::isotropic(Vector3::new(0.1, 0.2, 0.3), 0.05, 0.5, [1.0, 0.0, 0.0]);
        let scene = assemble(WorldScene::new(), &[], &[], 1.0, 0).unwrap();
        assert!(scene.is_empty());

        let scene = assemble(WorldScene::new(), &[vec![g]], &[RigidPose::identity()], 1.0, 0).unwrap();
        assert_eq!(scene.primitives()[0].mean, g.mean);

        let pose = RigidPose::from_translation(Vector3::new(0.0, 0.0, 2.0));
        let scene = assemble(WorldScene::new(), &[vec![g]], &[pose], 0.5, 3).unwrap();
        assert!((scene.primitives()[0].mean - (g.mean + Vector3::new(0.0, 0.0, 1.0))).amax() < 1e-15);
        assert_eq!(scene.stamps(), &[3]);

        assert!(assemble(WorldScene::new(), &[vec![g]], &[], 1.0, 0).is_err());
        assert!(assemble(WorldScene::new(), &[vec![g]], &[pose], 0.0, 0).is_err());
    }
}
