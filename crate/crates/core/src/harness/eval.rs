use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::format::{sig6, sig6_json};
use super::stream::{frames_from_scene, stream_reconstruct, PredictorKind, StreamConfig, StreamOutput};
use super::synth::SyntheticScene;
use crate::error::{Error, Result};
use crate::geom::{farthest_point_sample, rotation_angle, RigidPose};
use crate::metrics::{
    optimize_target_pose, pose_auc, psnr, ssim, total_loss, CameraEstimate, LossBreakdown, LossWeights, PoseOptConfig,
    DEFAULT_THRESHOLDS,
};
use crate::raster::{render, FeatureImage};

/// Number of target bins.
pub const TARGET_BINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Targets are rendered at their ground-truth poses.
    Posed,
    /// Target poses are refined from the nearest context prediction first.
    Unposed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub context_views: usize,
    pub bins: usize,
    pub seed: u64,
    pub mode: EvalMode,
    pub thresholds: Vec<f64>,
    pub weights: LossWeights,
    pub pose_opt: PoseOptConfig,
}

impl EvalConfig {
    pub fn new(context_views: usize, seed: u64) -> Self {
        Self {
            context_views,
            bins: TARGET_BINS,
            seed,
            mode: EvalMode::Posed,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            weights: LossWeights::default(),
            pose_opt: PoseOptConfig::default(),
        }
    }
}

/// Context frames (streamed) and held-out target frames.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProtocolSplit {
    pub context: Vec<usize>,
    pub targets: Vec<usize>,
}

/// Picks context frames by farthest point sampling on camera centers, then
/// one seeded frame from each of `bins` equal bins of the remainder (the
/// last bin takes the leftover frames).
pub fn split_protocol(poses: &[RigidPose], context: usize, bins: usize, seed: u64) -> Result<ProtocolSplit> {
    if bins == 0 || poses.len() < context + bins {
        return Err(Error::arg(format!(
            "{} frames cannot hold {context} context views and {bins} targets",
            poses.len()
        )));
    }
    let centers: Vec<_> = poses.iter().map(RigidPose::center).collect();
    let context = farthest_point_sample(&centers, context)?;
    let mut chosen = vec![false; poses.len()];
    context.iter().for_each(|&i| chosen[i] = true);
    let remaining: Vec<usize> = (0..poses.len()).filter(|&i| !chosen[i]).collect();
    let size = remaining.len() / bins;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = (0..bins)
        .map(|b| {
            let end = if b + 1 == bins { remaining.len() } else { (b + 1) * size };
            let bin = &remaining[b * size..end];
            bin[rng.gen_range(0..bin.len())]
        })
        .collect();
    Ok(ProtocolSplit { context, targets })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetMetrics {
    pub view: usize,
    pub psnr: f64,
    pub ssim: f64,
    /// Rotation error of the refined pose, unposed mode only.
    pub rotation_error_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mode: EvalMode,
    pub context: Vec<usize>,
    pub targets: Vec<TargetMetrics>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    pub thresholds: Vec<f64>,
    pub auc: Vec<f64>,
    pub loss: LossBreakdown,
    pub scene_size: usize,
}

impl MetricsReport {
    /// JSON with every real rounded to 6 significant digits.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&sig6_json(value))?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "mode {:?}, {} context views, scene {} gaussians\n",
            self.mode,
            self.context.len(),
            self.scene_size
        ));
        out.push_str(&format!(
            "{:>6} {:>12} {:>12} {:>12}\n",
            "view", "psnr", "ssim", "rot_err_deg"
        ));
        for t in &self.targets {
            let rot = t.rotation_error_deg.map_or("-".to_string(), sig6);
            out.push_str(&format!(
                "{:>6} {:>12} {:>12} {:>12}\n",
                t.view,
                sig6(t.psnr),
                sig6(t.ssim),
                rot
            ));
        }
        out.push_str(&format!(
            "{:>6} {:>12} {:>12}\n",
            "mean",
            sig6(self.mean_psnr),
            sig6(self.mean_ssim)
        ));
        for (t, a) in self.thresholds.iter().zip(&self.auc) {
            out.push_str(&format!("auc@{}: {}\n", t, sig6(*a)));
        }
        let l = &self.loss;
        out.push_str(&format!(
            "loss total {} (mse {}, lpips n/a, intrinsic {}, extrinsic {}, opacity {})\n",
            sig6(l.total),
            sig6(l.mse),
            sig6(l.intrinsic),
            sig6(l.extrinsic),
            sig6(l.opacity)
        ));
        out
    }
}

fn nearest_context(context: &[usize], view: usize) -> usize {
    *context
        .iter()
        .min_by_key(|&&c| (c.abs_diff(view), c))
        .expect("context is non-empty")
}

/// Scores a reconstruction on the held-out targets and the context
/// camera predictions.
pub fn evaluate(
    scene: &SyntheticScene,
    recon: &StreamOutput,
    split: &ProtocolSplit,
    cfg: &EvalConfig,
) -> Result<MetricsReport> {
    let k = scene.intrinsics;
    let render_cfg = cfg.pose_opt.render;
    let mut targets = Vec::with_capacity(split.targets.len());
    let mut renders = Vec::with_capacity(split.targets.len());
    let mut images: Vec<FeatureImage> = Vec::with_capacity(split.targets.len());
    for &view in &split.targets {
        let truth = scene.observe(view, &render_cfg)?;
        let gt_pose = scene.pose(view).with_scaled_translation(recon.scale_factor);
        let (pose, rotation_error_deg) = match cfg.mode {
            EvalMode::Posed => (gt_pose, None),
            EvalMode::Unposed => {
                let init = recon
                    .predicted_for(nearest_context(&split.context, view))
                    .ok_or_else(|| Error::arg("context view missing from the reconstruction"))?
                    .pose;
                let refined = optimize_target_pose(&recon.scene, &truth, &k, &init, &cfg.pose_opt)?.pose;
                let err = rotation_angle(&(gt_pose.rotation().transpose() * refined.rotation())).to_degrees();
                (refined, Some(err))
            }
        };
        let rendered = render(&recon.scene, &pose, &k, &render_cfg)?.rgb();
        targets.push(TargetMetrics {
            view,
            psnr: psnr(&rendered, &truth)?,
            ssim: ssim(&rendered, &truth)?,
            rotation_error_deg,
        });
        renders.push(rendered);
        images.push(truth);
    }
    let n = targets.len() as f64;
    let pred: Vec<CameraEstimate> = split
        .context
        .iter()
        .map(|&v| {
            recon
                .predicted_for(v)
                .copied()
                .ok_or_else(|| Error::arg("context view missing from the reconstruction"))
        })
        .collect::<Result<_>>()?;
    let gt: Vec<CameraEstimate> = split
        .context
        .iter()
        .map(|&v| CameraEstimate {
            pose: *scene.pose(v),
            intrinsics: k,
        })
        .collect();
    let pred_poses: Vec<_> = pred.iter().map(|c| c.pose).collect();
    let gt_poses: Vec<_> = gt.iter().map(|c| c.pose).collect();
    Ok(MetricsReport {
        mode: cfg.mode,
        context: split.context.clone(),
        mean_psnr: targets.iter().map(|t| t.psnr).sum::<f64>() / n,
        mean_ssim: targets.iter().map(|t| t.ssim).sum::<f64>() / n,
        targets,
        thresholds: cfg.thresholds.clone(),
        auc: pose_auc(&pred_poses, &gt_poses, &cfg.thresholds)?,
        loss: total_loss(&renders, &images, &pred, &gt, &recon.scene, &cfg.weights)?,
        scene_size: recon.scene.len(),
    })
}

/// Splits the trajectory, streams the context views and evaluates.
pub fn run_protocol(
    scene: &SyntheticScene,
    predictor: &PredictorKind,
    stream_cfg: &StreamConfig,
    cfg: &EvalConfig,
) -> Result<(ProtocolSplit, StreamOutput, MetricsReport)> {
    let split = split_protocol(&scene.poses(), cfg.context_views, cfg.bins, cfg.seed)?;
    let frames = frames_from_scene(scene, &split.context, &stream_cfg.render)?;
    let recon = stream_reconstruct(&frames, predictor, Some(scene), stream_cfg)?;
    let report = evaluate(scene, &recon, &split, cfg)?;
    Ok((split, recon, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{generate_scene, OracleNoise, SceneConfig};

    #[test]
    fn forced_partition() {
        let s = generate_scene(&SceneConfig::room(40), 0).unwrap();
        let split = split_protocol(&s.poses(), 32, 8, 9).unwrap();
        let mut all: Vec<usize> = split.context.iter().chain(&split.targets).copied().collect();
        all.sort();
        assert_eq!(all, (0..40).collect::<Vec<_>>());
        assert!(split_protocol(&s.poses(), 33, 8, 9).is_err());
    }

    #[test]
    fn remainder_goes_to_last_bin() {
        let s = generate_scene(&SceneConfig::room(30), 0).unwrap();
        let split = split_protocol(&s.poses(), 9, 8, 1).unwrap();
        // 21 remaining frames: seven bins of 2 and a last bin of 7.
        let remaining: Vec<usize> = (0..30).filter(|i| !split.context.contains(i)).collect();
        for (b, t) in split.targets.iter().enumerate() {
            let pos = remaining.iter().position(|r| r == t).unwrap();
            if b < 7 {
                assert!(pos / 2 == b);
            } else {
                assert!(pos >= 14);
            }
        }
    }

    #[test]
    fn perfect_reconstruction_hits_cap() {
        let s = generate_scene(&SceneConfig::room(40), 2).unwrap();
        let cfg = EvalConfig::new(32, 0);
        let (split, mut recon, _) = run_protocol(
            &s,
            &PredictorKind::Oracle(OracleNoise::none(0)),
            &StreamConfig::default(),
            &cfg,
        )
        .unwrap();
        recon.scene = s.gaussians.clone();
        let report = evaluate(&s, &recon, &split, &cfg).unwrap();
        assert_eq!(report.mean_psnr, 100.0);
        assert!(report.to_json().unwrap().contains("mean_psnr"));
    }
}
