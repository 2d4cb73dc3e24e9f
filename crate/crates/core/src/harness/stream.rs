use std::time::Instant;

use serde::Serialize;

use super::oracle::{OracleNoise, OraclePredictor};
use super::synth::SyntheticScene;
use crate::error::{Error, Result};
use crate::geom::{Intrinsics, RigidPose};
use crate::metrics::CameraEstimate;
use crate::raster::{FeatureImage, RenderConfig};
use crate::reco::{build_conditioning, rendering_intrinsics};
use crate::splat::{assemble, scale_factor, AssemblyConfig, GaussianPrimitive, PoseSource, WorldScene};
use crate::streamformer::{token_set_count, CachePolicy, ModelProfile, Retention, StreamModel, FIRST_CHUNK, MAX_CHUNK};

/// One input frame of a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamFrame {
    /// Index in the source trajectory.
    pub view: usize,
    pub image: FeatureImage,
    pub gt_pose: RigidPose,
    pub gt_intrinsics: Option<Intrinsics>,
}

/// Builds stream frames for the given trajectory indices, in order.
pub fn frames_from_scene(scene: &SyntheticScene, views: &[usize], cfg: &RenderConfig) -> Result<Vec<StreamFrame>> {
    views
        .iter()
        .map(|&view| {
            Ok(StreamFrame {
                view,
                image: scene.observe(view, cfg)?,
                gt_pose: *scene.pose(view),
                gt_intrinsics: Some(scene.intrinsics),
            })
        })
        .collect()
}

/// Source of per-view Gaussians and cameras.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictorKind {
    Oracle(OracleNoise),
    ToyNetwork(ModelProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    /// Size of every chunk after the first (which is always 8).
    pub chunk_size: usize,
    pub assembly: AssemblyConfig,
    pub cache: CachePolicy,
    pub render: RenderConfig,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            chunk_size: 8,
            assembly: AssemblyConfig::default(),
            cache: CachePolicy::compressed(),
            render: RenderConfig::default(),
        }
    }
}

/// Frame ranges of the stream: 8 frames, then `chunk` at a time.
pub fn chunk_ranges(frames: usize, chunk: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if frames < FIRST_CHUNK {
        return Err(Error::arg(format!(
            "a stream needs at least {FIRST_CHUNK} frames for its first chunk, got {frames}"
        )));
    }
    if !(1..=MAX_CHUNK).contains(&chunk) {
        return Err(Error::arg(format!(
            "chunk size must lie in [1, {MAX_CHUNK}], got {chunk}"
        )));
    }
    let mut out = vec![0..FIRST_CHUNK];
    let mut start = FIRST_CHUNK;
    while start < frames {
        let end = (start + chunk).min(frames);
        out.push(start..end);
        start = end;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkLog {
    pub chunk: usize,
    /// Trajectory indices of the chunk's frames.
    pub views: Vec<usize>,
    pub elapsed_ms: f64,
    /// Token sets the cache should hold after this chunk (network only).
    pub expected_token_sets: Option<usize>,
    /// Token sets the cache actually holds (network only).
    pub cached_token_sets: Option<usize>,
    pub cache_bytes: Option<usize>,
    pub added: usize,
    pub pruned: usize,
    pub scene_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamOutput {
    pub scene: WorldScene,
    /// Predicted camera per streamed frame.
    pub predicted: Vec<CameraEstimate>,
    /// Trajectory index per streamed frame.
    pub views: Vec<usize>,
    /// Translation factor applied to ground-truth assembly poses.
    pub scale_factor: f64,
    pub log: Vec<ChunkLog>,
}

impl StreamOutput {
    /// Predicted camera of trajectory frame `view`, if it was streamed.
    pub fn predicted_for(&self, view: usize) -> Option<&CameraEstimate> {
        self.views.iter().position(|&v| v == view).map(|i| &self.predicted[i])
    }
}

/// Token sets held by a cache with `policy` after `seen` frames.
pub fn expected_token_sets(seen: usize, chunk: usize, profile: &ModelProfile, policy: CachePolicy) -> Result<usize> {
    let layers = if policy.truncate_early_layers {
        profile.cached_global_layers
    } else {
        profile.layer_pairs
    };
    match policy.retention {
        Retention::Selective => token_set_count(seen, chunk, layers),
        Retention::All => Ok(layers * seen),
    }
}

struct ChunkPrediction {
    locals: Vec<Vec<GaussianPrimitive>>,
    cameras: Vec<CameraEstimate>,
}

enum Engine<'a> {
    Oracle(OraclePredictor<'a>),
    Network {
        model: Box<StreamModel>,
        cache: crate::streamformer::CompressedKvCache,
    },
}

/// Streams `frames` through the predictor chunk by chunk, assembling and
/// pruning the world scene after each chunk.
pub fn stream_reconstruct(
    frames: &[StreamFrame],
    predictor: &PredictorKind,
    synthetic: Option<&SyntheticScene>,
    cfg: &StreamConfig,
) -> Result<StreamOutput> {
    cfg.assembly.validate()?;
    let ranges = chunk_ranges(frames.len(), cfg.chunk_size)?;
    let mut engine = match predictor {
        PredictorKind::Oracle(noise) => {
            let scene = synthetic.ok_or_else(|| Error::arg("the oracle predictor needs the synthetic scene"))?;
            Engine::Oracle(OraclePredictor::new(scene, *noise)?)
        }
        PredictorKind::ToyNetwork(profile) => {
            let model = StreamModel::seeded(*profile)?;
            let cache = model.new_cache(cfg.cache);
            Engine::Network {
                model: Box::new(model),
                cache,
            }
        }
    };

    let mut scene = WorldScene::new();
    let mut factor = 1.0;
    let mut predicted = Vec::with_capacity(frames.len());
    let mut log = Vec::with_capacity(ranges.len());
    for (chunk, range) in ranges.into_iter().enumerate() {
        let start = Instant::now();
        let batch = &frames[range.clone()];
        let gt_poses: Vec<RigidPose> = batch.iter().map(|f| f.gt_pose).collect();

        // Oracle predictions do not read the scene; the network needs the
        // assembly poses first to build its conditioning.
        let (prediction, cache_stats) = match &mut engine {
            Engine::Oracle(oracle) => {
                let mut locals = Vec::with_capacity(batch.len());
                let mut cameras = Vec::with_capacity(batch.len());
                for f in batch {
                    let p = oracle.predict(f.view)?;
                    locals.push(p.locals);
                    cameras.push(CameraEstimate {
                        pose: p.pose,
                        intrinsics: p.intrinsics,
                    });
                }
                if chunk == 0 {
                    factor = first_chunk_factor(cfg, &gt_poses, &cameras)?;
                }
                (ChunkPrediction { locals, cameras }, None)
            }
            Engine::Network { model, cache } => {
                let images: Vec<FeatureImage> = batch.iter().map(|f| f.image.clone()).collect();
                let encoded = model.encode_chunk(&images)?;
                let features = model.decode_chunk(&encoded, cache)?;
                let cameras: Vec<CameraEstimate> = features
                    .iter()
                    .zip(&encoded.intrinsics)
                    .map(|(f, k)| CameraEstimate {
                        pose: model.heads.predict_pose(f),
                        intrinsics: *k,
                    })
                    .collect();
                if chunk == 0 {
                    factor = first_chunk_factor(cfg, &gt_poses, &cameras)?;
                }
                let mut locals = Vec::with_capacity(batch.len());
                for (i, f) in batch.iter().enumerate() {
                    let assembly_pose = assembly_pose(cfg, &f.gt_pose, &cameras[i].pose, factor);
                    let z = build_conditioning(
                        &scene,
                        &f.image,
                        &assembly_pose,
                        f.gt_intrinsics.as_ref(),
                        &cameras[i].intrinsics,
                        &model.patchify,
                        &cfg.render,
                        range.start + i,
                    )?;
                    let k = rendering_intrinsics(f.gt_intrinsics.as_ref(), &cameras[i].intrinsics);
                    locals.push(model.heads.predict_gaussians(&features[i], &z, k)?);
                }
                let seen = cache.views_seen();
                let expected = expected_token_sets(seen, cfg.chunk_size, &model.profile, cfg.cache)?;
                let stats = (expected, cache.token_set_count(), cache.byte_size());
                (ChunkPrediction { locals, cameras }, Some(stats))
            }
        };

        let (poses, f) = match cfg.assembly.pose_source {
            PoseSource::GroundTruth => (gt_poses, factor),
            PoseSource::Predicted => (prediction.cameras.iter().map(|c| c.pose).collect(), 1.0),
        };
        let before = scene.len();
        scene = assemble(scene, &prediction.locals, &poses, f, chunk)?;
        let added = scene.len() - before;
        let assembled = scene.len();
        scene.prune_in_place(cfg.assembly.prune_threshold);
        predicted.extend(prediction.cameras);
        log.push(ChunkLog {
            chunk,
            views: batch.iter().map(|f| f.view).collect(),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            expected_token_sets: cache_stats.map(|s| s.0),
            cached_token_sets: cache_stats.map(|s| s.1),
            cache_bytes: cache_stats.map(|s| s.2),
            added,
            pruned: assembled - scene.len(),
            scene_size: scene.len(),
        });
    }
    Ok(StreamOutput {
        scene,
        predicted,
        views: frames.iter().map(|f| f.view).collect(),
        scale_factor: if cfg.assembly.pose_source == PoseSource::GroundTruth {
            factor
        } else {
            1.0
        },
        log,
    })
}

fn first_chunk_factor(cfg: &StreamConfig, gt: &[RigidPose], cameras: &[CameraEstimate]) -> Result<f64> {
    let pred: Vec<RigidPose> = cameras.iter().map(|c| c.pose).collect();
    scale_factor(gt, &pred, cfg.assembly.alignment_mode, cfg.assembly.scale_measure)
}

fn assembly_pose(cfg: &StreamConfig, gt: &RigidPose, pred: &RigidPose, factor: f64) -> RigidPose {
    match cfg.assembly.pose_source {
        PoseSource::GroundTruth => gt.with_scaled_translation(factor),
        PoseSource::Predicted => *pred,
    }
}
