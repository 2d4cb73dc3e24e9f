//! Render-and-compare conditioning.
//!
//! The accumulated scene is rendered at a view's assembly pose, stacked
//! with the observed image (3 + 12 = 15 channels), and downsampled 8× by a
//! three-stage strided convolution into a grid of conditioning tokens. Any
//! misalignment between the scene and the assembly pose shows up in the
//! rendered half of the input.

mod patchify;

pub use patchify::{patchify, ConvStage, PatchifyWeights, CONDITIONING_INPUT_CHANNELS};

use crate::error::{Error, Result};
use crate::geom::{Intrinsics, RigidPose};
use crate::raster::{render, FeatureImage, RenderConfig};
use crate::splat::WorldScene;

/// One view's conditioning tokens, row-major over the token grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningTokens {
    pub grid_width: usize,
    pub grid_height: usize,
    pub dim: usize,
    pub view: usize,
    pub data: Vec<f64>,
}

impl ConditioningTokens {
    pub fn len(&self) -> usize {
        self.grid_width * self.grid_height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn token(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn l2_distance(&self, other: &ConditioningTokens) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn linf_distance(&self, other: &ConditioningTokens) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Token grid produced for an `width × height` input: `⌈W/8⌉ × ⌈H/8⌉`.
pub fn token_grid(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(8), height.div_ceil(8))
}

/// Intrinsics used to render the conditioning image: ground truth when
/// known, otherwise the predicted ones.
pub fn rendering_intrinsics<'a>(k_gt: Option<&'a Intrinsics>, k_pred: &'a Intrinsics) -> &'a Intrinsics {
    k_gt.unwrap_or(k_pred)
}

/// Renders `scene` at `assembly_pose`, concatenates the render after the
/// observation and patchifies the result.
#[allow(clippy::too_many_arguments)]
pub fn build_conditioning(
    scene: &WorldScene,
    observation: &FeatureImage,
    assembly_pose: &RigidPose,
    k_gt: Option<&Intrinsics>,
    k_pred: &Intrinsics,
    weights: &PatchifyWeights,
    render_cfg: &RenderConfig,
    view: usize,
) -> Result<ConditioningTokens> {
    let k = rendering_intrinsics(k_gt, k_pred);
    if observation.channels() != 3 {
        return Err(Error::arg(format!(
            "observation must be RGB, got {} channels",
            observation.channels()
        )));
    }
    if observation.width() != k.width || observation.height() != k.height {
        return Err(Error::arg(format!(
            "observation is {}×{} but the camera renders {}×{}",
            observation.width(),
            observation.height(),
            k.width,
            k.height
        )));
    }
    let rendered = render(scene, assembly_pose, k, render_cfg)?;
    let stacked = observation.concat(&rendered)?;
    let mut tokens = patchify(&stacked, weights)?;
    tokens.view = view;
    Ok(tokens)
}
