//! Streaming Gaussian-splatting reconstruction.
//!
//! Frames arrive in chunks. Each chunk is encoded, decoded against a
//! compressed key/value cache of earlier chunks, and turned into local
//! Gaussians that are assembled into a growing world scene. Before
//! prediction, the current scene is rendered at every view's assembly pose
//! and paired with the observation (render-and-compare conditioning).
//!
//! Modules:
//! - [`geom`]: rigid poses, pinhole cameras, angular errors, farthest point sampling
//! - [`splat`]: Gaussian primitives, world scene, assembly, scale alignment, pruning
//! - [`raster`]: deterministic 12-channel splatting renderer and image formats
//! - [`reco`]: render-and-compare conditioning tokens
//! - [`streamformer`]: toy alternating-attention decoder with the compressed cache
//! - [`metrics`]: PSNR/SSIM, pose AUC, the loss suite, target pose optimization
//! - [`harness`]: synthetic scenes, oracle predictor, streaming driver, evaluation

pub mod error;
pub mod geom;
pub mod harness;
pub mod metrics;
pub mod raster;
pub mod reco;
pub mod splat;
pub mod streamformer;

pub use error::{Error, Result};
