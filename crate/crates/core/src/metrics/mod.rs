//! Photometric metrics, pose accuracy, the training loss suite and
//! inference-time target pose refinement.

mod image;
mod losses;
mod pose;
mod pose_opt;

pub use image::{mse, psnr, ssim, PSNR_CAP, SSIM_WINDOW};
pub use losses::{
    huber, loss_extrinsic, loss_intrinsic, loss_opacity, rotation_pair_loss, total_loss, CameraEstimate, LossBreakdown,
    LossWeights,
};
pub use pose::{pair_error, pair_errors, pose_auc, PoseErrorCurve, ALT_THRESHOLDS, DEFAULT_THRESHOLDS};
pub use pose_opt::{
    finite_difference_gradient, optimize_target_pose, rendering_mse, scene_scale, DescentDirection, PoseOptConfig,
    PoseOptResult,
};
