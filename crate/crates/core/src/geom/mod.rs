//! Rigid poses, pinhole cameras, angular error measures and farthest point
//! sampling.

mod fps;
mod intrinsics;
mod pose;
mod trajectory;

pub use fps::farthest_point_sample;
pub use intrinsics::Intrinsics;
pub use pose::{
    look_at, orthonormality_error, orthonormalize, relative, rotation_angle, rotation_exp, rotation_x, rotation_y,
    rotation_z, translation_direction_angle, RigidPose, ORTHONORMALITY_TOLERANCE,
};
pub use trajectory::{read_trajectory, write_trajectory, CameraFrame};
