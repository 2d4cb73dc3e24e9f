//! Gaussian primitives, the accumulated world scene, local-to-world
//! assembly with first-chunk scale alignment, and opacity pruning.

mod assembly;
mod io;
mod primitive;
mod scene;

pub use assembly::{
    assemble, pose_set_scale, scale_factor, AlignmentMode, AssemblyConfig, PoseSource, ScaleMeasure,
    DEFAULT_PRUNE_THRESHOLD,
};
pub use io::{read_scene, write_scene, FIELDS_PER_PRIMITIVE, SCENE_FORMAT_VERSION};
pub use primitive::{transform_local, GaussianPrimitive, FEATURE_CHANNELS, PAYLOAD_CHANNELS};
pub use scene::WorldScene;

/// Free-function form of [`WorldScene::prune`].
pub fn prune(scene: &WorldScene, threshold: f64) -> WorldScene {
    scene.prune(threshold)
}
