//! Conditioning tokens from a partial scene react to the assembly pose.

use streamsplat::geom::{rotation_z, RigidPose};
use streamsplat::harness::{generate_scene, SceneConfig};
use streamsplat::raster::RenderConfig;
use streamsplat::reco::{build_conditioning, PatchifyWeights};

fn main() -> streamsplat::Result<()> {
    let scene = generate_scene(&SceneConfig::object(8), 11)?;
    let cfg = RenderConfig::default();
    let weights = PatchifyWeights::seeded(5, 32);
    let obs = scene.observe(2, &cfg)?;
    let k = scene.intrinsics;
    let pose = *scene.pose(2);
    let tokens = |p: &RigidPose| build_conditioning(&scene.gaussians, &obs, p, Some(&k), &k, &weights, &cfg, 2);
    let base = tokens(&pose)?;
    println!("grid {}x{}, dim {}", base.grid_width, base.grid_height, base.dim);
    println!("repeat distance: {}", base.l2_distance(&tokens(&pose)?));
    for deg in [0.5, 1.0, 2.0, 5.0] {
        let r = RigidPose::new(rotation_z(f64::to_radians(deg)), Default::default())?;
        println!(
            "{deg:>4} deg roll: L2 {:.4}",
            base.l2_distance(&tokens(&pose.compose(&r))?)
        );
    }
    Ok(())
}
