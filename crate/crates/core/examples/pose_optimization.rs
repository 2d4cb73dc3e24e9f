//! Recovers a perturbed target camera by minimizing rendering MSE.

use nalgebra::Vector3;
use streamsplat::geom::{rotation_angle, rotation_exp, RigidPose};
use streamsplat::harness::{generate_scene, SceneConfig};
use streamsplat::metrics::{optimize_target_pose, PoseOptConfig};

fn main() -> streamsplat::Result<()> {
    let scene = generate_scene(&SceneConfig::object(32), 0)?;
    let cfg = PoseOptConfig::default();
    let view = 9;
    let truth = *scene.pose(view);
    let target = scene.observe(view, &cfg.render)?;
    let axis = Vector3::new(0.3, -1.0, 0.5).normalize() * 2f64.to_radians();
    let shift = Vector3::new(1.0, 0.0, -1.0).normalize() * 0.02 * scene.scale();
    let init = RigidPose::new(truth.rotation() * rotation_exp(&axis), truth.translation() + shift)?;
    let out = optimize_target_pose(&scene.gaussians, &target, &scene.intrinsics, &init, &cfg)?;
    for (i, loss) in out.history.iter().enumerate().step_by(10) {
        println!("iter {i:>3}: best mse {loss:.3e}");
    }
    let err = rotation_angle(&(truth.rotation().transpose() * out.pose.rotation())).to_degrees();
    println!(
        "mse {:.3e} -> {:.3e}, rotation error {err:.4} deg",
        out.initial_loss, out.best_loss
    );
    Ok(())
}
