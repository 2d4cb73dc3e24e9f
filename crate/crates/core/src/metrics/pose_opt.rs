use nalgebra::{Matrix6, Vector6};

use super::image::mse;
use crate::error::{Error, Result};
use crate::geom::{Intrinsics, RigidPose};
use crate::raster::{render, FeatureImage, RenderConfig};
use crate::splat::WorldScene;

/// Descent direction used by [`optimize_target_pose`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescentDirection {
    /// Negative gradient.
    Gradient,
    /// Gradient preconditioned by the damped Gauss–Newton matrix `JᵀJ`,
    /// with `J` the per-pixel central-difference Jacobian from the same
    /// renders as the gradient.
    GaussNewton,
}

/// Settings for refining a target pose against a rendered scene.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseOptConfig {
    pub iterations: usize,
    pub direction: DescentDirection,
    /// Finite-difference step for rotation coordinates (radians).
    pub rotation_step: f64,
    /// Finite-difference step for translation, as a fraction of scene scale.
    pub translation_step: f64,
    /// Overrides [`scene_scale`] when set.
    pub scene_scale: Option<f64>,
    pub initial_step: f64,
    /// Largest norm of one step in local coordinates. Without it, long
    /// steps can jump to views of empty background whose MSE is lower
    /// than a slightly misaligned view of the scene.
    pub max_step_norm: f64,
    pub max_halvings: usize,
    pub render: RenderConfig,
}

impl Default for PoseOptConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            direction: DescentDirection::GaussNewton,
            rotation_step: 1e-4,
            translation_step: 1e-4,
            scene_scale: None,
            initial_step: 1.0,
            max_step_norm: 0.02,
            max_halvings: 40,
            render: RenderConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseOptResult {
    pub pose: RigidPose,
    pub initial_loss: f64,
    pub best_loss: f64,
    /// Best loss after each iteration.
    pub history: Vec<f64>,
}

/// RMS distance of primitive means from their centroid; 1 for scenes with
/// no spatial extent.
pub fn scene_scale(scene: &WorldScene) -> f64 {
    if scene.is_empty() {
        return 1.0;
    }
    let n = scene.len() as f64;
    let centroid = scene.iter().fold(nalgebra::Vector3::zeros(), |acc, g| acc + g.mean) / n;
    let rms = (scene.iter().map(|g| (g.mean - centroid).norm_squared()).sum::<f64>() / n).sqrt();
    if rms > 1e-12 {
        rms
    } else {
        1.0
    }
}

/// MSE between the RGB render at `pose` and `target`.
pub fn rendering_mse(
    scene: &WorldScene,
    target: &FeatureImage,
    k: &Intrinsics,
    pose: &RigidPose,
    cfg: &RenderConfig,
) -> Result<f64> {
    mse(&render(scene, pose, k, cfg)?.rgb(), target)
}

/// Local coordinates `[ω; v/s]`: rotation in radians, translation in units
/// of the scene scale `s`.
fn step(pose: &RigidPose, delta: &[f64; 6], scale: f64) -> RigidPose {
    let mut d = *delta;
    d[3..].iter_mut().for_each(|v| *v *= scale);
    pose.retract(&d)
}

/// Central differences of the RGB render: returns the residual
/// `render − target` at `pose` and the six Jacobian columns.
fn render_jacobian(
    scene: &WorldScene,
    target: &FeatureImage,
    k: &Intrinsics,
    pose: &RigidPose,
    h: &[f64; 6],
    scale: f64,
    cfg: &RenderConfig,
) -> Result<(Vec<f64>, [Vec<f64>; 6])> {
    let rgb = |p: &RigidPose| -> Result<Vec<f64>> { Ok(render(scene, p, k, cfg)?.rgb().into_data()) };
    let centre = rgb(pose)?;
    if centre.len() != target.data().len() {
        return Err(Error::arg("target must be an RGB image matching the camera"));
    }
    let residual: Vec<f64> = centre.iter().zip(target.data()).map(|(a, b)| a - b).collect();
    let mut columns: [Vec<f64>; 6] = Default::default();
    for (i, column) in columns.iter_mut().enumerate() {
        let mut d = [0.0; 6];
        d[i] = h[i];
        let plus = rgb(&step(pose, &d, scale))?;
        d[i] = -h[i];
        let minus = rgb(&step(pose, &d, scale))?;
        *column = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h[i])).collect();
    }
    Ok((residual, columns))
}

/// Central-difference gradient of the rendering MSE in local coordinates
/// with per-coordinate steps `h`.
pub fn finite_difference_gradient(
    scene: &WorldScene,
    target: &FeatureImage,
    k: &Intrinsics,
    pose: &RigidPose,
    h: &[f64; 6],
    scale: f64,
    cfg: &RenderConfig,
) -> Result<[f64; 6]> {
    let mut g = [0.0; 6];
    for i in 0..6 {
        let mut d = [0.0; 6];
        d[i] = h[i];
        let plus = rendering_mse(scene, target, k, &step(pose, &d, scale), cfg)?;
        d[i] = -h[i];
        let minus = rendering_mse(scene, target, k, &step(pose, &d, scale), cfg)?;
        g[i] = (plus - minus) / (2.0 * h[i]);
    }
    Ok(g)
}

/// Gauss–Newton direction `−(H + λ·diag H)⁻¹ g` for the MSE, where
/// `H = 2JᵀJ/n` and `g = 2Jᵀr/n`.
fn gauss_newton_direction(residual: &[f64], columns: &[Vec<f64>; 6], damping: f64) -> [f64; 6] {
    let n = residual.len() as f64;
    let h = Matrix6::from_fn(|i, j| 2.0 * dot(&columns[i], &columns[j]) / n);
    let g = Vector6::from_fn(|i, _| 2.0 * dot(&columns[i], residual) / n);
    let mut a = h;
    let floor = 1e-12 * h.diagonal().max().max(1e-300);
    for i in 0..6 {
        a[(i, i)] += damping * h[(i, i)] + floor;
    }
    match a.cholesky() {
        Some(c) => {
            let d = -c.solve(&g);
            std::array::from_fn(|i| d[i])
        }
        None => std::array::from_fn(|i| -g[i]),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Descent on the rendering MSE with a backtracking line search that halves
/// the step from `initial_step`. Returns the best iterate seen, so the loss
/// never exceeds the initial one.
pub fn optimize_target_pose(
    scene: &WorldScene,
    target: &FeatureImage,
    k: &Intrinsics,
    init: &RigidPose,
    cfg: &PoseOptConfig,
) -> Result<PoseOptResult> {
    if target.channels() != 3 || target.width() != k.width || target.height() != k.height {
        return Err(Error::arg("target must be an RGB image matching the camera"));
    }
    let scale = cfg.scene_scale.unwrap_or_else(|| scene_scale(scene));
    let h = [
        cfg.rotation_step,
        cfg.rotation_step,
        cfg.rotation_step,
        cfg.translation_step,
        cfg.translation_step,
        cfg.translation_step,
    ];
    let initial_loss = rendering_mse(scene, target, k, init, &cfg.render)?;
    let (mut pose, mut loss) = (*init, initial_loss);
    let mut damping = 1e-3;
    let mut history = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        if loss > 0.0 {
            let direction = match cfg.direction {
                DescentDirection::Gradient => {
                    finite_difference_gradient(scene, target, k, &pose, &h, scale, &cfg.render)?.map(|g| -g)
                }
                DescentDirection::GaussNewton => {
                    let (residual, columns) = render_jacobian(scene, target, k, &pose, &h, scale, &cfg.render)?;
                    gauss_newton_direction(&residual, &columns, damping)
                }
            };
            let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
            let direction = if norm > cfg.max_step_norm {
                direction.map(|d| d * cfg.max_step_norm / norm)
            } else {
                direction
            };
            let mut alpha = cfg.initial_step;
            let mut improved = false;
            for _ in 0..=cfg.max_halvings {
                let candidate = step(&pose, &direction.map(|d| alpha * d), scale);
                let candidate_loss = rendering_mse(scene, target, k, &candidate, &cfg.render)?;
                if candidate_loss < loss {
                    pose = candidate;
                    loss = candidate_loss;
                    improved = true;
                    break;
                }
                alpha *= 0.5;
            }
            damping = if improved {
                (damping * 0.5).max(1e-6)
            } else {
                (damping * 10.0).min(1e6)
            };
        }
        history.push(loss);
    }
    Ok(PoseOptResult {
        pose,
        initial_loss,
        best_loss: loss,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::look_at;
    use crate::splat::GaussianPrimitive;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blob_scene() -> WorldScene {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        (0..60)
            .map(|_| {
                let mean = Vector3::new(
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(-1.0..1.0),
                );
                let color = [
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                ];
                GaussianPrimitive::isotropic(mean, rng.gen_range(0.15..0.35), 0.8, color)
            })
            .collect()
    }

    fn setup() -> (WorldScene, Intrinsics, RigidPose, FeatureImage) {
        let scene = blob_scene();
        let k = Intrinsics::from_fov(32, 32, 60.0).unwrap();
        let pose = look_at(&Vector3::new(0.3, -0.2, -4.0), &Vector3::zeros(), &Vector3::y()).unwrap();
        let target = render(&scene, &pose, &k, &RenderConfig::default()).unwrap().rgb();
        (scene, k, pose, target)
    }

    #[test]
    fn true_pose_is_stationary() {
        let (scene, k, pose, target) = setup();
        let cfg = PoseOptConfig {
            iterations: 3,
            ..Default::default()
        };
        let out = optimize_target_pose(&scene, &target, &k, &pose, &cfg).unwrap();
        assert_eq!(out.best_loss, 0.0);
        assert_eq!(out.pose, pose);
    }

    #[test]
    fn gradient_agrees_with_richardson_estimate() {
        let (scene, k, pose, target) = setup();
        let init = pose.retract(&[0.02, -0.015, 0.01, 0.03, -0.02, 0.02]);
        let s = scene_scale(&scene);
        let cfg = RenderConfig::default();
        let h = [1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4];
        let g1 = finite_difference_gradient(&scene, &target, &k, &init, &h, s, &cfg).unwrap();
        let g2 = finite_difference_gradient(&scene, &target, &k, &init, &h.map(|x| 2.0 * x), s, &cfg).unwrap();
        let richardson: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| (4.0 * a - b) / 3.0).collect();
        let norm = richardson.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff = g1
            .iter()
            .zip(&richardson)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(diff / norm <= 1e-2, "relative disagreement {}", diff / norm);
    }

    #[test]
    fn best_loss_is_monotone() {
        let (scene, k, pose, target) = setup();
        let init = pose.retract(&[0.03, 0.0, -0.02, 0.05, 0.0, 0.0]);
        let cfg = PoseOptConfig {
            iterations: 15,
            ..Default::default()
        };
        let out = optimize_target_pose(&scene, &target, &k, &init, &cfg).unwrap();
        assert!(out.best_loss < out.initial_loss);
        let mut prev = out.initial_loss;
        for &l in &out.history {
            assert!(l <= prev);
            prev = l;
        }
    }
}
