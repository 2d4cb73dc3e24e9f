use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::synth::SyntheticScene;
use crate::error::{Error, Result};
use crate::geom::{Intrinsics, RigidPose};
use crate::raster::{touches_image, RenderConfig};
use crate::splat::{transform_local, GaussianPrimitive};

/// Perturbations applied by the oracle predictor. Standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleNoise {
    /// Rotation angle σ in degrees, about a uniformly random axis.
    pub rotation_deg: f64,
    /// Translation σ per axis, as a fraction of the scene scale.
    pub translation_frac: f64,
    /// Relative σ of the multiplicative depth error.
    pub depth_frac: f64,
    pub seed: u64,
}

impl OracleNoise {
    pub fn none(seed: u64) -> Self {
        Self {
            rotation_deg: 0.0,
            translation_frac: 0.0,
            depth_frac: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.rotation_deg, self.translation_frac, self.depth_frac];
        if all.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::arg("oracle noise levels must be finite and non-negative"));
        }
        Ok(())
    }

    /// Per-view generator, so a view's noise does not depend on which views
    /// were predicted before it.
    fn rng(&self, view: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ (view as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

/// Oracle output for one view: Gaussians in camera coordinates and the
/// predicted camera.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePrediction {
    pub view: usize,
    /// Indices of the world Gaussians behind `locals`.
    pub sources: Vec<usize>,
    pub locals: Vec<GaussianPrimitive>,
    pub pose: RigidPose,
    pub intrinsics: Intrinsics,
}

/// World Gaussians whose footprint reaches at least one pixel of `view`.
pub fn visible_gaussians(scene: &SyntheticScene, view: usize) -> Vec<usize> {
    let cfg = RenderConfig::default();
    let pose = scene.pose(view);
    scene
        .gaussians
        .iter()
        .enumerate()
        .filter(|(_, g)| touches_image(g, pose, &scene.intrinsics, &cfg))
        .map(|(i, _)| i)
        .collect()
}

fn predict_subset(
    scene: &SyntheticScene,
    view: usize,
    sources: Vec<usize>,
    noise: &OracleNoise,
) -> Result<OraclePrediction> {
    if view >= scene.len() {
        return Err(Error::arg(format!(
            "view {view} outside a {}-frame trajectory",
            scene.len()
        )));
    }
    noise.validate()?;
    let mut rng = noise.rng(view);
    let truth = *scene.pose(view);
    let to_camera = truth.inverse();

    let axis = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    let axis = axis.try_normalize(1e-12).unwrap_or_else(Vector3::x);
    let angle = (noise.rotation_deg.to_radians() * rng.sample::<f64, _>(StandardNormal)).abs();
    let rotated = truth.retract(&[axis.x * angle, axis.y * angle, axis.z * angle, 0.0, 0.0, 0.0]);
    let shift =
        Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal)) * (noise.translation_frac * scene.scale());
    let pose = RigidPose::new(*rotated.rotation(), rotated.translation() + shift)?;

    let locals = sources
        .iter()
        .map(|&i| {
            let mut g = transform_local(&scene.gaussians.primitives()[i], &to_camera);
            if noise.depth_frac > 0.0 {
                let factor = 1.0 + noise.depth_frac * rng.sample::<f64, _>(StandardNormal);
                g.mean *= factor.max(0.05);
            }
            g
        })
        .collect();
    Ok(OraclePrediction {
        view,
        sources,
        locals,
        pose,
        intrinsics: scene.intrinsics,
    })
}

/// Maps every Gaussian visible in `view` into that camera's frame with the
/// true pose and perturbs the prediction per `noise`.
pub fn oracle_predict(scene: &SyntheticScene, view: usize, noise: &OracleNoise) -> Result<OraclePrediction> {
    predict_subset(scene, view, visible_gaussians(scene, view), noise)
}

/// Streaming oracle: each world Gaussian is emitted once, by the first
/// view that sees it, so reassembly does not duplicate primitives.
#[derive(Debug, Clone)]
pub struct OraclePredictor<'a> {
    scene: &'a SyntheticScene,
    noise: OracleNoise,
    emitted: Vec<bool>,
}

impl<'a> OraclePredictor<'a> {
    pub fn new(scene: &'a SyntheticScene, noise: OracleNoise) -> Result<Self> {
        noise.validate()?;
        Ok(Self {
            scene,
            noise,
            emitted: vec![false; scene.gaussians.len()],
        })
    }

    pub fn predict(&mut self, view: usize) -> Result<OraclePrediction> {
        if view >= self.scene.len() {
            return Err(Error::arg(format!(
                "view {view} outside a {}-frame trajectory",
                self.scene.len()
            )));
        }
        let fresh: Vec<usize> = visible_gaussians(self.scene, view)
            .into_iter()
            .filter(|&i| !self.emitted[i])
            .collect();
        for &i in &fresh {
            self.emitted[i] = true;
        }
        predict_subset(self.scene, view, fresh, &self.noise)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rotation_angle;
    use crate::harness::{generate_scene, SceneConfig};
    use crate::splat::assemble;
    use crate::splat::WorldScene;

    #[test]
    fn noiseless_round_trip() {
        let scene = generate_scene(&SceneConfig::room(8), 3).unwrap();
        let p = oracle_predict(&scene, 2, &OracleNoise::none(0)).unwrap();
        assert!(!p.sources.is_empty());
        assert_eq!(&p.pose, scene.pose(2));
        let world = assemble(WorldScene::new(), &[p.locals.clone()], &[p.pose], 1.0, 0).unwrap();
        for (g, &i) in world.iter().zip(&p.sources) {
            let truth = &scene.gaussians.primitives()[i];
            assert!((g.mean - truth.mean).norm() < 1e-9);
            assert!(g.orientation.angle_to(&truth.orientation) < 1e-9);
        }
    }

    #[test]
    fn rotation_noise_band() {
        let scene = generate_scene(&SceneConfig::room(8), 3).unwrap();
        let mut sum = 0.0;
        for seed in 0..1000 {
            let noise = OracleNoise {
                rotation_deg: 5.0,
                ..OracleNoise::none(seed)
            };
            let p = predict_subset(&scene, 0, Vec::new(), &noise).unwrap();
            sum += rotation_angle(&(scene.pose(0).rotation().transpose() * p.pose.rotation())).to_degrees();
        }
        let mean = sum / 1000.0;
        assert!((3.0..=8.0).contains(&mean), "mean rotation error {mean}");
    }

    #[test]
    fn predictor_emits_each_gaussian_once() {
        let scene = generate_scene(&SceneConfig::room(16), 4).unwrap();
        let mut oracle = OraclePredictor::new(&scene, OracleNoise::none(0)).unwrap();
        let mut seen = vec![0; scene.gaussians.len()];
        for v in 0..16 {
            for i in oracle.predict(v).unwrap().sources {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c <= 1));
    }

    #[test]
    fn rejects_negative_noise() {
        let noise = OracleNoise {
            depth_frac: -0.1,
            ..OracleNoise::none(0)
        };
        assert!(noise.validate().is_err());
    }
}
