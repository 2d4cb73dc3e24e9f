use nalgebra::{UnitQuaternion, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{look_at, CameraFrame, Intrinsics, RigidPose};
use crate::metrics::scene_scale;
use crate::raster::{render, FeatureImage, RenderConfig};
use crate::splat::{GaussianPrimitive, WorldScene, FEATURE_CHANNELS};

/// Rejection-sampling budget for the visibility constraint.
pub const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    /// Circle in the horizontal plane.
    Orbit,
    /// Heading-perturbed walk that turns back toward the origin.
    RandomWalk,
    /// Back-and-forth lateral sweep looking along +z.
    ZigZag,
}

/// Camera viewing direction: toward the scene center or away from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facing {
    /// Toward the orbit center (object-centric).
    Inward,
    /// Away from the orbit center (room scan).
    Outward,
}

/// Gaussians fill a vertical cylindrical shell around the origin. World
/// `y` points down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneExtent {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub half_height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub gaussian_count: usize,
    pub extent: SceneExtent,
    pub opacity_range: (f64, f64),
    pub scale_range: (f64, f64),
    pub trajectory: TrajectoryKind,
    pub facing: Facing,
    pub frames: usize,
    /// Orbit radius, walk bound, or sweep half-width.
    pub camera_radius: f64,
    pub width: usize,
    pub height: usize,
    pub fov_x_deg: f64,
}

impl SceneConfig {
    /// Outward-looking orbit inside a ring of Gaussians at varied depth.
    pub fn room(frames: usize) -> Self {
        Self {
            gaussian_count: 500,
            extent: SceneExtent {
                inner_radius: 1.2,
                outer_radius: 3.0,
                half_height: 0.45,
            },
            opacity_range: (0.5, 0.95),
            scale_range: (0.06, 0.16),
            trajectory: TrajectoryKind::Orbit,
            facing: Facing::Outward,
            frames,
            camera_radius: 0.3,
            width: 64,
            height: 64,
            fov_x_deg: 60.0,
        }
    }

    /// Inward-looking orbit around a compact cluster.
    pub fn object(frames: usize) -> Self {
        Self {
            gaussian_count: 300,
            extent: SceneExtent {
                inner_radius: 0.0,
                outer_radius: 1.0,
                half_height: 0.5,
            },
            facing: Facing::Inward,
            camera_radius: 2.5,
            ..Self::room(frames)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.extent;
        if self.gaussian_count == 0 {
            return Err(Error::arg("scene needs at least one Gaussian"));
        }
        if self.frames == 0 {
            return Err(Error::arg("trajectory needs at least one frame"));
        }
        if !(e.inner_radius >= 0.0 && e.outer_radius > e.inner_radius && e.half_height >= 0.0) {
            return Err(Error::arg(
                "scene extent must satisfy 0 ≤ inner < outer, half_height ≥ 0",
            ));
        }
        let (o0, o1) = self.opacity_range;
        let (s0, s1) = self.scale_range;
        if !(0.0 <= o0 && o0 <= o1 && o1 <= 1.0) || !(0.0 < s0 && s0 <= s1) {
            return Err(Error::arg(
                "opacity range must lie in [0, 1] and scales must be positive",
            ));
        }
        if !(self.camera_radius >= 0.0) {
            return Err(Error::arg("camera radius must be non-negative"));
        }
        Intrinsics::from_fov(self.width, self.height, self.fov_x_deg).map(|_| ())
    }
}

/// Seeded world Gaussians with a camera trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub config: SceneConfig,
    pub seed: u64,
    pub gaussians: WorldScene,
    pub frames: Vec<CameraFrame>,
    pub intrinsics: Intrinsics,
}

impl SyntheticScene {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn pose(&self, view: usize) -> &RigidPose {
        &self.frames[view].pose
    }

    pub fn poses(&self) -> Vec<RigidPose> {
        self.frames.iter().map(|f| f.pose).collect()
    }

    /// RMS spread of the Gaussian means.
    pub fn scale(&self) -> f64 {
        scene_scale(&self.gaussians)
    }

    /// Ground-truth RGB observation of one trajectory frame.
    pub fn observe(&self, view: usize, cfg: &RenderConfig) -> Result<FeatureImage> {
        if view >= self.frames.len() {
            return Err(Error::arg(format!(
                "view {view} outside a {}-frame trajectory",
                self.frames.len()
            )));
        }
        Ok(render(&self.gaussians, self.pose(view), &self.intrinsics, cfg)?.rgb())
    }
}

fn sample_gaussian(rng: &mut ChaCha8Rng, cfg: &SceneConfig) -> GaussianPrimitive {
    let e = &cfg.extent;
    let r = rng.gen_range(e.inner_radius.powi(2)..=e.outer_radius.powi(2)).sqrt();
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    let y = if e.half_height > 0.0 {
        rng.gen_range(-e.half_height..=e.half_height)
    } else {
        0.0
    };
    let q = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    let orientation = if q.norm() > 1e-9 {
        UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q))
    } else {
        UnitQuaternion::identity()
    };
    let (s0, s1) = cfg.scale_range;
    let scale = Vector3::from_fn(|_, _| rng.gen_range(s0..=s1));
    let (o0, o1) = cfg.opacity_range;
    let opacity = rng.gen_range(o0..=o1);
    let color = [
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..1.0),
    ];
    let feature: [f64; FEATURE_CHANNELS] = std::array::from_fn(|_| rng.sample(StandardNormal));
    GaussianPrimitive {
        mean: Vector3::new(r * theta.cos(), y, r * theta.sin()),
        orientation,
        scale,
        opacity,
        color,
        feature,
    }
}

fn trajectory(rng: &mut ChaCha8Rng, cfg: &SceneConfig) -> Result<Vec<RigidPose>> {
    let down = Vector3::y();
    let n = cfg.frames;
    let r = cfg.camera_radius;
    let mut poses = Vec::with_capacity(n);
    match cfg.trajectory {
        TrajectoryKind::Orbit => {
            for i in 0..n {
                let theta = std::f64::consts::TAU * i as f64 / n as f64;
                let dir = Vector3::new(theta.cos(), 0.0, theta.sin());
                let eye = dir * r;
                let target = match cfg.facing {
                    Facing::Inward => Vector3::zeros(),
                    Facing::Outward => eye + dir,
                };
                poses.push(look_at(&eye, &target, &down)?);
            }
        }
        TrajectoryKind::RandomWalk if cfg.facing == Facing::Inward => {
            // Wander in azimuth and height on the camera sphere, facing the center.
            let mut phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut lift: f64 = 0.0;
            for _ in 0..n {
                let eye = Vector3::new(phi.cos() * lift.cos(), lift.sin(), phi.sin() * lift.cos()) * r;
                poses.push(look_at(&eye, &Vector3::zeros(), &down)?);
                phi += rng.gen_range(0.05..0.25);
                lift = (lift + rng.gen_range(-0.1..0.1)).clamp(-0.5, 0.5);
            }
        }
        TrajectoryKind::RandomWalk => {
            let mut pos = Vector3::zeros();
            let mut heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let step = (r.max(0.05)) * 0.15;
            for _ in 0..n {
                let dir = Vector3::new(heading.cos(), 0.0, heading.sin());
                poses.push(look_at(&pos, &(pos + dir), &down)?);
                heading += rng.gen_range(-0.3..0.3);
                pos += Vector3::new(heading.cos(), 0.0, heading.sin()) * step;
                if pos.norm() > r {
                    heading = (-pos.z).atan2(-pos.x);
                }
            }
        }
        TrajectoryKind::ZigZag => {
            let legs = 4.0;
            for i in 0..n {
                let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                let phase = (t * legs).fract();
                let x = if (t * legs) as usize % 2 == 0 {
                    phase
                } else {
                    1.0 - phase
                };
                let eye = match cfg.facing {
                    Facing::Outward => Vector3::new(r * (2.0 * x - 1.0), 0.0, -0.5 * r + r * t),
                    // A sweep in front of the object, moving closer.
                    Facing::Inward => Vector3::new(0.6 * r * (2.0 * x - 1.0), 0.0, -r + 0.3 * r * t),
                };
                poses.push(look_at(&eye, &(eye + Vector3::z()), &down)?);
            }
        }
    }
    Ok(poses)
}

/// Every camera must see at least one Gaussian mean in front of it and
/// inside the image.
fn all_cameras_see(gaussians: &[GaussianPrimitive], poses: &[RigidPose], k: &Intrinsics, near: f64) -> bool {
    poses.iter().all(|pose| {
        gaussians.iter().any(|g| {
            let p = pose.inverse_transform_point(&g.mean);
            if p.z <= near {
                return false;
            }
            let uv = k.project(&p);
            (0.0..k.width as f64).contains(&uv.x) && (0.0..k.height as f64).contains(&uv.y)
        })
    })
}

/// Generates a scene and trajectory from `(config, seed)`, resampling until
/// every camera sees a Gaussian.
pub fn generate_scene(config: &SceneConfig, seed: u64) -> Result<SyntheticScene> {
    config.validate()?;
    let k = Intrinsics::from_fov(config.width, config.height, config.fov_x_deg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let near = RenderConfig::default().near_plane;
    for _ in 0..MAX_ATTEMPTS {
        let poses = trajectory(&mut rng, config)?;
        let gaussians: Vec<_> = (0..config.gaussian_count)
            .map(|_| sample_gaussian(&mut rng, config))
            .collect();
        if all_cameras_see(&gaussians, &poses, &k, near) {
            let frames = poses
                .into_iter()
                .enumerate()
                .map(|(index, pose)| CameraFrame {
                    index,
                    pose,
                    intrinsics: Some(k),
                })
                .collect();
            return Ok(SyntheticScene {
                config: config.clone(),
                seed,
                gaussians: WorldScene::from_primitives(gaussians),
                frames,
                intrinsics: k,
            });
        }
    }
    Err(Error::Generation(format!(
        "no sample in {MAX_ATTEMPTS} attempts gave every camera a visible Gaussian"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        let cfg = SceneConfig::room(12);
        assert_eq!(generate_scene(&cfg, 5).unwrap(), generate_scene(&cfg, 5).unwrap());
        assert_ne!(
            generate_scene(&cfg, 5).unwrap().gaussians,
            generate_scene(&cfg, 6).unwrap().gaussians
        );
    }

    #[test]
    fn single_gaussian() {
        let cfg = SceneConfig {
            gaussian_count: 1,
            ..SceneConfig::object(1)
        };
        assert_eq!(generate_scene(&cfg, 0).unwrap().gaussians.len(), 1);
    }

    #[test]
    fn orbit_centers_equidistant() {
        for cfg in [SceneConfig::room(32), SceneConfig::object(32)] {
            let s = generate_scene(&cfg, 1).unwrap();
            for f in &s.frames {
                assert!((f.pose.center().norm() - cfg.camera_radius).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn every_trajectory_kind_generates() {
        for kind in [TrajectoryKind::RandomWalk, TrajectoryKind::ZigZag] {
            for base in [SceneConfig::room(20), SceneConfig::object(20)] {
                let cfg = SceneConfig {
                    trajectory: kind,
                    ..base
                };
                let s = generate_scene(&cfg, 2).unwrap();
                assert_eq!(s.len(), 20);
            }
        }
    }

    #[test]
    fn impossible_visibility_fails() {
        // Gaussians all behind the inward-looking cameras cannot exist, so
        // put every Gaussian far outside a narrow field of view.
        let cfg = SceneConfig {
            gaussian_count: 1,
            extent: SceneExtent {
                inner_radius: 50.0,
                outer_radius: 50.1,
                half_height: 0.0,
            },
            fov_x_deg: 1.0,
            ..SceneConfig::object(16)
        };
        assert!(matches!(generate_scene(&cfg, 0), Err(Error::Generation(_))));
    }
}
