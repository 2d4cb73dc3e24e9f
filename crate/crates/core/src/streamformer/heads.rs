use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::encoder::ViewTokens;
use super::layers::{Block, Linear, Mlp};
use super::profile::{ModelProfile, PATCH_SIZE};
use crate::error::{Error, Result};
use crate::geom::{Intrinsics, RigidPose};
use crate::reco::ConditioningTokens;
use crate::splat::{GaussianPrimitive, FEATURE_CHANNELS};

pub const HEAD_DEPTH: usize = 5;
/// Pixel size of one upsampled feature cell.
const CELL: usize = PATCH_SIZE / 2;

/// A stack of attention blocks with cross-attention onto conditioning
/// tokens, followed by a linear projection.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadStack {
    pub blocks: Vec<Block>,
    pub output: Linear,
}

impl HeadStack {
    fn seeded(rng: &mut ChaCha8Rng, profile: &ModelProfile, out: usize) -> Self {
        let blocks = (0..HEAD_DEPTH)
            .map(|_| Block::seeded(rng, profile.d_model, profile.heads, Some(profile.d_cond())))
            .collect();
        Self {
            blocks,
            output: Linear::seeded(rng, profile.d_model, out, 0.5),
        }
    }

    fn forward(&self, x: &[f64], context: &[f64]) -> Vec<f64> {
        let mut x = x.to_vec();
        let rows = x.len() / self.output.in_dim;
        for block in &self.blocks {
            block.forward_grouped(&mut x, rows, Some(context));
        }
        self.output.forward(&x)
    }
}

/// Per-view prediction: local (camera-space) Gaussians and a pose.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutput {
    pub gaussians: Vec<GaussianPrimitive>,
    pub pose: RigidPose,
}

/// Gaussian heads (position, attributes, features) conditioned on
/// render-and-compare tokens, and a frame-wise pose head.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionHeads {
    pub upsample_proj: Linear,
    pub xyz: HeadStack,
    pub attributes: HeadStack,
    pub features: HeadStack,
    pub pose_blocks: Vec<Block>,
    pub pose_mlp: Mlp,
}

impl PredictionHeads {
    pub fn seeded(profile: &ModelProfile) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(profile.seed ^ 0x4ead_5000);
        let d = profile.d_model;
        Self {
            upsample_proj: Linear::seeded(&mut rng, d, d, 1.0),
            xyz: HeadStack::seeded(&mut rng, profile, 3),
            attributes: HeadStack::seeded(&mut rng, profile, 11),
            features: HeadStack::seeded(&mut rng, profile, FEATURE_CHANNELS),
            pose_blocks: (0..HEAD_DEPTH)
                .map(|_| Block::seeded(&mut rng, d, profile.heads, None))
                .collect(),
            pose_mlp: Mlp::seeded(&mut rng, d, d, 9),
        }
    }

    /// Runs all heads for every view of a chunk.
    pub fn run(
        &self,
        features: &[ViewTokens],
        conditioning: &[ConditioningTokens],
        intrinsics: &[Intrinsics],
    ) -> Result<Vec<HeadOutput>> {
        if features.len() != conditioning.len() || features.len() != intrinsics.len() {
            return Err(Error::arg("heads need one conditioning grid and camera per view"));
        }
        features
            .iter()
            .zip(conditioning)
            .zip(intrinsics)
            .map(|((f, z), k)| {
                Ok(HeadOutput {
                    gaussians: self.predict_gaussians(f, z, k)?,
                    pose: self.predict_pose(f),
                })
            })
            .collect()
    }

    /// One local Gaussian per upsampled feature cell, placed along the ray
    /// through the cell (camera `k`).
    pub fn predict_gaussians(
        &self,
        f: &ViewTokens,
        z: &ConditioningTokens,
        k: &Intrinsics,
    ) -> Result<Vec<GaussianPrimitive>> {
        let (uw, uh) = (2 * f.grid_width, 2 * f.grid_height);
        if z.grid_width != uw || z.grid_height != uh || z.dim != self.xyz.blocks[0].cross.as_ref().unwrap().key.in_dim {
            return Err(Error::arg(format!(
                "conditioning grid {}×{} does not match upsampled features {uw}×{uh}",
                z.grid_width, z.grid_height
            )));
        }
        let up = self.upsample_proj.forward(&upsample2x(f));
        let xyz = self.xyz.forward(&up, &z.data);
        let attrs = self.attributes.forward(&up, &z.data);
        let feats = self.features.forward(&up, &z.data);

        let mut gaussians = Vec::with_capacity(uw * uh);
        for cell in 0..uw * uh {
            let (gx, gy) = (cell % uw, cell / uw);
            let p = &xyz[cell * 3..cell * 3 + 3];
            let a = &attrs[cell * 11..cell * 11 + 11];
            let half = CELL as f64 / 2.0;
            let u = (gx * CELL) as f64 + half + half * p[0].tanh();
            let v = (gy * CELL) as f64 + half + half * p[1].tanh();
            let depth = 2.0 * p[2].clamp(-3.0, 3.0).exp();
            let q = nalgebra::Quaternion::new(a[0] + 1.0, a[1], a[2], a[3]);
            let orientation = if q.norm() > 1e-12 {
                UnitQuaternion::from_quaternion(q)
            } else {
                UnitQuaternion::identity()
            };
            let mut feature = [0.0; FEATURE_CHANNELS];
            feature.copy_from_slice(&feats[cell * FEATURE_CHANNELS..(cell + 1) * FEATURE_CHANNELS]);
            gaussians.push(GaussianPrimitive {
                mean: k.unproject(u, v, depth),
                orientation,
                scale: Vector3::new(a[4], a[5], a[6]).map(|s| 0.02 * s.clamp(-5.0, 3.0).exp()),
                opacity: sigmoid(a[7]),
                color: [sigmoid(a[8]), sigmoid(a[9]), sigmoid(a[10])],
                feature,
            });
        }
        Ok(gaussians)
    }

    pub fn predict_pose(&self, f: &ViewTokens) -> RigidPose {
        let mut x = f.data.clone();
        let rows = f.token_count();
        for block in &self.pose_blocks {
            block.forward_grouped(&mut x, rows, None);
        }
        let o = self.pose_mlp.forward(&x[..f.dim]);
        let rotation = rotation_from_6d(
            &Vector3::new(o[0] + 1.0, o[1], o[2]),
            &Vector3::new(o[3], o[4] + 1.0, o[5]),
        );
        let translation = Vector3::new(o[6], o[7], o[8]) * 0.1;
        RigidPose::new(rotation, translation).expect("Gram-Schmidt output is a rotation")
    }
}

/// Gram–Schmidt on two 3-vectors; degenerate inputs fall back to the
/// nearest canonical axes.
pub fn rotation_from_6d(a: &Vector3<f64>, b: &Vector3<f64>) -> Matrix3<f64> {
    let b1 = a.try_normalize(1e-12).unwrap_or_else(Vector3::x);
    let mut b2 = b - b1 * b1.dot(b);
    if b2.norm() < 1e-9 {
        let helper = if b1.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        b2 = helper - b1 * b1.dot(&helper);
    }
    let b2 = b2.normalize();
    let b3 = b1.cross(&b2);
    Matrix3::from_columns(&[b1, b2, b3])
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Nearest-neighbour 2× upsampling of the patch tokens (camera token dropped).
fn upsample2x(f: &ViewTokens) -> Vec<f64> {
    let (gw, gh, d) = (f.grid_width, f.grid_height, f.dim);
    let patches = f.patch_tokens();
    let mut out = Vec::with_capacity(4 * gw * gh * d);
    for y in 0..2 * gh {
        for x in 0..2 * gw {
            let src = (y / 2) * gw + x / 2;
            out.extend_from_slice(&patches[src * d..(src + 1) * d]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::orthonormality_error;

    #[test]
    fn six_d_rotation_is_proper() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let a = Vector3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let b = Vector3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let r = rotation_from_6d(&a, &b);
            assert!(orthonormality_error(&r) < 1e-12);
            assert!((r.determinant() - 1.0).abs() < 1e-12);
        }
        let r = rotation_from_6d(&Vector3::zeros(), &Vector3::zeros());
        assert!(orthonormality_error(&r) < 1e-12);
        let r = rotation_from_6d(&Vector3::x(), &(Vector3::x() * 3.0));
        assert!(orthonormality_error(&r) < 1e-12);
    }

    #[test]
    fn upsampling_repeats_tokens() {
        let f = ViewTokens {
            grid_width: 2,
            grid_height: 1,
            dim: 1,
            data: vec![9.0, 1.0, 2.0],
        };
        assert_eq!(upsample2x(&f), vec![1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0]);
    }
}
