use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{Linear, Mlp};
use super::profile::{ModelProfile, PATCH_SIZE};
use crate::error::{Error, Result};
use crate::geom::Intrinsics;
use crate::raster::FeatureImage;

/// Largest number of views processed in one forward pass.
pub const MAX_CHUNK: usize = 8;

/// Tokens of one view: camera token first, then patch tokens row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewTokens {
    pub grid_width: usize,
    pub grid_height: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl ViewTokens {
    pub fn token_count(&self) -> usize {
        self.grid_width * self.grid_height + 1
    }

    pub fn camera_token(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    pub fn patch_tokens(&self) -> &[f64] {
        &self.data[self.dim..]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedChunk {
    pub views: Vec<ViewTokens>,
    /// Intrinsics predicted from each view's camera token.
    pub intrinsics: Vec<Intrinsics>,
}

/// Seeded linear patch embedding with a constant camera token.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub dim: usize,
    pub embed: Linear,
    pub camera_token: Vec<f64>,
    pub intrinsics_head: Mlp,
}

impl Encoder {
    pub fn seeded(profile: &ModelProfile) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(profile.seed ^ 0xe4c0_de00);
        let d = profile.d_model;
        let embed = Linear::seeded(&mut rng, 3 * PATCH_SIZE * PATCH_SIZE, d, 1.0);
        let camera_token = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut intrinsics_head = Mlp::seeded(&mut rng, d, d, 2);
        intrinsics_head.fc2.weight.iter_mut().for_each(|w| *w *= 0.2);
        Self {
            dim: d,
            embed,
            camera_token,
            intrinsics_head,
        }
    }

    /// Tokenizes a chunk of RGB images of identical size (multiples of 16).
    pub fn encode_chunk(&self, images: &[FeatureImage]) -> Result<EncodedChunk> {
        if images.is_empty() || images.len() > MAX_CHUNK {
            return Err(Error::arg(format!(
                "chunk size must lie in [1, {MAX_CHUNK}], got {}",
                images.len()
            )));
        }
        let (w, h) = (images[0].width(), images[0].height());
        if w % PATCH_SIZE != 0 || h % PATCH_SIZE != 0 {
            return Err(Error::arg(format!(
                "image size {w}×{h} is not a multiple of {PATCH_SIZE}"
            )));
        }
        let mut views = Vec::with_capacity(images.len());
        let mut intrinsics = Vec::with_capacity(images.len());
        for img in images {
            if img.channels() != 3 || img.width() != w || img.height() != h {
                return Err(Error::arg("chunk images must be RGB and share one size"));
            }
            let view = self.encode_view(img);
            intrinsics.push(self.predict_intrinsics(view.camera_token(), w, h));
            views.push(view);
        }
        Ok(EncodedChunk { views, intrinsics })
    }

    fn encode_view(&self, img: &FeatureImage) -> ViewTokens {
        let (gw, gh) = (img.width() / PATCH_SIZE, img.height() / PATCH_SIZE);
        let mut patches = Vec::with_capacity(gw * gh * 3 * PATCH_SIZE * PATCH_SIZE);
        for gy in 0..gh {
            for gx in 0..gw {
                for c in 0..3 {
                    for y in 0..PATCH_SIZE {
                        for x in 0..PATCH_SIZE {
                            patches.push(img.get(c, gx * PATCH_SIZE + x, gy * PATCH_SIZE + y));
                        }
                    }
                }
            }
        }
        let mut embedded = self.embed.forward(&patches);
        for (p, token) in embedded.chunks_exact_mut(self.dim).enumerate() {
            let (gy, gx) = (p / gw, p % gw);
            for (i, t) in token.iter_mut().enumerate() {
                *t += positional(gy, gx, i, self.dim);
            }
        }
        let mut data = Vec::with_capacity((gw * gh + 1) * self.dim);
        // The camera token is the learned constant plus mean-pooled patches,
        // so intrinsics depend on the image.
        for i in 0..self.dim {
            let pooled: f64 = embedded.iter().skip(i).step_by(self.dim).sum::<f64>() / (gw * gh) as f64;
            data.push(self.camera_token[i] + pooled);
        }
        data.extend(embedded);
        ViewTokens {
            grid_width: gw,
            grid_height: gh,
            dim: self.dim,
            data,
        }
    }

    /// Focal lengths `width·e^{o₀}`, `height·e^{o₁}` (outputs clamped to
    /// ±4), principal point at the image center.
    fn predict_intrinsics(&self, camera_token: &[f64], w: usize, h: usize) -> Intrinsics {
        let o = self.intrinsics_head.forward(camera_token);
        Intrinsics {
            fx: w as f64 * o[0].clamp(-4.0, 4.0).exp(),
            fy: h as f64 * o[1].clamp(-4.0, 4.0).exp(),
            cx: w as f64 / 2.0,
            cy: h as f64 / 2.0,
            width: w,
            height: h,
        }
    }
}

/// 2D sinusoidal position code: even feature slots encode the row, odd
/// slots the column.
fn positional(gy: usize, gx: usize, i: usize, dim: usize) -> f64 {
    let pos = if i % 2 == 0 { gy } else { gx } as f64;
    let freq = 1.0 / 100f64.powf((i / 2) as f64 * 2.0 / dim as f64);
    if (i / 2) % 2 == 0 {
        (pos * freq).sin()
    } else {
        (pos * freq).cos()
    }
}
