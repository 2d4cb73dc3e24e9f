use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ConditioningTokens;
use crate::error::{Error, Result};
use crate::raster::FeatureImage;

pub const CONDITIONING_INPUT_CHANNELS: usize = 15;
const HIDDEN_WIDTHS: [usize; 2] = [32, 64];

/// A 3×3, stride-2 convolution with edge-replicated padding of 1.
/// Weights are laid out `[out][in][ky][kx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvStage {
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvStage {
    /// Uniform in `±1/√fan_in` for both weights and biases.
    fn seeded(rng: &mut ChaCha8Rng, in_channels: usize, out_channels: usize) -> Self {
        let bound = 1.0 / ((in_channels * 9) as f64).sqrt();
        let weights = (0..out_channels * in_channels * 9)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        let bias = (0..out_channels).map(|_| rng.gen_range(-bound..bound)).collect();
        Self {
            in_channels,
            out_channels,
            weights,
            bias,
        }
    }

    #[inline]
    pub fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.weights[((o * self.in_channels + i) * 3 + ky) * 3 + kx]
    }

    /// Input planar `[c][h][w]`; output `[c][⌈h/2⌉][⌈w/2⌉]`.
    pub fn forward(&self, input: &[f64], width: usize, height: usize) -> (Vec<f64>, usize, usize) {
        let (ow, oh) = (width.div_ceil(2), height.div_ceil(2));
        let mut out = vec![0.0; self.out_channels * ow * oh];
        let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
        for o in 0..self.out_channels {
            let plane = &mut out[o * ow * oh..(o + 1) * ow * oh];
            plane.fill(self.bias[o]);
            for i in 0..self.in_channels {
                let src = &input[i * width * height..(i + 1) * width * height];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let w = self.weight(o, i, ky, kx);
                        for oy in 0..oh {
                            let sy = clamp((2 * oy + ky) as isize - 1, height);
                            let row = &src[sy * width..(sy + 1) * width];
                            for ox in 0..ow {
                                let sx = clamp((2 * ox + kx) as isize - 1, width);
                                plane[oy * ow + ox] += w * row[sx];
                            }
                        }
                    }
                }
            }
        }
        (out, ow, oh)
    }
}

/// Seeded weights of the three-stage patchify network
/// (15 → 32 → 64 → `d_cond`).
#[derive(Debug, Clone, PartialEq)]
pub struct PatchifyWeights {
    pub stages: [ConvStage; 3],
    pub seed: u64,
}

impl PatchifyWeights {
    pub fn seeded(seed: u64, d_cond: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let widths = [CONDITIONING_INPUT_CHANNELS, HIDDEN_WIDTHS[0], HIDDEN_WIDTHS[1], d_cond];
        let stages = [0, 1, 2].map(|s| ConvStage::seeded(&mut rng, widths[s], widths[s + 1]));
        Self { stages, seed }
    }

    pub fn d_cond(&self) -> usize {
        self.stages[2].out_channels
    }
}

/// Three stride-2 convolutions (ReLU between stages) giving one
/// `d_cond`-vector per 8×8 cell.
pub fn patchify(img: &FeatureImage, weights: &PatchifyWeights) -> Result<ConditioningTokens> {
    if img.channels() != CONDITIONING_INPUT_CHANNELS {
        return Err(Error::arg(format!(
            "patchify expects {CONDITIONING_INPUT_CHANNELS} channels, got {}",
            img.channels()
        )));
    }
    let (mut act, mut w, mut h) = (img.data().to_vec(), img.width(), img.height());
    for (s, stage) in weights.stages.iter().enumerate() {
        let (out, ow, oh) = stage.forward(&act, w, h);
        act = out;
        w = ow;
        h = oh;
        if s < 2 {
            act.iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }
    let dim = weights.d_cond();
    let cells = w * h;
    let mut data = vec![0.0; cells * dim];
    for c in 0..dim {
        for p in 0..cells {
            data[p * dim + c] = act[c * cells + p];
        }
    }
    Ok(ConditioningTokens {
        grid_width: w,
        grid_height: h,
        dim,
        view: 0,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        let w = PatchifyWeights::seeded(1, 8);
        let t = patchify(&FeatureImage::zeros(16, 16, 15).unwrap(), &w).unwrap();
        assert_eq!((t.grid_width, t.grid_height), (2, 2));
        let t = patchify(&FeatureImage::zeros(20, 9, 15).unwrap(), &w).unwrap();
        assert_eq!((t.grid_width, t.grid_height), (3, 2));
    }

    #[test]
    fn wrong_channel_count() {
        let w = PatchifyWeights::seeded(1, 8);
        assert!(patchify(&FeatureImage::zeros(16, 16, 12).unwrap(), &w).is_err());
    }

    #[test]
    fn weights_reproducible_from_seed() {
        assert_eq!(PatchifyWeights::seeded(9, 16), PatchifyWeights::seeded(9, 16));
        assert_ne!(PatchifyWeights::seeded(9, 16), PatchifyWeights::seeded(10, 16));
    }
}
