use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length of the square encoder patches, in pixels.
pub const PATCH_SIZE: usize = 16;
/// Global layers of the full-size decoder.
pub const FULL_LAYER_PAIRS: usize = 18;
/// Global layers of the full-size decoder that keep a cache.
pub const FULL_CACHED_LAYERS: usize = 8;

/// Decoder dimensions. Each of `layer_pairs` pairs is one frame-attention
/// layer followed by one global-attention layer; only the last
/// `cached_global_layers` global layers read and write the cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub d_model: usize,
    pub heads: usize,
    pub layer_pairs: usize,
    pub cached_global_layers: usize,
    pub seed: u64,
}

impl ModelProfile {
    /// Small decoder for tests: 6 layer pairs, `⌈8·6/18⌉ = 3` cached.
    pub fn toy(seed: u64) -> Self {
        let layer_pairs = 6;
        Self {
            d_model: 64,
            heads: 4,
            layer_pairs,
            cached_global_layers: (FULL_CACHED_LAYERS * layer_pairs).div_ceil(FULL_LAYER_PAIRS),
            seed,
        }
    }

    /// Full layer structure (18 pairs, last 8 cached) at toy width.
    pub fn paper(seed: u64) -> Self {
        Self {
            layer_pairs: FULL_LAYER_PAIRS,
            cached_global_layers: FULL_CACHED_LAYERS,
            ..Self::toy(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.heads == 0 || self.layer_pairs == 0 {
            return Err(Error::arg("profile dimensions must be positive"));
        }
        if self.d_model % self.heads != 0 {
            return Err(Error::arg("d_model must be divisible by heads"));
        }
        if self.cached_global_layers == 0 || self.cached_global_layers > self.layer_pairs {
            return Err(Error::arg("need 1 ≤ cached_global_layers ≤ layer_pairs"));
        }
        Ok(())
    }

    /// Global layers that never see earlier chunks.
    pub fn truncated_global_layers(&self) -> usize {
        self.layer_pairs - self.cached_global_layers
    }

    /// Patch tokens plus one camera token.
    pub fn tokens_per_view(&self, width: usize, height: usize) -> usize {
        (width / PATCH_SIZE) * (height / PATCH_SIZE) + 1
    }

    /// Conditioning width consumed by the Gaussian heads.
    pub fn d_cond(&self) -> usize {
        self.d_model
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profiles() {
        let toy = ModelProfile::toy(0);
        assert_eq!(toy.cached_global_layers, 3);
        assert_eq!(toy.truncated_global_layers(), 3);
        let paper = ModelProfile::paper(0);
        assert_eq!(paper.truncated_global_layers(), 10);
        assert_eq!(paper.tokens_per_view(224, 224), 197);
        assert!(toy.validate().is_ok() && paper.validate().is_ok());
    }

    #[test]
    fn invalid_profiles() {
        let mut p = ModelProfile::toy(0);
        p.cached_global_layers = 7;
        assert!(p.validate().is_err());
        let mut p = ModelProfile::toy(0);
        p.heads = 5;
        assert!(p.validate().is_err());
    }
}
