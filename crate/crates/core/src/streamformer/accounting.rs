use crate::error::{Error, Result};

/// Size of the first chunk, which is always cached in full.
pub const FIRST_CHUNK: usize = 8;

/// Cached (view, layer) token sets after `images` frames streamed in
/// chunks of `chunk` after a full first chunk of 8, with `cached_layers`
/// cached global layers: `L_c · (8 + ⌈(N − 8)/n⌉)`.
pub fn token_set_count(images: usize, chunk: usize, cached_layers: usize) -> Result<usize> {
    if images < FIRST_CHUNK {
        return Err(Error::arg(format!(
            "need at least {FIRST_CHUNK} images for a full first chunk, got {images}"
        )));
    }
    if !(1..=8).contains(&chunk) {
        return Err(Error::arg(format!("chunk size must lie in [1, 8], got {chunk}")));
    }
    Ok(cached_layers * (FIRST_CHUNK + (images - FIRST_CHUNK).div_ceil(chunk)))
}

/// Token sets held by an uncompressed cache: every image at every layer.
pub fn baseline_token_set_count(images: usize, layers: usize) -> usize {
    layers * images
}

/// Percentage of token sets removed relative to the baseline.
pub fn reduction_percent(compressed: usize, baseline: usize) -> f64 {
    if baseline == 0 {
        return 0.0;
    }
    100.0 * (1.0 - compressed as f64 / baseline as f64)
}
