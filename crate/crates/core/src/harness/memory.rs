use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::format::{sig6, sig6_json};
use super::stream::chunk_ranges;
use crate::error::Result;
use crate::raster::FeatureImage;
use crate::streamformer::{
    baseline_token_set_count, reduction_percent, token_set_count, CachePolicy, ModelProfile, StreamModel, PATCH_SIZE,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryRow {
    pub images: usize,
    pub chunk: usize,
    pub compressed: usize,
    pub baseline: usize,
    pub reduction_percent: f64,
    /// Token sets and bytes held by real caches after streaming random
    /// frames through the seeded model, when measured.
    pub measured_compressed: Option<usize>,
    pub measured_compressed_bytes: Option<usize>,
    pub measured_baseline_bytes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryReport {
    pub layer_pairs: usize,
    pub cached_layers: usize,
    pub rows: Vec<MemoryRow>,
}

impl MemoryReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "L = {} global layers, L_c = {} cached\n{:>6} {:>3} {:>10} {:>10} {:>9} {:>12} {:>12}\n",
            self.layer_pairs,
            self.cached_layers,
            "N",
            "n",
            "compressed",
            "baseline",
            "reduction",
            "bytes",
            "base_bytes"
        );
        for r in &self.rows {
            let bytes = |b: Option<usize>| b.map_or("-".to_string(), |b| b.to_string());
            out.push_str(&format!(
                "{:>6} {:>3} {:>10} {:>10} {:>8}% {:>12} {:>12}\n",
                r.images,
                r.chunk,
                r.compressed,
                r.baseline,
                sig6(r.reduction_percent),
                bytes(r.measured_compressed_bytes),
                bytes(r.measured_baseline_bytes)
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&sig6_json(serde_json::to_value(self)?))?)
    }
}

/// Streams `images` random 16×16 frames through fresh caches with both
/// policies; returns (compressed sets, compressed bytes, baseline bytes).
fn measure(images: usize, chunk: usize, profile: &ModelProfile) -> Result<(usize, usize, usize)> {
    let model = StreamModel::seeded(*profile)?;
    let mut compressed = model.new_cache(CachePolicy::compressed());
    let mut full = model.new_cache(CachePolicy::uncompressed());
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let px = 3 * PATCH_SIZE * PATCH_SIZE;
    for range in chunk_ranges(images, chunk)? {
        let frames: Vec<FeatureImage> = range
            .map(|_| {
                FeatureImage::from_data(
                    PATCH_SIZE,
                    PATCH_SIZE,
                    3,
                    (0..px).map(|_| rng.gen_range(0.0..1.0)).collect(),
                )
            })
            .collect::<Result<_>>()?;
        let encoded = model.encode_chunk(&frames)?;
        model.decode_chunk(&encoded, &mut compressed)?;
        model.decode_chunk(&encoded, &mut full)?;
    }
    Ok((compressed.token_set_count(), compressed.byte_size(), full.byte_size()))
}

/// Token-set accounting for every `(N, n)` pair, optionally measured on
/// live caches.
pub fn memory_report(
    images: &[usize],
    chunks: &[usize],
    profile: &ModelProfile,
    measured: bool,
) -> Result<MemoryReport> {
    profile.validate()?;
    let mut rows = Vec::with_capacity(images.len() * chunks.len());
    for &n_images in images {
        for &chunk in chunks {
            let compressed = token_set_count(n_images, chunk, profile.cached_global_layers)?;
            let baseline = baseline_token_set_count(n_images, profile.layer_pairs);
            let m = if measured {
                Some(measure(n_images, chunk, profile)?)
            } else {
                None
            };
            rows.push(MemoryRow {
                images: n_images,
                chunk,
                compressed,
                baseline,
                reduction_percent: reduction_percent(compressed, baseline),
                measured_compressed: m.map(|m| m.0),
                measured_compressed_bytes: m.map(|m| m.1),
                measured_baseline_bytes: m.map(|m| m.2),
            });
        }
    }
    Ok(MemoryReport {
        layer_pairs: profile.layer_pairs,
        cached_layers: profile.cached_global_layers,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_rows() {
        let r = memory_report(&[256, 8], &[8], &ModelProfile::paper(0), false).unwrap();
        assert_eq!((r.rows[0].compressed, r.rows[0].baseline), (312, 4608));
        assert_eq!(sig6(r.rows[0].reduction_percent), "93.2292");
        assert_eq!((r.rows[1].compressed, r.rows[1].baseline), (64, 144));
        assert!((r.rows[1].reduction_percent - 55.5556).abs() < 1e-4);
        assert!(r.to_text().contains("4608"));
    }

    #[test]
    fn measured_matches_formula() {
        let r = memory_report(&[20], &[4], &ModelProfile::toy(1), true).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.measured_compressed, Some(row.compressed));
        assert!(row.measured_compressed_bytes.unwrap() < row.measured_baseline_bytes.unwrap());
    }
}
