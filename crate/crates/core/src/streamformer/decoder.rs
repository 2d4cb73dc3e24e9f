use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cache::{CachedView, ChunkRecord, CompressedKvCache};
use super::encoder::{ViewTokens, MAX_CHUNK};
use super::layers::{add_in_place, layer_norm, multi_head_attention, Block};
use super::profile::ModelProfile;
use crate::error::{Error, Result};

/// Alternating frame/global attention decoder with seeded weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoder {
    pub profile: ModelProfile,
    pub frame_blocks: Vec<Block>,
    pub global_blocks: Vec<Block>,
    /// Added to retained views' normalized tokens before their keys and
    /// values are cached.
    pub register: Vec<f64>,
}

/// Uncompressed history: every view's keys and values at every global layer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FullCache {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Decoder {
    pub fn seeded(profile: &ModelProfile) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(profile.seed ^ 0xdec0_de00);
        let (d, heads) = (profile.d_model, profile.heads);
        let mut frame_blocks = Vec::with_capacity(profile.layer_pairs);
        let mut global_blocks = Vec::with_capacity(profile.layer_pairs);
        for _ in 0..profile.layer_pairs {
            frame_blocks.push(Block::seeded(&mut rng, d, heads, None));
            global_blocks.push(Block::seeded(&mut rng, d, heads, None));
        }
        let register = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self {
            profile: *profile,
            frame_blocks,
            global_blocks,
            register,
        }
    }

    pub fn new_cache(&self, policy: super::CachePolicy) -> CompressedKvCache {
        CompressedKvCache::new(&self.profile, policy, self.register.clone())
    }

    /// Decodes one chunk against `cache` and appends the retained views'
    /// keys and values to it. Returns per-view features.
    pub fn decode_chunk(&self, chunk: &[ViewTokens], cache: &mut CompressedKvCache) -> Result<Vec<ViewTokens>> {
        let tokens = check_chunk(chunk, self.profile.d_model)?;
        let d = self.profile.d_model;
        let first_view = cache.views_seen();
        let retained = cache.retained_for_next(first_view, chunk.len());
        let mark = cache.marks_retained_views();
        let mut x: Vec<f64> = chunk.iter().flat_map(|v| v.data.iter().copied()).collect();
        let mut pending = Vec::new();

        for layer in 0..self.profile.layer_pairs {
            self.frame_blocks[layer].forward_grouped(&mut x, tokens, None);

            let block = &self.global_blocks[layer];
            let h = layer_norm(&x, d);
            let q = block.attention.query.forward(&h);
            let k_cur = block.attention.key.forward(&h);
            let v_cur = block.attention.value.forward(&h);
            let attn = if cache.is_layer_cached(layer) && !cache.layer(layer).is_empty() {
                let history = cache.layer(layer);
                let mut keys: Vec<f64> = history.iter().flat_map(|c| c.keys.iter().copied()).collect();
                let mut values: Vec<f64> = history.iter().flat_map(|c| c.values.iter().copied()).collect();
                keys.extend_from_slice(&k_cur);
                values.extend_from_slice(&v_cur);
                multi_head_attention(&q, &keys, &values, d, block.heads, |_, _| true)
            } else {
                multi_head_attention(&q, &k_cur, &v_cur, d, block.heads, |_, _| true)
            };

            if cache.is_layer_cached(layer) {
                for &view in &retained {
                    let local = view - first_view;
                    let rows = &h[local * tokens * d..(local + 1) * tokens * d];
                    let (keys, values) = if mark {
                        let mut marked = rows.to_vec();
                        for row in marked.chunks_exact_mut(d) {
                            add_in_place(row, cache.register());
                        }
                        (
                            block.attention.key.forward(&marked),
                            block.attention.value.forward(&marked),
                        )
                    } else {
                        (
                            k_cur[local * tokens * d..(local + 1) * tokens * d].to_vec(),
                            v_cur[local * tokens * d..(local + 1) * tokens * d].to_vec(),
                        )
                    };
                    pending.push((
                        layer,
                        CachedView {
                            view_id: view,
                            keys,
                            values,
                        },
                    ));
                }
            }

            add_in_place(&mut x, &block.attention.output.forward(&attn));
            block.finish(&mut x, None);
        }

        cache.commit(
            ChunkRecord {
                first_view,
                len: chunk.len(),
                retained,
            },
            pending,
        );
        Ok(split_views(chunk, layer_norm(&x, d)))
    }

    /// Reference decoder that caches every view at every global layer,
    /// without any marking.
    pub fn decode_chunk_full_cache(&self, chunk: &[ViewTokens], history: &mut FullCache) -> Result<Vec<ViewTokens>> {
        check_chunk(chunk, self.profile.d_model)?;
        let tokens = chunk[0].token_count();
        let d = self.profile.d_model;
        if history.layers.is_empty() {
            history.layers = vec![(Vec::new(), Vec::new()); self.profile.layer_pairs];
        }
        let mut x: Vec<f64> = chunk.iter().flat_map(|v| v.data.iter().copied()).collect();
        for layer in 0..self.profile.layer_pairs {
            self.frame_blocks[layer].forward_grouped(&mut x, tokens, None);
            let block = &self.global_blocks[layer];
            let h = layer_norm(&x, d);
            let q = block.attention.query.forward(&h);
            let (keys, values) = &mut history.layers[layer];
            keys.extend(block.attention.key.forward(&h));
            values.extend(block.attention.value.forward(&h));
            let attn = multi_head_attention(&q, keys, values, d, block.heads, |_, _| true);
            add_in_place(&mut x, &block.attention.output.forward(&attn));
            block.finish(&mut x, None);
        }
        Ok(split_views(chunk, layer_norm(&x, d)))
    }
}

fn check_chunk(chunk: &[ViewTokens], dim: usize) -> Result<usize> {
    if chunk.is_empty() || chunk.len() > MAX_CHUNK {
        return Err(Error::arg(format!(
            "chunk size must lie in [1, {MAX_CHUNK}], got {}",
            chunk.len()
        )));
    }
    let tokens = chunk[0].token_count();
    if chunk
        .iter()
        .any(|v| v.token_count() != tokens || v.dim != dim || v.data.len() != tokens * dim)
    {
        return Err(Error::arg("chunk views must share token count and model width"));
    }
    Ok(tokens)
}

fn split_views(chunk: &[ViewTokens], x: Vec<f64>) -> Vec<ViewTokens> {
    let per_view = chunk[0].data.len();
    chunk
        .iter()
        .zip(x.chunks_exact(per_view))
        .map(|(v, data)| ViewTokens {
            data: data.to_vec(),
            ..v.clone()
        })
        .collect()
}
