//! Toy-scale alternating-attention decoder with a hybrid compressed
//! key/value cache.
//!
//! Global attention layers before the last `cached_global_layers` never
//! see earlier chunks. The remaining layers keep the full first chunk plus
//! the final view of every later chunk, each marked with an additive
//! register embedding. Weights are seeded; nothing is trained.

mod accounting;
mod cache;
mod curriculum;
mod decoder;
mod encoder;
mod heads;
pub mod layers;
mod profile;

pub use accounting::{baseline_token_set_count, reduction_percent, token_set_count, FIRST_CHUNK};
pub use cache::{CachePolicy, CachedView, ChunkRecord, CompressedKvCache, Retention};
pub use curriculum::{curriculum, max_context_views, min_chunk_size, CurriculumSample, Stage, STAGE_STEPS};
pub use decoder::{Decoder, FullCache};
pub use encoder::{EncodedChunk, Encoder, ViewTokens, MAX_CHUNK};
pub use heads::{rotation_from_6d, HeadOutput, PredictionHeads, HEAD_DEPTH};
pub use profile::{ModelProfile, FULL_CACHED_LAYERS, FULL_LAYER_PAIRS, PATCH_SIZE};

use crate::error::Result;
use crate::geom::Intrinsics;
use crate::raster::FeatureImage;
use crate::reco::{ConditioningTokens, PatchifyWeights};

/// Encoder, decoder, heads and patchify weights generated from one profile.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamModel {
    pub profile: ModelProfile,
    pub encoder: Encoder,
    pub decoder: Decoder,
    pub heads: PredictionHeads,
    pub patchify: PatchifyWeights,
}

impl StreamModel {
    pub fn seeded(profile: ModelProfile) -> Result<Self> {
        profile.validate()?;
        Ok(Self {
            encoder: Encoder::seeded(&profile),
            decoder: Decoder::seeded(&profile),
            heads: PredictionHeads::seeded(&profile),
            patchify: PatchifyWeights::seeded(profile.seed ^ 0x9a7c_4000, profile.d_cond()),
            profile,
        })
    }

    pub fn new_cache(&self, policy: CachePolicy) -> CompressedKvCache {
        self.decoder.new_cache(policy)
    }

    pub fn encode_chunk(&self, images: &[FeatureImage]) -> Result<EncodedChunk> {
        self.encoder.encode_chunk(images)
    }

    pub fn decode_chunk(&self, chunk: &EncodedChunk, cache: &mut CompressedKvCache) -> Result<Vec<ViewTokens>> {
        self.decoder.decode_chunk(&chunk.views, cache)
    }

    pub fn run_heads(
        &self,
        features: &[ViewTokens],
        conditioning: &[ConditioningTokens],
        intrinsics: &[Intrinsics],
    ) -> Result<Vec<HeadOutput>> {
        self.heads.run(features, conditioning, intrinsics)
    }
}
