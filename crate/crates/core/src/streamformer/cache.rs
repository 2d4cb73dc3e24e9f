use serde::{Deserialize, Serialize};

use super::profile::ModelProfile;

/// Which views of a chunk keep their keys/values for later chunks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Retention {
    /// Every view of the first chunk, then only the final view of each
    /// later chunk. Retained views carry the register embedding.
    Selective,
    /// Every view of every chunk, unmarked.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachePolicy {
    pub retention: Retention,
    /// When set, only the last `cached_global_layers` global layers use
    /// the cache; earlier global layers attend within the current chunk.
    pub truncate_early_layers: bool,
}

impl CachePolicy {
    pub fn compressed() -> Self {
        Self {
            retention: Retention::Selective,
            truncate_early_layers: true,
        }
    }

    pub fn uncompressed() -> Self {
        Self {
            retention: Retention::All,
            truncate_early_layers: false,
        }
    }
}

impl Default for CachePolicy {
    fn default() -> Self {
        Self::compressed()
    }
}

/// Keys and values of one retained view at one global layer (`tokens × d`).
#[derive(Debug, Clone, PartialEq)]
pub struct CachedView {
    pub view_id: usize,
    pub keys: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChunkRecord {
    pub first_view: usize,
    pub len: usize,
    pub retained: Vec<usize>,
}

/// Per-global-layer key/value history plus the retention bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedKvCache {
    policy: CachePolicy,
    cached: Vec<bool>,
    layers: Vec<Vec<CachedView>>,
    register: Vec<f64>,
    chunks: Vec<ChunkRecord>,
}

impl CompressedKvCache {
    pub fn new(profile: &ModelProfile, policy: CachePolicy, register: Vec<f64>) -> Self {
        let first_cached = if policy.truncate_early_layers {
            profile.truncated_global_layers()
        } else {
            0
        };
        let cached = (0..profile.layer_pairs).map(|l| l >= first_cached).collect();
        Self {
            policy,
            cached,
            layers: vec![Vec::new(); profile.layer_pairs],
            register,
            chunks: Vec::new(),
        }
    }

    pub fn policy(&self) -> CachePolicy {
        self.policy
    }

    pub fn is_layer_cached(&self, global_layer: usize) -> bool {
        self.cached[global_layer]
    }

    pub fn cached_layer_count(&self) -> usize {
        self.cached.iter().filter(|&&c| c).count()
    }

    pub fn layer(&self, global_layer: usize) -> &[CachedView] {
        &self.layers[global_layer]
    }

    pub fn register(&self) -> &[f64] {
        &self.register
    }

    pub fn set_register(&mut self, register: Vec<f64>) {
        self.register = register;
    }

    /// Retained views are marked only when the cache is actually compressed.
    pub fn marks_retained_views(&self) -> bool {
        self.policy.retention == Retention::Selective
    }

    pub fn chunks(&self) -> &[ChunkRecord] {
        &self.chunks
    }

    /// Total views processed so far.
    pub fn views_seen(&self) -> usize {
        self.chunks.iter().map(|c| c.len).sum()
    }

    /// Views of the next chunk (`first_view .. first_view + len`) that the
    /// policy keeps.
    pub fn retained_for_next(&self, first_view: usize, len: usize) -> Vec<usize> {
        match self.policy.retention {
            Retention::Selective if !self.chunks.is_empty() => vec![first_view + len - 1],
            _ => (first_view..first_view + len).collect(),
        }
    }

    /// Number of stored (view, layer) token sets.
    pub fn token_set_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Bytes held by cached keys and values.
    pub fn byte_size(&self) -> usize {
        self.layers
            .iter()
            .flatten()
            .map(|v| (v.keys.len() + v.values.len()) * std::mem::size_of::<f64>())
            .sum()
    }

    pub(crate) fn commit(&mut self, record: ChunkRecord, entries: Vec<(usize, CachedView)>) {
        for (layer, view) in entries {
            self.layers[layer].push(view);
        }
        self.chunks.push(record);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_selection() {
        let p = ModelProfile::paper(0);
        let c = CompressedKvCache::new(&p, CachePolicy::compressed(), vec![]);
        assert_eq!(c.cached_layer_count(), 8);
        assert!(!c.is_layer_cached(9) && c.is_layer_cached(10));
        let c = CompressedKvCache::new(&p, CachePolicy::uncompressed(), vec![]);
        assert_eq!(c.cached_layer_count(), 18);
    }

    #[test]
    fn retention_schedule() {
        let p = ModelProfile::toy(0);
        let mut c = CompressedKvCache::new(&p, CachePolicy::compressed(), vec![]);
        assert_eq!(c.retained_for_next(0, 8), (0..8).collect::<Vec<_>>());
        c.commit(
            ChunkRecord {
                first_view: 0,
                len: 8,
                retained: (0..8).collect(),
            },
            vec![],
        );
        assert_eq!(c.retained_for_next(8, 5), vec![12]);
        let all = CompressedKvCache::new(&p, CachePolicy::uncompressed(), vec![]);
        assert_eq!(all.retained_for_next(8, 3), vec![8, 9, 10]);
    }
}
