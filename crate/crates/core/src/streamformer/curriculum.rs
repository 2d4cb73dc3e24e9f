use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::accounting::FIRST_CHUNK;
use crate::error::{Error, Result};

pub const STAGE_STEPS: [u64; 3] = [150_000, 50_000, 50_000];
const VIEW_RAMP_START: u64 = 1_500;
const VIEW_RAMP_END: u64 = 75_000;
const MIN_VIEWS: usize = 8;
const MAX_VIEWS: usize = 64;
const CHUNK_ANNEAL_STEPS: u64 = 25_000;
const SMALLEST_CHUNK: usize = 4;

/// Training stage. Stage 1 fixes chunks at 8, stage 2 anneals the minimum
/// chunk size from 8 to 4, stage 3 keeps chunks in `[4, 8]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    One,
    Two,
    Three,
}

impl TryFrom<u32> for Stage {
    type Error = Error;

    fn try_from(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Stage::One),
            2 => Ok(Stage::Two),
            3 => Ok(Stage::Three),
            _ => Err(Error::arg(format!("unknown training stage {n}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CurriculumSample {
    pub max_views: usize,
    pub min_chunk: usize,
    /// First entry is always 8; the sizes sum to at least `max_views`.
    pub chunk_sizes: Vec<usize>,
}

/// Maximum context views at a stage-relative step: 8 up to step 1.5k,
/// linear to 64 at step 75k during stage 1, 64 afterwards.
pub fn max_context_views(stage: Stage, step: u64) -> usize {
    match stage {
        Stage::One => {
            if step <= VIEW_RAMP_START {
                MIN_VIEWS
            } else if step >= VIEW_RAMP_END {
                MAX_VIEWS
            } else {
                let frac = (step - VIEW_RAMP_START) as f64 / (VIEW_RAMP_END - VIEW_RAMP_START) as f64;
                MIN_VIEWS + (frac * (MAX_VIEWS - MIN_VIEWS) as f64).floor() as usize
            }
        }
        Stage::Two | Stage::Three => MAX_VIEWS,
    }
}

/// Lower bound of the chunk-size sampler (rounded to the nearest integer
/// while annealing).
pub fn min_chunk_size(stage: Stage, step: u64) -> usize {
    match stage {
        Stage::One => FIRST_CHUNK,
        Stage::Two => {
            let frac = step.min(CHUNK_ANNEAL_STEPS) as f64 / CHUNK_ANNEAL_STEPS as f64;
            (FIRST_CHUNK as f64 - frac * (FIRST_CHUNK - SMALLEST_CHUNK) as f64).round() as usize
        }
        Stage::Three => SMALLEST_CHUNK,
    }
}

/// Schedule for one training iteration, deterministic in `(step, stage, seed)`.
pub fn curriculum(step: u64, stage: Stage, seed: u64) -> CurriculumSample {
    let max_views = max_context_views(stage, step);
    let min_chunk = min_chunk_size(stage, step);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ step.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut chunk_sizes = vec![FIRST_CHUNK];
    let mut total = FIRST_CHUNK;
    while total < max_views {
        let n = rng.gen_range(min_chunk..=FIRST_CHUNK);
        chunk_sizes.push(n);
        total += n;
    }
    CurriculumSample {
        max_views,
        min_chunk,
        chunk_sizes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn view_ramp_anchors() {
        assert_eq!(max_context_views(Stage::One, 0), 8);
        assert_eq!(max_context_views(Stage::One, 1500), 8);
        assert_eq!(max_context_views(Stage::One, 75_000), 64);
        assert_eq!(max_context_views(Stage::One, 149_999), 64);
        // Midpoint of the ramp: 8 + 56/2.
        assert_eq!(max_context_views(Stage::One, 38_250), 36);
    }

    #[test]
    fn chunk_anneal() {
        assert_eq!(min_chunk_size(Stage::Two, 0), 8);
        assert_eq!(min_chunk_size(Stage::Two, 12_500), 6);
        assert_eq!(min_chunk_size(Stage::Two, 25_000), 4);
        assert_eq!(min_chunk_size(Stage::Two, 40_000), 4);
    }

    #[test]
    fn samples_respect_bounds() {
        for step in (0..50_000).step_by(977) {
            let s = curriculum(step, Stage::Two, 3);
            assert_eq!(s.chunk_sizes[0], 8);
            assert!(s.chunk_sizes.iter().all(|&n| (s.min_chunk..=8).contains(&n)));
            assert!(s.chunk_sizes.iter().sum::<usize>() >= s.max_views);
            assert_eq!(s, curriculum(step, Stage::Two, 3));
        }
    }

    #[test]
    fn unknown_stage() {
        assert!(Stage::try_from(4).is_err());
        assert!(Stage::try_from(0).is_err());
    }
}
