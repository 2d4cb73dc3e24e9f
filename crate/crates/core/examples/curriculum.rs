//! Training schedule: context views and chunk sizes across the stages.

use streamsplat::streamformer::{curriculum, Stage};

fn main() {
    for (stage, steps) in [
        (Stage::One, [0, 1_500, 20_000, 50_000, 75_000]),
        (Stage::Two, [0, 5_000, 12_500, 25_000, 40_000]),
        (Stage::Three, [0, 10_000, 20_000, 30_000, 49_999]),
    ] {
        for step in steps {
            let s = curriculum(step, stage, 42);
            println!(
                "{stage:?} step {step:>6}: max views {:>2}, min chunk {}, chunks {:?}",
                s.max_views, s.min_chunk, s.chunk_sizes
            );
        }
    }
}
