//! Streams a synthetic orbit through the oracle predictor in chunks of 4
//! and reports the scene growth and target PSNR.

use streamsplat::harness::{frames_from_scene, generate_scene, OracleNoise, PredictorKind, SceneConfig, StreamConfig};
use streamsplat::metrics::psnr;
use streamsplat::raster::render;

fn main() -> streamsplat::Result<()> {
    let scene = generate_scene(&SceneConfig::object(24), 3)?;
    let cfg = StreamConfig {
        chunk_size: 4,
        ..StreamConfig::default()
    };
    let views: Vec<usize> = (0..scene.len()).step_by(2).collect();
    let frames = frames_from_scene(&scene, &views, &cfg.render)?;
    let noise = OracleNoise {
        rotation_deg: 1.0,
        ..OracleNoise::none(3)
    };
    let out = streamsplat::harness::stream_reconstruct(&frames, &PredictorKind::Oracle(noise), Some(&scene), &cfg)?;
    for c in &out.log {
        println!(
            "chunk {} views {:?}: +{} -> {}",
            c.chunk, c.views, c.added, c.scene_size
        );
    }
    for view in (1..scene.len()).step_by(6) {
        let pose = scene.pose(view).with_scaled_translation(out.scale_factor);
        let img = render(&out.scene, &pose, &scene.intrinsics, &cfg.render)?.rgb();
        println!(
            "held-out view {view}: {:.2} dB",
            psnr(&img, &scene.observe(view, &cfg.render)?)?
        );
    }
    Ok(())
}
