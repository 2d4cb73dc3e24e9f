//! Full context/target protocol with a noisy oracle, posed and unposed.

use streamsplat::harness::{
    generate_scene, run_protocol, EvalConfig, EvalMode, OracleNoise, PredictorKind, SceneConfig, StreamConfig,
};

fn main() -> streamsplat::Result<()> {
    let scene = generate_scene(&SceneConfig::object(32), 1)?;
    let predictor = PredictorKind::Oracle(OracleNoise {
        rotation_deg: 1.0,
        translation_frac: 0.01,
        ..OracleNoise::none(1)
    });
    for mode in [EvalMode::Posed, EvalMode::Unposed] {
        let mut cfg = EvalConfig::new(24, 1);
        cfg.mode = mode;
        cfg.pose_opt.iterations = 30;
        let (split, _, report) = run_protocol(&scene, &predictor, &StreamConfig::default(), &cfg)?;
        println!("targets {:?}", split.targets);
        print!("{}", report.to_text());
    }
    Ok(())
}
