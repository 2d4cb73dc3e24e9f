//! Principal components of the rendered 9-channel feature field.

use streamsplat::harness::{generate_scene, SceneConfig};
use streamsplat::raster::{feature_principal_components, render, RenderConfig};

fn main() -> streamsplat::Result<()> {
    let scene = generate_scene(&SceneConfig::room(8), 2)?;
    let img = render(
        &scene.gaussians,
        scene.pose(0),
        &scene.intrinsics,
        &RenderConfig::default(),
    )?;
    for (i, pc) in feature_principal_components(&img)?.iter().enumerate() {
        let v: Vec<String> = pc.iter().map(|x| format!("{x:+.3}")).collect();
        println!("pc{i}: [{}]", v.join(", "));
    }
    Ok(())
}
