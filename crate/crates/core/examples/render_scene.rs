//! Generates a synthetic scene and writes an RGB render of its first view
//! plus a PCA visualization of the feature channels.

use std::fs::File;
use std::io::BufWriter;

use streamsplat::harness::{generate_scene, SceneConfig};
use streamsplat::raster::{pca_visualize, render, write_ppm, RenderConfig};

fn main() -> streamsplat::Result<()> {
    let scene = generate_scene(&SceneConfig::object(8), 7)?;
    let cfg = RenderConfig::default();
    let img = render(&scene.gaussians, scene.pose(0), &scene.intrinsics, &cfg)?;
    let dir = std::env::temp_dir();
    write_ppm(&mut BufWriter::new(File::create(dir.join("render_rgb.ppm"))?), &img)?;
    write_ppm(
        &mut BufWriter::new(File::create(dir.join("render_pca.ppm"))?),
        &pca_visualize(&img)?,
    )?;
    println!(
        "{} gaussians rendered at {}x{} into {}",
        scene.gaussians.len(),
        img.width(),
        img.height(),
        dir.display()
    );
    Ok(())
}
