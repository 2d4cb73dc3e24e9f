use std::num::NonZeroUsize;

use nalgebra::Matrix2;

use super::project::{project, ScreenSplat};
use super::FeatureImage;
use crate::error::{Error, Result};
use crate::geom::{Intrinsics, RigidPose};
use crate::splat::{GaussianPrimitive, WorldScene, PAYLOAD_CHANNELS};

const TILE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    pub background: [f64; PAYLOAD_CHANNELS],
    /// Footprint radius in standard deviations.
    pub sigma_cutoff: f64,
    /// Contributions with smaller alpha are skipped.
    pub alpha_epsilon: f64,
    pub near_plane: f64,
    /// Compositing stops once transmittance drops below this value.
    pub transmittance_floor: f64,
    /// Worker threads; 0 uses the available parallelism. Output does not
    /// depend on this value.
    pub workers: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            background: [0.0; PAYLOAD_CHANNELS],
            sigma_cutoff: 3.0,
            alpha_epsilon: 1.0 / 255.0,
            near_plane: 0.01,
            transmittance_floor: 1e-4,
            workers: 0,
        }
    }
}

impl RenderConfig {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma_cutoff > 0.0) {
            return Err(Error::arg("sigma_cutoff must be positive"));
        }
        if !(self.alpha_epsilon > 0.0 && self.alpha_epsilon < 1.0) {
            return Err(Error::arg("alpha_epsilon must lie in (0, 1)"));
        }
        Ok(())
    }

    fn worker_count(&self, tiles: usize) -> usize {
        let requested = if self.workers == 0 {
            std::thread::available_parallelism().map_or(1, NonZeroUsize::get)
        } else {
            self.workers
        };
        requested.clamp(1, tiles.max(1))
    }
}

/// A splat ready for compositing: inverse covariance, clipped bounding box.
struct Prepared {
    mean: [f64; 2],
    conic: [f64; 3],
    opacity: f64,
    payload: [f64; PAYLOAD_CHANNELS],
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

/// A rendered payload image plus per-pixel accumulated opacity `1 − T`.
pub struct RenderOutput {
    pub image: FeatureImage,
    pub alpha: Vec<f64>,
}

/// Renders the 12-channel payload (RGB + features) of `scene` seen from
/// `camera`.
pub fn render(scene: &WorldScene, camera: &RigidPose, k: &Intrinsics, cfg: &RenderConfig) -> Result<FeatureImage> {
    Ok(render_with_alpha(scene, camera, k, cfg)?.image)
}

pub fn render_with_alpha(
    scene: &WorldScene,
    camera: &RigidPose,
    k: &Intrinsics,
    cfg: &RenderConfig,
) -> Result<RenderOutput> {
    if k.width == 0 || k.height == 0 {
        return Err(Error::arg("cannot render a zero-sized image"));
    }
    k.validate()?;
    cfg.validate()?;
    let (w, h) = (k.width, k.height);
    let splats = prepare(scene, camera, k, cfg);

    let tiles_x = w.div_ceil(TILE);
    let tiles_y = h.div_ceil(TILE);
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); tiles_x * tiles_y];
    for (i, s) in splats.iter().enumerate() {
        for ty in s.y0 / TILE..=s.y1 / TILE {
            for tx in s.x0 / TILE..=s.x1 / TILE {
                bins[ty * tiles_x + tx].push(i as u32);
            }
        }
    }

    let workers = cfg.worker_count(bins.len());
    let shade_tile = |tile: usize| -> Vec<[f64; PAYLOAD_CHANNELS + 1]> {
        let (tx, ty) = (tile % tiles_x, tile / tiles_x);
        let (xs, ys) = (tx * TILE, ty * TILE);
        let (xe, ye) = ((xs + TILE).min(w), (ys + TILE).min(h));
        let mut out = Vec::with_capacity((xe - xs) * (ye - ys));
        for y in ys..ye {
            for x in xs..xe {
                out.push(shade_pixel(x, y, &bins[tile], &splats, cfg));
            }
        }
        out
    };

    let shaded: Vec<Vec<[f64; PAYLOAD_CHANNELS + 1]>> = if workers == 1 {
        (0..bins.len()).map(shade_tile).collect()
    } else {
        let mut results: Vec<Option<Vec<_>>> = vec![None; bins.len()];
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|worker| {
                    let shade_tile = &shade_tile;
                    let n = bins.len();
                    scope.spawn(move || {
                        (worker..n)
                            .step_by(workers)
                            .map(|t| (t, shade_tile(t)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for handle in handles {
                for (t, px) in handle.join().expect("render worker panicked") {
                    results[t] = Some(px);
                }
            }
        });
        results.into_iter().map(Option::unwrap).collect()
    };

    let n = w * h;
    let mut data = vec![0.0; n * PAYLOAD_CHANNELS];
    let mut alpha = vec![0.0; n];
    for (tile, pixels) in shaded.into_iter().enumerate() {
        let (tx, ty) = (tile % tiles_x, tile / tiles_x);
        let (xs, ys) = (tx * TILE, ty * TILE);
        let xe = (xs + TILE).min(w);
        let tile_w = xe - xs;
        for (i, px) in pixels.iter().enumerate() {
            let (x, y) = (xs + i % tile_w, ys + i / tile_w);
            let p = y * w + x;
            for c in 0..PAYLOAD_CHANNELS {
                data[c * n + p] = px[c];
            }
            alpha[p] = px[PAYLOAD_CHANNELS];
        }
    }
    Ok(RenderOutput {
        image: FeatureImage::from_data(w, h, PAYLOAD_CHANNELS, data)?,
        alpha,
    })
}

/// Screen footprint of one splat: projection, inverse covariance and the
/// clipped pixel box `[x0, x1, y0, y1]` (inclusive). `None` when the
/// splat cannot touch any pixel.
fn footprint(
    g: &GaussianPrimitive,
    camera: &RigidPose,
    k: &Intrinsics,
    cfg: &RenderConfig,
) -> Option<(ScreenSplat, Matrix2<f64>, [usize; 4])> {
    if g.opacity < cfg.alpha_epsilon {
        return None;
    }
    let (w, h) = (k.width as f64, k.height as f64);
    let s = project(g, camera, k, cfg.near_plane)?;
    let inv = s.covariance.try_inverse()?;
    let rx = cfg.sigma_cutoff * s.covariance[(0, 0)].sqrt();
    let ry = cfg.sigma_cutoff * s.covariance[(1, 1)].sqrt();
    let (lx, hx) = ((s.mean.x - rx).ceil().max(0.0), (s.mean.x + rx).floor().min(w - 1.0));
    let (ly, hy) = ((s.mean.y - ry).ceil().max(0.0), (s.mean.y + ry).floor().min(h - 1.0));
    if !(lx <= hx && ly <= hy) {
        return None;
    }
    Some((s, inv, [lx as usize, hx as usize, ly as usize, hy as usize]))
}

/// Whether `g` can contribute to any pixel of the view.
pub fn touches_image(g: &GaussianPrimitive, camera: &RigidPose, k: &Intrinsics, cfg: &RenderConfig) -> bool {
    footprint(g, camera, k, cfg).is_some()
}

fn prepare(scene: &WorldScene, camera: &RigidPose, k: &Intrinsics, cfg: &RenderConfig) -> Vec<Prepared> {
    let mut keyed: Vec<(f64, usize, Prepared)> = Vec::new();
    for (index, g) in scene.iter().enumerate() {
        let Some((s, inv, [x0, x1, y0, y1])) = footprint(g, camera, k, cfg) else {
            continue;
        };
        keyed.push((
            s.depth,
            index,
            Prepared {
                mean: [s.mean.x, s.mean.y],
                conic: [inv[(0, 0)], inv[(0, 1)], inv[(1, 1)]],
                opacity: g.opacity,
                payload: g.payload(),
                x0,
                x1,
                y0,
                y1,
            },
        ));
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, _, p)| p).collect()
}

fn shade_pixel(
    x: usize,
    y: usize,
    bin: &[u32],
    splats: &[Prepared],
    cfg: &RenderConfig,
) -> [f64; PAYLOAD_CHANNELS + 1] {
    let mut acc = [0.0; PAYLOAD_CHANNELS + 1];
    let mut transmittance = 1.0;
    let cutoff2 = cfg.sigma_cutoff * cfg.sigma_cutoff;
    for &i in bin {
        let s = &splats[i as usize];
        if x < s.x0 || x > s.x1 || y < s.y0 || y > s.y1 {
            continue;
        }
        let dx = x as f64 - s.mean[0];
        let dy = y as f64 - s.mean[1];
        let power = s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy + s.conic[2] * dy * dy;
        if power > cutoff2 {
            continue;
        }
        let alpha = (s.opacity * (-0.5 * power).exp()).clamp(0.0, 0.999);
        if alpha < cfg.alpha_epsilon {
            continue;
        }
        let weight = transmittance * alpha;
        for c in 0..PAYLOAD_CHANNELS {
            acc[c] += weight * s.payload[c];
        }
        transmittance *= 1.0 - alpha;
        if transmittance < cfg.transmittance_floor {
            break;
        }
    }
    for c in 0..PAYLOAD_CHANNELS {
        acc[c] += transmittance * cfg.background[c];
    }
    for v in &mut acc[..3] {
        *v = v.clamp(0.0, 1.0);
    }
    acc[PAYLOAD_CHANNELS] = 1.0 - transmittance;
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splat::GaussianPrimitive;
    use nalgebra::Vector3;

    fn k() -> Intrinsics {
        Intrinsics::new(60.0, 60.0, 16.0, 12.0, 32, 24).unwrap()
    }

    #[test]
    fn empty_scene_is_background() {
        let mut cfg = RenderConfig::default();
        cfg.background[0] = 0.25;
        cfg.background[7] = -3.0;
        let img = render(&WorldScene::new(), &RigidPose::identity(), &k(), &cfg).unwrap();
        assert!(img.plane(0).iter().all(|&v| v == 0.25));
        assert!(img.plane(7).iter().all(|&v| v == -3.0));
        assert!(img.plane(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn centered_gaussian_peaks_at_principal_point() {
        let scene: WorldScene = [GaussianPrimitive::isotropic(
            Vector3::new(0.0, 0.0, 3.0),
            0.1,
            0.95,
            [1.0, 0.5, 0.25],
        )]
        .into_iter()
        .collect();
        let img = render(&scene, &RigidPose::identity(), &k(), &RenderConfig::default()).unwrap();
        let mut best = (0, 0, f64::MIN);
        for y in 0..img.height() {
            for x in 0..img.width() {
                let sum: f64 = (0..12).map(|c| img.get(c, x, y)).sum();
                if sum > best.2 {
                    best = (x, y, sum);
                }
            }
        }
        assert_eq!((best.0, best.1), (16, 12));
    }

    #[test]
    fn transparent_insert_is_bitwise_noop() {
        let a = GaussianPrimitive::isotropic(Vector3::new(0.1, 0.0, 3.0), 0.2, 0.8, [0.9, 0.1, 0.1]);
        let ghost = GaussianPrimitive::isotropic(Vector3::new(0.0, 0.0, 2.0), 0.3, 0.0, [0.0, 1.0, 0.0]);
        let one: WorldScene = [a].into_iter().collect();
        let two: WorldScene = [ghost, a].into_iter().collect();
        let cfg = RenderConfig::default();
        let r1 = render(&one, &RigidPose::identity(), &k(), &cfg).unwrap();
        let r2 = render(&two, &RigidPose::identity(), &k(), &cfg).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn zero_sized_image_is_rejected() {
        let mut bad = k();
        bad.width = 0;
        assert!(render(
            &WorldScene::new(),
            &RigidPose::identity(),
            &bad,
            &RenderConfig::default()
        )
        .is_err());
    }
}
