use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FeatureImage;
use crate::error::{Error, Result};
use crate::splat::FEATURE_CHANNELS;

type Cov = SMatrix<f64, FEATURE_CHANNELS, FEATURE_CHANNELS>;
type Vec9 = SVector<f64, FEATURE_CHANNELS>;

pub const PCA_ITERATIONS: usize = 100;
const PCA_SEED: u64 = 0x5eed_9ca;

/// Top-3 principal directions of the feature channels, in decreasing
/// variance order, each signed so its largest-magnitude loading is positive.
/// Directions of a rank-deficient covariance come back as zero vectors.
pub fn feature_principal_components(img: &FeatureImage) -> Result<[Vec9; 3]> {
    let cov = feature_covariance(img)?;
    Ok(power_iteration_top3(&cov))
}

/// Projects the 9 feature channels of a 12-channel render onto their top
/// three principal components and min-max normalizes each to `[0, 1]`.
/// Constant components map to 0.5.
pub fn pca_visualize(img: &FeatureImage) -> Result<FeatureImage> {
    let components = feature_principal_components(img)?;
    let n = img.pixel_count();
    let mean = feature_mean(img);
    let mut data = vec![0.0; 3 * n];
    for (c, v) in components.iter().enumerate() {
        let out = &mut data[c * n..(c + 1) * n];
        for (p, o) in out.iter_mut().enumerate() {
            *o = (0..FEATURE_CHANNELS)
                .map(|f| (img.plane(3 + f)[p] - mean[f]) * v[f])
                .sum();
        }
        let (lo, hi) = out.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
        let range = hi - lo;
        let scale = out.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
        if range <= 1e-12 * scale {
            out.fill(0.5);
        } else {
            for o in out.iter_mut() {
                *o = (*o - lo) / range;
            }
        }
    }
    FeatureImage::from_data(img.width(), img.height(), 3, data)
}

fn feature_mean(img: &FeatureImage) -> Vec9 {
    let n = img.pixel_count() as f64;
    Vec9::from_fn(|f, _| img.plane(3 + f).iter().sum::<f64>() / n)
}

fn feature_covariance(img: &FeatureImage) -> Result<Cov> {
    if img.channels() != 12 {
        return Err(Error::arg(format!(
            "PCA needs a 12-channel image, got {}",
            img.channels()
        )));
    }
    if img.pixel_count() < 3 {
        return Err(Error::arg("PCA needs at least 3 pixels"));
    }
    let mean = feature_mean(img);
    let n = img.pixel_count();
    let mut cov = Cov::zeros();
    for p in 0..n {
        let x = Vec9::from_fn(|f, _| img.plane(3 + f)[p] - mean[f]);
        cov += x * x.transpose();
    }
    Ok(cov / n as f64)
}

fn power_iteration_top3(cov: &Cov) -> [Vec9; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(PCA_SEED);
    let mut deflated = *cov;
    let total = cov.trace().abs();
    let mut out = [Vec9::zeros(); 3];
    for component in out.iter_mut() {
        let mut v = Vec9::from_fn(|_, _| rng.gen_range(-1.0..1.0)).normalize();
        let mut alive = true;
        for _ in 0..PCA_ITERATIONS {
            let next = deflated * v;
            let norm = next.norm();
            if !(norm > 1e-12 * total.max(f64::MIN_POSITIVE)) {
                alive = false;
                break;
            }
            v = next / norm;
        }
        let lambda = v.dot(&(deflated * v));
        if !alive || !(lambda > 1e-12 * total) {
            break;
        }
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v = -v;
        }
        deflated -= v * v.transpose() * lambda;
        *component = v;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_features_give_mid_gray() {
        let img = FeatureImage::zeros(4, 4, 12).unwrap();
        let vis = pca_visualize(&img).unwrap();
        assert!(vis.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn single_varying_channel_dominates_first_component() {
        let mut img = FeatureImage::zeros(5, 5, 12).unwrap();
        for y in 0..5 {
            for x in 0..5 {
                img.set(3 + 4, x, y, (x * 5 + y) as f64 * 0.1);
            }
        }
        let comps = feature_principal_components(&img).unwrap();
        assert!(comps[0][4].abs() >= 0.999);
        assert!(comps[0][4] > 0.0);
        let vis = pca_visualize(&img).unwrap();
        assert!(vis.plane(1).iter().all(|&v| v == 0.5));
        let first = vis.plane(0);
        assert_eq!(first.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(first.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
    }

    #[test]
    fn rejects_wrong_inputs() {
        assert!(pca_visualize(&FeatureImage::zeros(4, 4, 3).unwrap()).is_err());
        assert!(pca_visualize(&FeatureImage::zeros(2, 1, 12).unwrap()).is_err());
    }
}
