//! Deterministic software splatting of world Gaussians into 12-channel
//! feature images, plus PCA visualization and image file formats.

mod image;
mod io;
mod pca;
mod project;
mod render;

pub use image::{FeatureImage, VALID_CHANNELS};
pub use io::{read_fimg, write_fimg, write_ppm, FIMG_MAGIC};
pub use pca::{feature_principal_components, pca_visualize, PCA_ITERATIONS};
pub use project::{project, ScreenSplat, COVARIANCE_REGULARIZATION, FRUSTUM_GUARD};
pub use render::{render, render_with_alpha, touches_image, RenderConfig, RenderOutput};
