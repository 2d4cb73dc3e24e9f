use crate::error::{Error, Result};

/// Channel counts a [`FeatureImage`] may carry: RGB, rendered payload, and
/// the RGB + payload concatenation.
pub const VALID_CHANNELS: [usize; 3] = [3, 12, 15];

/// Planar `H×W×C` image stored channel-major, then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureImage {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::from_data(width, height, channels, vec![0.0; width * height * channels])
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::from_data(width, height, channels, vec![value; width * height * channels])
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg("image dimensions must be non-zero"));
        }
        if !VALID_CHANNELS.contains(&channels) {
            return Err(Error::arg(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::arg(format!(
                "image data has {} values, expected {}",
                data.len(),
                width * height * channels
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::arg("image data must be finite"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, channel: usize, x: usize, y: usize) -> f64 {
        self.data[(channel * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, x: usize, y: usize, value: f64) {
        self.data[(channel * self.height + y) * self.width + x] = value;
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn same_shape(&self, other: &FeatureImage) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// First three channels as an RGB image.
    pub fn rgb(&self) -> FeatureImage {
        let n = self.pixel_count();
        FeatureImage {
            width: self.width,
            height: self.height,
            channels: 3,
            data: self.data[..3 * n].to_vec(),
        }
    }

    /// Stacks the channels of `self` followed by those of `other`.
    pub fn concat(&self, other: &FeatureImage) -> Result<FeatureImage> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::arg(format!(
                "cannot concatenate {}×{} with {}×{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::from_data(self.width, self.height, self.channels + other.channels, data)
    }
}
