use std::io::{Read, Write};

use super::FeatureImage;
use crate::error::{Error, Result};

pub const FIMG_MAGIC: &[u8; 4] = b"FIMG";

/// Binary PPM (P6) of the first three channels, `round(255·clamp(v, 0, 1))`.
pub fn write_ppm<W: Write>(mut out: W, img: &FeatureImage) -> Result<()> {
    if img.channels() < 3 {
        return Err(Error::arg("PPM output needs at least 3 channels"));
    }
    write!(out, "P6\n{} {}\n255\n", img.width(), img.height())?;
    let mut bytes = Vec::with_capacity(img.pixel_count() * 3);
    for y in 0..img.height() {
        for x in 0..img.width() {
            for c in 0..3 {
                bytes.push((255.0 * img.get(c, x, y).clamp(0.0, 1.0)).round() as u8);
            }
        }
    }
    out.write_all(&bytes)?;
    Ok(())
}

/// `FIMG` + u32 LE width, height, channels, then channel-major LE f32 values.
pub fn write_fimg<W: Write>(mut out: W, img: &FeatureImage) -> Result<()> {
    out.write_all(FIMG_MAGIC)?;
    for v in [img.width(), img.height(), img.channels()] {
        out.write_all(&(v as u32).to_le_bytes())?;
    }
    let mut bytes = Vec::with_capacity(img.data().len() * 4);
    for &v in img.data() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out.write_all(&bytes)?;
    Ok(())
}

pub fn read_fimg<R: Read>(mut input: R) -> Result<FeatureImage> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if &header[..4] != FIMG_MAGIC {
        return Err(Error::Parse {
            line: 0,
            message: "missing FIMG magic".into(),
        });
    }
    let field = |i: usize| u32::from_le_bytes(header[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (w, h, c) = (field(0), field(1), field(2));
    let mut raw = vec![0u8; w * h * c * 4];
    input.read_exact(&mut raw)?;
    let data = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    FeatureImage::from_data(w, h, c, data)
}
