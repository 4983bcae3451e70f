use std::path::Path;

use serde::{Deserialize, Serialize};

use super::raster::BnwRaster;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const MIN_IMAGE_SIDE: usize = 8;

/// Interleaved 8-bit RGB pixels, `H × W × 3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.is_empty() {
            return Err(Error::Input("empty image".into()));
        }
        if data.len() != width * height * 3 {
            return Err(Error::Input(format!(
                "{width}×{height} RGB image needs {} bytes, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?
            .to_rgb8();
        let (w, h) = img.dimensions();
        Self::new(w as usize, h as usize, img.into_raw())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer length checked at construction");
        buf.save(path).map_err(|e| Error::Output {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })
    }
}

/// Per-channel `(v - mean) / std`, applied after scaling to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelNorm {
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

/// Bilinear resampling of one `[H, W]` plane to `[S, S]` with half-pixel
/// centres; a same-size resize is an exact copy.
pub fn resize_bilinear(plane: &[f32], height: usize, width: usize, side: usize) -> Vec<f32> {
    if height == side && width == side {
        return plane.to_vec();
    }
    let taps = |out: usize, input: usize| -> Vec<(usize, usize, f32)> {
        let scale = input as f64 / side as f64;
        (0..out)
            .map(|i| {
                let src = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (input - 1) as f64);
                let i0 = src.floor() as usize;
                let i1 = (i0 + 1).min(input - 1);
                (i0, i1, (src - i0 as f64) as f32)
            })
            .collect()
    };
    let rows = taps(side, height);
    let cols = taps(side, width);
    let mut out = Vec::with_capacity(side * side);
    for &(y0, y1, fy) in &rows {
        for &(x0, x1, fx) in &cols {
            let top = plane[y0 * width + x0] * (1.0 - fx) + plane[y0 * width + x1] * fx;
            let bottom = plane[y1 * width + x0] * (1.0 - fx) + plane[y1 * width + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// `H × W × 3` bytes → `[3, S, S]` floats in `[0, 1]` (then optionally normalized).
pub fn preprocess_rgb(image: &RgbImage, side: usize, norm: Option<&ChannelNorm>) -> Result<Tensor<f32>> {
    if image.data.is_empty() {
        return Err(Error::Input("empty image".into()));
    }
    if image.width < MIN_IMAGE_SIDE || image.height < MIN_IMAGE_SIDE {
        return Err(Error::Input(format!(
            "image must be at least {MIN_IMAGE_SIDE}×{MIN_IMAGE_SIDE}, got {}×{}",
            image.width, image.height
        )));
    }
    if side == 0 {
        return Err(Error::Input("target side must be positive".into()));
    }
    let (h, w) = (image.height, image.width);
    let mut data = Vec::with_capacity(3 * side * side);
    for c in 0..3 {
        let plane: Vec<f32> = image.data[c..].iter().step_by(3).map(|&b| b as f32 / 255.0).collect();
        let mut resized = resize_bilinear(&plane, h, w, side);
        if let Some(n) = norm {
            resized.iter_mut().for_each(|v| *v = (*v - n.mean[c]) / n.std[c]);
        }
        data.extend(resized);
    }
    Tensor::new(vec![3, side, side], data)
}

/// Replicates a binary raster into three identical channels at side `S`.
pub fn raster_to_tensor(raster: &BnwRaster, side: usize) -> Tensor<f32> {
    let plane: Vec<f32> = raster.pixels().iter().map(|&p| p as f32).collect();
    let resized = resize_bilinear(&plane, raster.height(), raster.width(), side);
    let mut data = Vec::with_capacity(3 * side * side);
    for _ in 0..3 {
        data.extend_from_slice(&resized);
    }
    Tensor::new(vec![3, side, side], data).expect("side is positive")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_image(w: usize, h: usize, v: u8) -> RgbImage {
        RgbImage::new(w, h, vec![v; w * h * 3]).unwrap()
    }

    #[test]
    fn constant_gray_survives_resize() {
        let t = preprocess_rgb(&constant_image(37, 20, 128), 16, None).unwrap();
        assert_eq!(t.shape(), &[3, 16, 16]);
        for &v in t.data() {
            assert!((v - 128.0 / 255.0).abs() < 1e-6);
        }
    }

    #[test]
    fn same_size_is_pure_scaling() {
        let data: Vec<u8> = (0..8 * 8 * 3).map(|i| (i * 7 % 256) as u8).collect();
        let img = RgbImage::new(8, 8, data.clone()).unwrap();
        let t = preprocess_rgb(&img, 8, None).unwrap();
        for c in 0..3 {
            for p in 0..64 {
                assert_eq!(t.data()[c * 64 + p], data[p * 3 + c] as f32 / 255.0);
            }
        }
    }

    #[test]
    fn checkerboard_upscale_matches_reference_bilinear() {
        // Reference: sample point in source coordinates, weights from the
        // four surrounding pixels, edges replicated.
        let src = [[1.0f32, 0.0], [0.0, 1.0]];
        let reference = |oy: usize, ox: usize| -> f32 {
            let sy = ((oy as f32 + 0.5) / 2.0 - 0.5).clamp(0.0, 1.0);
            let sx = ((ox as f32 + 0.5) / 2.0 - 0.5).clamp(0.0, 1.0);
            let mut acc = 0.0;
            for (py, row) in src.iter().enumerate() {
                for (px, &v) in row.iter().enumerate() {
                    let wy = 1.0 - (sy - py as f32).abs();
                    let wx = 1.0 - (sx - px as f32).abs();
                    acc += v * wy.max(0.0) * wx.max(0.0);
                }
            }
            acc
        };
        let out = resize_bilinear(&[1.0, 0.0, 0.0, 1.0], 2, 2, 4);
        for oy in 1..3 {
            for ox in 1..3 {
                assert!((out[oy * 4 + ox] - reference(oy, ox)).abs() < 1e-6);
            }
        }
        // centre taps sit at 0.25 / 0.75
        assert!((out[4 + 1] - 0.625).abs() < 1e-6);
    }

    #[test]
    fn normalization_applies_per_channel() {
        let norm = ChannelNorm {
            mean: [0.5, 0.0, 1.0],
            std: [0.5, 1.0, 2.0],
        };
        let t = preprocess_rgb(&constant_image(8, 8, 255), 8, Some(&norm)).unwrap();
        assert_eq!(t.at(&[0, 0, 0]), 1.0);
        assert_eq!(t.at(&[1, 0, 0]), 1.0);
        assert_eq!(t.at(&[2, 0, 0]), 0.0);
    }

    #[test]
    fn empty_or_tiny_images_are_rejected() {
        assert!(RgbImage::new(0, 0, vec![]).is_err());
        assert!(preprocess_rgb(&constant_image(4, 4, 0), 8, None).is_err());
    }

    #[test]
    fn raster_channels_replicate() {
        let black = BnwRaster::black(10, 10);
        assert!(raster_to_tensor(&black, 10).data().iter().all(|&v| v == 0.0));

        let mut white = BnwRaster::black(10, 10);
        for y in 0..10 {
            white.draw_line((0, y), (9, y));
        }
        assert!(raster_to_tensor(&white, 6).data().iter().all(|&v| v == 1.0));

        let mut r = BnwRaster::black(12, 12);
        r.draw_line((0, 0), (11, 7));
        let t = raster_to_tensor(&r, 9);
        let n = 81;
        assert_eq!(&t.data()[..n], &t.data()[n..2 * n]);
        assert_eq!(&t.data()[..n], &t.data()[2 * n..]);
    }
}
