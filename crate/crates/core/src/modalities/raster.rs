use super::contour::ContourSpec;
use super::landmarks::{LandmarkSet, LANDMARK_COUNT};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const MIN_RASTER_SIDE: usize = 8;

/// Binary line-segment image: 0 is black, 1 is white. Row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BnwRaster {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl BnwRaster {
    pub fn black(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn count_set(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1).count()
    }

    fn set(&mut self, x: i64, y: i64) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.pixels[y as usize * self.width + x as usize] = 1;
        }
    }

    /// Integer Bresenham line between two pixel centres, endpoints included.
    pub fn draw_line(&mut self, (x0, y0): (i64, i64), (x1, y1): (i64, i64)) {
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let (mut x, mut y) = (x0, y0);
        let mut err = dx + dy;
        loop {
            self.set(x, y);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    /// `[H, W]` tensor of 0.0 / 1.0.
    pub fn to_tensor(&self) -> Tensor<f32> {
        let data = self.pixels.iter().map(|&p| p as f32).collect();
        Tensor::new(vec![self.height, self.width], data).expect("raster dims are positive")
    }

    pub fn from_tensor(t: &Tensor<f32>) -> Result<Self> {
        t.expect_rank("raster", 2)?;
        let mut pixels = Vec::with_capacity(t.len());
        for &v in t.data() {
            pixels.push(match v {
                0.0 => 0,
                1.0 => 1,
                other => return Err(Error::Input(format!("raster value {other} is not binary"))),
            });
        }
        Ok(Self {
            width: t.shape()[1],
            height: t.shape()[0],
            pixels,
        })
    }
}

/// Normalized landmark coordinate to pixel: `round(v · (side - 1))`.
pub fn to_pixel(v: f64, side: usize) -> i64 {
    (v * (side - 1) as f64).round() as i64
}

/// Draws every contour segment of `spec` in white on a black canvas.
pub fn rasterize_contours(lm: &LandmarkSet, spec: &ContourSpec, width: usize, height: usize) -> Result<BnwRaster> {
    if width < MIN_RASTER_SIDE || height < MIN_RASTER_SIDE {
        return Err(Error::Input(format!(
            "raster must be at least {MIN_RASTER_SIDE}×{MIN_RASTER_SIDE}, got {width}×{height}"
        )));
    }
    spec.validate()?;
    let mut raster = BnwRaster::black(width, height);
    for (a, b) in spec.segments() {
        debug_assert!(a < LANDMARK_COUNT && b < LANDMARK_COUNT);
        let (ax, ay) = lm.xy(a);
        let (bx, by) = lm.xy(b);
        raster.draw_line(
            (to_pixel(ax, width), to_pixel(ay, height)),
            (to_pixel(bx, width), to_pixel(by, height)),
        );
    }
    Ok(raster)
}
