//! The four model inputs derived from a frame: a 125×2 landmark coordinate
//! matrix, the 52 facial-expression scores, a black-and-white contour
//! raster, and the resized RGB image.

mod blendshapes;
mod contour;
mod landmarks;
mod raster;
mod rgb;

pub use blendshapes::{BlendshapeVector, BLENDSHAPE_COUNT, BLENDSHAPE_NAMES};
pub use contour::{ContourGroup, ContourSpec};
pub use landmarks::{select_landmark_subset, CoordinateMatrix, LandmarkSet, LandmarkSubset, LANDMARK_COUNT, SUBSET_SIZE};
pub use raster::{rasterize_contours, to_pixel, BnwRaster, MIN_RASTER_SIDE};
pub use rgb::{preprocess_rgb, raster_to_tensor, resize_bilinear, ChannelNorm, RgbImage};

/// Default CNN input side and contour canvas size.
pub const DEFAULT_SIDE: usize = 224;
