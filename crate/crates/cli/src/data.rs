//! Model inputs assembled from cache entries.

use palsy_core::dataset::{BinaryLabel, FrameRecord};
use palsy_core::models::TrainingSource;
use palsy_core::numerics::Tensor;

use crate::cache::{Cache, CacheKind};

/// What one model input looks like for a single frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    /// `[250]` flattened subset coordinates.
    Coords,
    /// `[52]`
    Blend,
    /// `[3, S, S]`
    Rgb,
    /// `[3, S, S]`, the binary raster repeated on every channel.
    Bnw,
    /// `[6, S, S]`, RGB followed by the repeated raster.
    Dual,
}

fn repeat_channels(raster: &Tensor, times: usize) -> Tensor {
    let mut shape = vec![times];
    shape.extend_from_slice(raster.shape());
    let data = raster.data().repeat(times);
    Tensor::new(shape, data).expect("repeated plane")
}

fn concat_channels(a: &Tensor, b: &Tensor) -> palsy_core::Result<Tensor> {
    let mut shape = a.shape().to_vec();
    shape[0] += b.shape()[0];
    let mut data = a.data().to_vec();
    data.extend_from_slice(b.data());
    Tensor::new(shape, data)
}

impl InputKind {
    pub fn load(self, cache: &Cache, frame: &FrameRecord) -> crate::error::Result<Tensor> {
        let key = &frame.key;
        Ok(match self {
            InputKind::Coords => {
                let t = cache.load(key, CacheKind::Coords)?;
                let n = t.len();
                t.reshape(&[n])?
            }
            InputKind::Blend => cache.load(key, CacheKind::Blend)?,
            InputKind::Rgb => cache.load(key, CacheKind::Rgb)?,
            InputKind::Bnw => repeat_channels(&cache.load(key, CacheKind::Bnw)?, 3),
            InputKind::Dual => {
                let rgb = cache.load(key, CacheKind::Rgb)?;
                let bnw = repeat_channels(&cache.load(key, CacheKind::Bnw)?, 3);
                concat_channels(&rgb, &bnw)?
            }
        })
    }
}

/// Frames read from the cache on demand, one tensor per input kind.
pub struct CacheSource<'a> {
    cache: &'a Cache,
    frames: Vec<&'a FrameRecord>,
    kinds: Vec<InputKind>,
}

impl<'a> CacheSource<'a> {
    pub fn new(cache: &'a Cache, frames: Vec<&'a FrameRecord>, kinds: Vec<InputKind>) -> Self {
        Self { cache, frames, kinds }
    }

    pub fn labels(&self) -> Vec<BinaryLabel> {
        self.frames.iter().map(|f| f.label()).collect()
    }
}

impl TrainingSource for CacheSource<'_> {
    fn len(&self) -> usize {
        self.frames.len()
    }

    fn fetch(&self, items: &[usize]) -> palsy_core::Result<(Vec<Tensor>, Vec<BinaryLabel>)> {
        let mut inputs = Vec::with_capacity(self.kinds.len());
        for &kind in &self.kinds {
            let per_frame = items
                .iter()
                .map(|&i| {
                    kind.load(self.cache, self.frames[i]).map_err(|e| match e {
                        crate::error::CliError::Core(c) => c,
                        other => palsy_core::Error::Input(other.one_line()),
                    })
                })
                .collect::<palsy_core::Result<Vec<_>>>()?;
            inputs.push(Tensor::stack(&per_frame)?);
        }
        Ok((inputs, items.iter().map(|&i| self.frames[i].label()).collect()))
    }
}
