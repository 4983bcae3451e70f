use super::conv::conv_output_dim;
use super::missing_cache;
use crate::error::Result;
use crate::numerics::{Scalar, Tensor};

/// Max pooling over square windows; padded positions never win.
#[derive(Debug, Clone)]
pub struct MaxPool2d {
    kernel: usize,
    stride: usize,
    padding: usize,
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool2d {
    pub fn new(kernel: usize, stride: usize, padding: usize) -> Self {
        Self {
            kernel,
            stride,
            padding,
            cache: None,
        }
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        x.expect_rank("maxpool2d", 4)?;
        let s = x.shape();
        let (planes, h, w) = (s[0] * s[1], s[2], s[3]);
        let oh = conv_output_dim(h, self.kernel, self.stride, self.padding)?;
        let ow = conv_output_dim(w, self.kernel, self.stride, self.padding)?;
        let mut out = Vec::with_capacity(planes * oh * ow);
        let mut argmax = Vec::with_capacity(planes * oh * ow);
        for plane in 0..planes {
            let base = plane * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best: Option<(T, usize)> = None;
                    for ky in 0..self.kernel {
                        for kx in 0..self.kernel {
                            let y = (oy * self.stride + ky) as isize - self.padding as isize;
                            let xx = (ox * self.stride + kx) as isize - self.padding as isize;
                            if y < 0 || xx < 0 || y >= h as isize || xx >= w as isize {
                                continue;
                            }
                            let idx = base + y as usize * w + xx as usize;
                            let v = x.data()[idx];
                            if best.is_none_or(|(b, _)| v > b) {
                                best = Some((v, idx));
                            }
                        }
                    }
                    // conv_output_dim guarantees every window overlaps the image
                    let (v, idx) = best.expect("window overlaps input");
                    out.push(v);
                    argmax.push(idx);
                }
            }
        }
        self.cache = Some((s.to_vec(), argmax));
        Tensor::new(vec![s[0], s[1], oh, ow], out)
    }

    pub fn backward<T: Scalar>(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let (shape, argmax) = self.cache.as_ref().ok_or_else(|| missing_cache("maxpool2d"))?;
        let mut dx = Tensor::zeros(shape);
        let d = dx.data_mut();
        for (&g, &idx) in grad.data().iter().zip(argmax) {
            d[idx] += g;
        }
        Ok(dx)
    }
}

/// `[B, C, H, W] → [B, C]` spatial mean.
#[derive(Debug, Clone, Default)]
pub struct GlobalAvgPool {
    shape: Option<Vec<usize>>,
}

impl GlobalAvgPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        x.expect_rank("global_avg_pool", 4)?;
        let s = x.shape();
        let hw = s[2] * s[3];
        let inv = T::one() / T::from_usize(hw).unwrap();
        let out = x.data().chunks(hw).map(|c| c.iter().copied().sum::<T>() * inv).collect();
        self.shape = Some(s.to_vec());
        Tensor::new(vec![s[0], s[1]], out)
    }

    pub fn backward<T: Scalar>(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let shape = self.shape.as_ref().ok_or_else(|| missing_cache("global_avg_pool"))?;
        grad.expect_shape("global_avg_pool_backward", &shape[..2])?;
        let hw = shape[2] * shape[3];
        let inv = T::one() / T::from_usize(hw).unwrap();
        let data = grad
            .data()
            .iter()
            .flat_map(|&g| std::iter::repeat_n(g * inv, hw))
            .collect();
        Tensor::new(shape.clone(), data)
    }
}

/// `[B, ...] → [B, prod(...)]`
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    shape: Option<Vec<usize>>,
}

impl Flatten {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.shape = Some(x.shape().to_vec());
        x.clone().reshape(&[x.batch(), x.row_len()])
    }

    pub fn backward<T: Scalar>(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let shape = self.shape.as_ref().ok_or_else(|| missing_cache("flatten"))?;
        grad.clone().reshape(shape)
    }
}
