use super::{missing_cache, Init, Parameter};
use crate::error::{Error, Result};
use crate::numerics::linalg::{gemm, gemm_at, gemm_bt};
use crate::numerics::{RngState, Scalar, Tensor};

/// Spatial output size of a convolution or pooling window:
/// `floor((size + 2·padding - kernel) / stride) + 1`.
pub fn conv_output_dim(size: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    if stride == 0 {
        return Err(Error::Parameter("stride must be positive".into()));
    }
    let padded = size + 2 * padding;
    if padded < kernel {
        return Err(Error::Shape(format!(
            "kernel {kernel} larger than padded input {padded}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    channels: usize,
    height: usize,
    width: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    out_h: usize,
    out_w: usize,
}

impl Geometry {
    fn patch_len(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    fn positions(&self) -> usize {
        self.out_h * self.out_w
    }

    /// Source pixel for kernel offset `(ky, kx)` at output `(oy, ox)`, if inside the image.
    #[inline]
    fn source(&self, oy: usize, ox: usize, ky: usize, kx: usize) -> Option<(usize, usize)> {
        let y = (oy * self.stride + ky) as isize - self.padding as isize;
        let x = (ox * self.stride + kx) as isize - self.padding as isize;
        if y < 0 || x < 0 || y >= self.height as isize || x >= self.width as isize {
            None
        } else {
            Some((y as usize, x as usize))
        }
    }

    /// Unfolds one image `[C, H, W]` into columns `[C·k·k, H'·W']`.
    fn im2col<T: Scalar>(&self, image: &[T], cols: &mut [T]) {
        let p = self.positions();
        let k = self.kernel;
        for c in 0..self.channels {
            let plane = &image[c * self.height * self.width..(c + 1) * self.height * self.width];
            for ky in 0..k {
                for kx in 0..k {
                    let row = (c * k + ky) * k + kx;
                    let dst = &mut cols[row * p..(row + 1) * p];
                    for oy in 0..self.out_h {
                        for ox in 0..self.out_w {
                            dst[oy * self.out_w + ox] = match self.source(oy, ox, ky, kx) {
                                Some((y, x)) => plane[y * self.width + x],
                                None => T::zero(),
                            };
                        }
                    }
                }
            }
        }
    }

    /// Scatters column gradients back onto an image gradient `[C, H, W]`.
    fn col2im<T: Scalar>(&self, cols: &[T], image: &mut [T]) {
        let p = self.positions();
        let k = self.kernel;
        for c in 0..self.channels {
            let plane = &mut image[c * self.height * self.width..(c + 1) * self.height * self.width];
            for ky in 0..k {
                for kx in 0..k {
                    let row = (c * k + ky) * k + kx;
                    let src = &cols[row * p..(row + 1) * p];
                    for oy in 0..self.out_h {
                        for ox in 0..self.out_w {
                            if let Some((y, x)) = self.source(oy, ox, ky, kx) {
                                plane[y * self.width + x] += src[oy * self.out_w + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

fn geometry<T: Scalar>(x: &Tensor<T>, kernel: &Tensor<T>, stride: usize, padding: usize) -> Result<Geometry> {
    x.expect_rank("conv2d", 4)?;
    kernel.expect_rank("conv2d", 4)?;
    let (c, h, w) = (x.shape()[1], x.shape()[2], x.shape()[3]);
    let ks = kernel.shape();
    if ks[1] != c || ks[2] != ks[3] {
        return Err(Error::dim("conv2d", x.shape(), ks));
    }
    Ok(Geometry {
        channels: c,
        height: h,
        width: w,
        kernel: ks[2],
        stride,
        padding,
        out_h: conv_output_dim(h, ks[2], stride, padding)?,
        out_w: conv_output_dim(w, ks[2], stride, padding)?,
    })
}

/// 2-d cross-correlation of `x: [B, C, H, W]` with `kernel: [K, C, k, k]`.
pub fn conv2d_forward<T: Scalar>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>> {
    let geo = geometry(x, kernel, stride, padding)?;
    let out_channels = kernel.shape()[0];
    bias.expect_shape("conv2d", &[out_channels])?;
    let batch = x.shape()[0];
    let p = geo.positions();
    let image_len = x.row_len();

    let mut cols = vec![T::zero(); geo.patch_len() * p];
    let mut out = vec![T::zero(); batch * out_channels * p];
    for b in 0..batch {
        geo.im2col(&x.data()[b * image_len..(b + 1) * image_len], &mut cols);
        let dst = &mut out[b * out_channels * p..(b + 1) * out_channels * p];
        for (k, chunk) in dst.chunks_mut(p).enumerate() {
            chunk.fill(bias.data()[k]);
        }
        gemm(kernel.data(), &cols, dst, out_channels, geo.patch_len(), p);
    }
    Tensor::new(vec![batch, out_channels, geo.out_h, geo.out_w], out)
}

#[derive(Debug, Clone)]
pub struct Conv2d<T: Scalar = f32> {
    pub weight: Parameter<T>,
    pub bias: Parameter<T>,
    stride: usize,
    padding: usize,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Conv2d<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        init: Init,
        rng: &mut RngState,
    ) -> Self {
        let fan_in = in_channels * kernel * kernel;
        let fan_out = out_channels * kernel * kernel;
        let w = init.sample(&[out_channels, in_channels, kernel, kernel], fan_in, fan_out, rng);
        Self {
            weight: Parameter::new(format!("{name}.weight"), w),
            bias: Parameter::new(format!("{name}.bias"), Tensor::zeros(&[out_channels])),
            stride,
            padding,
            input: None,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weight.value.shape()[2]
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let out = conv2d_forward(x, &self.weight.value, &self.bias.value, self.stride, self.padding)?;
        self.input = Some(x.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.input.as_ref().ok_or_else(|| missing_cache("conv2d"))?;
        let geo = geometry(x, &self.weight.value, self.stride, self.padding)?;
        let batch = x.shape()[0];
        let k = self.out_channels();
        grad.expect_shape("conv2d_backward", &[batch, k, geo.out_h, geo.out_w])?;

        let p = geo.positions();
        let patch = geo.patch_len();
        let image_len = x.row_len();
        let mut cols = vec![T::zero(); patch * p];
        let mut dcols = vec![T::zero(); patch * p];
        let mut dx = vec![T::zero(); x.len()];

        for b in 0..batch {
            let g = &grad.data()[b * k * p..(b + 1) * k * p];
            geo.im2col(&x.data()[b * image_len..(b + 1) * image_len], &mut cols);
            gemm_bt(g, &cols, self.weight.grad.data_mut(), k, p, patch);
            for (acc, chunk) in self.bias.grad.data_mut().iter_mut().zip(g.chunks(p)) {
                *acc += chunk.iter().copied().sum();
            }
            dcols.fill(T::zero());
            gemm_at(self.weight.value.data(), g, &mut dcols, patch, k, p);
            geo.col2im(&dcols, &mut dx[b * image_len..(b + 1) * image_len]);
        }
        Tensor::new(x.shape().to_vec(), dx)
    }
}
