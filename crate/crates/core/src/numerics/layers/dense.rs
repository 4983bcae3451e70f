use super::{missing_cache, Init, Parameter};
use crate::error::{Error, Result};
use crate::numerics::linalg::{gemm, gemm_at, gemm_bt};
use crate::numerics::{RngState, Scalar, Tensor};

/// `out[b, o] = Σ_i weight[o, i] · x[b, i] + bias[o]`
pub fn dense_forward<T: Scalar>(x: &Tensor<T>, weight: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    x.expect_rank("dense_forward", 2)?;
    weight.expect_rank("dense_forward", 2)?;
    let (batch, in_dim) = (x.shape()[0], x.shape()[1]);
    let (out_dim, w_in) = (weight.shape()[0], weight.shape()[1]);
    if w_in != in_dim {
        return Err(Error::dim("dense_forward", x.shape(), weight.shape()));
    }
    bias.expect_shape("dense_forward", &[out_dim])?;

    let mut out = Vec::with_capacity(batch * out_dim);
    for _ in 0..batch {
        out.extend_from_slice(bias.data());
    }
    gemm_bt(x.data(), weight.data(), &mut out, batch, in_dim, out_dim);
    Tensor::new(vec![batch, out_dim], out)
}

/// Fully connected layer with weight shape `[out, in]`.
#[derive(Debug, Clone)]
pub struct Dense<T: Scalar = f32> {
    pub weight: Parameter<T>,
    pub bias: Parameter<T>,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(name: &str, in_dim: usize, out_dim: usize, init: Init, rng: &mut RngState) -> Self {
        let w = init.sample(&[out_dim, in_dim], in_dim, out_dim, rng);
        Self {
            weight: Parameter::new(format!("{name}.weight"), w),
            bias: Parameter::new(format!("{name}.bias"), Tensor::zeros(&[out_dim])),
            input: None,
        }
    }

    pub fn from_parts(name: &str, weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        weight.expect_rank("dense", 2)?;
        bias.expect_shape("dense", &[weight.shape()[0]])?;
        Ok(Self {
            weight: Parameter::new(format!("{name}.weight"), weight),
            bias: Parameter::new(format!("{name}.bias"), bias),
            input: None,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let out = dense_forward(x, &self.weight.value, &self.bias.value)?;
        self.input = Some(x.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.input.as_ref().ok_or_else(|| missing_cache("dense"))?;
        let (batch, in_dim, out_dim) = (x.shape()[0], self.in_dim(), self.out_dim());
        grad.expect_shape("dense_backward", &[batch, out_dim])?;

        gemm_at(grad.data(), x.data(), self.weight.grad.data_mut(), out_dim, batch, in_dim);
        let db = self.bias.grad.data_mut();
        for b in 0..batch {
            for (acc, &g) in db.iter_mut().zip(grad.row(b)) {
                *acc += g;
            }
        }
        let mut dx = vec![T::zero(); batch * in_dim];
        gemm(grad.data(), self.weight.value.data(), &mut dx, batch, out_dim, in_dim);
        Tensor::new(vec![batch, in_dim], dx)
    }
}
