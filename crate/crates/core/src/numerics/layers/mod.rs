//! Layers with hand-written forward and backward passes.
//!
//! Every layer caches what its backward pass needs during `forward`, so the
//! calling convention is strictly forward-then-backward on the same batch.
//! Gradients accumulate into [`Parameter::grad`] until an optimizer step
//! clears them.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod pool;
mod residual;

pub use activation::{relu, sigmoid, Relu, Sigmoid};
pub use batchnorm::{batchnorm_forward, BatchNorm, BN_EPS, BN_MOMENTUM};
pub use conv::{conv2d_forward, conv_output_dim, Conv2d};
pub use dense::{dense_forward, Dense};
pub use dropout::{dropout_forward, Dropout};
pub use pool::{Flatten, GlobalAvgPool, MaxPool2d};
pub use residual::{residual_block_forward, ResidualBlock};

use super::{RngState, Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerMode {
    Train,
    Eval,
}

/// A trainable tensor together with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<T = f32> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

impl<T: Scalar> Parameter<T> {
    pub fn new(name: impl Into<String>, value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}

/// Non-trainable state that still belongs in a weights archive
/// (batch-norm running statistics).
#[derive(Debug, Clone, PartialEq)]
pub struct Buffer<T = f32> {
    pub name: String,
    pub value: Tensor<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Kaiming uniform, bound `sqrt(6 / fan_in)`; for layers feeding a ReLU.
    He,
    /// Glorot uniform, bound `sqrt(6 / (fan_in + fan_out))`.
    Xavier,
    Zeros,
}

impl Init {
    pub(crate) fn sample<T: Scalar>(
        self,
        shape: &[usize],
        fan_in: usize,
        fan_out: usize,
        rng: &mut RngState,
    ) -> Tensor<T> {
        let bound = match self {
            Init::He => (6.0 / fan_in as f64).sqrt(),
            Init::Xavier => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            Init::Zeros => return Tensor::zeros(shape),
        };
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| T::from_f64_lossy(rng.uniform_range(-bound, bound)))
            .collect();
        Tensor::new(shape.to_vec(), data).expect("shape matches sample count")
    }
}

#[derive(Debug, Clone)]
pub enum Layer<T: Scalar = f32> {
    Dense(Dense<T>),
    Relu(Relu<T>),
    Sigmoid(Sigmoid<T>),
    Dropout(Dropout<T>),
    BatchNorm(BatchNorm<T>),
    Conv2d(Conv2d<T>),
    MaxPool2d(MaxPool2d),
    GlobalAvgPool(GlobalAvgPool),
    Flatten(Flatten),
    Residual(Box<ResidualBlock<T>>),
}

impl<T: Scalar> Layer<T> {
    pub fn relu() -> Self {
        Layer::Relu(Relu::new())
    }

    pub fn sigmoid() -> Self {
        Layer::Sigmoid(Sigmoid::new())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Relu(_) => "relu",
            Layer::Sigmoid(_) => "sigmoid",
            Layer::Dropout(_) => "dropout",
            Layer::BatchNorm(_) => "batchnorm",
            Layer::Conv2d(_) => "conv2d",
            Layer::MaxPool2d(_) => "maxpool2d",
            Layer::GlobalAvgPool(_) => "global_avg_pool",
            Layer::Flatten(_) => "flatten",
            Layer::Residual(_) => "residual",
        }
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: LayerMode, rng: &mut RngState) -> Result<Tensor<T>> {
        match self {
            Layer::Dense(l) => l.forward(x),
            Layer::Relu(l) => Ok(l.forward(x)),
            Layer::Sigmoid(l) => Ok(l.forward(x)),
            Layer::Dropout(l) => l.forward(x, mode, rng),
            Layer::BatchNorm(l) => l.forward(x, mode),
            Layer::Conv2d(l) => l.forward(x),
            Layer::MaxPool2d(l) => l.forward(x),
            Layer::GlobalAvgPool(l) => l.forward(x),
            Layer::Flatten(l) => l.forward(x),
            Layer::Residual(l) => l.forward(x, mode, rng),
        }
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Layer::Dense(l) => l.backward(grad),
            Layer::Relu(l) => l.backward(grad),
            Layer::Sigmoid(l) => l.backward(grad),
            Layer::Dropout(l) => l.backward(grad),
            Layer::BatchNorm(l) => l.backward(grad),
            Layer::Conv2d(l) => l.backward(grad),
            Layer::MaxPool2d(l) => l.backward(grad),
            Layer::GlobalAvgPool(l) => l.backward(grad),
            Layer::Flatten(l) => l.backward(grad),
            Layer::Residual(l) => l.backward(grad),
        }
    }

    pub fn parameters(&self) -> Vec<&Parameter<T>> {
        match self {
            Layer::Dense(l) => vec![&l.weight, &l.bias],
            Layer::BatchNorm(l) => vec![&l.gamma, &l.beta],
            Layer::Conv2d(l) => vec![&l.weight, &l.bias],
            Layer::Residual(l) => l.layers().flat_map(Layer::parameters).collect(),
            _ => Vec::new(),
        }
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter<T>> {
        match self {
            Layer::Dense(l) => vec![&mut l.weight, &mut l.bias],
            Layer::BatchNorm(l) => vec![&mut l.gamma, &mut l.beta],
            Layer::Conv2d(l) => vec![&mut l.weight, &mut l.bias],
            Layer::Residual(l) => l.layers_mut().flat_map(Layer::parameters_mut).collect(),
            _ => Vec::new(),
        }
    }

    pub fn buffers(&self) -> Vec<&Buffer<T>> {
        match self {
            Layer::BatchNorm(l) => vec![&l.running_mean, &l.running_var],
            Layer::Residual(l) => l.layers().flat_map(Layer::buffers).collect(),
            _ => Vec::new(),
        }
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut Buffer<T>> {
        match self {
            Layer::BatchNorm(l) => vec![&mut l.running_mean, &mut l.running_var],
            Layer::Residual(l) => l.layers_mut().flat_map(Layer::buffers_mut).collect(),
            _ => Vec::new(),
        }
    }

    /// Whether a train-mode forward draws from the generator.
    pub fn uses_rng(&self) -> bool {
        match self {
            Layer::Dropout(_) => true,
            Layer::Residual(l) => l.layers().any(Layer::uses_rng),
            _ => false,
        }
    }
}

pub(crate) fn missing_cache(layer: &str) -> Error {
    Error::Protocol(format!("{layer}: backward called without a preceding forward"))
}
