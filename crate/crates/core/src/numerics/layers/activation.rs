use super::missing_cache;
use crate::error::Result;
use crate::numerics::{Scalar, Tensor};

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Logistic function, evaluated without overflow for large `|x|` and kept
/// strictly inside `(0, 1)` even where the exact value rounds to 0 or 1.
pub fn sigmoid<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let hi = T::one() - T::epsilon() / T::from_f64_lossy(2.0);
    let lo = T::min_positive_value();
    x.map(|v| {
        let s = if v >= T::zero() {
            T::one() / (T::one() + (-v).exp())
        } else {
            let e = v.exp();
            e / (T::one() + e)
        };
        s.max(lo).min(hi)
    })
}

#[derive(Debug, Clone, Default)]
pub struct Relu<T: Scalar = f32> {
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Relu<T> {
    pub fn new() -> Self {
        Self { input: None }
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Tensor<T> {
        self.input = Some(x.clone());
        relu(x)
    }

    /// Subgradient at exactly zero is taken as 0.
    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.input.as_ref().ok_or_else(|| missing_cache("relu"))?;
        grad.zip_map(x, |g, v| if v > T::zero() { g } else { T::zero() })
    }
}

#[derive(Debug, Clone, Default)]
pub struct Sigmoid<T: Scalar = f32> {
    output: Option<Tensor<T>>,
}

impl<T: Scalar> Sigmoid<T> {
    pub fn new() -> Self {
        Self { output: None }
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Tensor<T> {
        let out = sigmoid(x);
        self.output = Some(out.clone());
        out
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let s = self.output.as_ref().ok_or_else(|| missing_cache("sigmoid"))?;
        grad.zip_map(s, |g, s| g * s * (T::one() - s))
    }
}
