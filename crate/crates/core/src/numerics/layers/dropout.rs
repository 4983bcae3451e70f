use super::{missing_cache, LayerMode};
use crate::error::{Error, Result};
use crate::numerics::{RngState, Scalar, Tensor};

fn check_p(p: f64) -> Result<()> {
    if (0.0..1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("dropout probability must be in [0, 1), got {p}")))
    }
}

/// Inverted dropout mask: 0 for dropped elements, `1/(1-p)` for survivors.
fn draw_mask<T: Scalar>(n: usize, p: f64, rng: &mut RngState) -> Vec<T> {
    let keep = T::from_f64_lossy(1.0 / (1.0 - p));
    (0..n)
        .map(|_| if rng.uniform() < p { T::zero() } else { keep })
        .collect()
}

/// Functional dropout. Eval mode is the identity; train mode zeroes each
/// element with probability `p` and rescales survivors by `1/(1-p)`.
pub fn dropout_forward<T: Scalar>(x: &Tensor<T>, p: f64, mode: LayerMode, rng: &mut RngState) -> Result<Tensor<T>> {
    check_p(p)?;
    match mode {
        LayerMode::Eval => Ok(x.clone()),
        LayerMode::Train => {
            let mask = draw_mask::<T>(x.len(), p, rng);
            let data = x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
            Tensor::new(x.shape().to_vec(), data)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dropout<T: Scalar = f32> {
    p: f64,
    /// `None` after an eval-mode forward, where backward is the identity.
    mask: Option<Option<Vec<T>>>,
}

impl<T: Scalar> Dropout<T> {
    pub fn new(p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(Self { p, mask: None })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: LayerMode, rng: &mut RngState) -> Result<Tensor<T>> {
        match mode {
            LayerMode::Eval => {
                self.mask = Some(None);
                Ok(x.clone())
            }
            LayerMode::Train => {
                let mask = draw_mask::<T>(x.len(), self.p, rng);
                let data = x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
                self.mask = Some(Some(mask));
                Tensor::new(x.shape().to_vec(), data)
            }
        }
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        match self.mask.as_ref().ok_or_else(|| missing_cache("dropout"))? {
            None => Ok(grad.clone()),
            Some(mask) => {
                if mask.len() != grad.len() {
                    return Err(Error::dim("dropout_backward", &[mask.len()], grad.shape()));
                }
                let data = grad.data().iter().zip(mask).map(|(&g, &m)| g * m).collect();
                Tensor::new(grad.shape().to_vec(), data)
            }
        }
    }
}
