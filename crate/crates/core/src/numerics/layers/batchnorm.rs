use super::{missing_cache, Buffer, LayerMode, Parameter};
use crate::error::{Error, Result};
use crate::numerics::{Scalar, Tensor};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Per-feature layout of a `[B, F]` or `[B, C, H, W]` tensor.
#[derive(Debug, Clone, Copy)]
struct Layout {
    batch: usize,
    features: usize,
    inner: usize,
}

impl Layout {
    fn of<T: Scalar>(x: &Tensor<T>, features: usize) -> Result<Self> {
        let s = x.shape();
        let (batch, f, inner) = match s.len() {
            2 => (s[0], s[1], 1),
            4 => (s[0], s[1], s[2] * s[3]),
            _ => {
                return Err(Error::Shape(format!(
                    "batchnorm expects [B, F] or [B, C, H, W], got {s:?}"
                )))
            }
        };
        if f != features {
            return Err(Error::dim("batchnorm", s, &[batch, features]));
        }
        Ok(Self {
            batch,
            features,
            inner,
        })
    }

    fn count(&self) -> usize {
        self.batch * self.inner
    }

    /// Calls `f(flat_index)` for every element of feature `c`.
    fn for_feature(&self, c: usize, mut f: impl FnMut(usize)) {
        for b in 0..self.batch {
            let base = (b * self.features + c) * self.inner;
            for i in base..base + self.inner {
                f(i);
            }
        }
    }
}

struct Normalized<T> {
    out: Tensor<T>,
    x_hat: Vec<T>,
    inv_std: Vec<T>,
    batch_stats: Option<(Vec<T>, Vec<T>)>,
}

fn normalize<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    running: (&Tensor<T>, &Tensor<T>),
    mode: LayerMode,
) -> Result<Normalized<T>> {
    let lay = Layout::of(x, gamma.len())?;
    beta.expect_shape("batchnorm", gamma.shape())?;
    let eps = T::from_f64_lossy(BN_EPS);
    let xs = x.data();

    let (mean, var, batch_stats) = match mode {
        LayerMode::Train => {
            if lay.batch < 2 {
                return Err(Error::BatchSize(lay.batch));
            }
            let n = T::from_usize(lay.count()).unwrap();
            let mut mean = vec![T::zero(); lay.features];
            let mut var = vec![T::zero(); lay.features];
            for c in 0..lay.features {
                let mut s = T::zero();
                lay.for_feature(c, |i| s += xs[i]);
                let mu = s / n;
                let mut ss = T::zero();
                lay.for_feature(c, |i| {
                    let d = xs[i] - mu;
                    ss += d * d;
                });
                mean[c] = mu;
                var[c] = ss / n;
            }
            (mean.clone(), var.clone(), Some((mean, var)))
        }
        LayerMode::Eval => (running.0.data().to_vec(), running.1.data().to_vec(), None),
    };

    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let mut x_hat = vec![T::zero(); xs.len()];
    let mut out = vec![T::zero(); xs.len()];
    for c in 0..lay.features {
        let (g, b) = (gamma.data()[c], beta.data()[c]);
        lay.for_feature(c, |i| {
            let h = (xs[i] - mean[c]) * inv_std[c];
            x_hat[i] = h;
            out[i] = g * h + b;
        });
    }
    Ok(Normalized {
        out: Tensor::new(x.shape().to_vec(), out)?,
        x_hat,
        inv_std,
        batch_stats,
    })
}

fn update_running<T: Scalar>(
    running_mean: &mut Tensor<T>,
    running_var: &mut Tensor<T>,
    (mean, var): (&[T], &[T]),
    count: usize,
) {
    let m = T::from_f64_lossy(BN_MOMENTUM);
    let unbias = T::from_f64_lossy(count as f64 / (count as f64 - 1.0));
    for (r, &mu) in running_mean.data_mut().iter_mut().zip(mean) {
        *r = (T::one() - m) * *r + m * mu;
    }
    for (r, &v) in running_var.data_mut().iter_mut().zip(var) {
        *r = (T::one() - m) * *r + m * v * unbias;
    }
}

/// Functional batch normalization over the batch (and spatial) axes.
///
/// Train mode normalizes with batch statistics and folds them into the
/// running estimates; eval mode normalizes with the running estimates.
pub fn batchnorm_forward<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    running_mean: &mut Tensor<T>,
    running_var: &mut Tensor<T>,
    mode: LayerMode,
) -> Result<Tensor<T>> {
    let norm = normalize(x, gamma, beta, (running_mean, running_var), mode)?;
    if let Some((mean, var)) = &norm.batch_stats {
        let count = Layout::of(x, gamma.len())?.count();
        update_running(running_mean, running_var, (mean, var), count);
    }
    Ok(norm.out)
}

#[derive(Debug, Clone)]
struct BnCache<T> {
    shape: Vec<usize>,
    x_hat: Vec<T>,
    inv_std: Vec<T>,
    mode: LayerMode,
}

/// Batch normalization over `[B, F]` (1-d) or per channel over `[B, C, H, W]`.
#[derive(Debug, Clone)]
pub struct BatchNorm<T: Scalar = f32> {
    pub gamma: Parameter<T>,
    pub beta: Parameter<T>,
    pub running_mean: Buffer<T>,
    pub running_var: Buffer<T>,
    cache: Option<BnCache<T>>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(name: &str, features: usize) -> Self {
        Self {
            gamma: Parameter::new(format!("{name}.weight"), Tensor::full(&[features], T::one())),
            beta: Parameter::new(format!("{name}.bias"), Tensor::zeros(&[features])),
            running_mean: Buffer {
                name: format!("{name}.running_mean"),
                value: Tensor::zeros(&[features]),
            },
            running_var: Buffer {
                name: format!("{name}.running_var"),
                value: Tensor::full(&[features], T::one()),
            },
            cache: None,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.value.len()
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: LayerMode) -> Result<Tensor<T>> {
        let norm = normalize(
            x,
            &self.gamma.value,
            &self.beta.value,
            (&self.running_mean.value, &self.running_var.value),
            mode,
        )?;
        if let Some((mean, var)) = &norm.batch_stats {
            let count = Layout::of(x, self.features())?.count();
            update_running(
                &mut self.running_mean.value,
                &mut self.running_var.value,
                (mean, var),
                count,
            );
        }
        self.cache = Some(BnCache {
            shape: x.shape().to_vec(),
            x_hat: norm.x_hat,
            inv_std: norm.inv_std,
            mode,
        });
        Ok(norm.out)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self.cache.as_ref().ok_or_else(|| missing_cache("batchnorm"))?;
        grad.expect_shape("batchnorm_backward", &cache.shape)?;
        let lay = Layout::of(grad, self.features())?;
        let g = grad.data();
        let n = T::from_usize(lay.count()).unwrap();
        let mut dx = vec![T::zero(); g.len()];

        for c in 0..lay.features {
            let mut sum_g = T::zero();
            let mut sum_gx = T::zero();
            lay.for_feature(c, |i| {
                sum_g += g[i];
                sum_gx += g[i] * cache.x_hat[i];
            });
            self.gamma.grad.data_mut()[c] += sum_gx;
            self.beta.grad.data_mut()[c] += sum_g;

            let scale = self.gamma.value.data()[c] * cache.inv_std[c];
            match cache.mode {
                LayerMode::Train => {
                    let k = scale / n;
                    lay.for_feature(c, |i| {
                        dx[i] = k * (n * g[i] - sum_g - cache.x_hat[i] * sum_gx);
                    });
                }
                LayerMode::Eval => lay.for_feature(c, |i| dx[i] = scale * g[i]),
            }
        }
        Tensor::new(cache.shape.clone(), dx)
    }
}
