use super::{missing_cache, BatchNorm, Conv2d, Init, Layer, LayerMode, Relu};
use crate::error::{Error, Result};
use crate::numerics::{RngState, Scalar, Tensor};

/// `out = relu(F(x) + shortcut(x))`.
///
/// `main` holds the residual branch `F`; an empty `shortcut` is the identity,
/// otherwise it is a projection (1×1 conv + batch norm) used when the block
/// changes channel count or resolution.
#[derive(Debug, Clone)]
pub struct ResidualBlock<T: Scalar = f32> {
    main: Vec<Layer<T>>,
    shortcut: Vec<Layer<T>>,
    sum: Option<Tensor<T>>,
}

fn conv_bn<T: Scalar>(
    layers: &mut Vec<Layer<T>>,
    name: &str,
    cin: usize,
    cout: usize,
    kernel: usize,
    stride: usize,
    rng: &mut RngState,
) {
    layers.push(Layer::Conv2d(Conv2d::new(
        &format!("{name}.conv"),
        cin,
        cout,
        kernel,
        stride,
        kernel / 2,
        Init::He,
        rng,
    )));
    layers.push(Layer::BatchNorm(BatchNorm::new(&format!("{name}.bn"), cout)));
}

fn projection<T: Scalar>(name: &str, cin: usize, cout: usize, stride: usize, rng: &mut RngState) -> Vec<Layer<T>> {
    if cin == cout && stride == 1 {
        Vec::new()
    } else {
        let mut sc = Vec::new();
        conv_bn(&mut sc, &format!("{name}.shortcut"), cin, cout, 1, stride, rng);
        sc
    }
}

impl<T: Scalar> ResidualBlock<T> {
    pub fn from_parts(main: Vec<Layer<T>>, shortcut: Vec<Layer<T>>) -> Self {
        Self {
            main,
            shortcut,
            sum: None,
        }
    }

    /// Two 3×3 convolutions: conv→bn→relu→conv→bn.
    pub fn basic(name: &str, cin: usize, cout: usize, stride: usize, rng: &mut RngState) -> Self {
        let mut main = Vec::new();
        conv_bn(&mut main, &format!("{name}.0"), cin, cout, 3, stride, rng);
        main.push(Layer::Relu(Relu::new()));
        conv_bn(&mut main, &format!("{name}.1"), cout, cout, 3, 1, rng);
        let shortcut = projection(name, cin, cout, stride, rng);
        Self::from_parts(main, shortcut)
    }

    /// 1×1 reduce → 3×3 (strided) → 1×1 expand to `width · 4` channels.
    pub fn bottleneck(name: &str, cin: usize, width: usize, stride: usize, rng: &mut RngState) -> Self {
        let cout = width * 4;
        let mut main = Vec::new();
        conv_bn(&mut main, &format!("{name}.0"), cin, width, 1, 1, rng);
        main.push(Layer::Relu(Relu::new()));
        conv_bn(&mut main, &format!("{name}.1"), width, width, 3, stride, rng);
        main.push(Layer::Relu(Relu::new()));
        conv_bn(&mut main, &format!("{name}.2"), width, cout, 1, 1, rng);
        let shortcut = projection(name, cin, cout, stride, rng);
        Self::from_parts(main, shortcut)
    }

    pub fn has_projection(&self) -> bool {
        !self.shortcut.is_empty()
    }

    pub fn out_channels(&self) -> usize {
        self.main
            .iter()
            .rev()
            .find_map(|l| match l {
                Layer::Conv2d(c) => Some(c.out_channels()),
                _ => None,
            })
            .unwrap_or(0)
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer<T>> {
        self.main.iter().chain(&self.shortcut)
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer<T>> {
        self.main.iter_mut().chain(self.shortcut.iter_mut())
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: LayerMode, rng: &mut RngState) -> Result<Tensor<T>> {
        let mut f = x.clone();
        for layer in &mut self.main {
            f = layer.forward(&f, mode, rng)?;
        }
        let mut s = x.clone();
        for layer in &mut self.shortcut {
            s = layer.forward(&s, mode, rng)?;
        }
        if f.shape() != s.shape() {
            return Err(Error::dim("residual_block", f.shape(), s.shape()));
        }
        let sum = f.zip_map(&s, |a, b| a + b)?;
        let out = super::relu(&sum);
        self.sum = Some(sum);
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let sum = self.sum.as_ref().ok_or_else(|| missing_cache("residual_block"))?;
        let g = grad.zip_map(sum, |g, v| if v > T::zero() { g } else { T::zero() })?;
        let mut gm = g.clone();
        for layer in self.main.iter_mut().rev() {
            gm = layer.backward(&gm)?;
        }
        let mut gs = g;
        for layer in self.shortcut.iter_mut().rev() {
            gs = layer.backward(&gs)?;
        }
        gm.add_assign(&gs)?;
        Ok(gm)
    }
}

/// Functional form of [`ResidualBlock::forward`].
pub fn residual_block_forward<T: Scalar>(
    x: &Tensor<T>,
    block: &mut ResidualBlock<T>,
    mode: LayerMode,
    rng: &mut RngState,
) -> Result<Tensor<T>> {
    block.forward(x, mode, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random(shape: &[usize], seed: u64) -> Tensor<f64> {
        let mut rng = RngState::new(seed);
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.normal()).collect()).unwrap()
    }

    #[test]
    fn zero_branch_reduces_to_relu() {
        let mut rng = RngState::new(0);
        let mut block = ResidualBlock::<f64>::basic("b", 3, 3, 1, &mut rng);
        for layer in block.layers_mut() {
            if let Layer::Conv2d(c) = layer {
                c.weight.value.fill(0.0);
            }
            if let Layer::BatchNorm(bn) = layer {
                bn.gamma.value.fill(0.0);
            }
        }
        assert!(!block.has_projection());
        let x = random(&[2, 3, 5, 5], 1);
        let out = block.forward(&x, LayerMode::Train, &mut rng).unwrap();
        assert_eq!(out, super::super::relu(&x));
    }

    #[test]
    fn stride_two_halves_resolution() {
        let mut rng = RngState::new(0);
        let mut block = ResidualBlock::<f64>::basic("b", 4, 8, 2, &mut rng);
        assert!(block.has_projection());
        let out = block.forward(&random(&[2, 4, 8, 8], 2), LayerMode::Train, &mut rng).unwrap();
        assert_eq!(out.shape(), &[2, 8, 4, 4]);
        let out = block.forward(&random(&[2, 4, 7, 7], 2), LayerMode::Train, &mut rng).unwrap();
        assert_eq!(out.shape(), &[2, 8, 4, 4]);
    }

    #[test]
    fn bottleneck_expands_channels() {
        let mut rng = RngState::new(0);
        let mut block = ResidualBlock::<f64>::bottleneck("b", 8, 4, 2, &mut rng);
        assert_eq!(block.out_channels(), 16);
        let out = block.forward(&random(&[2, 8, 6, 6], 3), LayerMode::Train, &mut rng).unwrap();
        assert_eq!(out.shape(), &[2, 16, 3, 3]);
    }
}
