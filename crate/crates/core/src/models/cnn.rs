use serde::{Deserialize, Serialize};

use super::network::{EmbeddingTap, InputSpec, ModelHandle};
use crate::error::{Error, Result};
use crate::numerics::layers::{BatchNorm, Conv2d, Dense, Dropout, GlobalAvgPool, MaxPool2d, ResidualBlock};
use crate::numerics::{Init, Layer, RngState, Scalar};

/// Name of the post-ReLU hidden activation of the classifier head.
pub const CNN_EMBEDDING_TAP: &str = "embedding";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackboneDepth {
    /// 3×3 stride-2 stem and basic two-convolution blocks.
    Desk,
    /// 7×7 stem, max-pool and bottleneck blocks (50 layers with `[3, 4, 6, 3]`).
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneConfig {
    pub depth: BackboneDepth,
    pub in_channels: usize,
    pub base_channels: usize,
    pub stage_blocks: Vec<usize>,
    pub head_hidden: usize,
    pub dropout_p: f64,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl BackboneConfig {
    pub fn desk() -> Self {
        Self {
            depth: BackboneDepth::Desk,
            in_channels: 3,
            base_channels: 16,
            stage_blocks: vec![2, 2, 2, 2],
            head_hidden: 512,
            dropout_p: 0.5,
        }
    }

    pub fn reference() -> Self {
        Self {
            depth: BackboneDepth::Reference,
            base_channels: 64,
            stage_blocks: vec![3, 4, 6, 3],
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stage_blocks.is_empty() || self.stage_blocks.contains(&0) {
            return Err(Error::Config(format!(
                "stage block counts must be non-empty and positive, got {:?}",
                self.stage_blocks
            )));
        }
        if self.in_channels == 0 || self.base_channels == 0 || self.head_hidden == 0 {
            return Err(Error::Config(
                "in_channels, base_channels and head_hidden must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Config(format!("dropout_p {} outside [0, 1)", self.dropout_p)));
        }
        Ok(())
    }
}

fn conv_bn_relu<T: Scalar>(
    layers: &mut Vec<Layer<T>>,
    cin: usize,
    cout: usize,
    kernel: usize,
    rng: &mut RngState,
) {
    let pad = kernel / 2;
    layers.push(Layer::Conv2d(Conv2d::new("stem.conv", cin, cout, kernel, 2, pad, Init::He, rng)));
    layers.push(Layer::BatchNorm(BatchNorm::new("stem.bn", cout)));
    layers.push(Layer::relu());
}

/// Residual backbone → global average pool → FC(hidden) → ReLU → dropout →
/// BN → FC(2) → sigmoid. The ReLU output is registered as
/// [`CNN_EMBEDDING_TAP`].
pub fn build_cnn<T: Scalar>(cfg: &BackboneConfig, rng: &mut RngState) -> Result<ModelHandle<T>> {
    cfg.validate()?;
    let mut layers = Vec::new();
    match cfg.depth {
        BackboneDepth::Desk => conv_bn_relu(&mut layers, cfg.in_channels, cfg.base_channels, 3, rng),
        BackboneDepth::Reference => {
            conv_bn_relu(&mut layers, cfg.in_channels, cfg.base_channels, 7, rng);
            layers.push(Layer::MaxPool2d(MaxPool2d::new(3, 2, 1)));
        }
    }
    let mut channels = cfg.base_channels;
    for (stage, &blocks) in cfg.stage_blocks.iter().enumerate() {
        let width = cfg.base_channels << stage;
        for b in 0..blocks {
            let stride = if stage > 0 && b == 0 { 2 } else { 1 };
            let name = format!("layer{}.{b}", stage + 1);
            let block = match cfg.depth {
                BackboneDepth::Desk => ResidualBlock::basic(&name, channels, width, stride, rng),
                BackboneDepth::Reference => ResidualBlock::bottleneck(&name, channels, width, stride, rng),
            };
            channels = block.out_channels();
            layers.push(Layer::Residual(Box::new(block)));
        }
    }
    layers.push(Layer::GlobalAvgPool(GlobalAvgPool::new()));
    layers.push(Layer::Dense(Dense::new("fc_hidden", channels, cfg.head_hidden, Init::He, rng)));
    layers.push(Layer::relu());
    let tap_layer = layers.len() - 1;
    layers.push(Layer::Dropout(Dropout::new(cfg.dropout_p)?));
    layers.push(Layer::BatchNorm(BatchNorm::new("bn_head", cfg.head_hidden)));
    layers.push(Layer::Dense(Dense::new("fc_out", cfg.head_hidden, 2, Init::Xavier, rng)));
    layers.push(Layer::sigmoid());
    let taps = vec![EmbeddingTap {
        name: CNN_EMBEDDING_TAP.into(),
        layer: tap_layer,
        dim: cfg.head_hidden,
    }];
    ModelHandle::new(layers, taps, InputSpec::Image { channels: cfg.in_channels })
}

/// One backbone over `[RGB ‖ BnW, BnW, BnW]`: the first convolution takes six
/// channels, everything else matches [`build_cnn`].
pub fn build_dual_image_cnn<T: Scalar>(cfg: &BackboneConfig, rng: &mut RngState) -> Result<ModelHandle<T>> {
    let cfg = BackboneConfig {
        in_channels: 6,
        ..cfg.clone()
    };
    build_cnn(&cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{LayerMode, Tensor};

    fn image(b: usize, c: usize, side: usize, seed: u64) -> Tensor {
        let mut rng = RngState::new(seed);
        let n = b * c * side * side;
        Tensor::new(vec![b, c, side, side], (0..n).map(|_| rng.uniform() as f32).collect()).unwrap()
    }

    #[test]
    fn desk_forward_and_embedding_shapes() {
        let mut m: ModelHandle = build_cnn(&BackboneConfig::desk(), &mut RngState::new(0)).unwrap();
        let x = image(2, 3, 32, 1);
        let y = m.forward(&x, LayerMode::Train, &mut RngState::new(2)).unwrap();
        assert_eq!(y.shape(), &[2, 2]);
        assert!(y.data().iter().all(|&p| p > 0.0 && p < 1.0));
        assert_eq!(m.extract_embedding(&x, CNN_EMBEDDING_TAP).unwrap().shape(), &[2, 512]);
        assert_eq!(m.forward_eval(&x).unwrap(), m.forward_eval(&x).unwrap());
    }

    #[test]
    fn reference_layout_is_fifty_deep() {
        let m: ModelHandle = build_cnn(&BackboneConfig::reference(), &mut RngState::new(0)).unwrap();
        let convs_in_main: usize = m
            .layers()
            .iter()
            .map(|l| match l {
                Layer::Conv2d(_) => 1,
                Layer::Residual(_) => 3,
                _ => 0,
            })
            .sum();
        // Stem plus three convolutions per bottleneck block.
        assert_eq!(convs_in_main, 49);
        let projections = m
            .layers()
            .iter()
            .filter(|l| matches!(l, Layer::Residual(b) if b.has_projection()))
            .count();
        assert_eq!(projections, 4);
    }

    #[test]
    fn invalid_stages_rejected() {
        let mut cfg = BackboneConfig::desk();
        cfg.stage_blocks = vec![2, 0];
        assert!(matches!(build_cnn::<f32>(&cfg, &mut RngState::new(0)), Err(Error::Config(_))));
        cfg.stage_blocks.clear();
        assert!(matches!(build_cnn::<f32>(&cfg, &mut RngState::new(0)), Err(Error::Config(_))));
    }

    #[test]
    fn dual_with_blank_bnw_matches_rgb_model() {
        let cfg = BackboneConfig {
            stage_blocks: vec![1, 1],
            head_hidden: 16,
            ..BackboneConfig::desk()
        };
        let mut dual: ModelHandle = build_dual_image_cnn(&cfg, &mut RngState::new(3)).unwrap();
        let mut rgb: ModelHandle = build_cnn(&cfg, &mut RngState::new(4)).unwrap();
        let mut state = dual.state_dict();
        let w = &mut state[0].1;
        assert_eq!(w.shape()[1], 6);
        let (cout, k) = (w.shape()[0], w.shape()[2]);
        let mut narrow = Tensor::zeros(&[cout, 3, k, k]);
        for o in 0..cout {
            for c in 0..3 {
                for i in 0..k {
                    for j in 0..k {
                        narrow.set(&[o, c, i, j], w.at(&[o, c, i, j]));
                    }
                }
            }
        }
        state[0].1 = narrow;
        rgb.load_state_dict(&state).unwrap();

        let x3 = image(2, 3, 16, 5);
        let mut x6 = Tensor::zeros(&[2, 6, 16, 16]);
        for b in 0..2 {
            for c in 0..3 {
                for i in 0..16 {
                    for j in 0..16 {
                        x6.set(&[b, c, i, j], x3.at(&[b, c, i, j]));
                    }
                }
            }
        }
        assert_eq!(dual.forward_eval(&x6).unwrap(), rgb.forward_eval(&x3).unwrap());
    }

    #[test]
    fn state_dict_round_trips_through_archive() {
        let m: ModelHandle = build_cnn(&BackboneConfig::desk(), &mut RngState::new(9)).unwrap();
        let bytes = crate::numerics::archive::encode(&m.state_dict());
        let mut other: ModelHandle = build_cnn(&BackboneConfig::desk(), &mut RngState::new(10)).unwrap();
        other.load_state_dict(&crate::numerics::archive::decode(&bytes).unwrap()).unwrap();
        assert_eq!(crate::numerics::archive::encode(&other.state_dict()), bytes);
    }
}
