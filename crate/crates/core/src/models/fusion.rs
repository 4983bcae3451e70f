use serde::{Deserialize, Serialize};

use super::network::{EmbeddingTap, InputSpec, ModelHandle};
use crate::error::{Error, Result};
use crate::numerics::layers::{BatchNorm, Dense, Dropout};
use crate::numerics::{Init, Layer, LayerMode, Parameter, RngState, Scalar, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyFusionConfig {
    pub tap_a: EmbeddingTap,
    pub tap_b: EmbeddingTap,
    pub head_sizes: Vec<usize>,
    pub dropout_p: f64,
    /// Backpropagate into both unimodal models instead of freezing them.
    #[serde(default)]
    pub fine_tune: bool,
}

impl EarlyFusionConfig {
    pub fn new(tap_a: EmbeddingTap, tap_b: EmbeddingTap) -> Self {
        Self {
            tap_a,
            tap_b,
            head_sizes: vec![256, 128, 64, 2],
            dropout_p: 0.5,
            fine_tune: false,
        }
    }

    pub fn input_width(&self) -> usize {
        self.tap_a.dim + self.tap_b.dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.tap_a.dim == 0 || self.tap_b.dim == 0 {
            return Err(Error::Config("fusion taps must have positive width".into()));
        }
        if self.head_sizes.len() != 4 || self.head_sizes.contains(&0) || self.head_sizes[3] != 2 {
            return Err(Error::Config(format!(
                "fusion head needs four positive widths ending in 2, got {:?}",
                self.head_sizes
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Config(format!("dropout_p {} outside [0, 1)", self.dropout_p)));
        }
        Ok(())
    }
}

/// Classifier head over `[emb_a ‖ emb_b]`:
/// FC1→ReLU→dropout→FC2→ReLU→dropout→FC3→ReLU→BN→FC4→sigmoid.
pub fn build_early_fusion<T: Scalar>(cfg: &EarlyFusionConfig, rng: &mut RngState) -> Result<ModelHandle<T>> {
    cfg.validate()?;
    let s = &cfg.head_sizes;
    let layers = vec![
        Layer::Dense(Dense::new("fusion.fc1", cfg.input_width(), s[0], Init::He, rng)),
        Layer::relu(),
        Layer::Dropout(Dropout::new(cfg.dropout_p)?),
        Layer::Dense(Dense::new("fusion.fc2", s[0], s[1], Init::He, rng)),
        Layer::relu(),
        Layer::Dropout(Dropout::new(cfg.dropout_p)?),
        Layer::Dense(Dense::new("fusion.fc3", s[1], s[2], Init::He, rng)),
        Layer::relu(),
        Layer::BatchNorm(BatchNorm::new("fusion.bn3", s[2])),
        Layer::Dense(Dense::new("fusion.fc4", s[2], s[3], Init::Xavier, rng)),
        Layer::sigmoid(),
    ];
    ModelHandle::new(layers, Vec::new(), InputSpec::Features(cfg.input_width()))
}

/// Two unimodal models joined at their taps by an early-fusion head.
#[derive(Debug, Clone)]
pub struct EarlyFusion<T: Scalar = f32> {
    pub a: ModelHandle<T>,
    pub b: ModelHandle<T>,
    pub head: ModelHandle<T>,
    tap_a: EmbeddingTap,
    tap_b: EmbeddingTap,
    fine_tune: bool,
}

fn resolve<T: Scalar>(model: &ModelHandle<T>, wanted: &EmbeddingTap) -> Result<EmbeddingTap> {
    let tap = model.tap(&wanted.name)?.clone();
    if tap.dim != wanted.dim {
        return Err(Error::Config(format!(
            "tap `{}` emits width {}, config declares {}",
            tap.name, tap.dim, wanted.dim
        )));
    }
    Ok(tap)
}

impl<T: Scalar> EarlyFusion<T> {
    pub fn new(a: ModelHandle<T>, b: ModelHandle<T>, head: ModelHandle<T>, cfg: &EarlyFusionConfig) -> Result<Self> {
        let tap_a = resolve(&a, &cfg.tap_a)?;
        let tap_b = resolve(&b, &cfg.tap_b)?;
        if head.input() != InputSpec::Features(tap_a.dim + tap_b.dim) {
            return Err(Error::Config(format!(
                "fusion head input {:?} does not equal tap widths {} + {}",
                head.input(),
                tap_a.dim,
                tap_b.dim
            )));
        }
        Ok(Self {
            a,
            b,
            head,
            tap_a,
            tap_b,
            fine_tune: cfg.fine_tune,
        })
    }

    pub fn fine_tune(&self) -> bool {
        self.fine_tune
    }

    /// Concatenated embeddings. Frozen models always run in Eval mode.
    pub fn embed(&mut self, xa: &Tensor<T>, xb: &Tensor<T>, mode: LayerMode, rng: &mut RngState) -> Result<Tensor<T>> {
        let (ea, eb) = if self.fine_tune {
            (
                self.a.forward_to(xa, self.tap_a.layer, mode, rng)?,
                self.b.forward_to(xb, self.tap_b.layer, mode, rng)?,
            )
        } else {
            (
                self.a.extract_embedding(xa, &self.tap_a.name)?,
                self.b.extract_embedding(xb, &self.tap_b.name)?,
            )
        };
        Tensor::concat_features(&[&ea, &eb])
    }

    pub fn forward(&mut self, xa: &Tensor<T>, xb: &Tensor<T>, mode: LayerMode, rng: &mut RngState) -> Result<Tensor<T>> {
        let z = self.embed(xa, xb, mode, rng)?;
        self.head.forward(&z, mode, rng)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<()> {
        let gz = self.head.backward(grad)?;
        if self.fine_tune {
            let parts = gz.split_features(&[self.tap_a.dim, self.tap_b.dim])?;
            self.a.backward_from(self.tap_a.layer, &parts[0])?;
            self.b.backward_from(self.tap_b.layer, &parts[1])?;
        }
        Ok(())
    }

    /// Head parameters, plus both unimodal models when fine-tuning.
    pub fn trainable_mut(&mut self) -> Vec<&mut Parameter<T>> {
        let mut out = self.head.parameters_mut();
        if self.fine_tune {
            out.extend(self.a.parameters_mut());
            out.extend(self.b.parameters_mut());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_cnn, build_fnn, BackboneConfig, FnnConfig, CNN_EMBEDDING_TAP};

    fn taps() -> (EmbeddingTap, EmbeddingTap) {
        let a = EmbeddingTap {
            name: "hidden3".into(),
            layer: 7,
            dim: 10,
        };
        let b = EmbeddingTap {
            name: CNN_EMBEDDING_TAP.into(),
            layer: 0,
            dim: 512,
        };
        (a, b)
    }

    #[test]
    fn default_width_is_tap_sum() {
        let (a, b) = taps();
        let cfg = EarlyFusionConfig::new(a.clone(), b.clone());
        assert_eq!(cfg.input_width(), 522);
        let head: ModelHandle = build_early_fusion(&cfg, &mut RngState::new(0)).unwrap();
        assert_eq!(head.input(), InputSpec::Features(522));
        let swapped = EarlyFusionConfig::new(b, a);
        assert_eq!(swapped.input_width(), 522);
    }

    #[test]
    fn declared_width_must_match_model() {
        let mut rng = RngState::new(0);
        let fnn: ModelHandle = build_fnn(&FnnConfig::blendshapes(), &mut rng).unwrap();
        let cnn_cfg = BackboneConfig {
            stage_blocks: vec![1],
            ..BackboneConfig::desk()
        };
        let cnn: ModelHandle = build_cnn(&cnn_cfg, &mut rng).unwrap();
        let (mut a, b) = taps();
        a.dim = 11;
        let cfg = EarlyFusionConfig::new(a, b);
        let head = build_early_fusion(&cfg, &mut rng).unwrap();
        assert!(matches!(EarlyFusion::new(fnn, cnn, head, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn end_to_end_forward_and_frozen_backward() {
        let mut rng = RngState::new(1);
        let fnn: ModelHandle = build_fnn(&FnnConfig::blendshapes(), &mut rng).unwrap();
        let cnn_cfg = BackboneConfig {
            stage_blocks: vec![1],
            ..BackboneConfig::desk()
        };
        let cnn: ModelHandle = build_cnn(&cnn_cfg, &mut rng).unwrap();
        let (a, b) = taps();
        let cfg = EarlyFusionConfig::new(a, b);
        let head = build_early_fusion(&cfg, &mut rng).unwrap();
        let mut fused = EarlyFusion::new(fnn, cnn, head, &cfg).unwrap();
        let xa = Tensor::full(&[4, 52], 0.3);
        let xb = Tensor::full(&[4, 3, 16, 16], 0.5);
        let y = fused.forward(&xa, &xb, LayerMode::Train, &mut rng).unwrap();
        assert_eq!(y.shape(), &[4, 2]);
        assert!(y.data().iter().all(|&p| p > 0.0 && p < 1.0));
        fused.backward(&Tensor::full(&[4, 2], 0.1)).unwrap();
        assert!(fused.a.parameters().iter().all(|p| p.grad.data().iter().all(|&g| g == 0.0)));
        assert_eq!(fused.trainable_mut().len(), fused.head.parameters().len());
    }
}
