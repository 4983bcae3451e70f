use serde::{Deserialize, Serialize};

use super::network::{EmbeddingTap, InputSpec, ModelHandle};
use crate::error::{Error, Result};
use crate::numerics::layers::{BatchNorm, Dense, Dropout};
use crate::numerics::{Init, Layer, RngState, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FnnVariant {
    Coords,
    Blendshapes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnConfig {
    pub variant: FnnVariant,
    pub input_dim: usize,
    pub layer_sizes: Vec<usize>,
    pub dropout_p: f64,
}

impl FnnConfig {
    /// 125 landmarks × (x, y), flattened.
    pub fn coords() -> Self {
        Self {
            variant: FnnVariant::Coords,
            input_dim: 250,
            layer_sizes: vec![128, 64, 32, 2],
            dropout_p: 0.5,
        }
    }

    pub fn blendshapes() -> Self {
        Self {
            variant: FnnVariant::Blendshapes,
            input_dim: 52,
            layer_sizes: vec![64, 32, 10, 2],
            dropout_p: 0.5,
        }
    }

    pub fn preset(variant: FnnVariant) -> Self {
        match variant {
            FnnVariant::Coords => Self::coords(),
            FnnVariant::Blendshapes => Self::blendshapes(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("fnn input_dim must be positive".into()));
        }
        if self.layer_sizes.len() != 4 {
            return Err(Error::Config(format!(
                "fnn needs exactly 4 layer sizes, got {}",
                self.layer_sizes.len()
            )));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::Config("fnn layer sizes must be positive".into()));
        }
        if self.layer_sizes[3] != 2 {
            return Err(Error::Config(format!(
                "fnn output width must be 2, got {}",
                self.layer_sizes[3]
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Config(format!("dropout_p {} outside [0, 1)", self.dropout_p)));
        }
        Ok(())
    }
}

/// FC1→dropout→ReLU→FC2→BN→ReLU→FC3→ReLU→FC4→sigmoid with taps
/// `hidden1`, `hidden2`, `hidden3` on the three ReLU outputs.
pub fn build_fnn<T: Scalar>(cfg: &FnnConfig, rng: &mut RngState) -> Result<ModelHandle<T>> {
    cfg.validate()?;
    let s = &cfg.layer_sizes;
    let layers = vec![
        Layer::Dense(Dense::new("fc1", cfg.input_dim, s[0], Init::He, rng)),
        Layer::Dropout(Dropout::new(cfg.dropout_p)?),
        Layer::relu(),
        Layer::Dense(Dense::new("fc2", s[0], s[1], Init::He, rng)),
        Layer::BatchNorm(BatchNorm::new("bn2", s[1])),
        Layer::relu(),
        Layer::Dense(Dense::new("fc3", s[1], s[2], Init::He, rng)),
        Layer::relu(),
        Layer::Dense(Dense::new("fc4", s[2], s[3], Init::Xavier, rng)),
        Layer::sigmoid(),
    ];
    let tap = |name: &str, layer, dim| EmbeddingTap {
        name: name.into(),
        layer,
        dim,
    };
    let taps = vec![tap("hidden1", 2, s[0]), tap("hidden2", 5, s[1]), tap("hidden3", 7, s[2])];
    ModelHandle::new(layers, taps, InputSpec::Features(cfg.input_dim))
}
