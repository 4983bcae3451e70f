//! The five architectures: two fully connected networks, a residual CNN
//! (plus its six-channel dual-image variant), the early-fusion head and the
//! late-fusion averaging rule, together with the SGD training loop.

mod cnn;
mod fnn;
mod fusion;
mod network;
mod predict;
mod training;

pub use cnn::{build_cnn, build_dual_image_cnn, BackboneConfig, BackboneDepth, CNN_EMBEDDING_TAP};
pub use fnn::{build_fnn, FnnConfig, FnnVariant};
pub use fusion::{build_early_fusion, EarlyFusion, EarlyFusionConfig};
pub use network::{EmbeddingTap, InputSpec, ModelHandle};
pub use predict::{late_fusion_predict, predict_class};
pub use training::{
    one_hot_targets, predict_proba, train_model, Classifier, Hyper, InMemorySource, TrainingHistory, TrainingSource,
};
