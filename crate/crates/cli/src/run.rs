//! Training and prediction for one selection on a set of frames.

use std::path::Path;

use log::info;
use palsy_core::dataset::{FrameRecord, DEFAULT_BATCH_SIZE};
use palsy_core::evaluation::Selection;
use palsy_core::models::{
    build_cnn, build_dual_image_cnn, build_early_fusion, build_fnn, late_fusion_predict, predict_class, predict_proba,
    train_model, BackboneConfig, EarlyFusion, EarlyFusionConfig, FnnConfig, Hyper, InMemorySource, ModelHandle,
    TrainingHistory,
};
use palsy_core::numerics::archive::{self, NamedTensors};
use palsy_core::numerics::{RngState, Tensor};
use rand::RngCore;
use serde::Serialize;

use crate::cache::Cache;
use crate::config::Resolved;
use crate::data::{CacheSource, InputKind};
use crate::error::Result;

/// Random stream numbers under one run seed.
const STREAM_SINGLE: u64 = 0;
const STREAM_A: u64 = 1;
const STREAM_B: u64 = 2;
const STREAM_HEAD: u64 = 3;

/// Independent seeds for weight initialization and for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub init: u64,
    pub train: u64,
}

impl Seeds {
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut r = RngState::fork(seed, stream);
        Self {
            init: r.next_u64(),
            train: r.next_u64(),
        }
    }
}

/// A trained model for one selection, with its loss curves.
pub enum Trained {
    Single {
        model: ModelHandle,
        kind: InputKind,
        history: TrainingHistory,
    },
    Early {
        model: EarlyFusion,
        histories: Vec<(&'static str, TrainingHistory)>,
    },
    Late {
        a: ModelHandle,
        b: ModelHandle,
        histories: Vec<(&'static str, TrainingHistory)>,
    },
}

/// Description of what was trained, written next to the weights.
#[derive(Debug, Serialize)]
pub struct ModelCard {
    pub selection: String,
    pub seed: u64,
    pub frames: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fnn: Option<FnnConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backbone: Option<BackboneConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fusion: Option<EarlyFusionConfig>,
    pub hyper: Vec<Hyper>,
}

fn single_spec(sel: Selection) -> Option<InputKind> {
    match sel {
        Selection::Coords => Some(InputKind::Coords),
        Selection::Blendshapes => Some(InputKind::Blend),
        Selection::Rgb => Some(InputKind::Rgb),
        Selection::Bnw => Some(InputKind::Bnw),
        Selection::BnwRgb => Some(InputKind::Dual),
        Selection::EarlyFusion | Selection::LateFusion => None,
    }
}

fn build_single(r: &Resolved, kind: InputKind, init: u64) -> Result<(ModelHandle, Hyper)> {
    let mut rng = RngState::new(init);
    Ok(match kind {
        InputKind::Coords => (build_fnn(&r.coords.0, &mut rng)?, r.coords.1),
        InputKind::Blend => (build_fnn(&r.blendshapes.0, &mut rng)?, r.blendshapes.1),
        InputKind::Rgb | InputKind::Bnw => (build_cnn(&r.cnn.0, &mut rng)?, r.cnn.1),
        InputKind::Dual => (build_dual_image_cnn(&r.dual.0, &mut rng)?, r.dual.1),
    })
}

/// Builds one unimodal model and either trains it or loads `weights`.
fn fit_single(
    r: &Resolved,
    cache: &Cache,
    frames: &[&FrameRecord],
    kind: InputKind,
    seeds: Seeds,
    weights: Option<&Path>,
) -> Result<(ModelHandle, TrainingHistory)> {
    let (mut model, hyper) = build_single(r, kind, seeds.init)?;
    if let Some(path) = weights {
        info!("loading {kind:?} weights from {}", path.display());
        model.load_state_dict(&archive::load(path)?)?;
        return Ok((model, TrainingHistory::default()));
    }
    let source = CacheSource::new(cache, frames.to_vec(), vec![kind]);
    let history = train_model(&mut model, &source, &hyper.with_seed(seeds.train))?;
    Ok((model, history))
}

fn fusion_config(r: &Resolved, a: &ModelHandle, b: &ModelHandle) -> Result<EarlyFusionConfig> {
    let mut cfg = EarlyFusionConfig::new(a.tap(&r.fusion.tap_a)?.clone(), b.tap(&r.fusion.tap_b)?.clone());
    cfg.head_sizes = r.fusion.head_sizes.clone();
    cfg.dropout_p = r.fusion.dropout_p;
    cfg.fine_tune = r.fusion.fine_tune;
    cfg.validate()?;
    Ok(cfg)
}

/// Frozen-model embeddings for every frame, `[N, width_a + width_b]`.
fn embeddings(model: &mut EarlyFusion, source: &CacheSource<'_>) -> Result<Tensor> {
    use palsy_core::models::TrainingSource;
    let items: Vec<usize> = (0..source.len()).collect();
    let mut rows = Vec::new();
    let mut width = 0;
    let mut rng = RngState::new(0);
    for chunk in items.chunks(DEFAULT_BATCH_SIZE) {
        let (inputs, _) = source.fetch(chunk)?;
        let z = model.embed(&inputs[0], &inputs[1], palsy_core::numerics::LayerMode::Eval, &mut rng)?;
        width = z.row_len();
        rows.extend_from_slice(z.data());
    }
    Ok(Tensor::new(vec![items.len(), width], rows)?)
}

/// Trains `sel` on `frames` with every random draw derived from `seed`.
pub fn train_selection(r: &Resolved, cache: &Cache, frames: &[&FrameRecord], sel: Selection, seed: u64) -> Result<Trained> {
    if let Some(kind) = single_spec(sel) {
        let (model, history) = fit_single(r, cache, frames, kind, Seeds::derive(seed, STREAM_SINGLE), None)?;
        return Ok(Trained::Single { model, kind, history });
    }
    let (a, ha) = fit_single(
        r,
        cache,
        frames,
        InputKind::Blend,
        Seeds::derive(seed, STREAM_A),
        r.fusion.weights_a.as_deref(),
    )?;
    let (b, hb) = fit_single(
        r,
        cache,
        frames,
        InputKind::Bnw,
        Seeds::derive(seed, STREAM_B),
        r.fusion.weights_b.as_deref(),
    )?;
    if sel == Selection::LateFusion {
        return Ok(Trained::Late {
            a,
            b,
            histories: vec![("a", ha), ("b", hb)],
        });
    }

    let cfg = fusion_config(r, &a, &b)?;
    let seeds = Seeds::derive(seed, STREAM_HEAD);
    let head = build_early_fusion(&cfg, &mut RngState::new(seeds.init))?;
    let mut model = EarlyFusion::new(a, b, head, &cfg)?;
    let hyper = r.fusion.hyper.with_seed(seeds.train);
    let source = CacheSource::new(cache, frames.to_vec(), vec![InputKind::Blend, InputKind::Bnw]);
    let hh = if cfg.fine_tune {
        train_model(&mut model, &source, &hyper)?
    } else {
        let z = embeddings(&mut model, &source)?;
        let cached = InMemorySource::new(vec![z], source.labels())?;
        train_model(&mut model.head, &cached, &hyper)?
    };
    Ok(Trained::Early {
        model,
        histories: vec![("a", ha), ("b", hb), ("head", hh)],
    })
}

fn prefixed(prefix: &str, entries: NamedTensors) -> NamedTensors {
    entries.into_iter().map(|(n, t)| (format!("{prefix}.{n}"), t)).collect()
}

impl Trained {
    /// Predicted class per frame, in order.
    pub fn predict(&mut self, cache: &Cache, frames: &[&FrameRecord]) -> Result<Vec<usize>> {
        let bs = DEFAULT_BATCH_SIZE;
        Ok(match self {
            Trained::Single { model, kind, .. } => {
                let source = CacheSource::new(cache, frames.to_vec(), vec![*kind]);
                predict_class(&predict_proba(model, &source, bs)?)?
            }
            Trained::Early { model, .. } => {
                let source = CacheSource::new(cache, frames.to_vec(), vec![InputKind::Blend, InputKind::Bnw]);
                predict_class(&predict_proba(model, &source, bs)?)?
            }
            Trained::Late { a, b, .. } => {
                let pa = predict_proba(a, &CacheSource::new(cache, frames.to_vec(), vec![InputKind::Blend]), bs)?;
                let pb = predict_proba(b, &CacheSource::new(cache, frames.to_vec(), vec![InputKind::Bnw]), bs)?;
                late_fusion_predict(&pa, &pb)?
            }
        })
    }

    /// All weights; multi-model selections prefix entries with `a.`, `b.` and `head.`.
    pub fn state_dict(&self) -> NamedTensors {
        match self {
            Trained::Single { model, .. } => model.state_dict(),
            Trained::Early { model, .. } => {
                let mut out = prefixed("a", model.a.state_dict());
                out.extend(prefixed("b", model.b.state_dict()));
                out.extend(prefixed("head", model.head.state_dict()));
                out
            }
            Trained::Late { a, b, .. } => {
                let mut out = prefixed("a", a.state_dict());
                out.extend(prefixed("b", b.state_dict()));
                out
            }
        }
    }

    /// Loss curves keyed by part; a single model has one unnamed entry.
    pub fn histories(&self) -> Vec<(&'static str, &TrainingHistory)> {
        match self {
            Trained::Single { history, .. } => vec![("", history)],
            Trained::Early { histories, .. } | Trained::Late { histories, .. } => {
                histories.iter().map(|(n, h)| (*n, h)).collect()
            }
        }
    }

    pub fn card(&self, r: &Resolved, sel: Selection, seed: u64, frames: usize) -> ModelCard {
        let mut card = ModelCard {
            selection: sel.token().into(),
            seed,
            frames,
            fnn: None,
            backbone: None,
            fusion: None,
            hyper: Vec::new(),
        };
        match single_spec(sel) {
            Some(InputKind::Coords) => {
                card.fnn = Some(r.coords.0.clone());
                card.hyper.push(r.coords.1);
            }
            Some(InputKind::Blend) => {
                card.fnn = Some(r.blendshapes.0.clone());
                card.hyper.push(r.blendshapes.1);
            }
            Some(InputKind::Rgb | InputKind::Bnw) => {
                card.backbone = Some(r.cnn.0.clone());
                card.hyper.push(r.cnn.1);
            }
            Some(InputKind::Dual) => {
                card.backbone = Some(r.dual.0.clone());
                card.hyper.push(r.dual.1);
            }
            None => {
                card.fnn = Some(r.blendshapes.0.clone());
                card.backbone = Some(r.cnn.0.clone());
                card.hyper.extend([r.blendshapes.1, r.cnn.1]);
                if let (Selection::EarlyFusion, Trained::Early { model, .. }) = (sel, self) {
                    if let (Ok(a), Ok(b)) = (model.a.tap(&r.fusion.tap_a), model.b.tap(&r.fusion.tap_b)) {
                        let mut f = EarlyFusionConfig::new(a.clone(), b.clone());
                        f.head_sizes = r.fusion.head_sizes.clone();
                        f.dropout_p = r.fusion.dropout_p;
                        f.fine_tune = r.fusion.fine_tune;
                        card.fusion = Some(f);
                    }
                    card.hyper.push(r.fusion.hyper);
                }
            }
        }
        card
    }
}
