//! Run configuration: a TOML file mirroring [`RunConfig`], resolved against
//! its own directory and the global command line flags.

use std::path::{Path, PathBuf};

use palsy_core::evaluation::Selection;
use palsy_core::modalities::{ChannelNorm, ContourSpec, LandmarkSubset, DEFAULT_SIDE};
use palsy_core::models::{BackboneConfig, BackboneDepth, FnnConfig, Hyper, CNN_EMBEDDING_TAP};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FnnSection {
    pub layer_sizes: Option<Vec<usize>>,
    pub dropout_p: Option<f64>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CnnSection {
    pub depth: Option<BackboneDepth>,
    pub base_channels: Option<usize>,
    pub stage_blocks: Option<Vec<usize>>,
    pub head_hidden: Option<usize>,
    pub dropout_p: Option<f64>,
    pub lr: Option<f64>,
    /// Epochs for the single-image models.
    pub epochs: Option<usize>,
    /// Epochs for the six-channel `bnw+rgb` model.
    pub dual_epochs: Option<usize>,
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionSection {
    pub head_sizes: Option<Vec<usize>>,
    pub dropout_p: Option<f64>,
    #[serde(default)]
    pub fine_tune: bool,
    /// Tap on the blendshape network.
    pub tap_a: Option<String>,
    /// Tap on the BnW network.
    pub tap_b: Option<String>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    /// Pretrained blendshape network weights; skips its training.
    pub weights_a: Option<PathBuf>,
    /// Pretrained BnW network weights; skips its training.
    pub weights_b: Option<PathBuf>,
}

/// On-disk configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub modality: Option<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub seed_base: u64,
    pub image_side: Option<usize>,
    pub subset: Option<PathBuf>,
    pub contours: Option<PathBuf>,
    pub rgb_norm: Option<ChannelNorm>,
    /// Patients left out by `train`.
    #[serde(default)]
    pub holdout: Vec<String>,
    #[serde(default)]
    pub coords: FnnSection,
    #[serde(default)]
    pub blendshapes: FnnSection,
    #[serde(default)]
    pub cnn: CnnSection,
    #[serde(default)]
    pub fusion: FusionSection,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            CliError::Core(palsy_core::Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: e.message().to_string(),
            })
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Core(palsy_core::Error::Io {
                path: path.to_path_buf(),
                source: e,
            })
        })?;
        Self::parse(&text, path)
    }
}

/// Command line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub modality: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionPlan {
    pub head_sizes: Vec<usize>,
    pub dropout_p: f64,
    pub fine_tune: bool,
    pub tap_a: String,
    pub tap_b: String,
    pub hyper: Hyper,
    pub weights_a: Option<PathBuf>,
    pub weights_b: Option<PathBuf>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub manifest: PathBuf,
    pub selection: Option<Selection>,
    pub out: PathBuf,
    pub workers: usize,
    pub seed_base: u64,
    pub image_side: usize,
    pub subset: LandmarkSubset,
    pub contours: ContourSpec,
    pub rgb_norm: Option<ChannelNorm>,
    pub holdout: Vec<String>,
    pub coords: (FnnConfig, Hyper),
    pub blendshapes: (FnnConfig, Hyper),
    pub cnn: (BackboneConfig, Hyper),
    pub dual: (BackboneConfig, Hyper),
    pub fusion: FusionPlan,
}

fn fnn(section: &FnnSection, mut cfg: FnnConfig) -> (FnnConfig, Hyper) {
    if let Some(s) = &section.layer_sizes {
        cfg.layer_sizes = s.clone();
    }
    if let Some(p) = section.dropout_p {
        cfg.dropout_p = p;
    }
    let base = Hyper::fnn();
    let hyper = Hyper {
        lr: section.lr.unwrap_or(base.lr),
        epochs: section.epochs.unwrap_or(base.epochs),
        batch_size: section.batch_size.unwrap_or(base.batch_size),
        seed: 0,
    };
    (cfg, hyper)
}

fn backbone(s: &CnnSection) -> BackboneConfig {
    let mut cfg = match s.depth {
        Some(BackboneDepth::Reference) => BackboneConfig::reference(),
        _ => BackboneConfig::desk(),
    };
    if let Some(v) = s.base_channels {
        cfg.base_channels = v;
    }
    if let Some(v) = &s.stage_blocks {
        cfg.stage_blocks = v.clone();
    }
    if let Some(v) = s.head_hidden {
        cfg.head_hidden = v;
    }
    if let Some(v) = s.dropout_p {
        cfg.dropout_p = v;
    }
    cfg
}

impl Resolved {
    /// `base` is the directory relative paths in `cfg` are resolved against.
    pub fn new(cfg: &RunConfig, base: &Path, ov: &Overrides) -> Result<Self> {
        let rel = |p: &Path| base.join(p);
        let token = ov.modality.as_ref().or(cfg.modality.as_ref());
        let selection = token
            .map(|t| t.parse::<Selection>().map_err(|e| CliError::Usage(e.to_string())))
            .transpose()?;
        let workers = ov.workers.or(cfg.workers).unwrap_or(1);
        if workers == 0 {
            return Err(CliError::Usage("worker count must be at least 1".into()));
        }
        let subset = match &cfg.subset {
            Some(p) => LandmarkSubset::load(&rel(p))?,
            None => LandmarkSubset::default(),
        };
        let contours = match &cfg.contours {
            Some(p) => ContourSpec::load(&rel(p))?,
            None => ContourSpec::default(),
        };
        let coords = fnn(&cfg.coords, FnnConfig::coords());
        let blendshapes = fnn(&cfg.blendshapes, FnnConfig::blendshapes());
        coords.0.validate()?;
        blendshapes.0.validate()?;

        let cnn_cfg = backbone(&cfg.cnn);
        cnn_cfg.validate()?;
        let cnn_hyper = Hyper {
            lr: cfg.cnn.lr.unwrap_or(Hyper::cnn().lr),
            epochs: cfg.cnn.epochs.unwrap_or(Hyper::cnn().epochs),
            batch_size: cfg.cnn.batch_size.unwrap_or(Hyper::cnn().batch_size),
            seed: 0,
        };
        let dual_hyper = Hyper {
            epochs: cfg.cnn.dual_epochs.unwrap_or(Hyper::dual_cnn().epochs),
            ..cnn_hyper
        };
        let dual_cfg = BackboneConfig {
            in_channels: 6,
            ..cnn_cfg.clone()
        };

        let f = &cfg.fusion;
        let head = Hyper::fusion_head();
        let fusion = FusionPlan {
            head_sizes: f.head_sizes.clone().unwrap_or_else(|| vec![256, 128, 64, 2]),
            dropout_p: f.dropout_p.unwrap_or(0.5),
            fine_tune: f.fine_tune,
            tap_a: f.tap_a.clone().unwrap_or_else(|| "hidden3".into()),
            tap_b: f.tap_b.clone().unwrap_or_else(|| CNN_EMBEDDING_TAP.into()),
            hyper: Hyper {
                lr: f.lr.unwrap_or(head.lr),
                epochs: f.epochs.unwrap_or(head.epochs),
                batch_size: f.batch_size.unwrap_or(head.batch_size),
                seed: 0,
            },
            weights_a: f.weights_a.as_deref().map(rel),
            weights_b: f.weights_b.as_deref().map(rel),
        };
        for h in [&coords.1, &blendshapes.1, &cnn_hyper, &dual_hyper, &fusion.hyper] {
            h.validate()?;
        }
        let image_side = cfg.image_side.unwrap_or(DEFAULT_SIDE);
        if image_side < palsy_core::modalities::MIN_RASTER_SIDE {
            return Err(CliError::Usage(format!("image_side {image_side} is below the minimum of 8")));
        }
        Ok(Self {
            manifest: rel(&cfg.manifest),
            selection,
            out: ov
                .out
                .clone()
                .or_else(|| cfg.out.as_deref().map(rel))
                .unwrap_or_else(|| PathBuf::from("out")),
            workers,
            seed_base: ov.seed.unwrap_or(cfg.seed_base),
            image_side,
            subset,
            contours,
            rgb_norm: cfg.rgb_norm,
            holdout: cfg.holdout.clone(),
            coords,
            blendshapes,
            cnn: (cnn_cfg, cnn_hyper),
            dual: (dual_cfg, dual_hyper),
            fusion,
        })
    }

    /// Loads `path` and resolves it against its directory.
    pub fn from_file(path: &Path, ov: &Overrides) -> Result<Self> {
        let cfg = RunConfig::load(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::new(&cfg, base, ov)
    }

    pub fn require_selection(&self) -> Result<Selection> {
        self.selection.ok_or_else(|| {
            CliError::Usage(format!(
                "no modality selected; set `modality` in the config or pass --modality (one of: {})",
                Selection::tokens()
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "manifest = \"data/manifest.json\"\nmodality = \"bnw\"\n";

    #[test]
    fn defaults_follow_presets() {
        let cfg = RunConfig::parse(MINIMAL, Path::new("c.toml")).unwrap();
        let r = Resolved::new(&cfg, Path::new("/exp"), &Overrides::default()).unwrap();
        assert_eq!(r.manifest, Path::new("/exp/data/manifest.json"));
        assert_eq!(r.selection, Some(Selection::Bnw));
        assert_eq!((r.coords.1.lr, r.coords.1.epochs), (0.01, 15));
        assert_eq!((r.cnn.1.lr, r.cnn.1.epochs), (0.001, 15));
        assert_eq!(r.dual.1.epochs, 8);
        assert_eq!(r.dual.0.in_channels, 6);
        assert_eq!(r.fusion.head_sizes, vec![256, 128, 64, 2]);
        assert_eq!(r.image_side, 224);
        assert_eq!(r.workers, 1);
    }

    #[test]
    fn flags_override_file() {
        let text = format!("{MINIMAL}workers = 2\nseed_base = 5\nout = \"res\"\n");
        let cfg = RunConfig::parse(&text, Path::new("c.toml")).unwrap();
        let ov = Overrides {
            out: Some("/tmp/x".into()),
            workers: Some(4),
            seed: Some(9),
            modality: Some("late_fusion".into()),
        };
        let r = Resolved::new(&cfg, Path::new("/exp"), &ov).unwrap();
        assert_eq!((r.workers, r.seed_base), (4, 9));
        assert_eq!(r.out, Path::new("/tmp/x"));
        assert_eq!(r.selection, Some(Selection::LateFusion));
        let r = Resolved::new(&cfg, Path::new("/exp"), &Overrides::default()).unwrap();
        assert_eq!(r.out, Path::new("/exp/res"));
    }

    #[test]
    fn unknown_modality_lists_tokens() {
        let cfg = RunConfig::parse("manifest = \"m.json\"\nmodality = \"audio\"\n", Path::new("c.toml")).unwrap();
        let err = Resolved::new(&cfg, Path::new("."), &Overrides::default()).unwrap_err();
        assert_eq!(err.category(), "usage");
        assert!(err.to_string().contains("early_fusion"), "{err}");
    }

    #[test]
    fn unknown_key_cites_line() {
        let err = RunConfig::parse("manifest = \"m.json\"\n\nbogus = 1\n", Path::new("c.toml")).unwrap_err();
        match err {
            CliError::Core(palsy_core::Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn section_overrides_apply() {
        let text = format!(
            "{MINIMAL}[cnn]\nbase_channels = 4\nstage_blocks = [1, 1]\nepochs = 2\ndual_epochs = 1\n[fusion]\nfine_tune = true\nepochs = 3\n"
        );
        let cfg = RunConfig::parse(&text, Path::new("c.toml")).unwrap();
        let r = Resolved::new(&cfg, Path::new("."), &Overrides::default()).unwrap();
        assert_eq!(r.cnn.0.stage_blocks, vec![1, 1]);
        assert_eq!((r.cnn.1.epochs, r.dual.1.epochs), (2, 1));
        assert!(r.fusion.fine_tune);
        assert_eq!(r.fusion.hyper.epochs, 3);
    }

    #[test]
    fn invalid_sizes_are_config_errors() {
        let text = format!("{MINIMAL}[coords]\nlayer_sizes = [1, 2]\n");
        let cfg = RunConfig::parse(&text, Path::new("c.toml")).unwrap();
        let err = Resolved::new(&cfg, Path::new("."), &Overrides::default()).unwrap_err();
        assert_eq!(err.category(), "config");
    }
}
