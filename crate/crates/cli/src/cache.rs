//! Per-frame modality cache.
//!
//! Layout: `<out>/cache/<patient>/<video>/<frame>.<kind>.bin`, each file a
//! one-entry weights archive, plus `params.json` recording the settings the
//! entries were produced with.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use palsy_core::dataset::{FrameKey, FrameRecord, Manifest};
use palsy_core::modalities::{
    preprocess_rgb, rasterize_contours, select_landmark_subset, BlendshapeVector, ChannelNorm, ContourSpec,
    LandmarkSet, LandmarkSubset, RgbImage,
};
use palsy_core::numerics::{archive, Tensor};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{output_err, CliError, Result};

pub const PARAMS_FILE: &str = "params.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheKind {
    /// `[125, 2]`
    Coords,
    /// `[52]`
    Blend,
    /// `[S, S]` of 0/1
    Bnw,
    /// `[3, S, S]`
    Rgb,
}

impl CacheKind {
    pub const ALL: [CacheKind; 4] = [CacheKind::Coords, CacheKind::Blend, CacheKind::Bnw, CacheKind::Rgb];

    pub fn ext(self) -> &'static str {
        match self {
            CacheKind::Coords => "coords",
            CacheKind::Blend => "blend",
            CacheKind::Bnw => "bnw",
            CacheKind::Rgb => "rgb",
        }
    }
}

/// Everything that changes cache contents besides the source files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheParams {
    pub image_side: usize,
    pub subset: Vec<usize>,
    pub contours: String,
    pub rgb_norm: Option<ChannelNorm>,
}

impl CacheParams {
    pub fn new(image_side: usize, subset: &LandmarkSubset, contours: &ContourSpec, rgb_norm: Option<ChannelNorm>) -> Self {
        Self {
            image_side,
            subset: subset.indices().to_vec(),
            contours: contours.to_toml(),
            rgb_norm,
        }
    }

    fn fingerprint(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PreprocessStats {
    pub frames: usize,
    pub written: usize,
    pub skipped: usize,
}

/// Read access to a populated cache.
#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

fn frame_path(root: &Path, key: &FrameKey, kind: CacheKind) -> PathBuf {
    root.join(&key.patient_id)
        .join(&key.video_id)
        .join(format!("{:05}.{}.bin", key.frame_index, kind.ext()))
}

pub fn cache_root(out: &Path) -> PathBuf {
    out.join("cache")
}

fn missing(root: &Path, what: &str) -> CliError {
    CliError::MissingCache(format!(
        "{what} under {}; run `palsy preprocess` with the same config first",
        root.display()
    ))
}

impl Cache {
    /// Opens the cache under `out`, requiring it to match `params`.
    pub fn open(out: &Path, params: &CacheParams) -> Result<Self> {
        let root = cache_root(out);
        let stored = fs::read_to_string(root.join(PARAMS_FILE)).map_err(|_| missing(&root, "no preprocessed cache"))?;
        if stored != params.fingerprint() {
            return Err(missing(&root, "cache was built with different preprocessing settings"));
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, key: &FrameKey, kind: CacheKind) -> PathBuf {
        frame_path(&self.root, key, kind)
    }

    pub fn load(&self, key: &FrameKey, kind: CacheKind) -> Result<Tensor> {
        let path = self.path(key, kind);
        if !path.is_file() {
            return Err(missing(&self.root, &format!("frame {key} has no {} entry", kind.ext())));
        }
        let mut entries = archive::load(&path)?;
        match entries.pop() {
            Some((_, t)) if entries.is_empty() => Ok(t),
            _ => Err(palsy_core::Error::Archive(format!("{} must hold exactly one tensor", path.display())).into()),
        }
    }
}

fn mtime(path: &Path) -> Option<SystemTime> {
    fs::metadata(path).and_then(|m| m.modified()).ok()
}

fn up_to_date(root: &Path, f: &FrameRecord) -> bool {
    let newest_source = [&f.rgb_path, &f.landmark_path, &f.blendshape_path]
        .iter()
        .map(|p| mtime(p))
        .max()
        .flatten();
    let Some(newest_source) = newest_source else { return false };
    CacheKind::ALL.iter().all(|&k| {
        mtime(&frame_path(root, &f.key, k)).is_some_and(|t| t >= newest_source)
    })
}

fn compute(f: &FrameRecord, params: &CacheParams, subset: &LandmarkSubset, contours: &ContourSpec) -> palsy_core::Result<[Tensor; 4]> {
    let lm = LandmarkSet::load(&f.landmark_path)?;
    let bs = BlendshapeVector::load(&f.blendshape_path)?;
    let img = RgbImage::load(&f.rgb_path)?;
    let side = params.image_side;
    Ok([
        select_landmark_subset(&lm, subset).to_tensor(),
        bs.to_tensor(),
        rasterize_contours(&lm, contours, side, side)?.to_tensor(),
        preprocess_rgb(&img, side, params.rgb_norm.as_ref())?,
    ])
}

fn write_entries(root: &Path, key: &FrameKey, tensors: [Tensor; 4]) -> Result<()> {
    let dir = frame_path(root, key, CacheKind::Coords)
        .parent()
        .expect("frame path has a parent")
        .to_path_buf();
    fs::create_dir_all(&dir).map_err(|e| output_err(&dir, e))?;
    for (kind, t) in CacheKind::ALL.into_iter().zip(tensors) {
        archive::save(&frame_path(root, key, kind), &[(kind.ext().to_string(), t)])?;
    }
    Ok(())
}

/// Builds or refreshes every frame's entries. Frames whose entries are newer
/// than their source files are skipped unless the settings changed.
pub fn preprocess(
    manifest: &Manifest,
    out: &Path,
    params: &CacheParams,
    subset: &LandmarkSubset,
    contours: &ContourSpec,
) -> Result<PreprocessStats> {
    let root = cache_root(out);
    fs::create_dir_all(&root).map_err(|e| output_err(&root, e))?;
    let params_path = root.join(PARAMS_FILE);
    let fingerprint = params.fingerprint();
    let same_params = fs::read_to_string(&params_path).is_ok_and(|s| s == fingerprint);
    if !same_params && params_path.exists() {
        fs::remove_file(&params_path).map_err(|e| output_err(&params_path, e))?;
    }

    let written: Vec<bool> = manifest
        .frames()
        .par_iter()
        .map(|f| -> Result<bool> {
            if same_params && up_to_date(&root, f) {
                return Ok(false);
            }
            let tensors = compute(f, params, subset, contours).map_err(|e| {
                let detail = match e {
                    palsy_core::Error::Ingestion(m) => m,
                    other => other.to_string(),
                };
                palsy_core::Error::Ingestion(format!("frame {}: {detail}", f.key))
            })?;
            write_entries(&root, &f.key, tensors)?;
            Ok(true)
        })
        .collect::<Result<_>>()?;

    if !same_params {
        fs::write(&params_path, fingerprint).map_err(|e| output_err(&params_path, e))?;
    }
    let n = written.iter().filter(|w| **w).count();
    Ok(PreprocessStats {
        frames: written.len(),
        written: n,
        skipped: written.len() - n,
    })
}
