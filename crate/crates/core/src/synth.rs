//! Synthetic corpora for tests, demos and the acceptance suite.
//!
//! Frames carry a graded one-sided droop in the landmarks, a matching
//! one-sided lift in the `*Left` blendshapes and a rendered RGB image, so
//! every modality holds some class signal.

use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::{BinaryLabel, FrameEntry, ManifestFile, PatientEntry, RegionIntensity, VideoEntry};
use crate::error::{Error, Result};
use crate::modalities::{BlendshapeVector, LandmarkSet, RgbImage, BLENDSHAPE_NAMES, LANDMARK_COUNT};
use crate::numerics::{RngState, Tensor};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub patients: usize,
    pub videos_per_patient: usize,
    pub frames_per_video: usize,
    pub image_side: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            patients: 21,
            videos_per_patient: 2,
            frames_per_video: 4,
            image_side: 32,
            seed: 0,
        }
    }
}

fn intensity_weight(r: RegionIntensity) -> f64 {
    match r {
        RegionIntensity::Absent => 0.0,
        RegionIntensity::Slight => 0.5,
        RegionIntensity::Strong => 1.0,
    }
}

/// Mean region weight: 0 for none/none, at least 0.5 whenever the frame is
/// labelled positive.
pub fn severity(eye: RegionIntensity, mouth: RegionIntensity) -> f64 {
    (intensity_weight(eye) + intensity_weight(mouth)) / 2.0
}

fn draw_intensity(rng: &mut RngState) -> RegionIntensity {
    match rng.uniform() {
        u if u < 0.4 => RegionIntensity::Absent,
        u if u < 0.7 => RegionIntensity::Slight,
        _ => RegionIntensity::Strong,
    }
}

/// Per-patient face placement.
#[derive(Debug, Clone, Copy)]
struct Face {
    cx: f64,
    cy: f64,
    scale: f64,
}

impl Face {
    fn sample(rng: &mut RngState) -> Self {
        Self {
            cx: 0.5 + rng.uniform_range(-0.03, 0.03),
            cy: 0.5 + rng.uniform_range(-0.03, 0.03),
            scale: rng.uniform_range(0.9, 1.1),
        }
    }
}

/// Points on a sunflower disc; points right of centre droop with `severity`.
fn landmarks(face: Face, severity: f64, rng: &mut RngState) -> LandmarkSet {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let points = (0..LANDMARK_COUNT)
        .map(|i| {
            let r = 0.35 * face.scale * ((i as f64 + 0.5) / LANDMARK_COUNT as f64).sqrt();
            let a = i as f64 * golden;
            let (dx, dy) = (r * a.cos(), r * a.sin());
            let droop = if dx > 0.0 { severity * 0.2 * dx } else { 0.0 };
            let x = face.cx + dx + 0.004 * rng.normal();
            let y = face.cy + dy + droop + 0.004 * rng.normal();
            [x.clamp(0.01, 0.99), y.clamp(0.01, 0.99), 0.01 * rng.normal()]
        })
        .collect();
    LandmarkSet::new(points).expect("points clamped into the unit square")
}

fn blendshapes(severity: f64, rng: &mut RngState) -> BlendshapeVector {
    let values = BLENDSHAPE_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let base = 0.15 + 0.2 * ((i * 37 % 52) as f64 / 52.0);
            let lift = if name.ends_with("Left") { 0.4 * severity } else { 0.0 };
            (base + lift + 0.03 * rng.normal()).clamp(0.0, 1.0)
        })
        .collect();
    BlendshapeVector::new(BLENDSHAPE_NAMES.map(String::from).to_vec(), values).expect("values clamped into [0, 1]")
}

/// Dark background with the landmarks plotted in a skin tone.
pub fn render_rgb(lm: &LandmarkSet, side: usize) -> RgbImage {
    let mut data = vec![32u8; side * side * 3];
    for &[x, y, _] in lm.points() {
        let px = ((x * side as f64) as usize).min(side - 1);
        let py = ((y * side as f64) as usize).min(side - 1);
        let o = (py * side + px) * 3;
        data[o..o + 3].copy_from_slice(&[220, 170, 140]);
    }
    RgbImage::new(side, side, data).expect("side × side × 3 bytes")
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes landmark, blendshape and PNG files plus `manifest.json` under
/// `dir` and returns the manifest path. Patients are named `P01`, `P02`, ...
pub fn write_synthetic_corpus(dir: &Path, cfg: &SynthConfig) -> Result<PathBuf> {
    if cfg.patients == 0 || cfg.videos_per_patient == 0 || cfg.frames_per_video == 0 {
        return Err(Error::Config("synthetic corpus needs at least one frame per video".into()));
    }
    let mut rng = RngState::new(cfg.seed);
    let mut patients = Vec::with_capacity(cfg.patients);
    for p in 0..cfg.patients {
        let pid = format!("P{:02}", p + 1);
        let face = Face::sample(&mut rng);
        let mut videos = Vec::with_capacity(cfg.videos_per_patient);
        for v in 0..cfg.videos_per_patient {
            let vid = format!("v{}", v + 1);
            let rel_dir = PathBuf::from("frames").join(&pid).join(&vid);
            let abs_dir = dir.join(&rel_dir);
            fs::create_dir_all(&abs_dir).map_err(|source| Error::Output {
                path: abs_dir.clone(),
                source,
            })?;
            let mut frames = Vec::with_capacity(cfg.frames_per_video);
            for f in 0..cfg.frames_per_video {
                let index = (f * 5) as u64;
                let (eye, mouth) = (draw_intensity(&mut rng), draw_intensity(&mut rng));
                let sev = severity(eye, mouth);
                let lm = landmarks(face, sev, &mut rng);
                let bs = blendshapes(sev, &mut rng);
                let stem = format!("{index:05}");
                let rel = |ext: &str| rel_dir.join(format!("{stem}.{ext}"));
                write(&dir.join(rel("lm")), lm.to_text().as_bytes())?;
                write(&dir.join(rel("bs")), bs.to_text().as_bytes())?;
                render_rgb(&lm, cfg.image_side).save_png(&dir.join(rel("png")))?;
                let to_str = |p: PathBuf| p.to_string_lossy().replace('\\', "/");
                frames.push(FrameEntry {
                    index,
                    rgb: to_str(rel("png")),
                    landmarks: to_str(rel("lm")),
                    blendshapes: to_str(rel("bs")),
                    eye: eye.token().into(),
                    mouth: mouth.token().into(),
                });
            }
            videos.push(VideoEntry {
                video_id: vid,
                fps: 6.0,
                frames,
            });
        }
        patients.push(PatientEntry {
            patient_id: pid,
            videos,
        });
    }
    let manifest = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&ManifestFile { patients }).expect("manifest serializes");
    write(&manifest, json.as_bytes())?;
    Ok(manifest)
}

/// Two isotropic Gaussian clusters in `dim` dimensions with means 0.4 and
/// 0.6 on every axis and standard deviation 0.1, clamped to `[0, 1]`.
/// Classes alternate row by row.
pub fn gaussian_clusters(n_per_class: usize, dim: usize, seed: u64) -> (Tensor, Vec<BinaryLabel>) {
    let mut rng = RngState::new(seed);
    let mut data = Vec::with_capacity(2 * n_per_class * dim);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for i in 0..2 * n_per_class {
        let label = if i % 2 == 0 { BinaryLabel::Negative } else { BinaryLabel::Positive };
        let mean = if label == BinaryLabel::Positive { 0.6 } else { 0.4 };
        data.extend((0..dim).map(|_| (mean + 0.1 * rng.normal()).clamp(0.0, 1.0) as f32));
        labels.push(label);
    }
    let x = Tensor::new(vec![2 * n_per_class, dim], data).expect("rows × dim");
    (x, labels)
}
