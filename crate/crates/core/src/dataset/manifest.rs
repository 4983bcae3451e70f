use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::label::{derive_binary_label, BinaryLabel, RegionIntensity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameKey {
    pub patient_id: String,
    pub video_id: String,
    pub frame_index: u64,
}

impl fmt::Display for FrameKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.patient_id, self.video_id, self.frame_index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub key: FrameKey,
    pub rgb_path: PathBuf,
    pub landmark_path: PathBuf,
    pub blendshape_path: PathBuf,
    pub eye: RegionIntensity,
    pub mouth: RegionIntensity,
}

impl FrameRecord {
    pub fn label(&self) -> BinaryLabel {
        derive_binary_label(self.eye, self.mouth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    pub video_id: String,
    pub fps: f64,
    pub frames: Vec<FrameRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patient {
    pub patient_id: String,
    pub videos: Vec<Video>,
}

/// Validated frame inventory. Patients and their videos are kept sorted by
/// id so that everything derived from a manifest is independent of the order
/// entries appear in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    patients: Vec<Patient>,
    frames: Vec<FrameRecord>,
}

impl Manifest {
    /// Merges entries that share a patient or video id, sorts, and checks
    /// key uniqueness and frame ordering. Does not touch the filesystem.
    pub fn new(patients: Vec<Patient>) -> Result<Self> {
        let mut merged: BTreeMap<String, BTreeMap<String, Video>> = BTreeMap::new();
        for p in patients {
            let videos = merged.entry(p.patient_id.clone()).or_default();
            for v in p.videos {
                match videos.get_mut(&v.video_id) {
                    Some(existing) => existing.frames.extend(v.frames),
                    None => {
                        videos.insert(v.video_id.clone(), v);
                    }
                }
            }
        }

        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(merged.len());
        for (patient_id, videos) in merged {
            let mut vs = Vec::with_capacity(videos.len());
            for (_, v) in videos {
                for f in &v.frames {
                    if f.key.patient_id != patient_id || f.key.video_id != v.video_id {
                        return Err(Error::Ingestion(format!("frame {} filed under wrong patient/video", f.key)));
                    }
                    if !seen.insert(f.key.clone()) {
                        return Err(Error::Ingestion(format!("duplicate frame key {}", f.key)));
                    }
                }
                for w in v.frames.windows(2) {
                    if w[1].key.frame_index <= w[0].key.frame_index {
                        return Err(Error::Ingestion(format!(
                            "frame indices must increase within a video: {} follows {}",
                            w[1].key, w[0].key
                        )));
                    }
                }
                vs.push(v);
            }
            out.push(Patient {
                patient_id,
                videos: vs,
            });
        }
        let frames = out
            .iter()
            .flat_map(|p| p.videos.iter().flat_map(|v| v.frames.iter().cloned()))
            .collect();
        Ok(Self { patients: out, frames })
    }

    pub fn patients(&self) -> &[Patient] {
        &self.patients
    }

    /// Every frame, grouped by patient then video, in canonical order.
    pub fn frames(&self) -> &[FrameRecord] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn patient_ids(&self) -> Vec<&str> {
        self.patients.iter().map(|p| p.patient_id.as_str()).collect()
    }

    /// Checks that every referenced file exists.
    pub fn check_files(&self) -> Result<()> {
        for f in &self.frames {
            for (what, path) in [
                ("rgb", &f.rgb_path),
                ("landmarks", &f.landmark_path),
                ("blendshapes", &f.blendshape_path),
            ] {
                if !path.is_file() {
                    return Err(Error::Ingestion(format!(
                        "frame {}: {what} file {} does not exist",
                        f.key,
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestFile {
    pub patients: Vec<PatientEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PatientEntry {
    pub patient_id: String,
    pub videos: Vec<VideoEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VideoEntry {
    pub video_id: String,
    #[serde(default = "default_fps")]
    pub fps: f64,
    pub frames: Vec<FrameEntry>,
}

fn default_fps() -> f64 {
    6.0
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FrameEntry {
    pub index: u64,
    pub rgb: String,
    pub landmarks: String,
    pub blendshapes: String,
    pub eye: String,
    pub mouth: String,
}

impl ManifestFile {
    /// Resolves paths against `root` and parses intensity tokens.
    pub fn into_manifest(self, root: &Path) -> Result<Manifest> {
        let mut patients = Vec::with_capacity(self.patients.len());
        for p in self.patients {
            let mut videos = Vec::with_capacity(p.videos.len());
            for v in p.videos {
                let mut frames = Vec::with_capacity(v.frames.len());
                for f in v.frames {
                    let key = FrameKey {
                        patient_id: p.patient_id.clone(),
                        video_id: v.video_id.clone(),
                        frame_index: f.index,
                    };
                    let parse = |token: &str, region: &str| {
                        token
                            .parse::<RegionIntensity>()
                            .map_err(|e| Error::Ingestion(format!("frame {key} {region}: {e}")))
                    };
                    frames.push(FrameRecord {
                        eye: parse(&f.eye, "eye")?,
                        mouth: parse(&f.mouth, "mouth")?,
                        rgb_path: root.join(&f.rgb),
                        landmark_path: root.join(&f.landmarks),
                        blendshape_path: root.join(&f.blendshapes),
                        key,
                    });
                }
                videos.push(Video {
                    video_id: v.video_id,
                    fps: v.fps,
                    frames,
                });
            }
            patients.push(Patient {
                patient_id: p.patient_id,
                videos,
            });
        }
        Manifest::new(patients)
    }
}

/// Reads, validates and resolves a JSON manifest. Paths inside it are
/// relative to the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ManifestFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let root = path.parent().unwrap_or_else(|| Path::new("."));
    let manifest = file.into_manifest(root)?;
    manifest.check_files()?;
    Ok(manifest)
}
