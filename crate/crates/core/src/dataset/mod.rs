//! Frame manifest ingestion, the binary palsy label, leave-one-patient-out
//! fold planning and mini-batching.

mod batch;
mod folds;
mod label;
mod manifest;

pub use batch::{batch_iterator, Batches};
pub use folds::{lopo_folds, Fold, FoldPlan};
pub use label::{derive_binary_label, BinaryLabel, RegionIntensity};
pub use manifest::{
    load_manifest, FrameEntry, FrameKey, FrameRecord, Manifest, ManifestFile, Patient, PatientEntry, Video, VideoEntry,
};

/// Default mini-batch size.
pub const DEFAULT_BATCH_SIZE: usize = 32;
