pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod models;
pub mod modalities;
pub mod numerics;
pub mod synth;

pub use error::{Error, Result};
