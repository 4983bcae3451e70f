use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const BLENDSHAPE_COUNT: usize = 52;

/// 52 facial-expression activations, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendshapeVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl BlendshapeVector {
    /// Out-of-range values are rejected rather than clamped.
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != BLENDSHAPE_COUNT || names.len() != values.len() {
            return Err(Error::Ingestion(format!(
                "expected {BLENDSHAPE_COUNT} blendshapes, got {}",
                values.len()
            )));
        }
        for (name, &v) in names.iter().zip(&values) {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Ingestion(format!("blendshape `{name}` = {v} is outside [0, 1]")));
            }
        }
        Ok(Self { names, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Parses the `name,value` per line text format.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut names = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parsed = line
                .rsplit_once(',')
                .and_then(|(n, v)| v.trim().parse::<f64>().ok().map(|v| (n.trim().to_owned(), v)));
            match parsed {
                Some((n, v)) => {
                    names.push(n);
                    values.push(v);
                }
                None => {
                    return Err(Error::Parse {
                        path: origin.to_path_buf(),
                        line: lineno + 1,
                        message: format!("expected `name,value`, got `{line}`"),
                    })
                }
            }
        }
        Self::new(names, values).map_err(|e| match e {
            Error::Ingestion(m) => Error::Ingestion(format!("{}: {m}", origin.display())),
            other => other,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        self.names
            .iter()
            .zip(&self.values)
            .map(|(n, v)| format!("{n},{v}\n"))
            .collect()
    }

    pub fn to_tensor(&self) -> Tensor<f32> {
        Tensor::from_vec(self.values.iter().map(|&v| v as f32).collect())
    }
}

/// Facial-expression attribute names in estimator output order.
pub const BLENDSHAPE_NAMES: [&str; BLENDSHAPE_COUNT] = [
    "_neutral",
    "browDownLeft",
    "browDownRight",
    "browInnerUp",
    "browOuterUpLeft",
    "browOuterUpRight",
    "cheekPuff",
    "cheekSquintLeft",
    "cheekSquintRight",
    "eyeBlinkLeft",
    "eyeBlinkRight",
    "eyeLookDownLeft",
    "eyeLookDownRight",
    "eyeLookInLeft",
    "eyeLookInRight",
    "eyeLookOutLeft",
    "eyeLookOutRight",
    "eyeLookUpLeft",
    "eyeLookUpRight",
    "eyeSquintLeft",
    "eyeSquintRight",
    "eyeWideLeft",
    "eyeWideRight",
    "jawForward",
    "jawLeft",
    "jawOpen",
    "jawRight",
    "mouthClose",
    "mouthDimpleLeft",
    "mouthDimpleRight",
    "mouthFrownLeft",
    "mouthFrownRight",
    "mouthFunnel",
    "mouthLeft",
    "mouthLowerDownLeft",
    "mouthLowerDownRight",
    "mouthPressLeft",
    "mouthPressRight",
    "mouthPucker",
    "mouthRight",
    "mouthRollLower",
    "mouthRollUpper",
    "mouthShrugLower",
    "mouthShrugUpper",
    "mouthSmileLeft",
    "mouthSmileRight",
    "mouthStretchLeft",
    "mouthStretchRight",
    "mouthUpperUpLeft",
    "mouthUpperUpRight",
    "noseSneerLeft",
    "noseSneerRight",
];
