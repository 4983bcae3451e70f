use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const LANDMARK_COUNT: usize = 478;
pub const SUBSET_SIZE: usize = 125;

/// The full face mesh for one frame: 478 points with `x, y` normalized to
/// the image size and `z` a relative depth.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<[f64; 3]>,
}

impl LandmarkSet {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.len() != LANDMARK_COUNT {
            return Err(Error::Ingestion(format!(
                "expected {LANDMARK_COUNT} landmarks, got {}",
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::Ingestion(format!("landmark {i} is not finite: {p:?}")));
            }
            if !(0.0..=1.0).contains(&p[0]) || !(0.0..=1.0).contains(&p[1]) {
                return Err(Error::Ingestion(format!(
                    "landmark {i} lies outside the unit square: ({}, {})",
                    p[0], p[1]
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn xy(&self, i: usize) -> (f64, f64) {
        (self.points[i][0], self.points[i][1])
    }

    /// Parses the `x,y,z` per line text format.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut points = Vec::with_capacity(LANDMARK_COUNT);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
            match parsed {
                Some(v) if v.len() == 3 => points.push([v[0], v[1], v[2]]),
                _ => {
                    return Err(Error::Parse {
                        path: origin.to_path_buf(),
                        line: lineno + 1,
                        message: format!("expected `x,y,z`, got `{line}`"),
                    })
                }
            }
        }
        Self::new(points).map_err(|e| match e {
            Error::Ingestion(m) => Error::Ingestion(format!("{}: {m}", origin.display())),
            other => other,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        self.points
            .iter()
            .map(|p| format!("{},{},{}\n", p[0], p[1], p[2]))
            .collect()
    }
}

/// The 125×2 coordinate modality.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMatrix {
    coords: Vec<[f64; 2]>,
}

impl CoordinateMatrix {
    pub fn rows(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn to_tensor(&self) -> Tensor<f32> {
        let data = self.coords.iter().flat_map(|r| r.map(|v| v as f32)).collect();
        Tensor::new(vec![SUBSET_SIZE, 2], data).expect("125×2 by construction")
    }
}

/// An ordered list of 125 distinct landmark indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandmarkSubset(Vec<usize>);

impl LandmarkSubset {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.len() != SUBSET_SIZE {
            return Err(Error::SubsetSpec(format!(
                "expected {SUBSET_SIZE} indices, got {}",
                indices.len()
            )));
        }
        let mut seen = HashSet::new();
        for &i in &indices {
            if i >= LANDMARK_COUNT {
                return Err(Error::SubsetSpec(format!("index {i} is out of range (< {LANDMARK_COUNT})")));
            }
            if !seen.insert(i) {
                return Err(Error::SubsetSpec(format!("index {i} appears twice")));
            }
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// One integer per line.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut indices = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            indices.push(line.parse().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                message: format!("expected a landmark index, got `{line}`"),
            })?);
        }
        Self::new(indices)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|i| format!("{i}\n")).collect()
    }
}

// Face-mesh topology groups.
const RIGHT_EYE: [usize; 16] = [33, 7, 163, 144, 145, 153, 154, 155, 133, 246, 161, 160, 159, 158, 157, 173];
const LEFT_EYE: [usize; 16] = [263, 249, 390, 373, 374, 380, 381, 382, 362, 466, 388, 387, 386, 385, 384, 398];
const IRISES: [usize; 10] = [468, 469, 470, 471, 472, 473, 474, 475, 476, 477];
const LIPS: [usize; 40] = [
    61, 146, 91, 181, 84, 17, 314, 405, 321, 375, 291, 185, 40, 39, 37, 0, 267, 269, 270, 409, 78, 95, 88, 178, 87, 14,
    317, 402, 318, 324, 308, 191, 80, 81, 82, 13, 312, 311, 310, 415,
];
const NOSE: [usize; 43] = [
    168, 6, 197, 195, 5, 4, 1, 19, 94, 2, 98, 97, 326, 327, 294, 278, 344, 440, 275, 45, 220, 115, 48, 64, 3, 51, 281,
    248, 236, 456, 131, 360, 49, 279, 102, 331, 129, 358, 209, 429, 217, 437, 198,
];

impl Default for LandmarkSubset {
    /// Eye contours and irises, the nose bridge/tip/alae and the inner and
    /// outer lip contours of the 478-point face mesh.
    fn default() -> Self {
        let indices = RIGHT_EYE
            .iter()
            .chain(&LEFT_EYE)
            .chain(&IRISES)
            .chain(&NOSE)
            .chain(&LIPS)
            .copied()
            .collect();
        Self::new(indices).expect("default subset is valid")
    }
}

/// Picks the `(x, y)` of each subset index in order; `z` is never read.
pub fn select_landmark_subset(lm: &LandmarkSet, subset: &LandmarkSubset) -> CoordinateMatrix {
    CoordinateMatrix {
        coords: subset
            .indices()
            .iter()
            .map(|&i| {
                let (x, y) = lm.xy(i);
                [x, y]
            })
            .collect(),
    }
}
