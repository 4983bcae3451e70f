use std::path::Path;

use serde::{Deserialize, Serialize};

use super::landmarks::LANDMARK_COUNT;
use crate::error::{Error, Result};

/// One named polyline over landmark indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContourGroup {
    pub name: String,
    #[serde(default)]
    pub closed: bool,
    pub indices: Vec<usize>,
}

/// Which landmark polylines make up the line-segment image.
///
/// File format (TOML):
///
/// ```toml
/// [[group]]
/// name = "face_oval"
/// closed = true
/// indices = [10, 338, 297]
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContourSpec {
    #[serde(default, rename = "group")]
    pub groups: Vec<ContourGroup>,
}

impl ContourSpec {
    pub fn new(groups: Vec<ContourGroup>) -> Result<Self> {
        let spec = Self { groups };
        spec.validate()?;
        Ok(spec)
    }

    pub fn empty() -> Self {
        Self { groups: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.groups {
            if g.indices.len() < 2 {
                return Err(Error::ContourSpec(format!(
                    "group `{}` needs at least 2 indices, has {}",
                    g.name,
                    g.indices.len()
                )));
            }
            if let Some(&i) = g.indices.iter().find(|&&i| i >= LANDMARK_COUNT) {
                return Err(Error::ContourSpec(format!(
                    "group `{}` references landmark {i} (must be < {LANDMARK_COUNT})",
                    g.name
                )));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::ContourSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::ContourSpec(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("contour spec serializes")
    }

    /// Segments `(from, to)` as landmark index pairs, closing loops where flagged.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.groups.iter().flat_map(|g| {
            let open = g.indices.windows(2).map(|w| (w[0], w[1]));
            let close = (g.closed && g.indices.len() > 2)
                .then(|| (*g.indices.last().unwrap(), g.indices[0]));
            open.chain(close)
        })
    }
}

fn group(name: &str, closed: bool, indices: &[usize]) -> ContourGroup {
    ContourGroup {
        name: name.into(),
        closed,
        indices: indices.to_vec(),
    }
}

impl Default for ContourSpec {
    /// Face silhouette, both eyebrows (upper and lower edge) and both eyes.
    fn default() -> Self {
        Self {
            groups: vec![
                group(
                    "face_oval",
                    true,
                    &[
                        10, 338, 297, 332, 284, 251, 389, 356, 454, 323, 361, 288, 397, 365, 379, 378, 400, 377, 152,
                        148, 176, 149, 150, 136, 172, 58, 132, 93, 234, 127, 162, 21, 54, 103, 67, 109,
                    ],
                ),
                group("left_eyebrow_lower", false, &[276, 283, 282, 295, 285]),
                group("left_eyebrow_upper", false, &[300, 293, 334, 296, 336]),
                group("right_eyebrow_lower", false, &[46, 53, 52, 65, 55]),
                group("right_eyebrow_upper", false, &[70, 63, 105, 66, 107]),
                group(
                    "left_eye",
                    true,
                    &[263, 466, 388, 387, 386, 385, 384, 398, 362, 382, 381, 380, 374, 373, 390, 249],
                ),
                group(
                    "right_eye",
                    true,
                    &[33, 246, 161, 160, 159, 158, 157, 173, 133, 155, 154, 153, 145, 144, 163, 7],
                ),
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_is_valid_and_round_trips() {
        let spec = ContourSpec::default();
        spec.validate().unwrap();
        assert_eq!(ContourSpec::parse(&spec.to_toml()).unwrap(), spec);
    }

    #[test]
    fn closed_groups_wrap_around() {
        let spec = ContourSpec::new(vec![group("tri", true, &[1, 2, 3]), group("line", false, &[4, 5])]).unwrap();
        let segs: Vec<_> = spec.segments().collect();
        assert_eq!(segs, vec![(1, 2), (2, 3), (3, 1), (4, 5)]);
    }

    #[test]
    fn invalid_groups_are_rejected() {
        assert!(ContourSpec::new(vec![group("short", false, &[1])]).is_err());
        assert!(matches!(
            ContourSpec::new(vec![group("oob", false, &[1, 478])]),
            Err(Error::ContourSpec(_))
        ));
    }

    #[test]
    fn parses_toml() {
        let spec = ContourSpec::parse("[[group]]\nname = \"brow\"\nindices = [1, 2, 3]\n").unwrap();
        assert_eq!(spec.groups.len(), 1);
        assert!(!spec.groups[0].closed);
        assert!(ContourSpec::parse("").unwrap().groups.is_empty());
    }
}
