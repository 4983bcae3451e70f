use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Clinician-rated palsy intensity in one facial region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegionIntensity {
    Absent,
    Slight,
    Strong,
}

impl RegionIntensity {
    pub const ALL: [RegionIntensity; 3] = [Self::Absent, Self::Slight, Self::Strong];
    pub const TOKENS: [&'static str; 3] = ["none", "slight", "strong"];

    pub fn token(self) -> &'static str {
        match self {
            Self::Absent => "none",
            Self::Slight => "slight",
            Self::Strong => "strong",
        }
    }
}

impl FromStr for RegionIntensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Self::Absent),
            "slight" => Ok(Self::Slight),
            "strong" => Ok(Self::Strong),
            _ => Err(Error::Ingestion(format!(
                "unknown intensity `{s}`; valid tokens: {}",
                Self::TOKENS.join(", ")
            ))),
        }
    }
}

impl fmt::Display for RegionIntensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Frame-level palsy label. Class index 1 is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryLabel {
    Negative,
    Positive,
}

impl BinaryLabel {
    pub fn class_index(self) -> usize {
        match self {
            Self::Negative => 0,
            Self::Positive => 1,
        }
    }

    pub fn from_class_index(i: usize) -> Self {
        if i == 1 {
            Self::Positive
        } else {
            Self::Negative
        }
    }

    /// `[1, 0]` for negative, `[0, 1]` for positive.
    pub fn one_hot(self) -> [f32; 2] {
        match self {
            Self::Negative => [1.0, 0.0],
            Self::Positive => [0.0, 1.0],
        }
    }
}

/// Palsy is present when either region is strong, or both are slight.
pub fn derive_binary_label(eye: RegionIntensity, mouth: RegionIntensity) -> BinaryLabel {
    use RegionIntensity::*;
    let any_strong = eye == Strong || mouth == Strong;
    let both_slight = eye == Slight && mouth == Slight;
    if any_strong || both_slight {
        BinaryLabel::Positive
    } else {
        BinaryLabel::Negative
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use RegionIntensity::*;

    #[test]
    fn rule_examples() {
        assert_eq!(derive_binary_label(Strong, Absent), BinaryLabel::Positive);
        assert_eq!(derive_binary_label(Slight, Slight), BinaryLabel::Positive);
        assert_eq!(derive_binary_label(Slight, Absent), BinaryLabel::Negative);
        assert_eq!(derive_binary_label(Absent, Absent), BinaryLabel::Negative);
    }

    #[test]
    fn tokens_parse_case_insensitively() {
        assert_eq!("NONE".parse::<RegionIntensity>().unwrap(), Absent);
        assert_eq!(" Slight".parse::<RegionIntensity>().unwrap(), Slight);
        let err = "moderate".parse::<RegionIntensity>().unwrap_err().to_string();
        assert!(err.contains("none, slight, strong"), "{err}");
    }

    #[test]
    fn intensities_are_ordered() {
        assert!(Absent < Slight && Slight < Strong);
    }

    #[test]
    fn one_hot_matches_class_index() {
        for l in [BinaryLabel::Negative, BinaryLabel::Positive] {
            assert_eq!(l.one_hot()[l.class_index()], 1.0);
            assert_eq!(BinaryLabel::from_class_index(l.class_index()), l);
        }
    }
}
