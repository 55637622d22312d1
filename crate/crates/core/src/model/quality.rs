use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One of the three qualities that trisect the compass.
///
/// Neighbor order is circular: Harmony, Passion, Suppression, then back to
/// Harmony.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    Harmony,
    Passion,
    Suppression,
}

impl Quality {
    pub const ALL: [Quality; 3] = [Quality::Harmony, Quality::Passion, Quality::Suppression];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn next(self) -> Quality {
        Self::ALL[(self.index() + 1) % 3]
    }

    pub fn prev(self) -> Quality {
        Self::ALL[(self.index() + 2) % 3]
    }

    pub fn is_neighbor_of(self, other: Quality) -> bool {
        self != other
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Harmony => "harmony",
            Quality::Passion => "passion",
            Quality::Suppression => "suppression",
        }
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} `{value}`")]
pub struct ParseEnumError {
    pub kind: &'static str,
    pub value: String,
}

impl FromStr for Quality {
    type Err = ParseEnumError;

    /// Accepts full names, the short forms used in sphere tables, and the
    /// Sanskrit names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "harmony" | "har" | "sattva" => Ok(Quality::Harmony),
            "passion" | "pass" | "raja" | "rajas" => Ok(Quality::Passion),
            "suppression" | "supp" | "tamas" => Ok(Quality::Suppression),
            _ => Err(ParseEnumError { kind: "quality", value: s.to_string() }),
        }
    }
}

/// The context a table describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sphere {
    Eco,
    Socio,
    Econo,
    #[default]
    Unspecified,
}

impl Sphere {
    pub const NESTED: [Sphere; 3] = [Sphere::Eco, Sphere::Socio, Sphere::Econo];

    pub fn as_str(self) -> &'static str {
        match self {
            Sphere::Eco => "eco",
            Sphere::Socio => "socio",
            Sphere::Econo => "econo",
            Sphere::Unspecified => "unspecified",
        }
    }
}

impl fmt::Display for Sphere {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sphere {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eco" | "eco-sphere" | "ecosphere" => Ok(Sphere::Eco),
            "socio" | "socio-sphere" | "sociosphere" => Ok(Sphere::Socio),
            "econo" | "econo-sphere" | "econosphere" => Ok(Sphere::Econo),
            "" | "unspecified" => Ok(Sphere::Unspecified),
            _ => Err(ParseEnumError { kind: "sphere", value: s.to_string() }),
        }
    }
}
