use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The four terrain classes, in their fixed enumeration order. The order is
/// also the tie-break order of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerrainClass {
    Ploughed,
    Unploughed,
    DirtRoad,
    Gravel,
}

impl TerrainClass {
    pub const ALL: [TerrainClass; 4] = [
        TerrainClass::Ploughed,
        TerrainClass::Unploughed,
        TerrainClass::DirtRoad,
        TerrainClass::Gravel,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn slug(self) -> &'static str {
        match self {
            TerrainClass::Ploughed => "ploughed",
            TerrainClass::Unploughed => "unploughed",
            TerrainClass::DirtRoad => "dirt-road",
            TerrainClass::Gravel => "gravel",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            TerrainClass::Ploughed => "Ploughed terrain",
            TerrainClass::Unploughed => "Unploughed terrain",
            TerrainClass::DirtRoad => "Dirt road",
            TerrainClass::Gravel => "Gravel",
        }
    }
}

impl fmt::Display for TerrainClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for TerrainClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match norm.as_str() {
            "ploughed" | "plowed" | "ploughedterrain" => Ok(TerrainClass::Ploughed),
            "unploughed" | "unplowed" | "unploughedterrain" => Ok(TerrainClass::Unploughed),
            "dirtroad" | "dirt" => Ok(TerrainClass::DirtRoad),
            "gravel" => Ok(TerrainClass::Gravel),
            _ => Err(Error::InvalidArgument(format!("unknown terrain class `{s}`"))),
        }
    }
}
