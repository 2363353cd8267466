//! The combined 20-value patch descriptor and feature-family masks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::color::ColorFeatures;
use crate::contact::ContactFeatures;
use crate::error::{Error, Result};
use crate::geometry::GeometricFeatures;

/// Number of values in a full feature vector.
pub const FEATURE_LEN: usize = ColorFeatures::LEN + GeometricFeatures::LEN + ContactFeatures::LEN;

/// Color, geometric and contact features of one patch, stored in that order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub color: ColorFeatures,
    pub geometry: GeometricFeatures,
    pub contact: ContactFeatures,
}

impl FeatureVector {
    /// Column names in storage order.
    pub fn names() -> Vec<&'static str> {
        ColorFeatures::NAMES
            .iter()
            .chain(GeometricFeatures::NAMES.iter())
            .chain(ContactFeatures::NAMES.iter())
            .copied()
            .collect()
    }

    pub fn to_array(&self) -> [f64; FEATURE_LEN] {
        let mut out = [0.0; FEATURE_LEN];
        let (c, rest) = out.split_at_mut(ColorFeatures::LEN);
        let (g, k) = rest.split_at_mut(GeometricFeatures::LEN);
        c.copy_from_slice(&self.color.to_array());
        g.copy_from_slice(&self.geometry.to_array());
        k.copy_from_slice(&self.contact.to_array());
        out
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != FEATURE_LEN {
            return Err(Error::Shape {
                expected: FEATURE_LEN,
                actual: v.len(),
            });
        }
        let (c, rest) = v.split_at(ColorFeatures::LEN);
        let (g, k) = rest.split_at(GeometricFeatures::LEN);
        Ok(Self {
            color: ColorFeatures::from_slice(c).expect("length checked"),
            geometry: GeometricFeatures::from_slice(g).expect("length checked"),
            contact: ContactFeatures::from_slice(k).expect("length checked"),
        })
    }

    /// The values of the families selected by `mask`, in storage order.
    pub fn select(&self, mask: FeatureMask) -> Vec<f64> {
        let mut out = Vec::with_capacity(mask.len());
        if mask.color {
            out.extend(self.color.to_array());
        }
        if mask.geometry {
            out.extend(self.geometry.to_array());
        }
        if mask.contact {
            out.extend(self.contact.to_array());
        }
        out
    }
}

/// Which feature families a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureMask {
    pub color: bool,
    pub geometry: bool,
    pub contact: bool,
}

impl FeatureMask {
    pub const COLOR: Self = Self::new(true, false, false);
    pub const GEOMETRY: Self = Self::new(false, true, false);
    pub const CONTACT: Self = Self::new(false, false, true);
    pub const COLOR_CONTACT: Self = Self::new(true, false, true);
    pub const ALL: Self = Self::new(true, true, true);

    pub const fn new(color: bool, geometry: bool, contact: bool) -> Self {
        Self {
            color,
            geometry,
            contact,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.color || self.geometry || self.contact)
    }

    /// Number of selected feature values.
    pub fn len(&self) -> usize {
        usize::from(self.color) * ColorFeatures::LEN
            + usize::from(self.geometry) * GeometricFeatures::LEN
            + usize::from(self.contact) * ContactFeatures::LEN
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.color {
            out.extend(ColorFeatures::NAMES);
        }
        if self.geometry {
            out.extend(GeometricFeatures::NAMES);
        }
        if self.contact {
            out.extend(ContactFeatures::NAMES);
        }
        out
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Self::ALL {
            return f.write_str("all");
        }
        let parts: Vec<&str> = [(self.color, "color"), (self.geometry, "geom"), (self.contact, "contact")]
            .into_iter()
            .filter_map(|(on, name)| on.then_some(name))
            .collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for FeatureMask {
    type Err = Error;

    /// Accepts `all` or a `+`-separated list of `color`, `geom` and `contact`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "all" {
            return Ok(Self::ALL);
        }
        let mut mask = Self::new(false, false, false);
        for part in s.split('+').map(str::trim) {
            match part {
                "color" | "colour" => mask.color = true,
                "geom" | "geometry" | "geometric" => mask.geometry = true,
                "contact" | "proprio" | "proprioceptive" => mask.contact = true,
                _ => return Err(Error::InvalidArgument(format!("unknown feature family `{part}`"))),
            }
        }
        Ok(mask)
    }
}

impl TryFrom<String> for FeatureMask {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FeatureMask> for String {
    fn from(m: FeatureMask) -> String {
        m.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureVector {
        let v: Vec<f64> = (0..FEATURE_LEN).map(|i| i as f64 + 0.5).collect();
        FeatureVector::from_slice(&v).unwrap()
    }

    #[test]
    fn layout_round_trip() {
        let f = sample();
        let arr = f.to_array();
        assert_eq!(arr[0], 0.5);
        assert_eq!(arr[12], 12.5);
        assert_eq!(arr[16], 16.5);
        assert_eq!(FeatureVector::from_slice(&arr).unwrap(), f);
        assert_eq!(FeatureVector::names().len(), 20);
        assert!(FeatureVector::from_slice(&arr[..19]).is_err());
    }

    #[test]
    fn masks_select_families() {
        let f = sample();
        assert_eq!(f.select(FeatureMask::COLOR).len(), 12);
        assert_eq!(f.select(FeatureMask::GEOMETRY), vec![12.5, 13.5, 14.5, 15.5]);
        assert_eq!(f.select(FeatureMask::CONTACT), vec![16.5, 17.5, 18.5, 19.5]);
        let cc = f.select(FeatureMask::COLOR_CONTACT);
        assert_eq!(cc.len(), 16);
        assert_eq!(cc[12], 16.5);
        assert_eq!(f.select(FeatureMask::ALL).to_vec(), f.to_array().to_vec());
        assert_eq!(FeatureMask::COLOR_CONTACT.names().len(), 16);
    }

    #[test]
    fn mask_parsing() {
        for (text, mask) in [
            ("color", FeatureMask::COLOR),
            ("geom", FeatureMask::GEOMETRY),
            ("contact", FeatureMask::CONTACT),
            ("color+contact", FeatureMask::COLOR_CONTACT),
            ("all", FeatureMask::ALL),
        ] {
            assert_eq!(text.parse::<FeatureMask>().unwrap(), mask);
            assert_eq!(mask.to_string(), text);
        }
        assert_eq!("color+geom+contact".parse::<FeatureMask>().unwrap(), FeatureMask::ALL);
        assert!("texture".parse::<FeatureMask>().is_err());
        assert!("".parse::<FeatureMask>().is_err());
    }
}
