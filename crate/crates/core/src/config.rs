//! JSON configuration documents describing a recurrent IFS.
//!
//! States in a document are numbered from 1. A minimal example:
//!
//! ```json
//! {
//!   "ambient_dim": 1,
//!   "states": 2,
//!   "transition": [[0.5, 0.5], [1.0, 0.0]],
//!   "maps": [
//!     { "from": 1, "to": 1, "linear": 0.3333333333333333, "offset": [0.0] },
//!     { "from": 1, "to": 2, "linear": 0.3333333333333333, "offset": [0.6666666666666666] },
//!     { "from": 2, "to": 1, "linear": 0.25, "offset": [0.0] }
//!   ],
//!   "domain": [[0.0, 1.0]],
//!   "metadata": { "name": "R2", "separation_assertion": "SOSC" }
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rifs::{AffineMap, EdgeParts, RifsParts, RifsSpec, Separation, Violation};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub ambient_dim: usize,
    pub states: usize,
    pub transition: Vec<Vec<f64>>,
    pub maps: Vec<MapEntry>,
    pub domain: Vec<[f64; 2]>,
    #[serde(default)]
    pub metadata: Metadata,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapEntry {
    pub from: usize,
    pub to: usize,
    pub linear: Linear,
    pub offset: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

/// Linear part: a scalar multiple of the identity or a full square matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Linear {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub separation_assertion: Separation,
}

impl ConfigDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Converts to raw system data, reporting shape errors by field path.
    pub fn to_parts<T: Real>(&self) -> Result<RifsParts<T>> {
        let mut bad = Vec::new();
        let mut push = |path: String, message: String| bad.push(Violation { path, message });
        let k = self.ambient_dim;
        if !(1..=3).contains(&k) {
            push("ambient_dim".into(), format!("must be 1, 2 or 3, got {k}"));
        }
        if self.domain.len() != k {
            push(
                "domain".into(),
                format!("has {} intervals for ambient dimension {k}", self.domain.len()),
            );
        }
        if self.transition.len() != self.states {
            push(
                "transition".into(),
                format!("has {} rows for {} states", self.transition.len(), self.states),
            );
        }
        let mut maps = Vec::with_capacity(self.maps.len());
        for (m, entry) in self.maps.iter().enumerate() {
            for (field, v) in [("from", entry.from), ("to", entry.to)] {
                if v == 0 || v > self.states {
                    push(
                        format!("maps[{m}].{field}"),
                        format!("state {v} outside 1..={}", self.states),
                    );
                }
            }
            if entry.offset.len() != k {
                push(
                    format!("maps[{m}].offset"),
                    format!("has {} entries, expected {k}", entry.offset.len()),
                );
                continue;
            }
            let offset: Vec<T> = entry.offset.iter().map(|&x| T::lit(x)).collect();
            let map = match &entry.linear {
                Linear::Scalar(a) => AffineMap::scaled_identity(T::lit(*a), offset),
                Linear::Matrix(rows) => {
                    if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                        push(format!("maps[{m}].linear"), format!("must be a {k}x{k} array"));
                        continue;
                    }
                    AffineMap::new(rows.iter().flatten().map(|&x| T::lit(x)).collect(), offset)?
                }
            };
            if entry.from == 0 || entry.to == 0 {
                continue;
            }
            maps.push(EdgeParts {
                from: entry.from - 1,
                to: entry.to - 1,
                map,
                c: entry.c.map(T::lit),
                s: entry.s.map(T::lit),
            });
        }
        if !bad.is_empty() {
            return Err(Error::Validation(bad));
        }
        Ok(RifsParts {
            name: self.metadata.name.clone(),
            separation: self.metadata.separation_assertion,
            transition: self
                .transition
                .iter()
                .map(|row| row.iter().map(|&x| T::lit(x)).collect())
                .collect(),
            maps,
            domain: self.domain.iter().map(|&[lo, hi]| (T::lit(lo), T::lit(hi))).collect(),
        })
    }

    pub fn to_spec<T: Real>(&self) -> Result<RifsSpec<T>> {
        RifsSpec::new(self.to_parts()?)
    }

    /// Document describing `parts`; one-dimensional linear parts are written
    /// as scalars.
    pub fn from_parts<T: Real>(parts: &RifsParts<T>) -> Self {
        let k = parts.domain.len();
        let f = |x: T| x.to_f64_lossy();
        ConfigDocument {
            ambient_dim: k,
            states: parts.transition.len(),
            transition: parts
                .transition
                .iter()
                .map(|row| row.iter().copied().map(f).collect())
                .collect(),
            maps: parts
                .maps
                .iter()
                .map(|e| MapEntry {
                    from: e.from + 1,
                    to: e.to + 1,
                    linear: if k == 1 {
                        Linear::Scalar(f(e.map.linear()[0]))
                    } else {
                        Linear::Matrix(
                            e.map
                                .linear()
                                .chunks(k)
                                .map(|row| row.iter().copied().map(f).collect())
                                .collect(),
                        )
                    },
                    offset: e.map.offset().iter().copied().map(f).collect(),
                    c: e.c.map(f),
                    s: e.s.map(f),
                })
                .collect(),
            domain: parts.domain.iter().map(|&(lo, hi)| [f(lo), f(hi)]).collect(),
            metadata: Metadata {
                name: parts.name.clone(),
                separation_assertion: parts.separation,
            },
        }
    }
}

/// Parses and validates a configuration document.
pub fn parse_config<T: Real>(text: &str) -> Result<RifsSpec<T>> {
    ConfigDocument::from_json(text)?.to_spec()
}

pub fn load_config<T: Real>(path: impl AsRef<Path>) -> Result<RifsSpec<T>> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn serialize_spec<T: Real>(spec: &RifsSpec<T>) -> String {
    ConfigDocument::from_parts(spec.parts()).to_json()
}
