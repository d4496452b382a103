//! JSON marginal files.
//!
//! ```json
//! { "format_version": 1, "window": {"width": 4, "height": 3}, "local_dim": 2, "log_base": 2,
//!   "marginals": [ { "anchor": [2, 0], "matrix": [[[0.5, 0.0], ...], ...] } ] }
//! ```
//!
//! Floats are written as shortest round-trip decimals, so a write/read cycle is bit-exact.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::{cluster_region, Vertex};
use crate::linalg::{Matrix, C64};
use crate::marginals::{MarginalSet, Window};
use crate::operator::{DensityOperator, LogBase};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarginalFile {
    pub format_version: u32,
    pub window: Window,
    pub local_dim: usize,
    #[serde(default)]
    pub log_base: LogBase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    pub marginals: Vec<MarginalEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarginalEntry {
    pub anchor: Vertex,
    pub matrix: MatrixData,
}

/// Row-major nested arrays of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixData(pub Matrix);

impl Serialize for MatrixData {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct Row<'a>(&'a [C64]);
        impl Serialize for Row<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
                for z in self.0 {
                    seq.serialize_element(&[z.re, z.im])?;
                }
                seq.end()
            }
        }
        let n = self.0.dim();
        let mut seq = serializer.serialize_seq(Some(n))?;
        for i in 0..n {
            seq.serialize_element(&Row(self.0.row(i)))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for MatrixData {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct Rows;
        impl<'de> Visitor<'de> for Rows {
            type Value = MatrixData;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a square matrix of [re, im] pairs")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<MatrixData, A::Error> {
                let mut data: Vec<C64> = Vec::new();
                let mut rows = 0usize;
                let mut width = None;
                while let Some(row) = seq.next_element::<Vec<[f64; 2]>>()? {
                    match width {
                        None => {
                            width = Some(row.len());
                            data.reserve(row.len() * row.len());
                        }
                        Some(w) if w != row.len() => {
                            return Err(de::Error::custom(format!(
                                "row {rows} has {} entries, expected {w}",
                                row.len()
                            )))
                        }
                        _ => {}
                    }
                    data.extend(row.into_iter().map(|[re, im]| C64::new(re, im)));
                    rows += 1;
                }
                Matrix::from_row_major(rows, data)
                    .map(MatrixData)
                    .ok_or_else(|| de::Error::custom("matrix is not square"))
            }
        }
        deserializer.deserialize_seq(Rows)
    }
}

impl MarginalFile {
    pub fn from_set(ms: &MarginalSet, log_base: LogBase, seed: Option<u64>, generator: Option<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            window: ms.window(),
            local_dim: ms.local_dim(),
            log_base,
            seed,
            generator,
            marginals: ms
                .marginals()
                .iter()
                .map(|(&anchor, op)| MarginalEntry {
                    anchor,
                    matrix: MatrixData(op.matrix().clone()),
                })
                .collect(),
        }
    }

    /// Validates version, dimensions and every operator.
    pub fn into_set(self) -> Result<MarginalSet> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let window = Window::new(self.window.width, self.window.height)?;
        if self.local_dim < 2 {
            return Err(Error::Format(format!("local_dim {} < 2", self.local_dim)));
        }
        let expected = (self.local_dim as u128).pow(9);
        let mut marginals = BTreeMap::new();
        for entry in self.marginals {
            let anchor = entry.anchor;
            let matrix = entry.matrix.0;
            if matrix.dim() as u128 != expected {
                return Err(Error::Format(format!(
                    "marginal at {anchor} has dimension {}, expected {expected}",
                    matrix.dim()
                )));
            }
            if !window.has_cluster(anchor) {
                return Err(Error::Format(format!(
                    "anchor {anchor} is not a 3x3 cluster inside the window"
                )));
            }
            let op = DensityOperator::new(cluster_region(anchor, 3, 3)?, self.local_dim, matrix)
                .map_err(|e| Error::Format(format!("marginal at {anchor}: {e}")))?;
            if marginals.insert(anchor, op).is_some() {
                return Err(Error::Format(format!("duplicate marginal at {anchor}")));
            }
        }
        MarginalSet::new(window, self.local_dim, marginals)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut w, self)?;
        std::io::Write::flush(&mut w)?;
        Ok(())
    }
}
