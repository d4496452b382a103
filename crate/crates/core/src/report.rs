//! Check records with pass/fail against tolerances.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lattice::Region;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// CMI of a Markov condition.
    Markov,
    /// Trace distance between two reductions to a shared region.
    Consistency,
    /// Trace distance between two constructions that should agree.
    Equality,
    /// Number of shared sites where none are allowed.
    Disjointness,
    /// Trace distance between a reconstruction and a fundamental marginal.
    Fidelity,
    /// Deviation of a hypothesis from its required value.
    Hypothesis,
    /// Excess of a quantity over its proven bound.
    Bound,
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CheckKind::Markov => "markov",
            CheckKind::Consistency => "consistency",
            CheckKind::Equality => "equality",
            CheckKind::Disjointness => "disjointness",
            CheckKind::Fidelity => "fidelity",
            CheckKind::Hypothesis => "hypothesis",
            CheckKind::Bound => "bound",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub kind: CheckKind,
    pub regions: Vec<Region>,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    /// Passes iff `residual <= tolerance` (NaN fails).
    pub fn at_most(
        id: impl Into<String>,
        kind: CheckKind,
        regions: Vec<Region>,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            id: id.into(),
            kind,
            regions,
            residual,
            tolerance,
            passed: residual <= tolerance,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub total: usize,
    pub failed: usize,
    pub max_residual: BTreeMap<CheckKind, f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckReport {
    records: Vec<CheckRecord>,
}

impl CheckReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.records.extend(other.records);
    }

    pub fn records(&self) -> &[CheckRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.passed)
    }

    /// Largest residual over all records, or over one kind.
    pub fn max_residual(&self, kind: Option<CheckKind>) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| kind.map_or(true, |k| r.kind == k))
            .map(|r| r.residual)
            .reduce(f64::max)
    }

    pub fn summary(&self) -> ReportSummary {
        let mut max_residual = BTreeMap::new();
        for r in &self.records {
            let slot = max_residual.entry(r.kind).or_insert(f64::NEG_INFINITY);
            *slot = slot.max(r.residual);
        }
        ReportSummary {
            total: self.records.len(),
            failed: self.failures().count(),
            max_residual,
        }
    }
}

impl FromIterator<CheckRecord> for CheckReport {
    fn from_iter<I: IntoIterator<Item = CheckRecord>>(iter: I) -> Self {
        Self {
            records: iter.into_iter().collect(),
        }
    }
}

impl Serialize for CheckReport {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            passed: bool,
            summary: ReportSummary,
            records: &'a [CheckRecord],
        }
        View {
            passed: self.passed(),
            summary: self.summary(),
            records: &self.records,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CheckReport {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct View {
            records: Vec<CheckRecord>,
        }
        Ok(Self {
            records: View::deserialize(deserializer)?.records,
        })
    }
}
