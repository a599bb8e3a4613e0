use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::margins::SupportHint;

/// Reciprocal rank is truncated at this rank.
pub const RR_CUTOFF: u32 = 100;

/// Effectiveness measure of a score matrix, which fixes the score support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Ap,
    Ndcg,
    Err,
    P10,
    Rr,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::Ap,
        Measure::Ndcg,
        Measure::Err,
        Measure::P10,
        Measure::Rr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Ap => "ap",
            Measure::Ndcg => "ndcg",
            Measure::Err => "err",
            Measure::P10 => "p10",
            Measure::Rr => "rr",
        }
    }

    pub fn support_hint(self) -> SupportHint {
        match self {
            Measure::Ap | Measure::Ndcg | Measure::Err => SupportHint::Continuous,
            Measure::P10 => SupportHint::Discrete { k: 10 },
            Measure::Rr => SupportHint::reciprocal_rank(RR_CUTOFF),
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ap" | "map" => Ok(Measure::Ap),
            "ndcg" => Ok(Measure::Ndcg),
            "err" => Ok(Measure::Err),
            "p10" | "p@10" => Ok(Measure::P10),
            "rr" | "mrr" => Ok(Measure::Rr),
            other => Err(Error::InvalidArgument(format!(
                "unknown measure '{other}' (expected ap, ndcg, err, p10 or rr)"
            ))),
        }
    }
}

/// Per-topic scores of a set of systems. Complete, with every value in the
/// measure's support.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    topics: Vec<String>,
    systems: Vec<String>,
    /// One column of per-topic scores per system.
    columns: Vec<Vec<f64>>,
    measure: Measure,
}

impl ScoreMatrix {
    /// Builds a matrix from per-topic rows (`rows[t][s]`).
    pub fn from_rows(
        topics: Vec<String>,
        systems: Vec<String>,
        rows: Vec<Vec<f64>>,
        measure: Measure,
    ) -> Result<Self> {
        if rows.len() != topics.len() {
            return Err(Error::InvalidData(format!(
                "{} topic ids for {} rows",
                topics.len(),
                rows.len()
            )));
        }
        if systems.is_empty() || topics.is_empty() {
            return Err(Error::InvalidData(
                "score matrix needs at least one topic and one system".into(),
            ));
        }
        let hint = measure.support_hint();
        let mut columns = vec![Vec::with_capacity(topics.len()); systems.len()];
        for (t, row) in rows.iter().enumerate() {
            if row.len() != systems.len() {
                return Err(Error::Parse {
                    row: t + 1,
                    column: topics[t].clone(),
                    message: format!("expected {} scores, found {}", systems.len(), row.len()),
                });
            }
            for (s, &x) in row.iter().enumerate() {
                if hint.snap(x).is_none() {
                    return Err(Error::Parse {
                        row: t + 1,
                        column: systems[s].clone(),
                        message: format!("{x} is not a valid {measure} score"),
                    });
                }
                columns[s].push(x);
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = systems.iter().find(|s| !seen.insert(s.as_str())) {
            return Err(Error::InvalidData(format!("duplicate system id '{dup}'")));
        }
        Ok(ScoreMatrix {
            topics,
            systems,
            columns,
            measure,
        })
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn systems(&self) -> &[String] {
        &self.systems
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn n_topics(&self) -> usize {
        self.topics.len()
    }

    pub fn n_systems(&self) -> usize {
        self.systems.len()
    }

    pub fn column(&self, system: usize) -> &[f64] {
        &self.columns[system]
    }

    pub fn system_index(&self, id: &str) -> Option<usize> {
        self.systems.iter().position(|s| s == id)
    }

    pub fn score(&self, topic: usize, system: usize) -> f64 {
        self.columns[system][topic]
    }

    pub fn system_means(&self) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    }
}
