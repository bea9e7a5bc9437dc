use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MasteryStatus {
    Mastered,
    Weak,
    Unlearned,
}

/// Per-knowledge-point mastery of one learner at a given week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeState {
    pub learner_id: String,
    pub week: u32,
    /// Only studied points carry a mastery value.
    pub mastery: BTreeMap<String, f64>,
    pub status: BTreeMap<String, MasteryStatus>,
}

impl KnowledgeState {
    /// Mastery with unstudied points read as zero.
    pub fn mastery_or_zero(&self, id: &str) -> f64 {
        self.mastery.get(id).copied().unwrap_or(0.0)
    }

    pub fn status_of(&self, id: &str) -> MasteryStatus {
        self.status.get(id).copied().unwrap_or(MasteryStatus::Unlearned)
    }

    pub fn ids_with(&self, status: MasteryStatus) -> Vec<String> {
        self.status
            .iter()
            .filter(|(_, s)| **s == status)
            .map(|(id, _)| id.clone())
            .collect()
    }
}

pub const DEFAULT_WEAK_THRESHOLD: f64 = 0.6;

/// Classifies every id in `mastery ∪ studied`.
///
/// Unstudied ids are `Unlearned` whatever their mastery; studied ids below
/// `weak_threshold` are `Weak`; the rest are `Mastered`. A studied id with no
/// mastery entry reads as mastery 0.
pub fn derive_status(
    mastery: &BTreeMap<String, f64>,
    studied: &BTreeSet<String>,
    weak_threshold: f64,
) -> Result<BTreeMap<String, MasteryStatus>, ModelError> {
    if !(weak_threshold > 0.0 && weak_threshold < 1.0) {
        return Err(ModelError::InvalidThreshold(weak_threshold));
    }
    for (id, &m) in mastery {
        if !(0.0..=1.0).contains(&m) {
            return Err(ModelError::InvalidMastery { id: id.clone(), value: m });
        }
    }
    let ids: BTreeSet<&String> = mastery.keys().chain(studied.iter()).collect();
    Ok(ids
        .into_iter()
        .map(|id| {
            let status = if !studied.contains(id) {
                MasteryStatus::Unlearned
            } else if mastery.get(id).copied().unwrap_or(0.0) < weak_threshold {
                MasteryStatus::Weak
            } else {
                MasteryStatus::Mastered
            };
            (id.clone(), status)
        })
        .collect())
}
