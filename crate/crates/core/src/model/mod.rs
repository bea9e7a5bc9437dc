//! Canonical domain types shared by every other module.

mod graph;
mod path;
mod state;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use graph::{
    validate_graph, Edge, GraphFile, GraphViolation, KnowledgeGraph, KnowledgePoint, PointRecord,
    TopoError,
};
pub use path::{
    run_label, Ablation, AblationSet, LearningPath, Method, PathNode, PathViolation, Provenance,
};
pub use state::{derive_status, KnowledgeState, MasteryStatus, DEFAULT_WEAK_THRESHOLD};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("mastery for {id} is {value}, outside [0, 1]")]
    InvalidMastery { id: String, value: f64 },
    #[error("weak threshold {0} is outside (0, 1)")]
    InvalidThreshold(f64),
    #[error("no effectiveness entry for resource {0}")]
    MissingEffectiveness(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub age: u32,
    pub gender: String,
    pub grade: String,
    pub major: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerProfile {
    pub learner_id: String,
    pub course_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demographics: Option<Demographics>,
    #[serde(default)]
    pub features: Vec<f64>,
}

/// Earliest week at which a learner's predicted risk crossed the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAlert {
    pub learner_id: String,
    pub week: u32,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Video,
    Exercise,
    Document,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRecord {
    pub learner_id: String,
    pub minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resource {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub kind: ResourceKind,
    pub duration_estimate: f64,
    pub knowledge_ids: Vec<String>,
    /// Historical per-learner minutes recorded outside the event log.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub time_records: Vec<TimeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub course_id: Option<String>,
}

impl Resource {
    /// Node difficulty: the maximum difficulty over the resource's knowledge points.
    pub fn difficulty(&self, graph: &KnowledgeGraph) -> Option<f64> {
        self.knowledge_ids
            .iter()
            .filter_map(|k| graph.difficulty(k))
            .reduce(f64::max)
    }
}

pub const DEFAULT_LIST_LENGTH: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub learner_id: String,
    pub resource_ids: Vec<String>,
}

/// Per-resource learning effectiveness used by the path objective.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessModel<F = f64> {
    pub values: BTreeMap<String, F>,
}

impl<F: Scalar> EffectivenessModel<F> {
    pub fn new(values: BTreeMap<String, F>) -> Self {
        Self { values }
    }

    pub fn constant<'a>(ids: impl IntoIterator<Item = &'a str>, value: F) -> Self {
        Self::new(ids.into_iter().map(|id| (id.to_string(), value)).collect())
    }

    /// Expected mastery gain: for each resource, the sum over its knowledge
    /// points of `max(0, target − mastery)`, with unstudied points at mastery 0.
    pub fn expected_gain<'a>(
        resources: impl IntoIterator<Item = &'a Resource>,
        state: &KnowledgeState,
        target_mastery: F,
    ) -> Self {
        let values = resources
            .into_iter()
            .map(|r| {
                let gain = r
                    .knowledge_ids
                    .iter()
                    .map(|k| (target_mastery - F::lit(state.mastery_or_zero(k))).max(F::zero()))
                    .sum();
                (r.id.clone(), gain)
            })
            .collect();
        Self::new(values)
    }

    pub fn get(&self, resource_id: &str) -> Option<F> {
        self.values.get(resource_id).copied()
    }
}

/// Cumulative effectiveness of a path: the sum of node effectiveness, every
/// occurrence counted.
pub fn score_path<F: Scalar>(path: &LearningPath, eff: &EffectivenessModel<F>) -> Result<F, ModelError> {
    path.resource_ids()
        .map(|id| {
            eff.get(id)
                .ok_or_else(|| ModelError::MissingEffectiveness(id.to_string()))
        })
        .sum()
}
