//! The three agent roles: prompt templates, payload types and typed calls.

pub mod blocks;
mod prompts;
mod run;
mod template;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::GatewayError;
use crate::ingest::Workspace;
use crate::metrics::{student_load, CognitiveLoadProfile, LoadBand};
use crate::model::{
    Ablation, AblationSet, KnowledgeState, LearnerProfile, MasteryStatus, PathNode, RecommendationList,
    ResourceKind, RiskAlert,
};

pub use prompts::{
    build_analytics_prompt, build_planning_prompt, build_reflection_prompt, build_single_prompt, Revision,
};
pub use run::{run_analytics, run_planner, run_reflector, run_single, AgentCall};
pub use template::{Template, TemplateError, Templates};

pub const DEFAULT_MAX_PATH_LENGTH: usize = 10;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("learner context is missing {}", .0.join(", "))]
    IncompleteContext(Vec<&'static str>),
    #[error("plan names resources outside the recommendation list: {}", .0.join(", "))]
    HallucinatedResource(Vec<String>),
    #[error("invalid constraint configuration: {0}")]
    InvalidConstraints(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintConfig {
    pub include_clt: bool,
    pub include_zpd: bool,
    pub max_path_length: usize,
    pub target_load_band: LoadBand,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        ConstraintConfig {
            include_clt: true,
            include_zpd: true,
            max_path_length: DEFAULT_MAX_PATH_LENGTH,
            target_load_band: LoadBand::default(),
        }
    }
}

impl ConstraintConfig {
    /// Drops the constraint blocks named by the ablation flags.
    pub fn with_ablations(mut self, ablations: &AblationSet) -> Self {
        if ablations.contains(Ablation::NoClt) {
            self.include_clt = false;
        }
        if ablations.contains(Ablation::NoZpd) {
            self.include_zpd = false;
        }
        self
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let band = self.target_load_band;
        if self.max_path_length < 1 {
            return Err(AgentError::InvalidConstraints("max_path_length must be at least 1".into()));
        }
        if !(band.low > 0.0 && band.low <= band.high) {
            return Err(AgentError::InvalidConstraints(format!(
                "load band ({}, {}) needs 0 < low <= high",
                band.low, band.high
            )));
        }
        Ok(())
    }
}

/// The analytics agent's view of a learner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub mastered: Vec<String>,
    pub weak: Vec<String>,
    pub unlearned: Vec<String>,
    pub preferences: String,
    pub risk_summary: String,
}

impl DiagnosticReport {
    /// Disjoint lists that together cover exactly `course_points`.
    pub fn check(&self, course_points: &BTreeSet<String>) -> Vec<String> {
        let mut errors = Vec::new();
        let mut seen = BTreeSet::new();
        for id in self.mastered.iter().chain(&self.weak).chain(&self.unlearned) {
            if !seen.insert(id.as_str()) {
                errors.push(format!("knowledge point {id} appears in more than one list"));
            }
            if !course_points.contains(id) {
                errors.push(format!("knowledge point {id} is not in the course"));
            }
        }
        for id in course_points {
            if !seen.contains(id.as_str()) {
                errors.push(format!("knowledge point {id} is missing from all three lists"));
            }
        }
        errors
    }

    pub fn status_of(&self, id: &str) -> Option<MasteryStatus> {
        let has = |v: &[String]| v.iter().any(|k| k == id);
        if has(&self.mastered) {
            Some(MasteryStatus::Mastered)
        } else if has(&self.weak) {
            Some(MasteryStatus::Weak)
        } else if has(&self.unlearned) {
            Some(MasteryStatus::Unlearned)
        } else {
            None
        }
    }
}

/// The planner's reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanPayload {
    pub path: Vec<PathNode>,
    pub global_rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SuggestionCategory {
    #[serde(rename = "CLT")]
    Clt,
    #[serde(rename = "ZPD")]
    Zpd,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub category: SuggestionCategory,
    pub description: String,
    /// 1-based path positions the suggestion refers to.
    pub positions: Vec<u32>,
}

pub use crate::metrics::{CltVerdict, ZpdVerdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectionResult {
    pub accepted: bool,
    pub clt_verdict: CltVerdict,
    pub zpd_verdict: ZpdVerdict,
    pub suggestions: Vec<Suggestion>,
}

impl ReflectionResult {
    pub fn check(&self, path_len: usize) -> Vec<String> {
        let mut errors = Vec::new();
        if self.accepted && !self.suggestions.is_empty() {
            errors.push("accepted is true but suggestions are not empty".to_string());
        }
        if !self.accepted && self.suggestions.is_empty() {
            errors.push("accepted is false but no suggestions are given".to_string());
        }
        for s in &self.suggestions {
            for &p in &s.positions {
                if p == 0 || p as usize > path_len {
                    errors.push(format!("suggestion position {p} is outside the path (1..={path_len})"));
                }
            }
        }
        errors
    }
}

/// A recommended resource as embedded in prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceBrief {
    pub id: String,
    pub title: String,
    pub description: String,
    pub kind: ResourceKind,
    /// Estimated minutes: the historical mean, or the authored estimate.
    pub minutes: f64,
    pub knowledge_ids: Vec<String>,
    pub difficulty: f64,
}

/// One knowledge point with its direct prerequisites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEntry {
    pub id: String,
    pub name: String,
    pub difficulty: f64,
    pub prerequisites: Vec<String>,
}

/// Everything the agents may see about one learner. Fields a caller could
/// not produce stay `None` and are reported by the prompt builders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerContext {
    pub learner_id: String,
    pub course_id: String,
    pub profile: Option<LearnerProfile>,
    pub alert: Option<RiskAlert>,
    pub state: Option<KnowledgeState>,
    /// Recommendation list in ranked order.
    pub resources: Option<Vec<ResourceBrief>>,
    /// The learner's course graph.
    pub graph: Vec<GraphEntry>,
    pub load: Option<CognitiveLoadProfile<f64>>,
}

impl LearnerContext {
    pub fn assemble(
        ws: &Workspace,
        learner_id: &str,
        alert: Option<RiskAlert>,
        state: Option<KnowledgeState>,
        recommendations: Option<&RecommendationList>,
        cl_ext: f64,
    ) -> Self {
        let profile = ws.profile(learner_id).cloned();
        let course_id = profile.as_ref().map(|p| p.course_id.clone()).unwrap_or_default();
        let graph = ws.graph().restricted_to_course(&course_id);
        let graph = graph
            .points()
            .iter()
            .map(|p| GraphEntry {
                id: p.id.clone(),
                name: p.name.clone(),
                difficulty: p.difficulty,
                prerequisites: graph.prerequisites_of(&p.id).to_vec(),
            })
            .collect();
        let resources = recommendations.map(|list| {
            list.resource_ids
                .iter()
                .filter_map(|id| ws.resource(id))
                .map(|r| ResourceBrief {
                    id: r.id.clone(),
                    title: r.title.clone(),
                    description: r.description.clone(),
                    kind: r.kind,
                    minutes: ws.resource_minutes(&r.id).map_or(r.duration_estimate, |(m, _)| m),
                    knowledge_ids: r.knowledge_ids.clone(),
                    difficulty: r.difficulty(ws.graph()).unwrap_or(0.0),
                })
                .collect()
        });
        let load = student_load(ws, learner_id, cl_ext).ok();
        LearnerContext {
            learner_id: learner_id.to_string(),
            course_id,
            profile,
            alert,
            state,
            resources,
            graph,
            load,
        }
    }

    pub fn course_points(&self) -> BTreeSet<String> {
        self.graph.iter().map(|g| g.id.clone()).collect()
    }

    pub fn resource(&self, id: &str) -> Option<&ResourceBrief> {
        self.resources.as_ref()?.iter().find(|r| r.id == id)
    }
}
