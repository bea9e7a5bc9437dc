//! Upstream signals consumed by the planners: risk alerts, knowledge states
//! and candidate resource lists.
//!
//! Each signal has a fixed input/output contract and a small reference
//! implementation; precomputed risk series in `risk.jsonl` take precedence
//! over the reference risk estimator.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{EventKind, Workspace};
use crate::model::{
    derive_status, KnowledgeState, MasteryStatus, ModelError, RecommendationList, RiskAlert,
};

pub const DEFAULT_RISK_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("unknown learner {0}")]
    UnknownLearner(String),
    #[error("week must be >= 1")]
    InvalidWeek,
    #[error("recommendation length must be >= 1")]
    InvalidListLength,
    #[error("no candidate resources for learner {0}")]
    EmptyRecommendation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Weekly risk probabilities; index 0 is week 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSeries {
    pub learner_id: String,
    pub weekly: Vec<f64>,
}

impl RiskSeries {
    pub fn check(&self) -> Result<(), String> {
        if self.weekly.is_empty() {
            return Err(format!("empty risk series for {}", self.learner_id));
        }
        if let Some(p) = self.weekly.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(format!("risk probability {p} outside [0, 1]"));
        }
        Ok(())
    }
}

/// Alert at the earliest week whose probability strictly exceeds `threshold`.
pub fn detect_risk(series: &RiskSeries, threshold: f64) -> Option<RiskAlert> {
    series
        .weekly
        .iter()
        .position(|&p| p > threshold)
        .map(|i| RiskAlert {
            learner_id: series.learner_id.clone(),
            week: i as u32 + 1,
            probability: series.weekly[i],
        })
}

/// Reference risk estimator: one minus the Laplace-smoothed cumulative
/// correct-answer ratio up to the end of each week.
pub fn estimate_risk_series(ws: &Workspace, learner_id: &str, weeks: u32) -> Result<RiskSeries, SignalError> {
    if ws.profile(learner_id).is_none() {
        return Err(SignalError::UnknownLearner(learner_id.to_string()));
    }
    let answers: Vec<(u32, bool)> = ws
        .events_of(learner_id)
        .filter(|e| e.kind == EventKind::AnswerLog)
        .map(|e| (e.day, e.correct.unwrap_or(false)))
        .collect();
    let weekly = (1..=weeks)
        .map(|w| {
            let (correct, total) = answers
                .iter()
                .filter(|(day, _)| *day <= 7 * w)
                .fold((0u32, 0u32), |(c, t), (_, ok)| (c + u32::from(*ok), t + 1));
            1.0 - (correct as f64 + 1.0) / (total as f64 + 2.0)
        })
        .collect();
    Ok(RiskSeries {
        learner_id: learner_id.to_string(),
        weekly,
    })
}

/// The workspace's precomputed series for the learner, or the reference
/// estimate over `weeks` when none is stored.
pub fn risk_series_for(ws: &Workspace, learner_id: &str, weeks: u32) -> Result<RiskSeries, SignalError> {
    if let Some(series) = ws
        .risk()
        .and_then(|all| all.iter().find(|s| s.learner_id == learner_id))
    {
        return Ok(series.clone());
    }
    estimate_risk_series(ws, learner_id, weeks)
}

/// Reference knowledge tracer.
///
/// Uses only answers strictly before `week` (days `<= 7(week−1)`). Each
/// answer is weighted by `2^-age`, where `age` counts whole weeks back from
/// week `week−1`; mastery is the weighted correct ratio. Points without
/// answers get no mastery value and are `Unlearned`.
pub fn trace_knowledge(
    ws: &Workspace,
    learner_id: &str,
    week: u32,
    weak_threshold: f64,
) -> Result<KnowledgeState, SignalError> {
    let profile = ws
        .profile(learner_id)
        .ok_or_else(|| SignalError::UnknownLearner(learner_id.to_string()))?;
    if week < 1 {
        return Err(SignalError::InvalidWeek);
    }
    let cutoff_day = 7 * (week - 1);
    let mut sums: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for e in ws.events_of(learner_id) {
        if e.kind != EventKind::AnswerLog || e.day > cutoff_day {
            continue;
        }
        let age = (week - 1 - e.week()) as i32;
        let weight = 2f64.powi(-age);
        let kps: &[String] = match (&e.knowledge_ids, &e.resource_id) {
            (Some(k), _) => k,
            (None, Some(r)) => ws.resource(r).map(|r| r.knowledge_ids.as_slice()).unwrap_or(&[]),
            (None, None) => &[],
        };
        for k in kps {
            let entry = sums.entry(k.clone()).or_default();
            if e.correct == Some(true) {
                entry.0 += weight;
            }
            entry.1 += weight;
        }
    }
    let mastery: BTreeMap<String, f64> = sums.into_iter().map(|(k, (c, t))| (k, c / t)).collect();
    let studied: BTreeSet<String> = mastery.keys().cloned().collect();
    let mut status = derive_status(&mastery, &studied, weak_threshold)?;
    for p in ws.graph().restricted_to_course(&profile.course_id).points() {
        status.entry(p.id.clone()).or_insert(MasteryStatus::Unlearned);
    }
    Ok(KnowledgeState {
        learner_id: learner_id.to_string(),
        week,
        mastery,
        status,
    })
}

/// Reference recommender: ranks the learner's course resources by summed
/// knowledge gap `Σ (1 − mastery)` (unlearned points count as mastery 0),
/// ties broken by ascending id, skipping resources whose points are all
/// mastered.
pub fn recommend(
    ws: &Workspace,
    learner_id: &str,
    state: &KnowledgeState,
    n: usize,
) -> Result<RecommendationList, SignalError> {
    let profile = ws
        .profile(learner_id)
        .ok_or_else(|| SignalError::UnknownLearner(learner_id.to_string()))?;
    if n < 1 {
        return Err(SignalError::InvalidListLength);
    }
    let mastery = |k: &str| match state.status_of(k) {
        MasteryStatus::Unlearned => 0.0,
        _ => state.mastery_or_zero(k),
    };
    let mut ranked: Vec<(f64, &str)> = ws
        .course_resources(&profile.course_id)
        .filter(|r| {
            r.knowledge_ids
                .iter()
                .any(|k| state.status_of(k) != MasteryStatus::Mastered)
        })
        .map(|r| {
            let gap = r.knowledge_ids.iter().map(|k| 1.0 - mastery(k)).sum();
            (gap, r.id.as_str())
        })
        .collect();
    if ranked.is_empty() {
        return Err(SignalError::EmptyRecommendation(learner_id.to_string()));
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(RecommendationList {
        learner_id: learner_id.to_string(),
        resource_ids: ranked.into_iter().take(n).map(|(_, id)| id.to_string()).collect(),
    })
}
