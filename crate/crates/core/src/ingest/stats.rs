//! Time statistics over the event log.
//!
//! `T_ij`, the time learner `i` spent on resource `j`, is the sum of all their
//! minutes on that resource: view and answer events plus any historical
//! time records attached to the resource.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EventKind, IngestError, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeStat {
    pub mean_minutes: f64,
    /// Number of learners with recorded time on the resource.
    pub sample_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearnerTimeStats {
    /// `T_ij` per studied resource.
    pub per_resource: BTreeMap<String, f64>,
    /// `F_ih` for each day of the active span, event-free days as zero.
    pub forum_by_day: Vec<f64>,
    pub first_day: Option<u32>,
    /// Days from first to last event inclusive; 0 without events.
    pub active_days: u32,
}

/// `resource → learner → T_ij`.
pub(crate) fn minutes_by_resource_and_learner(ws: &Workspace) -> BTreeMap<String, BTreeMap<String, f64>> {
    let mut table: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for r in ws.resources() {
        for t in &r.time_records {
            *table
                .entry(r.id.clone())
                .or_default()
                .entry(t.learner_id.clone())
                .or_default() += t.minutes;
        }
    }
    for e in ws.events() {
        if let (EventKind::VideoView | EventKind::AnswerLog, Some(r)) = (e.kind, &e.resource_id) {
            *table
                .entry(r.clone())
                .or_default()
                .entry(e.learner_id.clone())
                .or_default() += e.minutes;
        }
    }
    table
}

pub(crate) fn compute_resource_stats(ws: &Workspace) -> BTreeMap<String, TimeStat> {
    minutes_by_resource_and_learner(ws)
        .into_iter()
        .map(|(resource, per_learner)| {
            let n = per_learner.len();
            let total: f64 = per_learner.values().sum();
            (
                resource,
                TimeStat {
                    mean_minutes: total / n as f64,
                    sample_count: n,
                },
            )
        })
        .collect()
}

/// Mean minutes per resource over the learners who studied it. Unsampled
/// resources are absent.
pub fn resource_time_stats(ws: &Workspace) -> BTreeMap<String, TimeStat> {
    ws.resource_stats().clone()
}

pub fn learner_time_stats(ws: &Workspace, learner_id: &str) -> Result<LearnerTimeStats, IngestError> {
    if ws.profile(learner_id).is_none() {
        return Err(IngestError::UnknownLearner(learner_id.to_string()));
    }
    let mut stats = LearnerTimeStats::default();
    for r in ws.resources() {
        for t in r.time_records.iter().filter(|t| t.learner_id == learner_id) {
            *stats.per_resource.entry(r.id.clone()).or_default() += t.minutes;
        }
    }
    let events: Vec<_> = ws.events_of(learner_id).collect();
    for e in &events {
        if let (EventKind::VideoView | EventKind::AnswerLog, Some(r)) = (e.kind, &e.resource_id) {
            *stats.per_resource.entry(r.clone()).or_default() += e.minutes;
        }
    }
    let (Some(first), Some(last)) = (
        events.iter().map(|e| e.day).min(),
        events.iter().map(|e| e.day).max(),
    ) else {
        return Ok(stats);
    };
    stats.first_day = Some(first);
    stats.active_days = last - first + 1;
    stats.forum_by_day = vec![0.0; stats.active_days as usize];
    for e in events.iter().filter(|e| e.kind == EventKind::ForumComment) {
        stats.forum_by_day[(e.day - first) as usize] += e.minutes;
    }
    Ok(stats)
}
