#![allow(dead_code)]

use std::collections::BTreeMap;

use pathplan_core::agents::{GraphEntry, LearnerContext, ResourceBrief};
use pathplan_core::metrics::CognitiveLoadProfile;
use pathplan_core::model::{KnowledgeState, LearnerProfile, MasteryStatus, ResourceKind, RiskAlert};
use serde_json::json;

pub fn entry(id: &str, difficulty: f64, prerequisites: &[&str]) -> GraphEntry {
    GraphEntry {
        id: id.into(),
        name: format!("point {id}"),
        difficulty,
        prerequisites: prerequisites.iter().map(|s| s.to_string()).collect(),
    }
}

pub fn brief(id: &str, kps: &[&str], minutes: f64, difficulty: f64) -> ResourceBrief {
    ResourceBrief {
        id: id.into(),
        title: format!("resource {id}"),
        description: String::new(),
        kind: ResourceKind::Video,
        minutes,
        knowledge_ids: kps.iter().map(|s| s.to_string()).collect(),
        difficulty,
    }
}

/// Four points (k1 → k2 → k3, and k4) and five resources.
pub fn context() -> LearnerContext {
    let mastery: BTreeMap<String, f64> = [("k1", 0.4), ("k2", 0.5), ("k4", 0.9)]
        .into_iter()
        .map(|(k, m)| (k.to_string(), m))
        .collect();
    let status = [
        ("k1", MasteryStatus::Weak),
        ("k2", MasteryStatus::Weak),
        ("k3", MasteryStatus::Unlearned),
        ("k4", MasteryStatus::Mastered),
    ]
    .into_iter()
    .map(|(k, s)| (k.to_string(), s))
    .collect();
    LearnerContext {
        learner_id: "u1".into(),
        course_id: "c1".into(),
        profile: Some(LearnerProfile {
            learner_id: "u1".into(),
            course_id: "c1".into(),
            demographics: None,
            features: vec![0.5],
        }),
        alert: Some(RiskAlert {
            learner_id: "u1".into(),
            week: 4,
            probability: 0.7,
        }),
        state: Some(KnowledgeState {
            learner_id: "u1".into(),
            week: 4,
            mastery,
            status,
        }),
        resources: Some(vec![
            brief("r3", &["k3"], 14.0, 3.0),
            brief("r2", &["k2"], 12.0, 2.0),
            brief("r4", &["k4"], 30.0, 1.0),
            brief("r1", &["k1"], 10.0, 1.0),
            brief("r5", &["k2", "k3"], 11.0, 3.0),
        ]),
        graph: vec![
            entry("k1", 1.0, &[]),
            entry("k2", 2.0, &["k1"]),
            entry("k3", 3.0, &["k2"]),
            entry("k4", 1.0, &[]),
        ],
        load: Some(CognitiveLoadProfile {
            cl_int: 10.0,
            cl_ger: 2.0,
            cl_ext: 0.0,
            cl_student: 12.0,
        }),
    }
}

pub fn report_reply() -> String {
    json!({
        "mastered": ["k4"], "weak": ["k1", "k2"], "unlearned": ["k3"],
        "preferences": "short videos", "risk_summary": "low quiz scores"
    })
    .to_string()
}

pub fn plan_reply(ids: &[&str]) -> String {
    let path: Vec<_> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| json!({"resource_id": id, "position": i + 1, "local_rationale": "why", "estimated_minutes": 10.0}))
        .collect();
    json!({"path": path, "global_rationale": "overall"}).to_string()
}

pub fn accept_reply() -> String {
    json!({"accepted": true, "clt_verdict": "Pass", "zpd_verdict": "Pass", "suggestions": []}).to_string()
}

pub fn reject_reply() -> String {
    json!({
        "accepted": false, "clt_verdict": "Overload", "zpd_verdict": "Pass",
        "suggestions": [{"category": "CLT", "description": "too long", "positions": [1]}]
    })
    .to_string()
}
