use std::collections::BTreeMap;

use pathplan_core::agents::{GraphEntry, LearnerContext, ResourceBrief};
use pathplan_core::metrics::CognitiveLoadProfile;
use pathplan_core::model::{KnowledgeState, LearnerProfile, MasteryStatus, ResourceKind, RiskAlert};
use rand::Rng;
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

fn learner_context(
    graph: Vec<GraphEntry>,
    resources: Vec<ResourceBrief>,
    mastery: BTreeMap<String, f64>,
    status: BTreeMap<String, MasteryStatus>,
    capacity: f64,
) -> LearnerContext {
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
        resources: Some(resources),
        graph,
        load: Some(CognitiveLoadProfile {
            cl_int: capacity - 2.0,
            cl_ger: 2.0,
            cl_ext: 0.0,
            cl_student: capacity,
        }),
    }
}

/// Four points (k1 → k2 → k3, and k4) and five resources.
pub fn context() -> LearnerContext {
    let mastery = [("k1", 0.4), ("k2", 0.5), ("k4", 0.9)]
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
    learner_context(
        vec![
            entry("k1", 1.0, &[]),
            entry("k2", 2.0, &["k1"]),
            entry("k3", 3.0, &["k2"]),
            entry("k4", 1.0, &[]),
        ],
        vec![
            brief("r3", &["k3"], 14.0, 3.0),
            brief("r2", &["k2"], 12.0, 2.0),
            brief("r4", &["k4"], 30.0, 1.0),
            brief("r1", &["k1"], 10.0, 1.0),
            brief("r5", &["k2", "k3"], 11.0, 3.0),
        ],
        mastery,
        status,
        12.0,
    )
}

/// A context offering `n` resources over a flat graph.
pub fn wide_context(n: usize) -> LearnerContext {
    let graph = (1..=n).map(|i| entry(&format!("k{i:02}"), 1.0, &[])).collect();
    let resources = (1..=n)
        .map(|i| brief(&format!("r{i:02}"), &[&format!("k{i:02}")], 10.0, 1.0))
        .collect();
    let status = (1..=n)
        .map(|i| (format!("k{i:02}"), MasteryStatus::Unlearned))
        .collect();
    learner_context(graph, resources, BTreeMap::new(), status, 10.0)
}

/// A random planning instance: up to `max_resources` resources over a
/// prerequisite DAG, with at least one resource on a root point.
pub fn random_context(rng: &mut impl Rng, max_resources: usize) -> LearnerContext {
    let n_points = rng.gen_range(3..=7);
    let ids: Vec<String> = (1..=n_points).map(|i| format!("k{i}")).collect();
    let mut graph = Vec::with_capacity(n_points);
    for (i, id) in ids.iter().enumerate() {
        let prerequisites: Vec<&str> = ids[..i]
            .iter()
            .filter(|_| rng.gen_bool(0.3))
            .map(String::as_str)
            .collect();
        let difficulty = f64::from(rng.gen_range(1..=5u8));
        graph.push(entry(id, difficulty, &prerequisites));
    }
    let mut mastery = BTreeMap::new();
    let mut status = BTreeMap::new();
    for id in &ids {
        let s = match rng.gen_range(0..3) {
            0 => MasteryStatus::Mastered,
            1 => MasteryStatus::Weak,
            _ => MasteryStatus::Unlearned,
        };
        match s {
            MasteryStatus::Mastered => {
                mastery.insert(id.clone(), rng.gen_range(0.6..1.0));
            }
            MasteryStatus::Weak => {
                mastery.insert(id.clone(), rng.gen_range(0.0..0.6));
            }
            MasteryStatus::Unlearned => {}
        }
        status.insert(id.clone(), s);
    }
    let n_resources = rng.gen_range(2..=max_resources);
    let mut resources = Vec::with_capacity(n_resources);
    for i in 1..=n_resources {
        let first = if i == 1 { 0 } else { rng.gen_range(0..n_points) };
        let mut kps = vec![ids[first].as_str()];
        if rng.gen_bool(0.3) {
            let second = rng.gen_range(0..n_points);
            if second != first {
                kps.push(ids[second].as_str());
            }
        }
        let difficulty = kps
            .iter()
            .map(|k| graph.iter().find(|g| g.id == *k).unwrap().difficulty)
            .fold(f64::MIN, f64::max);
        let minutes = f64::from(rng.gen_range(4..=30u8));
        resources.push(brief(&format!("r{i:02}"), &kps, minutes, difficulty));
    }
    let capacity = rng.gen_range(8.0..20.0);
    learner_context(graph, resources, mastery, status, capacity)
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
