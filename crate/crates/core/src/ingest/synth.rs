//! Seeded synthetic cohorts for desk-scale experiments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EventKind, InteractionEvent, Manifest, Workspace, SCHEMA_VERSION};
use crate::model::{
    Demographics, Edge, GraphFile, KnowledgeGraph, LearnerProfile, PointRecord, Resource,
    ResourceKind,
};
use crate::signals::RiskSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseSpec {
    pub course_id: String,
    pub learners: usize,
    pub resources: usize,
    pub knowledge_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub courses: Vec<CourseSpec>,
    pub seed: u64,
    /// Length of the simulated term in weeks.
    pub weeks: u32,
    /// Share of each course's learners whose risk series crosses 0.5.
    pub at_risk_fraction: f64,
    pub feature_dim: usize,
}

impl SynthSpec {
    pub fn single(learners: usize, resources: usize, knowledge_points: usize, seed: u64) -> Self {
        Self {
            courses: vec![CourseSpec {
                course_id: "c01".into(),
                learners,
                resources,
                knowledge_points,
            }],
            seed,
            weeks: 10,
            at_risk_fraction: 1.0,
            feature_dim: 4,
        }
    }
}

const GENDERS: [&str; 2] = ["female", "male"];
const GRADES: [&str; 4] = ["freshman", "sophomore", "junior", "senior"];
const MAJORS: [&str; 6] = [
    "mechanical engineering",
    "logistics",
    "electronics",
    "english",
    "history",
    "philosophy",
];
const TOPICS: [&str; 12] = [
    "foundations",
    "notation",
    "core definitions",
    "worked examples",
    "modelling",
    "analysis",
    "design rules",
    "case studies",
    "applications",
    "integration",
    "optimisation",
    "review",
];

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Generates a deterministic, fully valid workspace. Counts of zero are
/// raised to one.
pub fn synth_cohort(spec: &SynthSpec) -> Workspace {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let weeks = spec.weeks.max(3);

    let mut points = Vec::new();
    let mut edges = Vec::new();
    let mut course_kps: Vec<Vec<String>> = Vec::new();
    for course in &spec.courses {
        let n = course.knowledge_points.max(1);
        let ids: Vec<String> = (0..n).map(|j| format!("{}-k{:03}", course.course_id, j + 1)).collect();
        for (j, id) in ids.iter().enumerate() {
            points.push(PointRecord {
                id: id.clone(),
                name: format!("{} {}", TOPICS[j % TOPICS.len()], j / TOPICS.len() + 1),
                difficulty: None,
                objective: format!("explain and apply {}", TOPICS[j % TOPICS.len()]),
                course_id: Some(course.course_id.clone()),
            });
            if j == 0 {
                continue;
            }
            let wanted = match rng.gen_range(0..10) {
                0..=1 => 0,
                2..=7 => 1,
                _ => 2,
            };
            let window: Vec<usize> = (j.saturating_sub(4)..j).collect();
            for &p in window.choose_multiple(&mut rng, wanted.min(window.len())) {
                edges.push(Edge::new(ids[p].clone(), id.clone()));
            }
        }
        course_kps.push(ids);
    }
    edges.sort();
    let graph = KnowledgeGraph::from_records(GraphFile { points, edges })
        .expect("generated prerequisite edges only point forward");

    let mut resources = Vec::new();
    let mut course_resources: Vec<Vec<usize>> = Vec::new();
    for (ci, course) in spec.courses.iter().enumerate() {
        let kps = &course_kps[ci];
        let n = course.resources.max(1);
        let mut indices = Vec::new();
        for j in 0..n {
            let anchor = (j * kps.len() / n + rng.gen_range(0..2)).min(kps.len() - 1);
            let mut knowledge_ids = vec![kps[anchor].clone()];
            if kps.len() > 1 && rng.gen_bool(0.3) {
                let other = if anchor + 1 < kps.len() { anchor + 1 } else { anchor - 1 };
                knowledge_ids.push(kps[other].clone());
            }
            let kind = match rng.gen_range(0..10) {
                0..=5 => ResourceKind::Video,
                6..=8 => ResourceKind::Exercise,
                _ => ResourceKind::Document,
            };
            let id = format!("{}-r{:03}", course.course_id, j + 1);
            indices.push(resources.len());
            resources.push(Resource {
                title: format!("{} {}", kind_word(kind), graph.point(&knowledge_ids[0]).unwrap().name),
                description: format!("{} covering {}", kind_word(kind), knowledge_ids.join(", ")),
                id,
                kind,
                duration_estimate: round1(rng.gen_range(2.0..12.0)),
                knowledge_ids,
                time_records: vec![],
                course_id: Some(course.course_id.clone()),
            });
        }
        course_resources.push(indices);
    }

    let mut profiles = Vec::new();
    let mut events = Vec::new();
    let mut risk = Vec::new();
    let mut learner_no = 0usize;
    for (ci, course) in spec.courses.iter().enumerate() {
        let n = course.learners.max(1);
        let at_risk_count = ((n as f64) * spec.at_risk_fraction.clamp(0.0, 1.0)).round() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut at_risk = vec![false; n];
        for &i in &order[..at_risk_count] {
            at_risk[i] = true;
        }

        for &flagged in &at_risk {
            learner_no += 1;
            let learner_id = format!("u{learner_no:04}");
            let ability: f64 = if flagged { rng.gen_range(0.15..0.5) } else { rng.gen_range(0.5..0.95) };
            let engagement: f64 = rng.gen_range(0.1..1.0);
            let mut features = vec![round3(ability), round3(engagement)];
            while features.len() < spec.feature_dim {
                features.push(round3(rng.gen_range(0.0..1.0)));
            }
            features.truncate(spec.feature_dim);
            profiles.push(LearnerProfile {
                learner_id: learner_id.clone(),
                course_id: course.course_id.clone(),
                demographics: Some(Demographics {
                    age: rng.gen_range(18..=24),
                    gender: GENDERS.choose(&mut rng).unwrap().to_string(),
                    grade: GRADES.choose(&mut rng).unwrap().to_string(),
                    major: MAJORS.choose(&mut rng).unwrap().to_string(),
                }),
                features,
            });

            let pool = &course_resources[ci];
            let mut learner_events = Vec::new();
            for week in 1..=weeks {
                // Learners progress through the course roughly in order.
                let reach = ((week as usize * pool.len()).div_ceil(weeks as usize)).max(1);
                let sessions = if week == 1 { rng.gen_range(1..=3) } else { rng.gen_range(0..=3) };
                for _ in 0..sessions {
                    let resource = &resources[pool[rng.gen_range(0..reach)]];
                    let day = 7 * (week - 1) + rng.gen_range(1..=7);
                    learner_events.push(InteractionEvent {
                        learner_id: learner_id.clone(),
                        kind: EventKind::VideoView,
                        resource_id: Some(resource.id.clone()),
                        knowledge_ids: None,
                        minutes: round1(resource.duration_estimate * rng.gen_range(0.5..1.6)),
                        day,
                        correct: None,
                    });
                    let quiz = resource.kind == ResourceKind::Exercise || rng.gen_bool(0.5);
                    if quiz {
                        for k in &resource.knowledge_ids {
                            let difficulty = graph.difficulty(k).unwrap_or(1.0);
                            let p = (ability + 0.25 - 0.06 * (difficulty - 1.0)).clamp(0.05, 0.95);
                            for _ in 0..rng.gen_range(1..=2) {
                                learner_events.push(InteractionEvent {
                                    learner_id: learner_id.clone(),
                                    kind: EventKind::AnswerLog,
                                    resource_id: Some(resource.id.clone()),
                                    knowledge_ids: Some(vec![k.clone()]),
                                    minutes: round1(rng.gen_range(0.5..3.0)),
                                    day,
                                    correct: Some(rng.gen_bool(p)),
                                });
                            }
                        }
                    }
                }
                if rng.gen_bool(0.35 * engagement) {
                    learner_events.push(InteractionEvent {
                        learner_id: learner_id.clone(),
                        kind: EventKind::ForumComment,
                        resource_id: None,
                        knowledge_ids: None,
                        minutes: round1(rng.gen_range(1.0..12.0)),
                        day: 7 * (week - 1) + rng.gen_range(1..=7),
                        correct: None,
                    });
                }
            }
            learner_events.sort_by_key(|e| e.day);
            events.extend(learner_events);

            risk.push(RiskSeries {
                learner_id,
                weekly: risk_curve(&mut rng, weeks, flagged),
            });
        }
    }

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        courses: spec.courses.iter().map(|c| c.course_id.clone()).collect(),
    };
    Workspace::from_parts(manifest, profiles, graph, resources, events, Some(risk))
        .expect("synthetic workspace is internally consistent")
}

fn kind_word(kind: ResourceKind) -> &'static str {
    match kind {
        ResourceKind::Video => "Video:",
        ResourceKind::Exercise => "Exercise:",
        ResourceKind::Document => "Reading:",
    }
}

/// Weekly risk probabilities. Flagged learners first exceed 0.5 in a week
/// between 3 and 8 and stay above it; others stay below 0.45.
fn risk_curve(rng: &mut ChaCha8Rng, weeks: u32, flagged: bool) -> Vec<f64> {
    let mut out = Vec::with_capacity(weeks as usize);
    if !flagged {
        for _ in 0..weeks {
            out.push(round3(rng.gen_range(0.05..0.45)));
        }
        return out;
    }
    let crossing = rng.gen_range(3..=8.min(weeks));
    let mut p: f64 = rng.gen_range(0.1..0.3);
    for week in 1..=weeks {
        p = if week < crossing {
            (p + rng.gen_range(0.0..0.05)).min(0.45)
        } else if week == crossing {
            rng.gen_range(0.55..0.8)
        } else {
            (p + rng.gen_range(0.0..0.05)).min(0.95)
        };
        out.push(round3(p));
    }
    out
}
