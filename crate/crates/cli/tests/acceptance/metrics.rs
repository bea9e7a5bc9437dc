use std::collections::BTreeSet;

use pathplan_core::ingest::{EventKind, InteractionEvent, Manifest, Workspace, SCHEMA_VERSION};
use pathplan_core::metrics::{
    clmr, clmr_signed, evaluate_batch, ksc_sequence, EvalConfig, EvaluationReport, KscMode, MethodRow, PathDetail,
};
use pathplan_core::model::{
    Edge, KnowledgeGraph, KnowledgePoint, LearnerProfile, LearningPath, Method, PathNode, Provenance, Resource,
    ResourceKind, TimeRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KPS: [(&str, f64); 4] = [("k1", 1.0), ("k2", 2.0), ("k3", 3.0), ("k4", 2.0)];
const RESOURCES: [(&str, &[&str], f64); 5] = [
    ("r1", &["k1"], 5.0),
    ("r2", &["k2"], 8.0),
    ("r3", &["k3"], 12.0),
    ("r4", &["k2", "k4"], 6.0),
    ("r5", &["k1", "k3"], 9.0),
];

type Check = fn(&MethodRow, &[PathDetail]) -> Result<(), String>;

struct Fixture {
    name: &'static str,
    events: Vec<InteractionEvent>,
    /// (resource, learner, minutes) held outside the event log.
    records: Vec<(&'static str, &'static str, f64)>,
    paths: Vec<(&'static str, Vec<&'static str>)>,
    cl_ext: f64,
    mode: KscMode,
    check: Option<Check>,
}

fn fixture(name: &'static str, events: Vec<InteractionEvent>, paths: Vec<(&'static str, Vec<&'static str>)>) -> Fixture {
    Fixture {
        name,
        events,
        records: Vec::new(),
        paths,
        cl_ext: 0.0,
        mode: KscMode::AsWritten,
        check: None,
    }
}

fn event(learner: &str, kind: EventKind, resource: Option<&str>, minutes: f64, day: u32) -> InteractionEvent {
    InteractionEvent {
        learner_id: learner.into(),
        kind,
        resource_id: resource.map(String::from),
        knowledge_ids: None,
        minutes,
        day,
        correct: (kind == EventKind::AnswerLog).then_some(true),
    }
}

fn view(learner: &str, resource: &str, minutes: f64, day: u32) -> InteractionEvent {
    event(learner, EventKind::VideoView, Some(resource), minutes, day)
}

fn answer(learner: &str, resource: &str, minutes: f64, day: u32) -> InteractionEvent {
    event(learner, EventKind::AnswerLog, Some(resource), minutes, day)
}

fn forum(learner: &str, minutes: f64, day: u32) -> InteractionEvent {
    event(learner, EventKind::ForumComment, None, minutes, day)
}

fn build_path(learner: &str, ids: &[&str]) -> LearningPath {
    LearningPath {
        learner_id: learner.into(),
        nodes: ids
            .iter()
            .enumerate()
            .map(|(i, id)| PathNode {
                resource_id: id.to_string(),
                position: i as u32 + 1,
                local_rationale: String::new(),
                estimated_minutes: 0.0,
                repeat: false,
            })
            .collect(),
        global_rationale: String::new(),
        provenance: Provenance::new(Method::Rbm),
    }
}

fn build_workspace(
    events: &[InteractionEvent],
    records: &[(&str, &str, f64)],
    learners: &BTreeSet<String>,
    estimate_scale: f64,
) -> Workspace {
    let points = KPS
        .iter()
        .map(|(id, d)| KnowledgePoint {
            id: id.to_string(),
            name: id.to_string(),
            difficulty: *d,
            objective: String::new(),
            course_id: None,
        })
        .collect();
    let graph = KnowledgeGraph::new(points, vec![Edge::new("k1", "k2"), Edge::new("k2", "k3")]);
    let resources = RESOURCES
        .iter()
        .map(|(id, kps, estimate)| Resource {
            id: id.to_string(),
            title: id.to_string(),
            description: String::new(),
            kind: ResourceKind::Video,
            duration_estimate: estimate * estimate_scale,
            knowledge_ids: kps.iter().map(|k| k.to_string()).collect(),
            time_records: records
                .iter()
                .filter(|(r, _, _)| r == id)
                .map(|(_, l, m)| TimeRecord {
                    learner_id: l.to_string(),
                    minutes: *m,
                })
                .collect(),
            course_id: None,
        })
        .collect();
    let profiles = learners
        .iter()
        .map(|l| LearnerProfile {
            learner_id: l.clone(),
            course_id: "c".into(),
            demographics: None,
            features: vec![],
        })
        .collect();
    Workspace::from_parts(
        Manifest {
            schema_version: SCHEMA_VERSION,
            courses: vec!["c".into()],
        },
        profiles,
        graph,
        resources,
        events.to_vec(),
        None,
    )
    .expect("fixture workspace is valid")
}

fn learners_of(f: &Fixture) -> BTreeSet<String> {
    f.events
        .iter()
        .map(|e| e.learner_id.clone())
        .chain(f.records.iter().map(|(_, l, _)| l.to_string()))
        .chain(f.paths.iter().map(|(l, _)| l.to_string()))
        .collect()
}

/// Brute-force recomputation straight from the fixture's raw records.
struct Expected {
    apl: f64,
    ald: f64,
    pooled_ald: f64,
    ksc_percent: f64,
    clmr_percent: Option<f64>,
    excluded: usize,
    /// Per path: (cl_path, cl_student, signed).
    per_path: Vec<(f64, Option<f64>, Option<f64>)>,
}

fn time_on(f: &Fixture, learner: &str, resource: &str) -> Option<f64> {
    let mut seen = false;
    let mut total = 0.0;
    for (r, l, m) in &f.records {
        if *r == resource && *l == learner {
            seen = true;
            total += m;
        }
    }
    for e in &f.events {
        let counts = matches!(e.kind, EventKind::VideoView | EventKind::AnswerLog);
        if counts && e.learner_id == learner && e.resource_id.as_deref() == Some(resource) {
            seen = true;
            total += e.minutes;
        }
    }
    seen.then_some(total)
}

fn resource_mean(f: &Fixture, resource: &str) -> f64 {
    let samples: Vec<f64> = learners_of(f)
        .iter()
        .filter_map(|l| time_on(f, l, resource))
        .collect();
    if samples.is_empty() {
        RESOURCES.iter().find(|r| r.0 == resource).unwrap().2
    } else {
        samples.iter().sum::<f64>() / samples.len() as f64
    }
}

fn difficulty_of(resource: &str) -> f64 {
    let kps = RESOURCES.iter().find(|r| r.0 == resource).unwrap().1;
    let mut best = f64::NEG_INFINITY;
    for k in kps {
        let d = KPS.iter().find(|p| p.0 == *k).unwrap().1;
        if d > best {
            best = d;
        }
    }
    best
}

fn naive_ksc(difficulties: &[f64], mode: KscMode) -> f64 {
    let n = difficulties.len();
    if n == 1 {
        return 0.5;
    }
    let mut count = 0;
    for i in 0..n - 1 {
        if difficulties[i] < difficulties[i + 1] {
            count += 1;
        }
    }
    match mode {
        KscMode::AsWritten => count as f64 / n as f64,
        KscMode::Normalized => count as f64 / (n - 1) as f64,
    }
}

fn capacity(f: &Fixture, learner: &str) -> Option<f64> {
    let times: Vec<f64> = RESOURCES
        .iter()
        .filter_map(|r| time_on(f, learner, r.0))
        .collect();
    if times.is_empty() {
        return None;
    }
    let cl_int = times.iter().sum::<f64>() / times.len() as f64;
    let days: Vec<u32> = f.events.iter().filter(|e| e.learner_id == learner).map(|e| e.day).collect();
    let cl_ger = match (days.iter().min(), days.iter().max()) {
        (Some(lo), Some(hi)) => {
            let forum: f64 = f
                .events
                .iter()
                .filter(|e| e.learner_id == learner && e.kind == EventKind::ForumComment)
                .map(|e| e.minutes)
                .sum();
            forum / f64::from(hi - lo + 1)
        }
        _ => 0.0,
    };
    Some(cl_int + cl_ger + f.cl_ext)
}

fn expected(f: &Fixture) -> Expected {
    let n = f.paths.len() as f64;
    let apl = f.paths.iter().map(|(_, p)| p.len() as f64).sum::<f64>() / n;
    let mut mean_sum = 0.0;
    let mut pooled = (0.0, 0.0);
    let mut ksc_sum = 0.0;
    let mut abs = Vec::new();
    let mut per_path = Vec::new();
    for (learner, ids) in &f.paths {
        let minutes: Vec<f64> = ids.iter().map(|r| resource_mean(f, r)).collect();
        let cl_path = minutes.iter().sum::<f64>() / minutes.len() as f64;
        mean_sum += cl_path;
        pooled.0 += minutes.iter().sum::<f64>();
        pooled.1 += minutes.len() as f64;
        let diffs: Vec<f64> = ids.iter().map(|r| difficulty_of(r)).collect();
        ksc_sum += naive_ksc(&diffs, f.mode);
        let cl_student = capacity(f, learner);
        let signed = cl_student.filter(|s| *s > 0.0).map(|s| (s - cl_path) / s);
        if let Some(v) = signed {
            abs.push(v.abs());
        }
        per_path.push((cl_path, cl_student, signed));
    }
    Expected {
        apl,
        ald: mean_sum / n,
        pooled_ald: pooled.0 / pooled.1,
        ksc_percent: 100.0 * ksc_sum / n,
        clmr_percent: (!abs.is_empty()).then(|| 100.0 * abs.iter().sum::<f64>() / abs.len() as f64),
        excluded: f.paths.len() - abs.len(),
        per_path,
    }
}

fn evaluate(f: &Fixture) -> EvaluationReport {
    let ws = build_workspace(&f.events, &f.records, &learners_of(f), 1.0);
    let paths = f.paths.iter().map(|(l, ids)| build_path(l, ids)).collect();
    let config = EvalConfig {
        ksc_mode: f.mode,
        cl_ext: f.cl_ext,
    };
    evaluate_batch(&ws, &[("m".to_string(), paths)], &config).expect("fixture evaluates")
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn close_opt(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => close(a, b, tol),
        (None, None) => true,
        _ => false,
    }
}

fn fixtures() -> Vec<Fixture> {
    let mut all = vec![
        Fixture {
            check: Some(|row, _| {
                crate::ensure!(row.ksc_percent == 50.0, "singleton KSC {} is not exactly 50%", row.ksc_percent);
                Ok(())
            }),
            ..fixture("singleton path", vec![view("a", "r1", 5.0, 1)], vec![("a", vec!["r1"])])
        },
        fixture(
            "strictly increasing path",
            vec![view("a", "r1", 4.0, 1), view("a", "r2", 6.0, 2), view("a", "r3", 9.0, 3)],
            vec![("a", vec!["r1", "r2", "r3"])],
        ),
        fixture(
            "decreasing path",
            vec![view("a", "r3", 10.0, 1), view("a", "r1", 3.0, 2)],
            vec![("a", vec!["r3", "r2", "r1"])],
        ),
        fixture(
            "equal difficulties are not increases",
            vec![view("a", "r2", 7.0, 1), view("a", "r4", 7.0, 1)],
            vec![("a", vec!["r2", "r4", "r3"])],
        ),
        fixture(
            "node difficulty is the hardest point",
            vec![view("a", "r5", 8.0, 2), view("a", "r1", 2.0, 3)],
            vec![("a", vec!["r1", "r5", "r3"])],
        ),
        Fixture {
            check: Some(|row, details| {
                let pooled = details.iter().map(|d| d.ald_minutes * d.length as f64).sum::<f64>()
                    / details.iter().map(|d| d.length as f64).sum::<f64>();
                crate::ensure!(
                    (row.ald_minutes - pooled).abs() > 1.0,
                    "ALD {} should differ from the pooled mean {pooled}",
                    row.ald_minutes
                );
                Ok(())
            }),
            ..fixture(
                "mean of means differs from pooled mean",
                vec![view("a", "r1", 2.0, 1), view("b", "r3", 30.0, 1), view("b", "r2", 10.0, 2)],
                vec![("a", vec!["r1"]), ("b", vec!["r2", "r3", "r4", "r5"])],
            )
        },
        Fixture {
            check: Some(|row, _| {
                crate::ensure!(row.fallback_nodes == 2, "expected 2 fallback nodes, got {}", row.fallback_nodes);
                Ok(())
            }),
            ..fixture(
                "unsampled resources use the authored estimate",
                vec![view("a", "r1", 5.0, 1)],
                vec![("a", vec!["r1", "r3", "r4"])],
            )
        },
        Fixture {
            records: vec![("r2", "a", 11.0), ("r3", "b", 4.0)],
            ..fixture(
                "historical time records count as samples",
                vec![view("a", "r1", 5.0, 1)],
                vec![("a", vec!["r2", "r3"]), ("b", vec!["r3"])],
            )
        },
        Fixture {
            records: vec![("r1", "a", 3.0)],
            ..fixture(
                "records and events add up per learner",
                vec![view("a", "r1", 5.0, 1), answer("a", "r1", 2.0, 4), view("b", "r1", 1.0, 2)],
                vec![("a", vec!["r1", "r2"]), ("b", vec!["r1"])],
            )
        },
        fixture(
            "repeated views are summed before averaging",
            vec![
                view("a", "r2", 3.0, 1),
                view("a", "r2", 4.0, 2),
                view("a", "r2", 5.0, 9),
                view("b", "r2", 20.0, 3),
            ],
            vec![("a", vec!["r2"]), ("b", vec!["r1", "r2"])],
        ),
        fixture(
            "forum load spreads over the active span",
            vec![view("a", "r1", 6.0, 1), forum("a", 10.0, 3), forum("a", 4.0, 3), view("a", "r2", 2.0, 10)],
            vec![("a", vec!["r1", "r2"])],
        ),
        Fixture {
            check: Some(|row, _| {
                crate::ensure!(row.n_excluded_learners == 1, "forum-only learner not excluded");
                Ok(())
            }),
            ..fixture(
                "forum-only learner has undefined capacity",
                vec![view("a", "r1", 6.0, 1), forum("b", 10.0, 2)],
                vec![("a", vec!["r1"]), ("b", vec!["r1", "r2"])],
            )
        },
        Fixture {
            check: Some(|row, details| {
                crate::ensure!(row.n_excluded_learners == 1, "zero-capacity learner not excluded");
                let b = details.iter().find(|d| d.learner_id == "b").unwrap();
                crate::ensure!(b.cl_student == Some(0.0) && b.clmr_signed.is_none(), "learner b: {b:?}");
                Ok(())
            }),
            ..fixture(
                "zero-capacity learner is excluded",
                vec![view("a", "r1", 6.0, 1), view("b", "r1", 0.0, 1), answer("b", "r2", 0.0, 3)],
                vec![("a", vec!["r1", "r2"]), ("b", vec!["r1", "r2"])],
            )
        },
        Fixture {
            check: Some(|row, _| {
                crate::ensure!(row.clmr_percent.is_none(), "CLMR should be undefined");
                crate::ensure!(row.n_excluded_learners == 2, "both learners should be excluded");
                Ok(())
            }),
            ..fixture(
                "every learner excluded",
                vec![view("a", "r1", 0.0, 1), forum("b", 3.0, 1)],
                vec![("a", vec!["r1"]), ("b", vec!["r2"])],
            )
        },
        Fixture {
            cl_ext: 2.5,
            ..fixture(
                "extraneous load raises capacity",
                vec![view("a", "r1", 6.0, 1), view("a", "r3", 12.0, 2)],
                vec![("a", vec!["r3", "r1"])],
            )
        },
        Fixture {
            cl_ext: 1.0,
            check: Some(|row, details| {
                crate::ensure!(row.n_excluded_learners == 0, "extraneous load should restore capacity");
                crate::ensure!(details[0].cl_student == Some(1.0), "capacity {:?}", details[0].cl_student);
                Ok(())
            }),
            ..fixture(
                "extraneous load lifts a zero-capacity learner",
                vec![view("a", "r1", 0.0, 1)],
                vec![("a", vec!["r1"])],
            )
        },
        Fixture {
            check: Some(|_, details| {
                crate::ensure!(details[0].clmr_signed.unwrap() < 0.0, "overload should be negative");
                Ok(())
            }),
            ..fixture(
                "overload is negative",
                vec![view("a", "r1", 2.0, 1), view("b", "r3", 40.0, 1)],
                vec![("a", vec!["r3"])],
            )
        },
        Fixture {
            check: Some(|_, details| {
                crate::ensure!(details[0].clmr_signed.unwrap() > 0.0, "underload should be positive");
                Ok(())
            }),
            ..fixture(
                "underload is positive",
                vec![view("a", "r3", 30.0, 1), view("b", "r1", 1.0, 1)],
                vec![("a", vec!["r1"])],
            )
        },
        Fixture {
            check: Some(|row, _| {
                crate::ensure!(row.clmr_percent == Some(0.0), "aligned path gives {:?}", row.clmr_percent);
                Ok(())
            }),
            ..fixture(
                "aligned path has zero misalignment",
                vec![view("a", "r1", 8.0, 1), view("a", "r2", 8.0, 1)],
                vec![("a", vec!["r2", "r1"])],
            )
        },
        Fixture {
            mode: KscMode::Normalized,
            ..fixture(
                "normalized KSC",
                vec![view("a", "r1", 4.0, 1), view("b", "r2", 5.0, 1)],
                vec![("a", vec!["r1", "r2", "r3"]), ("b", vec!["r2", "r1"]), ("c", vec!["r4"])],
            )
        },
        fixture(
            "answer minutes count toward resource time",
            vec![answer("a", "r2", 9.0, 1), answer("a", "r2", 1.5, 8), view("b", "r2", 2.0, 1)],
            vec![("a", vec!["r2", "r3"]), ("b", vec!["r2"])],
        ),
        fixture(
            "forum posts only widen the active span",
            vec![view("a", "r1", 5.0, 5), forum("a", 30.0, 1), forum("a", 6.0, 5)],
            vec![("a", vec!["r1", "r2"])],
        ),
        fixture(
            "three learners, mixed lengths",
            vec![
                view("a", "r1", 3.0, 1),
                view("a", "r2", 7.0, 2),
                view("b", "r3", 15.0, 4),
                answer("b", "r4", 5.0, 6),
                forum("b", 12.0, 6),
                view("c", "r5", 10.0, 1),
                forum("c", 2.0, 20),
            ],
            vec![
                ("a", vec!["r1", "r4", "r3", "r5", "r2"]),
                ("b", vec!["r2"]),
                ("c", vec!["r5", "r1", "r3"]),
            ],
        ),
    ];
    all.sort_by_key(|f| f.name);
    all
}

/// Every metric on hand-built fixtures against brute-force recomputation.
pub fn metric_fixtures() -> Result<String, String> {
    const TOL: f64 = 1e-9;
    let all = fixtures();
    crate::ensure!(all.len() >= 20, "only {} fixtures", all.len());
    let mut distinct_ald = false;
    for f in &all {
        let report = evaluate(f);
        let row = &report.rows[0];
        let want = expected(f);
        let name = f.name;
        crate::ensure!(close(row.apl, want.apl, TOL), "{name}: APL {} vs {}", row.apl, want.apl);
        crate::ensure!(close(row.ald_minutes, want.ald, TOL), "{name}: ALD {} vs {}", row.ald_minutes, want.ald);
        crate::ensure!(
            close(row.ksc_percent, want.ksc_percent, TOL),
            "{name}: KSC {} vs {}",
            row.ksc_percent,
            want.ksc_percent
        );
        crate::ensure!(
            close_opt(row.clmr_percent, want.clmr_percent, TOL),
            "{name}: CLMR {:?} vs {:?}",
            row.clmr_percent,
            want.clmr_percent
        );
        crate::ensure!(
            row.n_excluded_learners == want.excluded,
            "{name}: excluded {} vs {}",
            row.n_excluded_learners,
            want.excluded
        );
        for (d, (cl_path, cl_student, signed)) in report.details.iter().zip(&want.per_path) {
            crate::ensure!(
                close(d.cl_path, *cl_path, TOL)
                    && close_opt(d.cl_student, *cl_student, TOL)
                    && close_opt(d.clmr_signed, *signed, TOL),
                "{name}: learner {} detail {d:?} vs ({cl_path}, {cl_student:?}, {signed:?})",
                d.learner_id
            );
        }
        if (want.ald - want.pooled_ald).abs() > 1.0 {
            distinct_ald = true;
        }
        if let Some(check) = f.check {
            check(row, &report.details).map_err(|e| format!("{name}: {e}"))?;
        }
    }
    crate::ensure!(distinct_ald, "no fixture separates mean-of-means from pooled ALD");
    Ok(format!("{} fixtures match brute force within {TOL:e}", all.len()))
}

fn random_events(rng: &mut ChaCha8Rng, learners: &[&str]) -> Vec<InteractionEvent> {
    let mut events = Vec::new();
    for l in learners {
        for _ in 0..rng.gen_range(0..10) {
            let day = rng.gen_range(1..=40);
            let minutes = rng.gen_range(0.0..30.0);
            let resource = RESOURCES[rng.gen_range(0..RESOURCES.len())].0;
            events.push(match rng.gen_range(0..3) {
                0 => view(l, resource, minutes, day),
                1 => answer(l, resource, minutes, day),
                _ => forum(l, minutes, day),
            });
        }
    }
    events
}

fn scaled(events: &[InteractionEvent], lambda: f64) -> Vec<InteractionEvent> {
    events
        .iter()
        .map(|e| InteractionEvent {
            minutes: e.minutes * lambda,
            ..e.clone()
        })
        .collect()
}

/// CLMR symmetry, zero point, bounds and invariance under duration scaling.
pub fn clmr_algebra() -> Result<String, String> {
    const TOL: f64 = 1e-12;
    const CASES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1A5);
    for i in 0..CASES {
        let c: f64 = rng.gen_range(0.01..500.0);
        let delta: f64 = rng.gen_range(0.0..=c);
        let over = clmr_signed(c, c + delta).map_err(|e| e.to_string())?;
        let under = clmr_signed(c, c - delta).map_err(|e| e.to_string())?;
        crate::ensure!(close(over.abs(), under.abs(), TOL), "case {i}: |{over}| != |{under}|");
        crate::ensure!(over <= 0.0 && under >= 0.0, "case {i}: sign convention broken");
        crate::ensure!(clmr_signed(c, c).unwrap() == 0.0, "case {i}: (c, c) is not 0");

        let pairs: Vec<(f64, f64)> = (0..rng.gen_range(1..8))
            .map(|_| {
                let s: f64 = rng.gen_range(0.01..100.0);
                (s, rng.gen_range(0.0..=2.0 * s))
            })
            .collect();
        let agg = clmr(&pairs).map_err(|e| e.to_string())?.aggregate;
        crate::ensure!((0.0..=1.0).contains(&agg), "case {i}: aggregate {agg} outside [0, 1]");
    }

    let learners = ["a", "b", "c"];
    let set: BTreeSet<String> = learners.iter().map(|s| s.to_string()).collect();
    let mut compared = 0usize;
    for i in 0..CASES {
        let lambda = if i % 2 == 0 { 0.5 } else { 3.0 };
        let events = random_events(&mut rng, &learners);
        let records: Vec<(&str, &str, f64)> = (0..rng.gen_range(0..3))
            .map(|_| {
                (
                    RESOURCES[rng.gen_range(0..RESOURCES.len())].0,
                    learners[rng.gen_range(0..learners.len())],
                    rng.gen_range(0.0..20.0),
                )
            })
            .collect();
        let scaled_records: Vec<(&str, &str, f64)> = records.iter().map(|(r, l, m)| (*r, *l, m * lambda)).collect();
        let paths: Vec<LearningPath> = learners
            .iter()
            .map(|l| {
                let mut ids: Vec<&str> = RESOURCES.iter().map(|r| r.0).collect();
                let n = rng.gen_range(1..=ids.len());
                rand::seq::SliceRandom::shuffle(ids.as_mut_slice(), &mut rng);
                build_path(l, &ids[..n])
            })
            .collect();
        let config = EvalConfig {
            ksc_mode: KscMode::AsWritten,
            cl_ext: 0.0,
        };
        let group = [("m".to_string(), paths)];
        let base = evaluate_batch(&build_workspace(&events, &records, &set, 1.0), &group, &config)
            .map_err(|e| e.to_string())?;
        let ws = build_workspace(&scaled(&events, lambda), &scaled_records, &set, lambda);
        let after = evaluate_batch(&ws, &group, &config).map_err(|e| e.to_string())?;
        crate::ensure!(
            close(after.rows[0].ald_minutes, lambda * base.rows[0].ald_minutes, 1e-9),
            "case {i}: ALD does not scale by {lambda}"
        );
        for (a, b) in base.details.iter().zip(&after.details) {
            crate::ensure!(
                close_opt(a.clmr_signed, b.clmr_signed, TOL),
                "case {i}, learner {}: {:?} vs {:?} after scaling by {lambda}",
                a.learner_id,
                a.clmr_signed,
                b.clmr_signed
            );
            compared += usize::from(a.clmr_signed.is_some());
        }
    }
    crate::ensure!(
        clmr(&[(1.0, 3.0)]).unwrap().aggregate == 2.0,
        "a path at three times capacity should score 2, unclamped"
    );
    Ok(format!(
        "{CASES} symmetry cases and {CASES} scaling cases ({compared} learner values) within {TOL:e}"
    ))
}

/// KSC in both modes against a naive loop.
pub fn ksc_fidelity() -> Result<String, String> {
    const CASES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x4B5C);
    for i in 0..CASES {
        let n = rng.gen_range(1..=20);
        let seq: Vec<f64> = if i % 2 == 0 {
            (0..n).map(|_| f64::from(rng.gen_range(1..=4u8))).collect()
        } else {
            (0..n).map(|_| rng.gen_range(0.0..10.0)).collect()
        };
        for mode in [KscMode::AsWritten, KscMode::Normalized] {
            let got = ksc_sequence(&seq, mode).map_err(|e| e.to_string())?;
            let want = naive_ksc(&seq, mode);
            crate::ensure!(got == want, "case {i} {mode:?}: {got} vs {want} for {seq:?}");
        }
        let written: f64 = ksc_sequence(&seq, KscMode::AsWritten).unwrap();
        if n > 1 {
            crate::ensure!(
                written <= (n - 1) as f64 / n as f64,
                "case {i}: as-written KSC {written} exceeds (n-1)/n"
            );
        }
        if i % 2 == 0 {
            let narrow: Vec<f32> = seq.iter().map(|&d| d as f32).collect();
            let single: f32 = ksc_sequence(&narrow, KscMode::AsWritten).map_err(|e| e.to_string())?;
            crate::ensure!((f64::from(single) - written).abs() < 1e-6, "case {i}: f32 and f64 disagree");
        }
    }
    Ok(format!("{CASES} sequences match the naive loop in both modes"))
}
