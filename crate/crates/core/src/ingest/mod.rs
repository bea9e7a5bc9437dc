//! Canonical on-disk workspace: loading, validation, saving, time statistics
//! and synthetic cohorts.
//!
//! A workspace directory holds `manifest.json`, `profiles.jsonl`,
//! `graph.json`, `resources.jsonl`, `events.jsonl` and optionally
//! `risk.jsonl`. JSONL files carry one record per line.

mod stats;
mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_graph, GraphFile, KnowledgeGraph, LearnerProfile, Resource};
use crate::signals::RiskSeries;

pub use stats::{learner_time_stats, resource_time_stats, LearnerTimeStats, TimeStat};
pub use synth::{synth_cohort, CourseSpec, SynthSpec};

pub const SCHEMA_VERSION: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PROFILES_FILE: &str = "profiles.jsonl";
pub const GRAPH_FILE: &str = "graph.json";
pub const RESOURCES_FILE: &str = "resources.jsonl";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const RISK_FILE: &str = "risk.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    VideoView,
    AnswerLog,
    ForumComment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub learner_id: String,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knowledge_ids: Option<Vec<String>>,
    pub minutes: f64,
    pub day: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
}

impl InteractionEvent {
    /// Week containing this event's day; week `w` covers days `7(w−1)+1 ..= 7w`.
    pub fn week(&self) -> u32 {
        self.day.div_ceil(7)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub courses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrityIssue {
    pub file: &'static str,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for IntegrityIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.file, line, self.message),
            None => write!(f, "{}: {}", self.file, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: io::Error,
    },
    #[error("{file}:{line}: parse error: {message}")]
    Parse {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error("integrity check failed:\n{}", render_issues(.0))]
    Integrity(Vec<IntegrityIssue>),
    #[error("unknown learner {0}")]
    UnknownLearner(String),
}

fn render_issues(issues: &[IntegrityIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// A fully validated, immutable workspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    manifest: Manifest,
    profiles: Vec<LearnerProfile>,
    graph: KnowledgeGraph,
    resources: Vec<Resource>,
    events: Vec<InteractionEvent>,
    risk: Option<Vec<RiskSeries>>,
    profile_index: BTreeMap<String, usize>,
    resource_index: BTreeMap<String, usize>,
    resource_stats: BTreeMap<String, TimeStat>,
}

/// 1-based line numbers of each record in its source file.
#[derive(Debug, Default)]
struct LineMap {
    profiles: Vec<usize>,
    resources: Vec<usize>,
    events: Vec<usize>,
    risk: Vec<usize>,
}

fn line_of(lines: &[usize], index: usize) -> usize {
    lines.get(index).copied().unwrap_or(index + 1)
}

impl Workspace {
    /// Assembles and validates a workspace from in-memory parts.
    pub fn from_parts(
        manifest: Manifest,
        profiles: Vec<LearnerProfile>,
        graph: KnowledgeGraph,
        resources: Vec<Resource>,
        events: Vec<InteractionEvent>,
        risk: Option<Vec<RiskSeries>>,
    ) -> Result<Self, IngestError> {
        Self::assemble(manifest, profiles, graph, resources, events, risk, &LineMap::default())
    }

    fn assemble(
        manifest: Manifest,
        profiles: Vec<LearnerProfile>,
        graph: KnowledgeGraph,
        resources: Vec<Resource>,
        events: Vec<InteractionEvent>,
        risk: Option<Vec<RiskSeries>>,
        lines: &LineMap,
    ) -> Result<Self, IngestError> {
        let profile_index = profiles
            .iter()
            .enumerate()
            .map(|(i, p)| (p.learner_id.clone(), i))
            .collect();
        let resource_index = resources
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        let mut ws = Workspace {
            manifest,
            profiles,
            graph,
            resources,
            events,
            risk,
            profile_index,
            resource_index,
            resource_stats: BTreeMap::new(),
        };
        let issues = ws.integrity_issues(lines);
        if !issues.is_empty() {
            return Err(IngestError::Integrity(issues));
        }
        ws.resource_stats = stats::compute_resource_stats(&ws);
        Ok(ws)
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn courses(&self) -> &[String] {
        &self.manifest.courses
    }

    pub fn profiles(&self) -> &[LearnerProfile] {
        &self.profiles
    }

    pub fn graph(&self) -> &KnowledgeGraph {
        &self.graph
    }

    pub fn resources(&self) -> &[Resource] {
        &self.resources
    }

    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    pub fn risk(&self) -> Option<&[RiskSeries]> {
        self.risk.as_deref()
    }

    pub fn profile(&self, learner_id: &str) -> Option<&LearnerProfile> {
        self.profile_index.get(learner_id).map(|&i| &self.profiles[i])
    }

    pub fn resource(&self, resource_id: &str) -> Option<&Resource> {
        self.resource_index.get(resource_id).map(|&i| &self.resources[i])
    }

    pub fn events_of<'a>(&'a self, learner_id: &'a str) -> impl Iterator<Item = &'a InteractionEvent> + 'a {
        self.events.iter().filter(move |e| e.learner_id == learner_id)
    }

    /// Per-resource mean minutes over learners, precomputed at load.
    pub fn resource_stats(&self) -> &BTreeMap<String, TimeStat> {
        &self.resource_stats
    }

    /// Estimated duration of a resource: the empirical mean when sampled,
    /// otherwise the authored estimate. The flag is true on fallback.
    pub fn resource_minutes(&self, resource_id: &str) -> Option<(f64, bool)> {
        if let Some(stat) = self.resource_stats.get(resource_id) {
            return Some((stat.mean_minutes, false));
        }
        self.resource(resource_id).map(|r| (r.duration_estimate, true))
    }

    /// Resources usable by a learner of `course`.
    pub fn course_resources<'a>(&'a self, course: &'a str) -> impl Iterator<Item = &'a Resource> + 'a {
        self.resources
            .iter()
            .filter(move |r| r.course_id.as_deref().is_none_or(|c| c == course))
    }

    fn integrity_issues(&self, lines: &LineMap) -> Vec<IntegrityIssue> {
        let mut issues = Vec::new();
        let mut push = |file: &'static str, line: Option<usize>, message: String| {
            issues.push(IntegrityIssue { file, line, message })
        };

        if self.manifest.schema_version != SCHEMA_VERSION {
            push(
                MANIFEST_FILE,
                None,
                format!(
                    "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                    self.manifest.schema_version
                ),
            );
        }
        let courses: BTreeSet<&str> = self.manifest.courses.iter().map(String::as_str).collect();
        let known_course = |c: &str| courses.is_empty() || courses.contains(c);

        let mut seen = BTreeSet::new();
        let mut dim = None;
        for (i, p) in self.profiles.iter().enumerate() {
            let line = Some(line_of(&lines.profiles, i));
            if p.learner_id.is_empty() {
                push(PROFILES_FILE, line, "empty learner_id".into());
            }
            if !seen.insert(p.learner_id.as_str()) {
                push(PROFILES_FILE, line, format!("duplicate learner {}", p.learner_id));
            }
            if !known_course(&p.course_id) {
                push(PROFILES_FILE, line, format!("unknown course {}", p.course_id));
            }
            if p.features.iter().any(|f| !f.is_finite()) {
                push(PROFILES_FILE, line, "non-finite feature value".into());
            }
            match dim {
                None => dim = Some(p.features.len()),
                Some(d) if d != p.features.len() => push(
                    PROFILES_FILE,
                    line,
                    format!("feature dimension {} differs from {d}", p.features.len()),
                ),
                _ => {}
            }
        }

        for v in validate_graph(&self.graph) {
            push(GRAPH_FILE, None, v.to_string());
        }
        for p in self.graph.points() {
            if let Some(c) = &p.course_id {
                if !known_course(c) {
                    push(GRAPH_FILE, None, format!("point {} has unknown course {c}", p.id));
                }
            }
        }

        let mut seen = BTreeSet::new();
        for (i, r) in self.resources.iter().enumerate() {
            let line = Some(line_of(&lines.resources, i));
            if !seen.insert(r.id.as_str()) {
                push(RESOURCES_FILE, line, format!("duplicate resource {}", r.id));
            }
            if !(r.duration_estimate.is_finite() && r.duration_estimate > 0.0) {
                push(
                    RESOURCES_FILE,
                    line,
                    format!("resource {} has invalid duration_estimate {}", r.id, r.duration_estimate),
                );
            }
            if r.knowledge_ids.is_empty() {
                push(RESOURCES_FILE, line, format!("resource {} covers no knowledge point", r.id));
            }
            for k in &r.knowledge_ids {
                if !self.graph.contains(k) {
                    push(RESOURCES_FILE, line, format!("resource {} references unknown knowledge point {k}", r.id));
                }
            }
            if let Some(c) = &r.course_id {
                if !known_course(c) {
                    push(RESOURCES_FILE, line, format!("resource {} has unknown course {c}", r.id));
                }
            }
            for t in &r.time_records {
                if self.profile(&t.learner_id).is_none() {
                    push(RESOURCES_FILE, line, format!("time record for unknown learner {}", t.learner_id));
                }
                if !(t.minutes.is_finite() && t.minutes >= 0.0) {
                    push(RESOURCES_FILE, line, format!("invalid time record minutes {}", t.minutes));
                }
            }
        }

        for (i, e) in self.events.iter().enumerate() {
            let line = Some(line_of(&lines.events, i));
            if self.profile(&e.learner_id).is_none() {
                push(EVENTS_FILE, line, format!("unknown learner {}", e.learner_id));
            }
            if !(e.minutes.is_finite() && e.minutes >= 0.0) {
                push(EVENTS_FILE, line, format!("invalid minutes {}", e.minutes));
            }
            if e.day < 1 {
                push(EVENTS_FILE, line, "day must be >= 1".into());
            }
            match (&e.kind, &e.resource_id) {
                (EventKind::VideoView | EventKind::AnswerLog, None) => {
                    push(EVENTS_FILE, line, format!("{:?} event without resource_id", e.kind))
                }
                (_, Some(r)) if self.resource(r).is_none() => {
                    push(EVENTS_FILE, line, format!("unknown resource {r}"))
                }
                _ => {}
            }
            match (e.kind, e.correct) {
                (EventKind::AnswerLog, None) => {
                    push(EVENTS_FILE, line, "answer_log event without correct".into())
                }
                (EventKind::VideoView | EventKind::ForumComment, Some(_)) => {
                    push(EVENTS_FILE, line, format!("{:?} event carries correct", e.kind))
                }
                _ => {}
            }
            for k in e.knowledge_ids.iter().flatten() {
                if !self.graph.contains(k) {
                    push(EVENTS_FILE, line, format!("unknown knowledge point {k}"));
                }
            }
        }

        for (i, s) in self.risk.iter().flatten().enumerate() {
            let line = Some(line_of(&lines.risk, i));
            if self.profile(&s.learner_id).is_none() {
                push(RISK_FILE, line, format!("unknown learner {}", s.learner_id));
            }
            if let Err(e) = s.check() {
                push(RISK_FILE, line, e);
            }
        }
        issues
    }
}

fn read_to_string(dir: &Path, file: &str) -> Result<String, IngestError> {
    fs::read_to_string(dir.join(file)).map_err(|source| IngestError::Io {
        file: dir.join(file).display().to_string(),
        source,
    })
}

fn parse_json<T: DeserializeOwned>(file: &'static str, text: &str) -> Result<T, IngestError> {
    serde_json::from_str(text).map_err(|e| IngestError::Parse {
        file,
        line: e.line(),
        message: e.to_string(),
    })
}

/// Parses a JSONL file, skipping blank lines; returns records with their line numbers.
fn parse_jsonl<T: DeserializeOwned>(file: &'static str, text: &str) -> Result<(Vec<T>, Vec<usize>), IngestError> {
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(raw).map_err(|e| IngestError::Parse {
            file,
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
        lines.push(i + 1);
    }
    Ok((records, lines))
}

/// Loads and fully validates the workspace stored in `dir`.
pub fn load_workspace(dir: impl AsRef<Path>) -> Result<Workspace, IngestError> {
    let dir = dir.as_ref();
    let manifest: Manifest = parse_json(MANIFEST_FILE, &read_to_string(dir, MANIFEST_FILE)?)?;
    let (profiles, profile_lines) = parse_jsonl(PROFILES_FILE, &read_to_string(dir, PROFILES_FILE)?)?;
    let graph_file: GraphFile = parse_json(GRAPH_FILE, &read_to_string(dir, GRAPH_FILE)?)?;
    let graph = KnowledgeGraph::from_records(graph_file).map_err(|violations| {
        IngestError::Integrity(
            violations
                .into_iter()
                .map(|v| IntegrityIssue {
                    file: GRAPH_FILE,
                    line: None,
                    message: v.to_string(),
                })
                .collect(),
        )
    })?;
    let (resources, resource_lines) = parse_jsonl(RESOURCES_FILE, &read_to_string(dir, RESOURCES_FILE)?)?;
    let (events, event_lines) = parse_jsonl(EVENTS_FILE, &read_to_string(dir, EVENTS_FILE)?)?;
    let (risk, risk_lines) = if dir.join(RISK_FILE).exists() {
        let (r, l) = parse_jsonl(RISK_FILE, &read_to_string(dir, RISK_FILE)?)?;
        (Some(r), l)
    } else {
        (None, Vec::new())
    };
    let lines = LineMap {
        profiles: profile_lines,
        resources: resource_lines,
        events: event_lines,
        risk: risk_lines,
    };
    Workspace::assemble(manifest, profiles, graph, resources, events, risk, &lines)
}

fn write_file(dir: &Path, file: &str, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), IngestError> {
    let path = dir.join(file);
    let io_err = |source| IngestError::Io {
        file: path.display().to_string(),
        source,
    };
    let mut out = BufWriter::new(fs::File::create(&path).map_err(io_err)?);
    write(&mut out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

pub(crate) fn write_jsonl<T: Serialize>(out: &mut dyn Write, records: &[T]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn write_pretty<T: Serialize>(out: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    out.write_all(b"\n")
}

/// Writes the canonical files for `ws` into `dir`, creating it if needed.
pub fn save_workspace(ws: &Workspace, dir: impl AsRef<Path>) -> Result<(), IngestError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| IngestError::Io {
        file: dir.display().to_string(),
        source,
    })?;
    write_file(dir, MANIFEST_FILE, |o| write_pretty(o, &ws.manifest))?;
    write_file(dir, PROFILES_FILE, |o| write_jsonl(o, &ws.profiles))?;
    write_file(dir, GRAPH_FILE, |o| write_pretty(o, &ws.graph.to_file()))?;
    write_file(dir, RESOURCES_FILE, |o| write_jsonl(o, &ws.resources))?;
    write_file(dir, EVENTS_FILE, |o| write_jsonl(o, &ws.events))?;
    if let Some(risk) = &ws.risk {
        write_file(dir, RISK_FILE, |o| write_jsonl(o, risk))?;
    }
    Ok(())
}
