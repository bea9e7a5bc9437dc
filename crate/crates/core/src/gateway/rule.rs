//! Deterministic stand-in for a language model. It reads the tagged data
//! blocks back out of the prompt and answers from them:
//!
//! * analytics: the report lists are the state's status partition;
//! * planner and single: resources on weak points, filtered to the load band
//!   when the CLT block is present and ordered by difficulty with
//!   prerequisites respected when the ZPD block is present;
//! * reflector: the CLT and ZPD predicates from [`crate::metrics`], checked
//!   only for the blocks present.

use std::collections::{BTreeMap, BTreeSet};

use serde::de::DeserializeOwned;

use super::{estimate_tokens, ChatBackend, ChatRequest, ChatResponse, GatewayError};
use crate::agents::blocks::{self, LoadTarget, PathLimits};
use crate::agents::{
    DiagnosticReport, GraphEntry, PlanPayload, ReflectionResult, ResourceBrief, Suggestion, SuggestionCategory,
};
use crate::metrics::{clt_verdict, unmet_prerequisites, zpd_check, CltVerdict, LoadBand, SequenceItem, ZpdVerdict};
use crate::model::{KnowledgeState, MasteryStatus, PathNode, RiskAlert};

#[derive(Debug, Default, Clone, Copy)]
pub struct RuleBasedBackend;

impl RuleBasedBackend {
    pub fn new() -> Self {
        RuleBasedBackend
    }
}

fn required<T: DeserializeOwned>(text: &str, tag: &str) -> Result<T, GatewayError> {
    optional(text, tag)?.ok_or_else(|| GatewayError::MockInput(format!("prompt has no <{tag}> block")))
}

fn optional<T: DeserializeOwned>(text: &str, tag: &str) -> Result<Option<T>, GatewayError> {
    blocks::find(text, tag).transpose().map_err(GatewayError::MockInput)
}

struct Course {
    graph: BTreeMap<String, GraphEntry>,
    status: BTreeMap<String, MasteryStatus>,
}

impl Course {
    fn read(text: &str) -> Result<Self, GatewayError> {
        let entries: Vec<GraphEntry> = required(text, blocks::KNOWLEDGE_GRAPH)?;
        let graph = entries.into_iter().map(|g| (g.id.clone(), g)).collect();
        let status = if let Some(report) = optional::<DiagnosticReport>(text, blocks::DIAGNOSTIC_REPORT)? {
            let tag = |ids: Vec<String>, s: MasteryStatus| ids.into_iter().map(move |id| (id, s));
            tag(report.mastered, MasteryStatus::Mastered)
                .chain(tag(report.weak, MasteryStatus::Weak))
                .chain(tag(report.unlearned, MasteryStatus::Unlearned))
                .collect()
        } else {
            required::<KnowledgeState>(text, blocks::LEARNER_STATE)?.status
        };
        Ok(Course { graph, status })
    }

    fn status(&self, id: &str) -> MasteryStatus {
        self.status.get(id).copied().unwrap_or(MasteryStatus::Unlearned)
    }

    fn mastered(&self, id: &str) -> bool {
        self.status(id) == MasteryStatus::Mastered
    }

    fn prerequisites(&self, id: &str) -> &[String] {
        self.graph.get(id).map_or(&[], |g| g.prerequisites.as_slice())
    }

    fn unmet(&self, r: &ResourceBrief, covered: &BTreeSet<String>) -> Vec<String> {
        unmet_prerequisites(&r.knowledge_ids, covered, |k| self.prerequisites(k), |k| self.mastered(k))
    }
}

fn in_band(r: &ResourceBrief, target: &LoadTarget) -> bool {
    target.capacity_minutes > 0.0 && {
        let ratio = r.minutes / target.capacity_minutes;
        ratio >= target.low && ratio <= target.high
    }
}

fn by_difficulty(a: &&ResourceBrief, b: &&ResourceBrief) -> std::cmp::Ordering {
    a.difficulty.total_cmp(&b.difficulty).then_with(|| a.id.cmp(&b.id))
}

/// Difficulty order, keeping only resources whose prerequisites are met by
/// mastery or an earlier kept resource.
fn progressive<'a>(course: &Course, mut picked: Vec<&'a ResourceBrief>, max_len: usize) -> Vec<&'a ResourceBrief> {
    picked.sort_by(by_difficulty);
    let mut covered = BTreeSet::new();
    let mut out = Vec::new();
    for r in picked {
        if out.len() == max_len {
            break;
        }
        if course.unmet(r, &covered).is_empty() {
            covered.extend(r.knowledge_ids.iter().cloned());
            out.push(r);
        }
    }
    out
}

/// Adds, for every prerequisite nobody covers, the easiest offered resource
/// teaching it.
fn add_prerequisite_providers<'a>(
    course: &Course,
    resources: &'a [ResourceBrief],
    picked: &mut Vec<&'a ResourceBrief>,
    allowed: impl Fn(&ResourceBrief) -> bool,
) {
    for _ in 0..resources.len() {
        let covered: BTreeSet<String> = picked.iter().flat_map(|r| r.knowledge_ids.iter().cloned()).collect();
        let missing: BTreeSet<String> = picked.iter().flat_map(|r| course.unmet(r, &covered)).collect();
        let mut added = false;
        for kp in missing {
            let provider = resources
                .iter()
                .filter(|r| r.knowledge_ids.contains(&kp) && allowed(r))
                .filter(|r| !picked.iter().any(|p| p.id == r.id))
                .min_by(by_difficulty);
            if let Some(p) = provider {
                picked.push(p);
                added = true;
            }
        }
        if !added {
            break;
        }
    }
}

fn rationale(course: &Course, r: &ResourceBrief) -> String {
    let weak: Vec<&str> = r
        .knowledge_ids
        .iter()
        .filter(|k| course.status(k) == MasteryStatus::Weak)
        .map(String::as_str)
        .collect();
    let focus = if weak.is_empty() {
        format!("Covers {}", r.knowledge_ids.join(", "))
    } else {
        format!("Strengthens weak point(s) {}", weak.join(", "))
    };
    format!("{focus} at difficulty {:.1}, about {:.1} minutes.", r.difficulty, r.minutes)
}

fn to_payload(course: &Course, chosen: &[&ResourceBrief], load: Option<&LoadTarget>, zpd: bool) -> PlanPayload {
    let path: Vec<PathNode> = chosen
        .iter()
        .enumerate()
        .map(|(i, r)| PathNode {
            resource_id: r.id.clone(),
            position: i as u32 + 1,
            local_rationale: rationale(course, r),
            estimated_minutes: r.minutes,
            repeat: false,
        })
        .collect();
    let weak: BTreeSet<&str> = chosen
        .iter()
        .flat_map(|r| r.knowledge_ids.iter())
        .filter(|k| course.status(k) == MasteryStatus::Weak)
        .map(String::as_str)
        .collect();
    let mut global = format!("{} resources covering {} weak knowledge points", path.len(), weak.len());
    if zpd {
        global.push_str(", ordered by non-decreasing difficulty with prerequisites first");
    }
    if let Some(t) = load {
        let avg = chosen.iter().map(|r| r.minutes).sum::<f64>() / chosen.len().max(1) as f64;
        global.push_str(&format!(
            ", averaging {avg:.1} minutes per resource against a capacity of {:.1}",
            t.capacity_minutes
        ));
    }
    global.push('.');
    PlanPayload {
        path,
        global_rationale: global,
    }
}

fn plan(text: &str) -> Result<PlanPayload, GatewayError> {
    let course = Course::read(text)?;
    let resources: Vec<ResourceBrief> = required(text, blocks::RESOURCES)?;
    if resources.is_empty() {
        return Err(GatewayError::MockInput("no resources offered".into()));
    }
    let limits: PathLimits = required(text, blocks::PATH_LIMITS)?;
    let load: Option<LoadTarget> = optional(text, blocks::LOAD_TARGET)?;
    let zpd = blocks::find_raw(text, blocks::PROGRESSION_RULE).is_some();
    let max_len = limits.max_path_length.max(1);

    if let Some(previous) = optional::<PlanPayload>(text, blocks::PREVIOUS_PATH)? {
        let suggestions: Vec<Suggestion> = optional(text, blocks::REVISION_SUGGESTIONS)?.unwrap_or_default();
        let flagged: BTreeSet<u32> = suggestions.iter().flat_map(|s| s.positions.iter().copied()).collect();
        let mut kept: Vec<&ResourceBrief> = previous
            .path
            .iter()
            .filter(|n| !flagged.contains(&n.position))
            .filter_map(|n| resources.iter().find(|r| r.id == n.resource_id))
            .collect();
        if zpd {
            kept = progressive(&course, kept, max_len);
        }
        kept.truncate(max_len);
        if !kept.is_empty() {
            return Ok(to_payload(&course, &kept, load.as_ref(), zpd));
        }
    }

    let covers = |r: &ResourceBrief, s: MasteryStatus| r.knowledge_ids.iter().any(|k| course.status(k) == s);
    let mut pool: Vec<&ResourceBrief> = resources.iter().filter(|r| covers(r, MasteryStatus::Weak)).collect();
    if pool.is_empty() {
        pool = resources.iter().filter(|r| covers(r, MasteryStatus::Unlearned)).collect();
    }
    if pool.is_empty() {
        pool = resources.iter().collect();
    }

    let mut picked = match &load {
        Some(t) => {
            let mut fitting: Vec<&ResourceBrief> = pool.iter().copied().filter(|r| in_band(r, t)).collect();
            if fitting.is_empty() {
                fitting = resources.iter().filter(|r| in_band(r, t)).collect();
            }
            if fitting.is_empty() {
                let closest = pool
                    .iter()
                    .copied()
                    .min_by(|a, b| {
                        let gap = |r: &ResourceBrief| (r.minutes - t.capacity_minutes).abs();
                        gap(a).total_cmp(&gap(b)).then_with(|| a.id.cmp(&b.id))
                    })
                    .expect("pool is nonempty");
                fitting.push(closest);
            }
            fitting
        }
        None => pool,
    };

    let chosen = if zpd {
        add_prerequisite_providers(&course, &resources, &mut picked, |r| load.as_ref().is_none_or(|t| in_band(r, t)));
        let ordered = progressive(&course, picked.clone(), max_len);
        if ordered.is_empty() {
            picked.sort_by(by_difficulty);
            picked.truncate(1);
            picked
        } else {
            ordered
        }
    } else {
        picked.truncate(max_len);
        picked
    };
    Ok(to_payload(&course, &chosen, load.as_ref(), zpd))
}

fn reflect(text: &str) -> Result<ReflectionResult, GatewayError> {
    let course = Course::read(text)?;
    let resources: Vec<ResourceBrief> = required(text, blocks::RESOURCES)?;
    let plan: PlanPayload = required(text, blocks::LEARNING_PATH)?;
    let load: Option<LoadTarget> = optional(text, blocks::LOAD_TARGET)?;
    let zpd = blocks::find_raw(text, blocks::PROGRESSION_RULE).is_some();

    let mut suggestions = Vec::new();
    let mut nodes = Vec::with_capacity(plan.path.len());
    for n in &plan.path {
        match resources.iter().find(|r| r.id == n.resource_id) {
            Some(r) => nodes.push((n.position, r)),
            None => suggestions.push(Suggestion {
                category: SuggestionCategory::Other,
                description: format!("Resource {} is not among the recommended resources.", n.resource_id),
                positions: vec![n.position],
            }),
        }
    }

    let mut clt = CltVerdict::Pass;
    if let (Some(t), false) = (&load, nodes.is_empty()) {
        let avg = nodes.iter().map(|(_, r)| r.minutes).sum::<f64>() / nodes.len() as f64;
        let band = LoadBand {
            low: t.low,
            high: t.high,
        };
        clt = clt_verdict(t.capacity_minutes, avg, band);
        if clt != CltVerdict::Pass {
            let mut positions: Vec<u32> = nodes.iter().filter(|(_, r)| !in_band(r, t)).map(|(p, _)| *p).collect();
            if positions.is_empty() {
                positions = nodes.iter().map(|(p, _)| *p).collect();
            }
            let direction = if clt == CltVerdict::Overload { "above" } else { "below" };
            suggestions.push(Suggestion {
                category: SuggestionCategory::Clt,
                description: format!(
                    "Average load {avg:.1} minutes per resource is {direction} the range {:.1} to {:.1} minutes; replace or drop the resources at these positions.",
                    t.low * t.capacity_minutes,
                    t.high * t.capacity_minutes
                ),
                positions,
            });
        }
    }

    let mut zpd_verdict = ZpdVerdict::Pass;
    if zpd {
        let items: Vec<SequenceItem<'_>> = nodes
            .iter()
            .map(|(_, r)| SequenceItem {
                knowledge_ids: &r.knowledge_ids,
                difficulty: r.difficulty,
            })
            .collect();
        let check = zpd_check(&items, |k| course.prerequisites(k), |k| course.mastered(k));
        zpd_verdict = check.verdict;
        if check.verdict != ZpdVerdict::Pass {
            let positions: BTreeSet<u32> = check
                .regressions
                .iter()
                .chain(&check.unmet)
                .map(|&i| nodes[i - 1].0)
                .collect();
            suggestions.push(Suggestion {
                category: SuggestionCategory::Zpd,
                description: format!(
                    "Difficulty drops at {} position(s) and prerequisites are unmet at {} position(s); reorder by difficulty and remove or precede the unsupported resources.",
                    check.regressions.len(),
                    check.unmet.len()
                ),
                positions: positions.into_iter().collect(),
            });
        }
    }

    Ok(ReflectionResult {
        accepted: suggestions.is_empty(),
        clt_verdict: clt,
        zpd_verdict,
        suggestions,
    })
}

fn analyse(text: &str) -> Result<DiagnosticReport, GatewayError> {
    let state: KnowledgeState = required(text, blocks::LEARNER_STATE)?;
    let alert: RiskAlert = required(text, blocks::RISK_ALERT)?;
    let graph: Vec<GraphEntry> = required(text, blocks::KNOWLEDGE_GRAPH)?;
    let mut lists: BTreeMap<MasteryStatus, Vec<String>> = BTreeMap::new();
    let ids: BTreeSet<&str> = graph.iter().map(|g| g.id.as_str()).collect();
    for id in ids {
        lists.entry(state.status_of(id)).or_default().push(id.to_string());
    }
    let mut take = |s| lists.remove(&s).unwrap_or_default();
    let (mastered, weak, unlearned) = (
        take(MasteryStatus::Mastered),
        take(MasteryStatus::Weak),
        take(MasteryStatus::Unlearned),
    );
    let preferences = format!(
        "No preference signal beyond the knowledge state: {} mastered, {} weak and {} unlearned points.",
        mastered.len(),
        weak.len(),
        unlearned.len()
    );
    let risk_summary = format!(
        "Risk probability {:.2} in week {}, with weak points {}.",
        alert.probability,
        alert.week,
        if weak.is_empty() { "none".to_string() } else { weak.join(", ") }
    );
    Ok(DiagnosticReport {
        mastered,
        weak,
        unlearned,
        preferences,
        risk_summary,
    })
}

impl ChatBackend for RuleBasedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.check()?;
        let text = &request.user_text;
        let reply = match request.role() {
            "analytics" => serde_json::to_string(&analyse(text)?),
            "planner" | "single" => serde_json::to_string(&plan(text)?),
            "reflector" => serde_json::to_string(&reflect(text)?),
            other => return Err(GatewayError::MockInput(format!("unknown role {other}"))),
        }
        .expect("payload serializes");
        Ok(ChatResponse {
            prompt_tokens: estimate_tokens(&request.system_text) + estimate_tokens(text),
            completion_tokens: estimate_tokens(&reply),
            text: reply,
            latency_ms: 0,
            attempts: 1,
        })
    }
}
