use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::agents::{LearnerContext, ResourceBrief};
use crate::metrics::unmet_prerequisites;
use crate::model::{EffectivenessModel, LearningPath, MasteryStatus, Method, ModelError, PathNode, Provenance};

pub const RBM_MAX_LEN: usize = 10;
pub const ORACLE_MAX_RESOURCES: usize = 12;
pub const ORACLE_MAX_LEN: usize = 6;

/// Mixes the run seed with the learner id so learners draw independent paths.
pub fn learner_seed(seed: u64, learner_id: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0100_0000_01b3;
    learner_id
        .bytes()
        .fold(FNV_OFFSET ^ seed, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn node(r: &ResourceBrief, position: usize, rationale: String) -> PathNode {
    PathNode {
        resource_id: r.id.clone(),
        position: position as u32,
        local_rationale: rationale,
        estimated_minutes: r.minutes,
        repeat: false,
    }
}

/// Random baseline: `N ~ Uniform{1..=min(10, |R|)}` distinct resources in
/// sampling order, with no rationale.
pub fn run_rbm(ctx: &LearnerContext, seed: u64) -> Result<LearningPath, PlanError> {
    let resources = ctx
        .resources
        .as_deref()
        .filter(|r| !r.is_empty())
        .ok_or_else(|| PlanError::EmptyRecommendation(ctx.learner_id.clone()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(learner_seed(seed, &ctx.learner_id));
    let n = rng.gen_range(1..=resources.len().min(RBM_MAX_LEN));
    let mut order: Vec<&ResourceBrief> = resources.iter().collect();
    let (sampled, _) = order.partial_shuffle(&mut rng, n);
    let nodes = sampled
        .iter()
        .enumerate()
        .map(|(i, r)| node(r, i + 1, String::new()))
        .collect();
    let mut provenance = Provenance::new(Method::Rbm);
    provenance.seed = Some(seed);
    Ok(LearningPath {
        learner_id: ctx.learner_id.clone(),
        nodes,
        global_rationale: String::new(),
        provenance,
    })
}

/// Whether every resource's prerequisites are mastered or covered by an
/// earlier resource. Unknown ids are infeasible.
pub fn prerequisite_feasible<'a>(ids: impl IntoIterator<Item = &'a str>, ctx: &LearnerContext) -> bool {
    let Some(state) = ctx.state.as_ref() else {
        return false;
    };
    let mastered = |k: &str| state.status_of(k) == MasteryStatus::Mastered;
    let prereqs = |k: &str| {
        ctx.graph
            .iter()
            .find(|g| g.id == k)
            .map_or(&[][..], |g| g.prerequisites.as_slice())
    };
    let mut covered = BTreeSet::new();
    for id in ids {
        let Some(r) = ctx.resource(id) else {
            return false;
        };
        if !unmet_prerequisites(&r.knowledge_ids, &covered, prereqs, mastered).is_empty() {
            return false;
        }
        covered.extend(r.knowledge_ids.iter().cloned());
    }
    true
}

/// Expected mastery gain toward full mastery, from the context's state.
pub fn default_effectiveness(ctx: &LearnerContext) -> Result<EffectivenessModel<f64>, PlanError> {
    let state = ctx.state.as_ref().ok_or(PlanError::IncompleteContext("knowledge state"))?;
    let resources = ctx.resources.as_deref().ok_or(PlanError::IncompleteContext("recommended resources"))?;
    Ok(EffectivenessModel::new(
        resources
            .iter()
            .map(|r| {
                let gain = r
                    .knowledge_ids
                    .iter()
                    .map(|k| (1.0 - state.mastery_or_zero(k)).max(0.0))
                    .sum();
                (r.id.clone(), gain)
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleLimits {
    pub max_len: usize,
    /// Optional cap on the total estimated minutes of a path.
    pub max_total_minutes: Option<f64>,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_len: 5,
            max_total_minutes: None,
        }
    }
}

struct Search<'a> {
    resources: Vec<&'a ResourceBrief>,
    gains: Vec<f64>,
    limits: OracleLimits,
    best: Option<(f64, Vec<usize>)>,
    feasible_paths: usize,
}

impl Search<'_> {
    /// Sum over the path's resources taken in id order, so every ordering of
    /// a set scores identically.
    fn score(&self, path: &[usize]) -> f64 {
        let mut sorted = path.to_vec();
        sorted.sort_unstable();
        sorted.iter().map(|&i| self.gains[i]).sum()
    }

    fn better(&self, score: f64, path: &[usize]) -> bool {
        let Some((best_score, best)) = &self.best else {
            return true;
        };
        match score.total_cmp(best_score) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => {
                path.len() < best.len() || (path.len() == best.len() && path.to_vec() < *best)
            }
        }
    }
}

/// Exhaustive search for the feasible path of highest cumulative
/// effectiveness. Ties go to the shorter path, then to the smaller id
/// sequence.
pub fn run_oracle(
    ctx: &LearnerContext,
    effectiveness: &EffectivenessModel<f64>,
    limits: OracleLimits,
) -> Result<LearningPath, PlanError> {
    let offered = ctx
        .resources
        .as_deref()
        .filter(|r| !r.is_empty())
        .ok_or_else(|| PlanError::EmptyRecommendation(ctx.learner_id.clone()))?;
    if offered.len() > ORACLE_MAX_RESOURCES || limits.max_len > ORACLE_MAX_LEN || limits.max_len == 0 {
        return Err(PlanError::InstanceTooLarge {
            resources: offered.len(),
            max_len: limits.max_len,
            max_resources: ORACLE_MAX_RESOURCES,
            max_allowed: ORACLE_MAX_LEN,
        });
    }
    let state = ctx.state.as_ref().ok_or(PlanError::IncompleteContext("knowledge state"))?;
    let mut resources: Vec<&ResourceBrief> = offered.iter().collect();
    resources.sort_by(|a, b| a.id.cmp(&b.id));
    let gains = resources
        .iter()
        .map(|r| {
            effectiveness
                .get(&r.id)
                .ok_or_else(|| ModelError::MissingEffectiveness(r.id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    // Prerequisite points each resource needs from earlier path nodes.
    let mastered = |k: &str| state.status_of(k) == MasteryStatus::Mastered;
    let graph_prereqs = |k: &str| {
        ctx.graph
            .iter()
            .find(|g| g.id == k)
            .map_or(&[][..], |g| g.prerequisites.as_slice())
    };
    let needs: Vec<Vec<String>> = resources
        .iter()
        .map(|r| unmet_prerequisites(&r.knowledge_ids, &BTreeSet::new(), graph_prereqs, mastered))
        .collect();
    let mut search = Search {
        resources,
        gains,
        limits,
        best: None,
        feasible_paths: 0,
    };
    let best = search_with_points(&mut search, &needs);
    let (score, picked) = best.ok_or_else(|| PlanError::NoFeasiblePath(ctx.learner_id.clone()))?;

    let nodes = picked
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let res = search.resources[r];
            node(res, i + 1, format!("Effectiveness {:.3}.", search.gains[r]))
        })
        .collect();
    let provenance = Provenance::new(Method::Oracle);
    Ok(LearningPath {
        learner_id: ctx.learner_id.clone(),
        nodes,
        global_rationale: format!(
            "Highest cumulative effectiveness {score:.3} among {} feasible paths of length at most {}.",
            search.feasible_paths, limits.max_len
        ),
        provenance,
    })
}

/// Runs the search where feasibility is tracked by covered knowledge points.
fn search_with_points(search: &mut Search<'_>, needs: &[Vec<String>]) -> Option<(f64, Vec<usize>)> {
    fn visit(
        s: &mut Search<'_>,
        needs: &[Vec<String>],
        path: &mut Vec<usize>,
        covered: &mut Vec<String>,
        minutes: f64,
    ) {
        if !path.is_empty() {
            s.feasible_paths += 1;
            let score = s.score(path);
            if s.better(score, path) {
                s.best = Some((score, path.clone()));
            }
        }
        if path.len() == s.limits.max_len {
            return;
        }
        for i in 0..s.resources.len() {
            if path.contains(&i) || !needs[i].iter().all(|k| covered.contains(k)) {
                continue;
            }
            let total = minutes + s.resources[i].minutes;
            if s.limits.max_total_minutes.is_some_and(|cap| total > cap) {
                continue;
            }
            let mark = covered.len();
            covered.extend(s.resources[i].knowledge_ids.iter().cloned());
            path.push(i);
            visit(s, needs, path, covered, total);
            path.pop();
            covered.truncate(mark);
        }
    }
    visit(search, needs, &mut Vec::new(), &mut Vec::new(), 0.0);
    search.best.take()
}
