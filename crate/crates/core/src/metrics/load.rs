use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::ingest::{learner_time_stats, LearnerTimeStats, Workspace};
use crate::model::LearningPath;
use crate::scalar::{mean, Scalar};

/// A learner's cognitive load capacity in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CognitiveLoadProfile<F = f64> {
    pub cl_int: F,
    pub cl_ger: F,
    pub cl_ext: F,
    pub cl_student: F,
}

impl<F: Scalar> CognitiveLoadProfile<F> {
    /// Intrinsic load is the mean `T_ij` over studied resources, germane load
    /// the mean daily forum time over the active span.
    pub fn from_stats(stats: &LearnerTimeStats, cl_ext: F, learner_id: &str) -> Result<Self, MetricError> {
        let cl_int = mean(stats.per_resource.values().map(|&m| F::lit(m)))
            .ok_or_else(|| MetricError::UndefinedLoad(learner_id.to_string()))?;
        let cl_ger = if stats.active_days == 0 {
            F::zero()
        } else {
            let total: F = stats.forum_by_day.iter().map(|&m| F::lit(m)).sum();
            total / F::lit(stats.active_days as f64)
        };
        Ok(CognitiveLoadProfile {
            cl_int,
            cl_ger,
            cl_ext,
            cl_student: cl_int + cl_ger + cl_ext,
        })
    }
}

pub fn student_load<F: Scalar>(
    ws: &Workspace,
    learner_id: &str,
    cl_ext: F,
) -> Result<CognitiveLoadProfile<F>, MetricError> {
    let stats = learner_time_stats(ws, learner_id)
        .map_err(|_| MetricError::UnknownLearner(learner_id.to_string()))?;
    CognitiveLoadProfile::from_stats(&stats, cl_ext, learner_id)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLoad<F = f64> {
    pub minutes: F,
    /// Nodes whose load came from the authored estimate rather than samples.
    pub fallback_nodes: usize,
}

/// Mean per-resource load over the path's nodes.
pub fn path_load<F: Scalar>(path: &LearningPath, ws: &Workspace) -> Result<PathLoad<F>, MetricError> {
    let mut fallback_nodes = 0;
    let mut loads = Vec::with_capacity(path.len());
    for id in path.resource_ids() {
        let (m, fallback) = ws
            .resource_minutes(id)
            .ok_or_else(|| MetricError::UnknownResource(id.to_string()))?;
        fallback_nodes += usize::from(fallback);
        loads.push(F::lit(m));
    }
    let minutes = mean(loads).ok_or_else(|| MetricError::EmptyPath(path.learner_id.clone()))?;
    Ok(PathLoad {
        minutes,
        fallback_nodes,
    })
}

/// Signed misalignment: negative when the path outweighs the learner's capacity.
pub fn clmr_signed<F: Scalar>(cl_student: F, cl_path: F) -> Result<F, MetricError> {
    if cl_student <= F::zero() {
        return Err(MetricError::ZeroCapacity);
    }
    Ok((cl_student - cl_path) / cl_student)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClmrSummary<F = f64> {
    /// Mean absolute misalignment.
    pub aggregate: F,
    pub signed: Vec<F>,
}

/// `pairs` are `(cl_student, cl_path)`.
pub fn clmr<F: Scalar>(pairs: &[(F, F)]) -> Result<ClmrSummary<F>, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyBatch);
    }
    let signed = pairs
        .iter()
        .map(|&(s, p)| clmr_signed(s, p))
        .collect::<Result<Vec<F>, _>>()?;
    let aggregate = mean(signed.iter().map(|v| v.abs())).expect("nonempty");
    Ok(ClmrSummary { aggregate, signed })
}
