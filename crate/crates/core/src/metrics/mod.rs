//! Path quality metrics: APL, ALD, CLMR and KSC, plus the CLT/ZPD predicates
//! shared with the reflection step, and batch evaluation reports.
//!
//! Every metric is generic over [`Scalar`]; reports are produced at `f64`.

mod load;
mod predicates;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Workspace;
use crate::model::LearningPath;
use crate::scalar::{mean, Scalar};

pub use load::{clmr, clmr_signed, path_load, student_load, ClmrSummary, CognitiveLoadProfile, PathLoad};
pub use predicates::{
    clt_verdict, unmet_prerequisites, zpd_check, CltVerdict, LoadBand, SequenceItem, ZpdCheck,
    ZpdVerdict,
};
pub use report::{evaluate_batch, DeltaRow, EvalConfig, EvaluationReport, MethodRow, PathDetail, ReportFormat};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("path for learner {0} has no nodes")]
    EmptyPath(String),
    #[error("cognitive load undefined for learner {0}: no studied resources")]
    UndefinedLoad(String),
    #[error("learner capacity is zero; exclude the learner before computing CLMR")]
    ZeroCapacity,
    #[error("unknown learner {0}")]
    UnknownLearner(String),
    #[error("unknown resource {0}")]
    UnknownResource(String),
    #[error("resource {0} has no knowledge point with a difficulty")]
    MissingDifficulty(String),
}

/// Denominator used by the per-path knowledge sequence consistency score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KscMode {
    /// Divide the increasing-pair count by `|P|`.
    #[default]
    AsWritten,
    /// Divide by `|P| − 1`, so a strictly increasing path scores 1.
    Normalized,
}

impl std::str::FromStr for KscMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "as_written" | "aswritten" => Ok(KscMode::AsWritten),
            "normalized" | "normalised" => Ok(KscMode::Normalized),
            other => Err(format!("unknown KSC mode {other:?}")),
        }
    }
}

/// Average path length.
pub fn apl<F: Scalar>(paths: &[LearningPath]) -> Result<F, MetricError> {
    mean(paths.iter().map(|p| F::count(p.len()))).ok_or(MetricError::EmptyBatch)
}

/// Average learning duration from per-path duration lists: the mean over
/// paths of each path's mean resource duration.
pub fn ald_from_durations<F: Scalar>(per_path: &[Vec<F>]) -> Result<F, MetricError> {
    if per_path.is_empty() {
        return Err(MetricError::EmptyBatch);
    }
    let per_path_means = per_path
        .iter()
        .map(|d| mean(d.iter().copied()).ok_or(MetricError::EmptyPath(String::new())))
        .collect::<Result<Vec<F>, _>>()?;
    Ok(mean(per_path_means).expect("nonempty"))
}

/// Estimated minutes per node: empirical resource mean, falling back to the
/// authored estimate.
pub fn node_minutes<F: Scalar>(path: &LearningPath, ws: &Workspace) -> Result<Vec<F>, MetricError> {
    path.resource_ids()
        .map(|id| {
            ws.resource_minutes(id)
                .map(|(m, _)| F::lit(m))
                .ok_or_else(|| MetricError::UnknownResource(id.to_string()))
        })
        .collect()
}

pub fn ald<F: Scalar>(paths: &[LearningPath], ws: &Workspace) -> Result<F, MetricError> {
    let durations = paths
        .iter()
        .map(|p| {
            if p.is_empty() {
                return Err(MetricError::EmptyPath(p.learner_id.clone()));
            }
            node_minutes(p, ws)
        })
        .collect::<Result<Vec<_>, _>>()?;
    ald_from_durations(&durations)
}

/// Knowledge sequence consistency of one difficulty sequence. A single node
/// scores one half.
pub fn ksc_sequence<F: Scalar>(difficulties: &[F], mode: KscMode) -> Result<F, MetricError> {
    match difficulties.len() {
        0 => Err(MetricError::EmptyPath(String::new())),
        1 => Ok(F::lit(0.5)),
        n => {
            let increasing = difficulties.windows(2).filter(|w| w[0] < w[1]).count();
            let denominator = match mode {
                KscMode::AsWritten => n,
                KscMode::Normalized => n - 1,
            };
            Ok(F::count(increasing) / F::count(denominator))
        }
    }
}

/// Node difficulty: maximum difficulty over the resource's knowledge points.
pub fn node_difficulties<F: Scalar>(path: &LearningPath, ws: &Workspace) -> Result<Vec<F>, MetricError> {
    path.resource_ids()
        .map(|id| {
            let r = ws
                .resource(id)
                .ok_or_else(|| MetricError::UnknownResource(id.to_string()))?;
            r.difficulty(ws.graph())
                .map(F::lit)
                .ok_or_else(|| MetricError::MissingDifficulty(id.to_string()))
        })
        .collect()
}

pub fn ksc_path<F: Scalar>(path: &LearningPath, ws: &Workspace, mode: KscMode) -> Result<F, MetricError> {
    if path.is_empty() {
        return Err(MetricError::EmptyPath(path.learner_id.clone()));
    }
    ksc_sequence(&node_difficulties::<F>(path, ws)?, mode)
}

/// Mean per-path KSC.
pub fn ksc<F: Scalar>(paths: &[LearningPath], ws: &Workspace, mode: KscMode) -> Result<F, MetricError> {
    if paths.is_empty() {
        return Err(MetricError::EmptyBatch);
    }
    let scores = paths
        .iter()
        .map(|p| ksc_path::<F>(p, ws, mode))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mean(scores).expect("nonempty"))
}
