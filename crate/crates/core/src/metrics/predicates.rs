//! Pass/fail predicates for the two pedagogical constraints. The reflection
//! step of the rule-based mock and the path validators call these.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CltVerdict {
    Pass,
    Overload,
    Underload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZpdVerdict {
    Pass,
    NonProgressive,
}

/// Acceptable path load as a fraction of the learner's capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadBand {
    pub low: f64,
    pub high: f64,
}

impl Default for LoadBand {
    fn default() -> Self {
        LoadBand { low: 0.8, high: 1.2 }
    }
}

impl LoadBand {
    pub fn contains(&self, ratio: f64) -> bool {
        ratio >= self.low && ratio <= self.high
    }
}

/// Compares the path load against the learner's capacity. With the default
/// band this passes exactly when the learner's `|CLMR|` is at most 0.2.
pub fn clt_verdict<F: Scalar>(cl_student: F, cl_path: F, band: LoadBand) -> CltVerdict {
    if cl_student <= F::zero() {
        return if cl_path > F::zero() {
            CltVerdict::Overload
        } else {
            CltVerdict::Pass
        };
    }
    let ratio = (cl_path / cl_student).as_f64();
    if ratio > band.high {
        CltVerdict::Overload
    } else if ratio < band.low {
        CltVerdict::Underload
    } else {
        CltVerdict::Pass
    }
}

/// One path node as seen by the ZPD check.
#[derive(Debug, Clone, Copy)]
pub struct SequenceItem<'a> {
    pub knowledge_ids: &'a [String],
    pub difficulty: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZpdCheck {
    pub verdict: ZpdVerdict,
    /// 1-based positions whose difficulty drops below the previous node.
    pub regressions: Vec<usize>,
    /// 1-based positions with prerequisites neither mastered nor covered earlier.
    pub unmet: Vec<usize>,
}

/// Direct prerequisites of a resource's knowledge points that are neither
/// mastered nor already covered. The resource's own points are not required.
pub fn unmet_prerequisites<'g, P, M>(
    knowledge_ids: &[String],
    covered: &BTreeSet<String>,
    prerequisites_of: P,
    mastered: M,
) -> Vec<String>
where
    P: Fn(&str) -> &'g [String],
    M: Fn(&str) -> bool,
{
    let own: BTreeSet<&str> = knowledge_ids.iter().map(String::as_str).collect();
    let needed: BTreeSet<&str> = knowledge_ids
        .iter()
        .flat_map(|k| prerequisites_of(k).iter().map(String::as_str))
        .filter(|p| !own.contains(p))
        .collect();
    needed
        .into_iter()
        .filter(|p| !mastered(p) && !covered.contains(*p))
        .map(str::to_string)
        .collect()
}

/// Progressive ordering: difficulties never decrease and every node's
/// prerequisites are satisfied by mastery or an earlier node.
pub fn zpd_check<'g, P, M>(items: &[SequenceItem<'_>], prerequisites_of: P, mastered: M) -> ZpdCheck
where
    P: Fn(&str) -> &'g [String],
    M: Fn(&str) -> bool,
{
    let mut regressions = Vec::new();
    let mut unmet = Vec::new();
    let mut covered = BTreeSet::new();
    for (i, item) in items.iter().enumerate() {
        if i > 0 && item.difficulty < items[i - 1].difficulty {
            regressions.push(i + 1);
        }
        if !unmet_prerequisites(item.knowledge_ids, &covered, &prerequisites_of, &mastered).is_empty() {
            unmet.push(i + 1);
        }
        covered.extend(item.knowledge_ids.iter().cloned());
    }
    let verdict = if regressions.is_empty() && unmet.is_empty() {
        ZpdVerdict::Pass
    } else {
        ZpdVerdict::NonProgressive
    };
    ZpdCheck {
        verdict,
        regressions,
        unmet,
    }
}
