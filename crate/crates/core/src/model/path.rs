use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Malpp,
    Slmlpp,
    Rbm,
    Oracle,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Malpp => "malpp",
            Method::Slmlpp => "slmlpp",
            Method::Rbm => "rbm",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "malpp" => Ok(Method::Malpp),
            "slmlpp" => Ok(Method::Slmlpp),
            "rbm" => Ok(Method::Rbm),
            "oracle" => Ok(Method::Oracle),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    NoAnalytics,
    NoReflection,
    NoClt,
    NoZpd,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::NoAnalytics,
        Ablation::NoReflection,
        Ablation::NoClt,
        Ablation::NoZpd,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Ablation::NoAnalytics => "no_analytics",
            Ablation::NoReflection => "no_reflection",
            Ablation::NoClt => "no_clt",
            Ablation::NoZpd => "no_zpd",
        }
    }
}

impl FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown ablation {s:?}"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AblationSet(BTreeSet<Ablation>);

impl AblationSet {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with(mut self, ablation: Ablation) -> Self {
        self.0.insert(ablation);
        self
    }

    pub fn contains(&self, ablation: Ablation) -> bool {
        self.0.contains(&ablation)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Ablation> + '_ {
        self.0.iter().copied()
    }

    /// Parses a comma-separated flag list such as `no_clt,no_zpd`.
    pub fn parse_list(s: &str) -> Result<Self, String> {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(Ablation::from_str)
            .collect::<Result<BTreeSet<_>, _>>()
            .map(AblationSet)
    }
}

impl FromIterator<Ablation> for AblationSet {
    fn from_iter<T: IntoIterator<Item = Ablation>>(iter: T) -> Self {
        AblationSet(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: Method,
    pub plan_versions: u32,
    pub accepted_by_reflection: bool,
    #[serde(default)]
    pub ablations: AblationSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            plan_versions: 0,
            accepted_by_reflection: false,
            ablations: AblationSet::none(),
            seed: None,
        }
    }

    /// Group label used for output directories and report rows,
    /// e.g. `malpp` or `malpp+no_clt+no_zpd`.
    pub fn label(&self) -> String {
        run_label(self.method, &self.ablations)
    }
}

pub fn run_label(method: Method, ablations: &AblationSet) -> String {
    let mut label = method.as_str().to_string();
    for a in ablations.iter() {
        label.push('+');
        label.push_str(a.as_str());
    }
    label
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathNode {
    pub resource_id: String,
    pub position: u32,
    #[serde(default)]
    pub local_rationale: String,
    pub estimated_minutes: f64,
    /// Marks a deliberate second session on a resource already in the path.
    #[serde(default, skip_serializing_if = "is_false")]
    pub repeat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningPath {
    pub learner_id: String,
    pub nodes: Vec<PathNode>,
    #[serde(default)]
    pub global_rationale: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathViolation {
    Empty,
    TooLong { len: usize, max: usize },
    NonContiguous { index: usize, position: u32 },
    Duplicate { resource_id: String, position: u32 },
    RepeatWithoutPrior { resource_id: String, position: u32 },
}

impl fmt::Display for PathViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathViolation::Empty => write!(f, "path has no nodes"),
            PathViolation::TooLong { len, max } => {
                write!(f, "path has {len} nodes, maximum is {max}")
            }
            PathViolation::NonContiguous { index, position } => write!(
                f,
                "node {index} has position {position}, expected {}",
                index + 1
            ),
            PathViolation::Duplicate { resource_id, position } => write!(
                f,
                "resource {resource_id} repeated at position {position} without a repeat marker"
            ),
            PathViolation::RepeatWithoutPrior { resource_id, position } => write!(
                f,
                "repeat marker on {resource_id} at position {position} but it does not appear earlier"
            ),
        }
    }
}

impl LearningPath {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn resource_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.resource_id.as_str())
    }

    /// Renumbers node positions 1..=len.
    pub fn renumber(&mut self) {
        for (i, node) in self.nodes.iter_mut().enumerate() {
            node.position = i as u32 + 1;
        }
    }

    /// Structural checks: length bounds, contiguous positions, and the
    /// repeat-marker rule for duplicate resources.
    pub fn validate(&self, max_len: usize) -> Vec<PathViolation> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            out.push(PathViolation::Empty);
        }
        if self.nodes.len() > max_len {
            out.push(PathViolation::TooLong {
                len: self.nodes.len(),
                max: max_len,
            });
        }
        let mut seen = HashSet::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.position as usize != i + 1 {
                out.push(PathViolation::NonContiguous {
                    index: i,
                    position: node.position,
                });
            }
            let fresh = seen.insert(node.resource_id.as_str());
            if fresh && node.repeat {
                out.push(PathViolation::RepeatWithoutPrior {
                    resource_id: node.resource_id.clone(),
                    position: node.position,
                });
            } else if !fresh && !node.repeat {
                out.push(PathViolation::Duplicate {
                    resource_id: node.resource_id.clone(),
                    position: node.position,
                });
            }
        }
        out
    }
}
