//! Knowledge graph: points with difficulty levels and acyclic prerequisite edges.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgePoint {
    pub id: String,
    pub name: String,
    pub difficulty: f64,
    #[serde(default)]
    pub objective: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub course_id: Option<String>,
}

/// A point as stored on disk: difficulty may be omitted and is then derived
/// from the prerequisite structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<f64>,
    #[serde(default)]
    pub objective: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub course_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub prerequisite_id: String,
    pub successor_id: String,
}

impl Edge {
    pub fn new(prerequisite: impl Into<String>, successor: impl Into<String>) -> Self {
        Self {
            prerequisite_id: prerequisite.into(),
            successor_id: successor.into(),
        }
    }
}

/// On-disk shape of `graph.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub points: Vec<PointRecord>,
    #[serde(default)]
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphViolation {
    DuplicatePoint(String),
    InvalidDifficulty { id: String, value: f64 },
    UnresolvedEndpoint { edge: Edge, missing: String },
    /// Members of one strongly connected component, sorted by id.
    Cycle(Vec<String>),
}

impl fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphViolation::DuplicatePoint(id) => write!(f, "duplicate knowledge point {id}"),
            GraphViolation::InvalidDifficulty { id, value } => {
                write!(f, "knowledge point {id} has invalid difficulty {value}")
            }
            GraphViolation::UnresolvedEndpoint { edge, missing } => write!(
                f,
                "unresolved endpoint {missing} in edge {} -> {}",
                edge.prerequisite_id, edge.successor_id
            ),
            GraphViolation::Cycle(ids) => write!(f, "prerequisite cycle {{{}}}", ids.join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopoError {
    Unresolved(String),
    /// Ids that could not be ordered.
    Cyclic(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    points: Vec<KnowledgePoint>,
    edges: Vec<Edge>,
    index: BTreeMap<String, usize>,
    prerequisites: BTreeMap<String, Vec<String>>,
}

impl KnowledgeGraph {
    /// Builds a graph without validating it; see [`validate_graph`].
    pub fn new(points: Vec<KnowledgePoint>, edges: Vec<Edge>) -> Self {
        let mut index = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            index.entry(p.id.clone()).or_insert(i);
        }
        let mut prerequisites: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for e in &edges {
            let list = prerequisites.entry(e.successor_id.clone()).or_default();
            if !list.contains(&e.prerequisite_id) {
                list.push(e.prerequisite_id.clone());
            }
        }
        Self {
            points,
            edges,
            index,
            prerequisites,
        }
    }

    /// Builds a validated graph from file records, deriving any missing
    /// difficulty as `1 + longest prerequisite-chain depth`.
    pub fn from_records(file: GraphFile) -> Result<Self, Vec<GraphViolation>> {
        let explicit: Vec<Option<f64>> = file.points.iter().map(|p| p.difficulty).collect();
        let points = file
            .points
            .into_iter()
            .map(|p| KnowledgePoint {
                id: p.id,
                name: p.name,
                difficulty: p.difficulty.unwrap_or(1.0),
                objective: p.objective,
                course_id: p.course_id,
            })
            .collect();
        let mut graph = Self::new(points, file.edges);
        let violations = validate_graph(&graph);
        if !violations.is_empty() {
            return Err(violations);
        }
        let depths = graph.depths().expect("validated graph is acyclic");
        for (point, explicit) in graph.points.iter_mut().zip(explicit) {
            if explicit.is_none() {
                point.difficulty = 1.0 + depths[&point.id] as f64;
            }
        }
        Ok(graph)
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            points: self
                .points
                .iter()
                .map(|p| PointRecord {
                    id: p.id.clone(),
                    name: p.name.clone(),
                    difficulty: Some(p.difficulty),
                    objective: p.objective.clone(),
                    course_id: p.course_id.clone(),
                })
                .collect(),
            edges: self.edges.clone(),
        }
    }

    pub fn points(&self) -> &[KnowledgePoint] {
        &self.points
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn point(&self, id: &str) -> Option<&KnowledgePoint> {
        self.index.get(id).map(|&i| &self.points[i])
    }

    pub fn difficulty(&self, id: &str) -> Option<f64> {
        self.point(id).map(|p| p.difficulty)
    }

    /// Direct prerequisites of `id`.
    pub fn prerequisites_of(&self, id: &str) -> &[String] {
        self.prerequisites.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Sub-graph of the points belonging to `course` (points without a
    /// course are shared and always kept).
    pub fn restricted_to_course(&self, course: &str) -> KnowledgeGraph {
        let keep = |p: &KnowledgePoint| p.course_id.as_deref().is_none_or(|c| c == course);
        let points: Vec<_> = self.points.iter().filter(|p| keep(p)).cloned().collect();
        let ids: BTreeSet<&str> = points.iter().map(|p| p.id.as_str()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| ids.contains(e.prerequisite_id.as_str()) && ids.contains(e.successor_id.as_str()))
            .cloned()
            .collect();
        KnowledgeGraph::new(points, edges)
    }

    /// Kahn's algorithm; ties are broken by point order.
    pub fn topological_order(&self) -> Result<Vec<&str>, TopoError> {
        let mut indegree: BTreeMap<&str, usize> =
            self.points.iter().map(|p| (p.id.as_str(), 0)).collect();
        let mut successors: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for e in &self.edges {
            for end in [&e.prerequisite_id, &e.successor_id] {
                if !self.contains(end) {
                    return Err(TopoError::Unresolved(end.clone()));
                }
            }
            *indegree.get_mut(e.successor_id.as_str()).unwrap() += 1;
            successors
                .entry(e.prerequisite_id.as_str())
                .or_default()
                .push(e.successor_id.as_str());
        }
        let mut queue: VecDeque<&str> = self
            .points
            .iter()
            .map(|p| p.id.as_str())
            .filter(|id| indegree[id] == 0)
            .collect();
        let mut order = Vec::with_capacity(self.points.len());
        while let Some(id) = queue.pop_front() {
            order.push(id);
            for &next in successors.get(id).map(Vec::as_slice).unwrap_or(&[]) {
                let d = indegree.get_mut(next).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push_back(next);
                }
            }
        }
        if order.len() == indegree.len() {
            Ok(order)
        } else {
            let placed: BTreeSet<&str> = order.iter().copied().collect();
            Err(TopoError::Cyclic(
                indegree
                    .keys()
                    .filter(|id| !placed.contains(*id))
                    .map(|s| s.to_string())
                    .collect(),
            ))
        }
    }

    /// Longest prerequisite-chain depth per point (roots have depth 0).
    pub fn depths(&self) -> Result<BTreeMap<String, usize>, TopoError> {
        let order = self.topological_order()?;
        let mut depth: BTreeMap<String, usize> = BTreeMap::new();
        for id in order {
            let d = self
                .prerequisites_of(id)
                .iter()
                .map(|p| depth[p] + 1)
                .max()
                .unwrap_or(0);
            depth.insert(id.to_string(), d);
        }
        Ok(depth)
    }
}

/// Returns every structural violation of `graph`; empty means valid.
pub fn validate_graph(graph: &KnowledgeGraph) -> Vec<GraphViolation> {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    for p in graph.points() {
        if !seen.insert(p.id.as_str()) {
            violations.push(GraphViolation::DuplicatePoint(p.id.clone()));
        }
        if !(p.difficulty.is_finite() && p.difficulty > 0.0) {
            violations.push(GraphViolation::InvalidDifficulty {
                id: p.id.clone(),
                value: p.difficulty,
            });
        }
    }

    let mut digraph: DiGraphMap<&str, ()> = DiGraphMap::new();
    for p in graph.points() {
        digraph.add_node(p.id.as_str());
    }
    for e in graph.edges() {
        let mut resolved = true;
        for end in [&e.prerequisite_id, &e.successor_id] {
            if !graph.contains(end) {
                violations.push(GraphViolation::UnresolvedEndpoint {
                    edge: e.clone(),
                    missing: end.clone(),
                });
                resolved = false;
            }
        }
        if resolved {
            digraph.add_edge(e.prerequisite_id.as_str(), e.successor_id.as_str(), ());
        }
    }
    for component in tarjan_scc(&digraph) {
        let cyclic = component.len() > 1 || digraph.contains_edge(component[0], component[0]);
        if cyclic {
            let mut ids: Vec<String> = component.iter().map(|s| s.to_string()).collect();
            ids.sort();
            violations.push(GraphViolation::Cycle(ids));
        }
    }
    violations
}
