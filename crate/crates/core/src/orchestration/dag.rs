//! Task DAG: planning from templates, scheduling frontier, aggregation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::registry::Discovery;
use super::{Intent, Response, ResponseStatus};
use crate::lifecycle::{EeId, SubTaskConfig, SubTaskId, SubTaskRecord, SubTaskState};

/// One node of a plan template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanNode {
    pub id: SubTaskId,
    /// Required skill; ignored for internal nodes.
    #[serde(default)]
    pub skill: String,
    /// Handled by the host itself, without an external entity.
    #[serde(default)]
    pub internal: bool,
    #[serde(default)]
    pub retry_limit: u32,
    #[serde(default)]
    pub fallbacks: Vec<EeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanTemplate {
    pub nodes: Vec<PlanNode>,
    #[serde(default)]
    pub edges: Vec<(SubTaskId, SubTaskId)>,
}

/// Everything needed to create a node's lifecycle record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSeed {
    pub dependencies: BTreeSet<SubTaskId>,
    pub skill: String,
    pub assigned_ee: Option<EeId>,
    pub needs_external: bool,
    pub retry_limit: u32,
    pub fallback_queue: Vec<EeId>,
}

impl NodeSeed {
    pub fn config(&self) -> SubTaskConfig {
        SubTaskConfig {
            retry_limit: self.retry_limit,
            fallback_queue: self.fallback_queue.clone(),
            needs_external: self.needs_external,
            assigned_ee: self.assigned_ee.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskDag {
    pub nodes: BTreeMap<SubTaskId, NodeSeed>,
    pub edges: BTreeSet<(SubTaskId, SubTaskId)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("cycle detected through `{0}`")]
    CycleDetected(SubTaskId),
    #[error("no discovered entity offers skill `{skill}` for node `{node}`")]
    CapabilityUnsatisfied { node: SubTaskId, skill: String },
    #[error("edge endpoint `{0}` is not a node")]
    DanglingEdge(SubTaskId),
    #[error("duplicate node `{0}`")]
    DuplicateNode(SubTaskId),
    #[error("unknown plan template `{0}`")]
    UnknownPlan(String),
    #[error("no result for node `{0}`")]
    MissingResult(SubTaskId),
}

/// Kahn's algorithm over `nodes` and `edges`, always taking the smallest
/// ready id.
fn topo_sort<'a>(
    nodes: impl IntoIterator<Item = &'a SubTaskId>,
    edges: impl IntoIterator<Item = &'a (SubTaskId, SubTaskId)>,
) -> Result<Vec<SubTaskId>, DagError> {
    let mut indegree: BTreeMap<&str, usize> = nodes.into_iter().map(|n| (n.as_str(), 0)).collect();
    let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in edges {
        for end in [a, b] {
            if !indegree.contains_key(end.as_str()) {
                return Err(DagError::DanglingEdge(end.clone()));
            }
        }
        succ.entry(a.as_str()).or_default().push(b.as_str());
        *indegree.get_mut(b.as_str()).expect("checked") += 1;
    }
    let mut ready: BTreeSet<&str> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(n, _)| *n)
        .collect();
    let mut order = Vec::with_capacity(indegree.len());
    while let Some(n) = ready.pop_first() {
        order.push(n.to_string());
        for s in succ.get(n).into_iter().flatten() {
            let d = indegree.get_mut(s).expect("checked");
            *d -= 1;
            if *d == 0 {
                ready.insert(s);
            }
        }
    }
    if order.len() < indegree.len() {
        let stuck = indegree
            .iter()
            .find(|(n, d)| **d > 0 && !order.iter().any(|o| o == *n));
        return Err(DagError::CycleDetected(
            stuck.map(|(n, _)| n.to_string()).unwrap_or_default(),
        ));
    }
    Ok(order)
}

impl PlanTemplate {
    /// Checks node uniqueness, edge endpoints and acyclicity.
    pub fn check(&self) -> Result<(), DagError> {
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(&n.id) {
                return Err(DagError::DuplicateNode(n.id.clone()));
            }
        }
        topo_sort(self.nodes.iter().map(|n| &n.id), &self.edges).map(|_| ())
    }
}

impl TaskDag {
    pub fn topological_order(&self) -> Result<Vec<SubTaskId>, DagError> {
        topo_sort(self.nodes.keys(), &self.edges)
    }

    /// Re-checks the structural invariants: acyclic, endpoints are nodes,
    /// dependencies equal incoming edges.
    pub fn validate(&self) -> Result<(), DagError> {
        self.topological_order()?;
        for (id, seed) in &self.nodes {
            let incoming: BTreeSet<SubTaskId> = self
                .edges
                .iter()
                .filter(|(_, b)| b == id)
                .map(|(a, _)| a.clone())
                .collect();
            if incoming != seed.dependencies {
                return Err(DagError::DanglingEdge(id.clone()));
            }
        }
        Ok(())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }
}

/// Instantiates `plan`, binding each external node's skill to the first
/// discovered profile offering it.
pub fn build_task_dag(
    _intent: &Intent,
    plan: &PlanTemplate,
    discovery: &Discovery,
) -> Result<TaskDag, DagError> {
    plan.check()?;
    let mut nodes = BTreeMap::new();
    for n in &plan.nodes {
        let assigned_ee = if n.internal {
            None
        } else {
            let p = discovery
                .profiles()
                .iter()
                .find(|p| p.skills.contains(&n.skill))
                .ok_or_else(|| DagError::CapabilityUnsatisfied {
                    node: n.id.clone(),
                    skill: n.skill.clone(),
                })?;
            Some(p.ee_id.clone())
        };
        let dependencies = plan
            .edges
            .iter()
            .filter(|(_, b)| *b == n.id)
            .map(|(a, _)| a.clone())
            .collect();
        nodes.insert(
            n.id.clone(),
            NodeSeed {
                dependencies,
                skill: n.skill.clone(),
                assigned_ee,
                needs_external: !n.internal,
                retry_limit: n.retry_limit,
                fallback_queue: n.fallbacks.clone(),
            },
        );
    }
    let dag = TaskDag {
        nodes,
        edges: plan.edges.iter().cloned().collect(),
    };
    dag.validate()?;
    Ok(dag)
}

/// Nodes still waiting to start whose dependencies have all completed, by
/// ascending id.
pub fn ready_frontier(
    dag: &TaskDag,
    records: &BTreeMap<SubTaskId, SubTaskRecord>,
) -> Vec<SubTaskId> {
    dag.nodes
        .iter()
        .filter(|(id, seed)| {
            let waiting = records.get(*id).is_some_and(|r| {
                matches!(
                    r.state,
                    SubTaskState::Created | SubTaskState::AwaitingDependency
                )
            });
            waiting
                && seed.dependencies.iter().all(|d| {
                    records
                        .get(d)
                        .is_some_and(|r| r.state == SubTaskState::Completed)
                })
        })
        .map(|(id, _)| id.clone())
        .collect()
}

/// A node's final state and result payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeOutcome {
    pub state: SubTaskState,
    pub payload: String,
}

/// Concatenates payloads in topological order when every node completed;
/// otherwise reports the first non-completed node in that order.
pub fn aggregate(
    dag: &TaskDag,
    results: &[(SubTaskId, NodeOutcome)],
) -> Result<Response, DagError> {
    let by_id: BTreeMap<&str, &NodeOutcome> =
        results.iter().map(|(i, o)| (i.as_str(), o)).collect();
    let order = dag.topological_order()?;
    let mut per_subtask = BTreeMap::new();
    for id in &order {
        let o = by_id
            .get(id.as_str())
            .ok_or_else(|| DagError::MissingResult(id.clone()))?;
        per_subtask.insert(id.clone(), o.state);
    }
    match order
        .iter()
        .find(|id| per_subtask[*id] != SubTaskState::Completed)
    {
        None => {
            let payload: Vec<&str> = order
                .iter()
                .map(|id| by_id[id.as_str()].payload.as_str())
                .collect();
            Ok(Response {
                status: ResponseStatus::Success,
                payload: payload.join(" | "),
                per_subtask,
            })
        }
        Some(first) => Ok(Response {
            status: ResponseStatus::Error,
            payload: format!("sub-task {first} ended in {}", per_subtask[first]),
            per_subtask,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestration::registry::Registry;
    use crate::orchestration::{ApiMetadata, CapabilityProfile, EeKind};

    fn profile(id: &str, skill: &str) -> CapabilityProfile {
        CapabilityProfile {
            ee_id: id.into(),
            kind: EeKind::Tool,
            skills: [skill.to_string()].into(),
            api_metadata: ApiMetadata {
                protocol: "mcp".into(),
                endpoint: "e".into(),
                schema: "s".into(),
            },
            validated: true,
            reliability: 80,
        }
    }

    fn node(id: &str, skill: &str) -> PlanNode {
        PlanNode {
            id: id.into(),
            skill: skill.into(),
            internal: false,
            retry_limit: 0,
            fallbacks: vec![],
        }
    }

    fn edge(a: &str, b: &str) -> (String, String) {
        (a.into(), b.into())
    }

    fn intent() -> Intent {
        Intent {
            intent_id: "i".into(),
            parameters: BTreeMap::new(),
            plan_template_ref: "p".into(),
        }
    }

    fn discovery() -> Discovery {
        let mut r = Registry::new([]);
        r.register(profile("fetchEE", "fetch")).unwrap();
        r.register(profile("calcEE", "calc")).unwrap();
        r.discover(&BTreeSet::new())
    }

    fn chain() -> TaskDag {
        let plan = PlanTemplate {
            nodes: vec![node("a", "fetch"), node("b", "calc"), node("c", "fetch")],
            edges: vec![edge("a", "b"), edge("b", "c")],
        };
        build_task_dag(&intent(), &plan, &discovery()).unwrap()
    }

    #[test]
    fn chain_template_builds() {
        let dag = chain();
        assert_eq!(dag.nodes.len(), 3);
        assert_eq!(
            dag.edges,
            [edge("a", "b"), edge("b", "c")].into_iter().collect()
        );
        assert_eq!(dag.nodes["b"].dependencies, ["a".to_string()].into());
        assert_eq!(dag.nodes["b"].assigned_ee.as_deref(), Some("calcEE"));
        assert_eq!(dag.topological_order().unwrap(), ["a", "b", "c"]);
    }

    #[test]
    fn cycle_and_missing_capability() {
        let plan = PlanTemplate {
            nodes: vec![node("a", "fetch"), node("b", "fetch")],
            edges: vec![edge("a", "b"), edge("b", "a")],
        };
        assert!(matches!(
            build_task_dag(&intent(), &plan, &discovery()),
            Err(DagError::CycleDetected(_))
        ));
        let plan = PlanTemplate {
            nodes: vec![node("a", "teleport")],
            edges: vec![],
        };
        assert_eq!(
            build_task_dag(&intent(), &plan, &discovery()),
            Err(DagError::CapabilityUnsatisfied {
                node: "a".into(),
                skill: "teleport".into()
            })
        );
    }

    fn records(dag: &TaskDag, states: &[(&str, SubTaskState)]) -> BTreeMap<String, SubTaskRecord> {
        dag.nodes
            .iter()
            .map(|(id, seed)| {
                let mut r =
                    SubTaskRecord::new(id.clone(), seed.dependencies.clone(), seed.config());
                if let Some((_, s)) = states.iter().find(|(n, _)| n == id) {
                    r.state = *s;
                }
                (id.clone(), r)
            })
            .collect()
    }

    #[test]
    fn frontier() {
        let dag = chain();
        assert_eq!(ready_frontier(&dag, &records(&dag, &[])), ["a"]);
        let running = records(&dag, &[("a", SubTaskState::InProgress)]);
        assert!(ready_frontier(&dag, &running).is_empty());
        let done = records(&dag, &[("a", SubTaskState::Completed)]);
        assert_eq!(ready_frontier(&dag, &done), ["b"]);
    }

    fn outcome(s: SubTaskState, p: &str) -> NodeOutcome {
        NodeOutcome {
            state: s,
            payload: p.into(),
        }
    }

    #[test]
    fn aggregation() {
        let dag = chain();
        let ok = vec![
            ("c".to_string(), outcome(SubTaskState::Completed, "z")),
            ("a".to_string(), outcome(SubTaskState::Completed, "x")),
            ("b".to_string(), outcome(SubTaskState::Completed, "y")),
        ];
        let r = aggregate(&dag, &ok).unwrap();
        assert_eq!(r.status, ResponseStatus::Success);
        assert_eq!(r.payload, "x | y | z");
        let mut bad = ok.clone();
        bad[2].1.state = SubTaskState::Error;
        let r = aggregate(&dag, &bad).unwrap();
        assert_eq!(r.status, ResponseStatus::Error);
        assert!(r.payload.contains("sub-task b"));
        assert_eq!(
            aggregate(&dag, &ok[..2]),
            Err(DagError::MissingResult("b".into()))
        );
    }
}
