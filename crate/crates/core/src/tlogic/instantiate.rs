//! Grounding of parametric catalog templates over a concrete DAG.

use super::ast::{Atom, Formula};
use super::catalog::{Binding, PropertyEntry};
use crate::orchestration::{EeKind, TaskDag};

/// A DAG node as seen by instantiation: its id and the kind of entity it is
/// assigned to (`None` for internally handled nodes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeBinding {
    pub id: String,
    pub kind: Option<EeKind>,
}

/// Everything a template can be grounded over.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings {
    pub nodes: Vec<NodeBinding>,
    pub ees: Vec<String>,
}

impl Bindings {
    /// Nodes of `dag` in id order; entity kinds are looked up in `ees`.
    pub fn from_dag(dag: &TaskDag, ees: &[(String, EeKind)]) -> Self {
        let nodes = dag
            .nodes
            .iter()
            .map(|(id, seed)| NodeBinding {
                id: id.clone(),
                kind: seed
                    .assigned_ee
                    .as_ref()
                    .and_then(|ee| ees.iter().find(|(e, _)| e == ee).map(|(_, k)| *k)),
            })
            .collect();
        Bindings {
            nodes,
            ees: ees.iter().map(|(e, _)| e.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundProperty {
    /// Entry name with the binding appended, e.g. `HP4[b]`.
    pub name: String,
    pub entry: &'static PropertyEntry,
    pub binding: Option<String>,
    pub formula: Formula,
}

fn ground(
    entry: &'static PropertyEntry,
    formula: Formula,
    binding: Option<String>,
) -> GroundProperty {
    let name = match &binding {
        Some(b) => format!("{}[{b}]", entry.name),
        None => entry.name.to_string(),
    };
    GroundProperty {
        name,
        entry,
        binding,
        formula,
    }
}

fn expand_all(template: &Formula, nodes: &[NodeBinding]) -> Formula {
    template.map_atoms(&|a: &Atom| {
        if !a.args.iter().any(|x| x == "$all") {
            return Formula::Atom(a.clone());
        }
        let conj = nodes
            .iter()
            .map(|n| Formula::Atom(a.clone()).substitute("$all", &n.id));
        conj.reduce(|l, r| Formula::And(Box::new(l), Box::new(r)))
            .unwrap_or(Formula::True)
    })
}

/// One ground formula per binding; global entries pass through unchanged.
pub fn instantiate(entry: &'static PropertyEntry, bindings: &Bindings) -> Vec<GroundProperty> {
    let template = entry.formula();
    let per_node = |filter: &dyn Fn(&NodeBinding) -> bool| {
        bindings
            .nodes
            .iter()
            .filter(|n| filter(n))
            .map(|n| ground(entry, template.substitute("$v", &n.id), Some(n.id.clone())))
            .collect()
    };
    match entry.binding {
        Binding::Global => vec![ground(entry, template, None)],
        Binding::PerNode => per_node(&|_| true),
        Binding::PerAgentNode => per_node(&|n| n.kind == Some(EeKind::Agent)),
        Binding::PerToolNode => per_node(&|n| n.kind == Some(EeKind::Tool)),
        Binding::PerEe => bindings
            .ees
            .iter()
            .map(|e| ground(entry, template.substitute("$ee", e), Some(e.clone())))
            .collect(),
        Binding::AllNodes => vec![ground(entry, expand_all(&template, &bindings.nodes), None)],
    }
}
