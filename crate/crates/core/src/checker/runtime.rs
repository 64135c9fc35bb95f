//! Catalog properties monitored over execution traces.
//!
//! Each trace record is one monitor step. The atoms true at a step are
//! derived from everything seen so far plus the record itself. Properties
//! are grounded lazily: per-node instances once the DAG is known,
//! per-entity instances when an entity is first registered or invoked.
//! Late instances replay the earlier steps.

use std::collections::{BTreeMap, BTreeSet};

use super::monitor::Monitor;
use super::Outcome;
use crate::lifecycle::SubTaskState;
use crate::orchestration::{EeKind, ResponseStatus};
use crate::tlogic::catalog::Binding;
use crate::tlogic::{
    instantiate, lookup, Atom, Bindings, Formula, Logic, NodeBinding, Predicate, ProjectionError,
    PropertyEntry,
};
use crate::trace::{EventKind, TraceEvent};

#[derive(Debug, Clone)]
pub struct RuntimeReport {
    /// Ground name, e.g. `HP5[fetch]`.
    pub name: String,
    pub entry: &'static PropertyEntry,
    /// The variant monitored in place of a non-linear entry.
    pub via: Option<&'static str>,
    /// The linear-time formula actually monitored.
    pub formula: Option<Formula>,
    /// Existential entries are only witnessed: seen means Satisfied, unseen
    /// means Inconclusive.
    pub witness: bool,
    pub outcome: Outcome,
    /// Step that decided the outcome; equal to the trace length when the
    /// end of the trace decided it.
    pub decided_at: Option<usize>,
    pub finalized: bool,
    pub skipped: Option<String>,
    /// The deciding record, rendered.
    pub event: Option<String>,
}

#[derive(Debug, Clone, Default)]
struct NodeView {
    deps: BTreeSet<String>,
    needs_external: bool,
    retry_limit: u32,
    retry_count: u32,
    fallbacks_left: u32,
    state: Option<SubTaskState>,
    previous: Option<SubTaskState>,
    invoked: bool,
    returned: bool,
}

/// What the trace has established so far.
#[derive(Debug, Clone, Default)]
struct RuntimeState {
    seen: BTreeSet<Predicate>,
    status: Option<ResponseStatus>,
    nodes: BTreeMap<String, NodeView>,
    vm_ok: BTreeMap<String, bool>,
    kinds: BTreeMap<String, EeKind>,
}

impl RuntimeState {
    fn apply(&mut self, kind: &EventKind) {
        match kind {
            EventKind::Registered { ee, ee_kind, vm_ok } => {
                self.vm_ok.insert(ee.clone(), *vm_ok);
                self.kinds.insert(ee.clone(), *ee_kind);
            }
            EventKind::ReqReceived { .. } => {
                self.seen.insert(Predicate::ReqReceived);
            }
            EventKind::IntentResolved { .. } => {
                self.seen.insert(Predicate::IntentResolved);
            }
            EventKind::ClarifyIntent { .. } => {
                self.seen.insert(Predicate::ClarifyIntent);
            }
            EventKind::Discover { .. } => {
                self.seen.insert(Predicate::Discovered);
            }
            EventKind::DagBuilt { nodes } => {
                self.seen.insert(Predicate::DagBuilt);
                for n in nodes {
                    let view = NodeView {
                        deps: n.deps.clone(),
                        needs_external: n.needs_external,
                        retry_limit: n.retry_limit,
                        fallbacks_left: n.fallbacks.len() as u32,
                        state: Some(SubTaskState::Created),
                        ..NodeView::default()
                    };
                    self.nodes.insert(n.id.clone(), view);
                }
            }
            EventKind::Transition {
                node,
                to,
                previous,
                retry_count,
                fallbacks_left,
                ..
            } => {
                if let Some(v) = self.nodes.get_mut(node) {
                    v.state = Some(*to);
                    v.previous = *previous;
                    v.retry_count = *retry_count;
                    v.fallbacks_left = *fallbacks_left;
                }
            }
            EventKind::Invoke {
                node, ee, vm_ok, ..
            } => {
                self.vm_ok.entry(ee.clone()).or_insert(*vm_ok);
                if let Some(v) = self.nodes.get_mut(node) {
                    v.invoked = true;
                }
            }
            EventKind::ResultReturned { node, .. } => {
                if let Some(v) = self.nodes.get_mut(node) {
                    v.returned = true;
                }
            }
            EventKind::Aggregated { .. } => {
                self.seen.insert(Predicate::Aggregated);
            }
            EventKind::RespSent { status } => {
                self.seen.insert(Predicate::RespSent);
                self.status = Some(*status);
            }
            EventKind::Delegate { .. } | EventKind::Rejected { .. } | EventKind::Pending { .. } => {
            }
        }
    }

    /// Atoms true at the step of `kind`, which must already be applied.
    fn snapshot(&self, kind: &EventKind) -> BTreeSet<Atom> {
        let mut s: BTreeSet<Atom> = self.seen.iter().map(|p| Atom::plain(*p)).collect();
        if let Some(status) = self.status {
            s.insert(Atom::new(Predicate::RespSent, &[status.name()]));
        }
        for (ee, ok) in &self.vm_ok {
            if *ok {
                s.insert(Atom::new(Predicate::VmOk, &[ee]));
            }
        }
        for (id, v) in &self.nodes {
            s.insert(Atom::of_node(Predicate::InDag, id));
            if let Some(state) = v.state {
                s.insert(Atom::state_is(id, state));
            }
            if let Some(p) = v.previous {
                s.insert(Atom::previous_state_is(id, p));
            }
            let completed = |d: &String| {
                self.nodes.get(d).and_then(|n| n.state) == Some(SubTaskState::Completed)
            };
            if v.deps.iter().all(completed) {
                s.insert(Atom::of_node(Predicate::DependenciesSatisfied, id));
            }
            if v.fallbacks_left > 0 {
                s.insert(Atom::of_node(Predicate::HasFallbacks, id));
            }
            if v.retry_count < v.retry_limit {
                s.insert(Atom::of_node(Predicate::RetryPolicyPermits, id));
            }
            if v.needs_external {
                s.insert(Atom::of_node(Predicate::ExternalEntityNeeded, id));
            }
            if v.invoked {
                s.insert(Atom::of_node(Predicate::Invoked, id));
            }
            if v.returned {
                s.insert(Atom::of_node(Predicate::ResultReturned, id));
            }
        }
        if let EventKind::Invoke { node, ee, .. } = kind {
            s.insert(Atom::plain(Predicate::Invoked));
            s.insert(Atom::new(Predicate::InvokedEe, &[ee]));
            if self.nodes.contains_key(node) {
                s.insert(Atom::plain(Predicate::InDag));
            }
        }
        s
    }
}

/// How an entry is checked on a trace.
enum Plan {
    Monitor {
        entry: &'static PropertyEntry,
        via: Option<&'static str>,
        witness: bool,
    },
    Skip(String),
}

fn plan_for(entry: &'static PropertyEntry) -> Plan {
    let plain = Plan::Monitor {
        entry,
        via: None,
        witness: false,
    };
    if entry.logic() == Logic::Ltl {
        return plain;
    }
    match entry.formula().ltl_projection() {
        Ok(_) => plain,
        Err(ProjectionError::NotLinearizable { witness: Some(_) }) => Plan::Monitor {
            entry,
            via: None,
            witness: true,
        },
        Err(_) => match entry.replaced_by.map(lookup) {
            Some(Ok(variant)) if variant.formula().ltl_projection().is_ok() => Plan::Monitor {
                entry: variant,
                via: Some(variant.name),
                witness: false,
            },
            _ => Plan::Skip("no linear-time reading".into()),
        },
    }
}

/// Linear-time formula monitored for one ground instance.
fn runtime_formula(formula: &Formula, witness: bool) -> Formula {
    match formula.ltl_projection() {
        Ok(f) => f,
        Err(ProjectionError::NotLinearizable { witness: Some(w) }) if witness => {
            Formula::F(Box::new(w))
        }
        Err(_) => formula.clone(),
    }
}

struct Instance {
    order: (usize, usize),
    name: String,
    entry: &'static PropertyEntry,
    via: Option<&'static str>,
    witness: bool,
    monitor: Monitor,
}

/// Incremental monitoring of a growing trace.
pub struct TraceMonitor {
    entries: Vec<&'static PropertyEntry>,
    state: RuntimeState,
    history: Vec<BTreeSet<Atom>>,
    events: Vec<String>,
    instances: Vec<Instance>,
    skipped: Vec<RuntimeReport>,
    known_ees: BTreeSet<String>,
    dag_seen: bool,
}

impl TraceMonitor {
    pub fn new(entries: &[&'static PropertyEntry]) -> Self {
        let mut m = TraceMonitor {
            entries: entries.to_vec(),
            state: RuntimeState::default(),
            history: Vec::new(),
            events: Vec::new(),
            instances: Vec::new(),
            skipped: Vec::new(),
            known_ees: BTreeSet::new(),
            dag_seen: false,
        };
        m.ground(|b| b == Binding::Global, &Bindings::default());
        m
    }

    /// Creates the instances of every entry whose binding passes `which`.
    fn ground(&mut self, which: impl Fn(Binding) -> bool, bindings: &Bindings) {
        for (i, &original) in self.entries.iter().enumerate() {
            if !which(original.binding) {
                continue;
            }
            let (entry, via, witness) = match plan_for(original) {
                Plan::Monitor {
                    entry,
                    via,
                    witness,
                } => (entry, via, witness),
                Plan::Skip(reason) => {
                    if self.history.is_empty() && original.binding == Binding::Global {
                        self.skipped.push(skipped_report(original, reason));
                    }
                    continue;
                }
            };
            for g in instantiate(entry, bindings) {
                let name = match &g.binding {
                    Some(b) => format!("{}[{b}]", original.name),
                    None => original.name.to_string(),
                };
                let formula = runtime_formula(&g.formula, witness);
                let mut monitor = Monitor::new(&formula).expect("projections are linear-time");
                for snapshot in &self.history {
                    monitor.step(snapshot);
                }
                let order = (i, self.instances.len());
                self.instances.push(Instance {
                    order,
                    name,
                    entry: original,
                    via,
                    witness,
                    monitor,
                });
            }
        }
    }

    fn node_bindings(&self, nodes: &[crate::trace::DagNodeInfo]) -> Bindings {
        Bindings {
            nodes: nodes
                .iter()
                .map(|n| NodeBinding {
                    id: n.id.clone(),
                    kind: n.ee.as_ref().and_then(|e| self.state.kinds.get(e)).copied(),
                })
                .collect(),
            ees: Vec::new(),
        }
    }

    pub fn observe(&mut self, event: &TraceEvent) {
        self.state.apply(&event.kind);
        match &event.kind {
            EventKind::DagBuilt { nodes } if !self.dag_seen => {
                self.dag_seen = true;
                let bindings = self.node_bindings(nodes);
                self.ground(
                    |b| !matches!(b, Binding::Global | Binding::PerEe),
                    &bindings,
                );
            }
            EventKind::Registered { ee, .. } | EventKind::Invoke { ee, .. }
                if !self.known_ees.contains(ee) =>
            {
                self.known_ees.insert(ee.clone());
                let bindings = Bindings {
                    nodes: Vec::new(),
                    ees: vec![ee.clone()],
                };
                self.ground(|b| b == Binding::PerEe, &bindings);
            }
            _ => {}
        }
        let snapshot = self.state.snapshot(&event.kind);
        for inst in &mut self.instances {
            inst.monitor.step(&snapshot);
        }
        self.history.push(snapshot);
        self.events.push(event.to_string());
    }

    /// Current verdicts, before finalization.
    pub fn verdicts(&self) -> Vec<(String, Outcome)> {
        self.instances
            .iter()
            .map(|i| (i.name.clone(), i.monitor.verdict()))
            .collect()
    }

    pub fn steps(&self) -> usize {
        self.history.len()
    }

    /// Ends the trace and reports every instance, in entry order.
    pub fn finish(mut self) -> Vec<RuntimeReport> {
        self.instances.sort_by_key(|i| i.order);
        let mut reports: Vec<(usize, RuntimeReport)> = Vec::new();
        for mut inst in self.instances {
            let verdict = inst.monitor.finalize();
            let mut outcome = verdict.outcome;
            if inst.witness && outcome == Outcome::Violated {
                outcome = Outcome::Inconclusive;
            }
            let decided_at = inst.monitor.decided_at();
            let event = decided_at.map(|i| {
                self.events
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| "end of trace".to_string())
            });
            reports.push((
                inst.order.0,
                RuntimeReport {
                    name: inst.name,
                    entry: inst.entry,
                    via: inst.via,
                    formula: Some(inst.monitor.formula().clone()),
                    witness: inst.witness,
                    outcome,
                    decided_at,
                    finalized: inst.monitor.decided_by_end(),
                    skipped: None,
                    event,
                },
            ));
        }
        for s in self.skipped {
            let pos = self
                .entries
                .iter()
                .position(|e| e.name == s.entry.name)
                .unwrap_or(usize::MAX);
            reports.push((pos, s));
        }
        reports.sort_by_key(|(pos, _)| *pos);
        reports.into_iter().map(|(_, r)| r).collect()
    }
}

fn skipped_report(entry: &'static PropertyEntry, reason: String) -> RuntimeReport {
    RuntimeReport {
        name: entry.name.to_string(),
        entry,
        via: None,
        formula: None,
        witness: false,
        outcome: Outcome::Inconclusive,
        decided_at: None,
        finalized: false,
        skipped: Some(reason),
        event: None,
    }
}

/// Monitors a complete trace.
pub fn monitor_trace(
    events: &[TraceEvent],
    entries: &[&'static PropertyEntry],
) -> Vec<RuntimeReport> {
    let mut m = TraceMonitor::new(entries);
    for e in events {
        m.observe(e);
    }
    m.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestration::run_task;
    use crate::scenarios::builtin;
    use crate::tlogic::catalog;

    fn reports(scenario: &str) -> Vec<RuntimeReport> {
        let s = builtin(scenario).unwrap();
        let out = run_task(&s.request, &s);
        let entries: Vec<_> = catalog().iter().collect();
        monitor_trace(&out.trace, &entries)
    }

    fn find<'a>(r: &'a [RuntimeReport], name: &str) -> &'a RuntimeReport {
        r.iter()
            .find(|x| x.name == name)
            .unwrap_or_else(|| panic!("no report {name}"))
    }

    #[test]
    fn nominal_has_no_violations() {
        let r = reports("nominal");
        let bad: Vec<_> = r
            .iter()
            .filter(|x| x.outcome == Outcome::Violated)
            .map(|x| x.name.clone())
            .collect();
        assert!(bad.is_empty(), "{bad:?}");
        assert_eq!(find(&r, "HP12").via, Some("HP12'"));
        assert!(find(&r, "HP16").witness);
        assert_eq!(find(&r, "HP16").outcome, Outcome::Satisfied);
    }

    #[test]
    fn live_and_replayed_monitoring_agree() {
        let s = builtin("retry_exhaustion").unwrap();
        let entries: Vec<_> = catalog().iter().collect();
        let mut live = TraceMonitor::new(&entries);
        let out = crate::orchestration::run_task_observed(&s.request, &s, &mut |e| live.observe(e));
        let key = |r: Vec<RuntimeReport>| {
            r.into_iter()
                .map(|x| (x.name, x.outcome, x.decided_at))
                .collect::<Vec<_>>()
        };
        assert_eq!(key(live.finish()), key(monitor_trace(&out.trace, &entries)));
    }

    #[test]
    fn per_entity_instances_cover_invoked_only_entities() {
        let r = reports("privilege_escalation");
        let hp9 = find(&r, "HP9[vaultTool]");
        assert_eq!(hp9.outcome, Outcome::Violated);
        assert!(hp9.event.as_deref().unwrap().contains("Invoke"));
    }
}
