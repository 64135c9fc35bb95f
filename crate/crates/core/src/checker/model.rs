//! Kripke structures for a host agent executing one DAG.
//!
//! A global state is the orchestrator phase plus every sub-task record and
//! two history bits per node (invoked, result returned). Successors are the
//! moves the kernel's policy allows: one node moves per step, recovery of a
//! failed node runs before anything else, and the environment may answer
//! with success or failure, or stay silent.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use super::kripke::{KripkeBuilder, KripkeStructure};
use crate::lifecycle::{
    transition_with, FsmConfig, GuardSnapshot, LifecycleEvent, SubTaskConfig, SubTaskRecord,
    SubTaskState,
};
use crate::orchestration::comm::validate_ee;
use crate::orchestration::kernel::{build_registry, plan_scenario, PlanOutcome};
use crate::orchestration::{EeKind, Enforcement, ResponseStatus, SessionState};
use crate::scenarios::Scenario;
use crate::tlogic::{Atom, Bindings, NodeBinding, Predicate};

/// Default bound on reachable states; `AKV_STATE_CAP` overrides it.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

pub fn state_cap_from_env() -> usize {
    std::env::var("AKV_STATE_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_STATE_CAP)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("state cap {cap} exceeded ({reached} states reached)")]
    StateCapExceeded { cap: usize, reached: usize },
    #[error("scenario does not plan a DAG: {0}")]
    NoPlan(String),
    #[error("unknown model preset `{0}`")]
    UnknownPreset(String),
    #[error("node `{node}` depends on unknown node `{dep}`")]
    UnknownDependency { node: String, dep: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelNode {
    pub id: String,
    pub deps: BTreeSet<String>,
    pub needs_external: bool,
    pub ee: Option<String>,
    pub retry_limit: u32,
    pub fallbacks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelEe {
    pub id: String,
    pub kind: EeKind,
    pub vm_ok: bool,
}

/// What the model explores. `failures` lets any external execution fail,
/// `silent` lets a dispatched invocation stall, `cancel` lets the user
/// cancel any cancelable node, `clarify` lets intent resolution ask back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub name: String,
    pub nodes: Vec<ModelNode>,
    pub ees: Vec<ModelEe>,
    pub failures: bool,
    pub silent: bool,
    pub cancel: bool,
    pub clarify: bool,
    pub fsm: FsmConfig,
    pub enforcement: Enforcement,
}

fn ee(id: &str, kind: EeKind) -> ModelEe {
    ModelEe {
        id: id.into(),
        kind,
        vm_ok: true,
    }
}

fn first_node() -> ModelNode {
    ModelNode {
        id: "t1".into(),
        deps: BTreeSet::new(),
        needs_external: true,
        ee: Some("agentEE".into()),
        retry_limit: 1,
        fallbacks: vec!["backupEE".into()],
    }
}

impl ModelConfig {
    pub const PRESETS: [&'static str; 2] = ["single", "chain2"];

    /// `single`: one external node with a retry and a fallback.
    /// `chain2`: the same node followed by a dependent tool node without
    /// recovery.
    pub fn preset(name: &str) -> Result<ModelConfig, ModelError> {
        let base = ModelConfig {
            name: name.into(),
            nodes: vec![first_node()],
            ees: vec![ee("agentEE", EeKind::Agent), ee("backupEE", EeKind::Agent)],
            failures: true,
            silent: true,
            cancel: false,
            clarify: true,
            fsm: FsmConfig::default(),
            enforcement: Enforcement::default(),
        };
        match name {
            "single" => Ok(base),
            "chain2" => {
                let mut c = base;
                c.clarify = false;
                c.nodes.push(ModelNode {
                    id: "t2".into(),
                    deps: ["t1".to_string()].into(),
                    needs_external: true,
                    ee: Some("toolEE".into()),
                    retry_limit: 0,
                    fallbacks: vec![],
                });
                c.ees.push(ee("toolEE", EeKind::Tool));
                Ok(c)
            }
            other => Err(ModelError::UnknownPreset(other.to_string())),
        }
    }

    /// The DAG a scenario's request plans to, with every registered entity.
    /// Executions may fail or stall; cancellation is explored when the
    /// scenario schedules any.
    pub fn from_scenario(scenario: &Scenario) -> Result<ModelConfig, ModelError> {
        let (mut registry, _) = build_registry(scenario);
        let mut session = SessionState::new();
        let dag = match plan_scenario(&scenario.request, scenario, &mut registry, &mut session) {
            PlanOutcome::Planned { dag, .. } => dag,
            PlanOutcome::Clarify(hint) => {
                return Err(ModelError::NoPlan(format!("clarification needed: {hint}")))
            }
            PlanOutcome::InputError(reason) | PlanOutcome::PlanFailed { reason, .. } => {
                return Err(ModelError::NoPlan(reason))
            }
        };
        let nodes = dag
            .nodes
            .iter()
            .map(|(id, seed)| ModelNode {
                id: id.clone(),
                deps: seed.dependencies.clone(),
                needs_external: seed.needs_external,
                ee: seed.assigned_ee.clone(),
                retry_limit: seed.retry_limit,
                fallbacks: seed.fallback_queue.clone(),
            })
            .collect();
        let ees = scenario
            .profiles
            .iter()
            .filter(|p| registry.get(&p.ee_id).is_some())
            .map(|p| ModelEe {
                id: p.ee_id.clone(),
                kind: p.kind,
                vm_ok: validate_ee(p, &scenario.validation_policy),
            })
            .collect();
        Ok(ModelConfig {
            name: scenario.name.clone(),
            nodes,
            ees,
            failures: true,
            silent: true,
            cancel: !scenario.cancel_schedule.is_empty(),
            clarify: false,
            fsm: scenario.fsm,
            enforcement: scenario.enforcement,
        })
    }

    pub fn bindings(&self) -> Bindings {
        Bindings {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeBinding {
                    id: n.id.clone(),
                    kind: n.ee.as_deref().and_then(|e| self.ee(e)).map(|e| e.kind),
                })
                .collect(),
            ees: self.ees.iter().map(|e| e.id.clone()).collect(),
        }
    }

    fn ee(&self, id: &str) -> Option<&ModelEe> {
        self.ees.iter().find(|e| e.id == id)
    }

    fn vm_ok(&self, id: &str) -> bool {
        self.ee(id).is_some_and(|e| e.vm_ok)
    }

    fn check(&self) -> Result<(), ModelError> {
        for n in &self.nodes {
            if let Some(dep) = n
                .deps
                .iter()
                .find(|d| !self.nodes.iter().any(|m| &m.id == *d))
            {
                return Err(ModelError::UnknownDependency {
                    node: n.id.clone(),
                    dep: dep.clone(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Receiving,
    Clarifying,
    Discovering,
    Planning,
    Executing,
    Aggregating,
    Responded(ResponseStatus),
}

impl Phase {
    fn rank(self) -> u8 {
        match self {
            Phase::Receiving | Phase::Clarifying => 0,
            Phase::Discovering => 1,
            Phase::Planning => 2,
            Phase::Executing => 3,
            Phase::Aggregating => 4,
            Phase::Responded(_) => 5,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Responded(s) => write!(f, "Responded({s})"),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalState {
    pub phase: Phase,
    /// In configuration order.
    pub nodes: Vec<SubTaskRecord>,
    pub invoked: Vec<bool>,
    pub returned: Vec<bool>,
}

impl fmt::Display for GlobalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.phase)?;
        if self.phase.rank() < Phase::Planning.rank() {
            return Ok(());
        }
        for (i, r) in self.nodes.iter().enumerate() {
            write!(f, " {}={}", r.id, r.state)?;
            if let Some(p) = r.previous_state {
                write!(f, "(prev {p})")?;
            }
            if r.retry_count > 0 {
                write!(f, "[retries {}]", r.retry_count)?;
            }
            if self.invoked[i] {
                f.write_str(if self.returned[i] { "+inv+ret" } else { "+inv" })?;
            }
        }
        Ok(())
    }
}

/// One step of the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Phase {
        from: Phase,
        to: Phase,
    },
    Node {
        node: String,
        event: LifecycleEvent,
        from: SubTaskState,
        to: SubTaskState,
    },
    /// The entity serving `node` has not answered yet.
    Stall {
        node: String,
    },
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Phase { from, to } => write!(f, "{from} -> {to}"),
            Move::Node {
                node,
                event,
                from,
                to,
            } => write!(f, "{node}: {from} --{event}--> {to}"),
            Move::Stall { node } => write!(f, "{node}: entity silent"),
        }
    }
}

fn is_recovering(s: SubTaskState) -> bool {
    matches!(
        s,
        SubTaskState::Failed | SubTaskState::RetryScheduled | SubTaskState::FallbackSelected
    )
}

struct Stepper<'a> {
    config: &'a ModelConfig,
}

impl Stepper<'_> {
    fn initial(&self) -> GlobalState {
        let n = self.config.nodes.len();
        GlobalState {
            phase: Phase::Receiving,
            nodes: self
                .config
                .nodes
                .iter()
                .map(|m| {
                    SubTaskRecord::new(
                        m.id.clone(),
                        m.deps.clone(),
                        SubTaskConfig {
                            retry_limit: m.retry_limit,
                            fallback_queue: m.fallbacks.clone(),
                            needs_external: m.needs_external,
                            assigned_ee: m.ee.clone(),
                        },
                    )
                })
                .collect(),
            invoked: vec![false; n],
            returned: vec![false; n],
        }
    }

    fn state_of(&self, g: &GlobalState, id: &str) -> Option<SubTaskState> {
        g.nodes.iter().find(|r| r.id == id).map(|r| r.state)
    }

    fn deps_completed(&self, g: &GlobalState, r: &SubTaskRecord) -> bool {
        r.dependencies
            .iter()
            .all(|d| self.state_of(g, d) == Some(SubTaskState::Completed))
    }

    fn guards(&self, g: &GlobalState, r: &SubTaskRecord, cancel_allowed: bool) -> GuardSnapshot {
        let satisfied = self.deps_completed(g, r) || !self.config.enforcement.dependency_gate;
        let failed = r.dependencies.iter().any(|d| {
            matches!(
                self.state_of(g, d),
                Some(SubTaskState::Error | SubTaskState::Canceled)
            )
        });
        GuardSnapshot::for_record(r, satisfied, failed, cancel_allowed)
    }

    fn fire(
        &self,
        g: &GlobalState,
        i: usize,
        event: LifecycleEvent,
        cancel_allowed: bool,
    ) -> Option<(Move, GlobalState)> {
        let r = &g.nodes[i];
        let guards = self.guards(g, r, cancel_allowed);
        let next = transition_with(r, event, &guards, &self.config.fsm).ok()?;
        let mut out = g.clone();
        let mv = Move::Node {
            node: r.id.clone(),
            event,
            from: r.state,
            to: next.state,
        };
        match (r.state, next.state) {
            (_, SubTaskState::Dispatching) => out.invoked[i] = true,
            (SubTaskState::InProgress, SubTaskState::Completed | SubTaskState::Failed)
                if r.needs_external =>
            {
                out.returned[i] = true
            }
            _ => {}
        }
        out.nodes[i] = next;
        Some((mv, out))
    }

    /// The kernel's dispatch: internal start, or the invocation gates
    /// followed by DispatchRequested; a refused invocation cancels the node.
    fn dispatch(&self, g: &GlobalState, i: usize) -> Option<(Move, GlobalState)> {
        let r = &g.nodes[i];
        if !r.needs_external {
            return self.fire(g, i, LifecycleEvent::InternalStart, false);
        }
        let ee = if r.state == SubTaskState::FallbackSelected {
            r.fallback_queue.first()
        } else {
            r.assigned_ee.as_ref()
        };
        let refused = match ee {
            None => true,
            Some(ee) => {
                let e = &self.config.enforcement;
                self.config.ee(ee).is_none()
                    || (e.vm_gate && !self.config.vm_ok(ee))
                    || (e.dependency_gate && !self.deps_completed(g, r))
            }
        };
        if refused {
            return self.fire(g, i, LifecycleEvent::CancelRequested, true);
        }
        self.fire(g, i, LifecycleEvent::DispatchRequested, false)
    }

    fn node_moves(&self, g: &GlobalState, i: usize, out: &mut Vec<(Move, GlobalState)>) {
        use LifecycleEvent as E;
        use SubTaskState as S;
        let r = &g.nodes[i];
        let guards = self.guards(g, r, false);
        let fsm = &self.config.fsm;
        let policy = match r.state {
            S::Created if fsm.skip_ready_gate && guards.dependencies_satisfied => {
                self.dispatch(g, i)
            }
            S::Created if guards.dependencies_satisfied => self.fire(g, i, E::DepsSatisfied, false),
            S::Created => self.fire(g, i, E::DepsPending, false),
            S::AwaitingDependency if guards.dependencies_satisfied => {
                self.fire(g, i, E::DepsSatisfied, false)
            }
            S::AwaitingDependency
                if guards.dependency_failed && self.config.enforcement.failure_propagation =>
            {
                self.fire(g, i, E::DependencyTerminallyFailed, false)
            }
            S::Ready | S::RetryScheduled => self.dispatch(g, i),
            S::Failed if r.retry_policy_permits() => self.fire(g, i, E::RetryGranted, false),
            S::Failed if r.has_fallbacks() => self.fire(g, i, E::FallbackChosen, false),
            S::Failed => self.fire(g, i, E::RecoveryExhausted, false),
            S::FallbackSelected => {
                let head = r
                    .fallback_queue
                    .first()
                    .map(String::as_str)
                    .unwrap_or_default();
                let usable = self.config.ee(head).is_some()
                    && (!self.config.enforcement.vm_gate || self.config.vm_ok(head));
                if usable {
                    self.dispatch(g, i)
                } else {
                    self.fire(g, i, E::RecoveryExhausted, false)
                }
            }
            S::Dispatching => {
                if self.config.silent {
                    out.push((Move::Stall { node: r.id.clone() }, g.clone()));
                }
                self.fire(g, i, E::DeliveryAck, false)
            }
            S::InProgress => {
                if self.config.failures && r.needs_external {
                    out.extend(self.fire(g, i, E::ExecFailed, false));
                }
                self.fire(g, i, E::ExecSucceeded, false)
            }
            _ => None,
        };
        out.extend(policy);
        if self.config.cancel && !is_recovering(r.state) {
            out.extend(self.fire(g, i, E::CancelRequested, true));
        }
    }

    fn phase(&self, g: &GlobalState, to: Phase) -> (Move, GlobalState) {
        let mut out = g.clone();
        out.phase = to;
        (Move::Phase { from: g.phase, to }, out)
    }

    fn moves(&self, g: &GlobalState) -> Vec<(Move, GlobalState)> {
        let mut out = Vec::new();
        match g.phase {
            Phase::Receiving => {
                if self.config.clarify {
                    out.push(self.phase(g, Phase::Clarifying));
                }
                out.push(self.phase(g, Phase::Discovering));
            }
            Phase::Clarifying => out.push(self.phase(g, Phase::Receiving)),
            Phase::Discovering => out.push(self.phase(g, Phase::Planning)),
            Phase::Planning => out.push(self.phase(g, Phase::Executing)),
            Phase::Executing => {
                if g.nodes.iter().all(|r| r.state.is_terminal()) {
                    out.push(self.phase(g, Phase::Aggregating));
                } else if let Some(i) = g.nodes.iter().position(|r| is_recovering(r.state)) {
                    self.node_moves(g, i, &mut out);
                } else {
                    for i in 0..g.nodes.len() {
                        self.node_moves(g, i, &mut out);
                    }
                }
            }
            Phase::Aggregating => {
                let ok = g.nodes.iter().all(|r| r.state == SubTaskState::Completed);
                let status = if ok {
                    ResponseStatus::Success
                } else {
                    ResponseStatus::Error
                };
                out.push(self.phase(g, Phase::Responded(status)));
            }
            Phase::Responded(_) => {}
        }
        out
    }

    fn vocabulary(&self) -> Vec<Atom> {
        let mut v: Vec<Atom> = [
            Predicate::ReqReceived,
            Predicate::RespSent,
            Predicate::IntentResolved,
            Predicate::ClarifyIntent,
            Predicate::DagBuilt,
            Predicate::Discovered,
            Predicate::Invoked,
            Predicate::Aggregated,
            Predicate::InDag,
        ]
        .into_iter()
        .map(Atom::plain)
        .collect();
        for status in ResponseStatus::ALL {
            v.push(Atom::new(Predicate::RespSent, &[status.name()]));
        }
        for n in &self.config.nodes {
            for s in SubTaskState::ALL {
                v.push(Atom::state_is(&n.id, s));
                v.push(Atom::previous_state_is(&n.id, s));
            }
            for p in [
                Predicate::Invoked,
                Predicate::ResultReturned,
                Predicate::InDag,
                Predicate::DependenciesSatisfied,
                Predicate::HasFallbacks,
                Predicate::RetryPolicyPermits,
                Predicate::ExternalEntityNeeded,
            ] {
                v.push(Atom::of_node(p, &n.id));
            }
        }
        for e in &self.config.ees {
            v.push(Atom::new(Predicate::InvokedEe, &[&e.id]));
            v.push(Atom::new(Predicate::VmOk, &[&e.id]));
        }
        v
    }

    fn labels(&self, g: &GlobalState) -> Vec<Atom> {
        let mut l = vec![Atom::plain(Predicate::ReqReceived)];
        let rank = g.phase.rank();
        if g.phase == Phase::Clarifying {
            l.push(Atom::plain(Predicate::ClarifyIntent));
        }
        if rank >= Phase::Discovering.rank() {
            l.push(Atom::plain(Predicate::IntentResolved));
            l.push(Atom::plain(Predicate::Discovered));
        }
        if rank >= Phase::Aggregating.rank() {
            l.push(Atom::plain(Predicate::Aggregated));
        }
        if let Phase::Responded(status) = g.phase {
            l.push(Atom::plain(Predicate::RespSent));
            l.push(Atom::new(Predicate::RespSent, &[status.name()]));
        }
        for e in self.config.ees.iter().filter(|e| e.vm_ok) {
            l.push(Atom::new(Predicate::VmOk, &[&e.id]));
        }
        for (i, r) in g.nodes.iter().enumerate() {
            if g.invoked[i] {
                l.push(Atom::of_node(Predicate::Invoked, &r.id));
            }
            if g.returned[i] {
                l.push(Atom::of_node(Predicate::ResultReturned, &r.id));
            }
        }
        if rank < Phase::Planning.rank() {
            return l;
        }
        l.push(Atom::plain(Predicate::DagBuilt));
        for r in &g.nodes {
            l.push(Atom::of_node(Predicate::InDag, &r.id));
            l.push(Atom::state_is(&r.id, r.state));
            if let Some(p) = r.previous_state {
                l.push(Atom::previous_state_is(&r.id, p));
            }
            if self.deps_completed(g, r) {
                l.push(Atom::of_node(Predicate::DependenciesSatisfied, &r.id));
            }
            if r.has_fallbacks() {
                l.push(Atom::of_node(Predicate::HasFallbacks, &r.id));
            }
            if r.retry_policy_permits() {
                l.push(Atom::of_node(Predicate::RetryPolicyPermits, &r.id));
            }
            if r.needs_external {
                l.push(Atom::of_node(Predicate::ExternalEntityNeeded, &r.id));
            }
            if r.state == SubTaskState::Dispatching {
                l.push(Atom::plain(Predicate::Invoked));
                l.push(Atom::plain(Predicate::InDag));
                if let Some(ee) = &r.assigned_ee {
                    l.push(Atom::new(Predicate::InvokedEe, &[ee]));
                }
            }
        }
        l
    }
}

/// A reachable-state Kripke structure together with the global state each
/// index stands for.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub kripke: KripkeStructure,
    pub states: Vec<GlobalState>,
}

impl Model {
    /// The move leading from state `from` to state `to`, if they are linked.
    pub fn step(&self, from: usize, to: usize) -> Option<Move> {
        let stepper = Stepper {
            config: &self.config,
        };
        let target = &self.states[to];
        stepper
            .moves(&self.states[from])
            .into_iter()
            .find(|(_, g)| g == target)
            .map(|(m, _)| m)
    }

    /// Distinct lifecycle states node `id` reaches anywhere in the model.
    pub fn lifecycle_states(&self, id: &str) -> BTreeSet<SubTaskState> {
        self.states
            .iter()
            .filter(|g| g.phase.rank() >= Phase::Planning.rank())
            .filter_map(|g| g.nodes.iter().find(|r| r.id == id).map(|r| r.state))
            .collect()
    }
}

/// Explores every state reachable from the initial one, up to
/// [`state_cap_from_env`] states.
pub fn build_kripke(config: &ModelConfig) -> Result<Model, ModelError> {
    build_kripke_capped(config, state_cap_from_env())
}

pub fn build_kripke_capped(config: &ModelConfig, cap: usize) -> Result<Model, ModelError> {
    config.check()?;
    let stepper = Stepper { config };
    let mut index: HashMap<GlobalState, usize> = HashMap::new();
    let mut states = Vec::new();
    let mut edges = Vec::new();
    let init = stepper.initial();
    index.insert(init.clone(), 0);
    states.push(init);
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        let succ = stepper.moves(&states[s]);
        for (_, g) in succ {
            let t = match index.get(&g) {
                Some(&t) => t,
                None => {
                    if states.len() >= cap {
                        return Err(ModelError::StateCapExceeded {
                            cap,
                            reached: states.len() + 1,
                        });
                    }
                    let t = states.len();
                    index.insert(g.clone(), t);
                    states.push(g);
                    queue.push_back(t);
                    t
                }
            };
            edges.push((s, t));
        }
    }

    let mut b = KripkeBuilder::new();
    for a in stepper.vocabulary() {
        b.declare(a);
    }
    for (i, g) in states.iter().enumerate() {
        b.add_state(format!("s{i}"), stepper.labels(g));
    }
    for (s, t) in edges {
        b.add_edge(s, t);
    }
    b.set_initial(0);
    b.add_fairness((0..states.len()).filter(|&s| states[s].phase.rank() > 0));
    for i in 0..config.nodes.len() {
        b.add_fairness(
            (0..states.len()).filter(|&s| states[s].nodes[i].state != SubTaskState::Dispatching),
        );
    }
    let kripke = b.build().expect("indices come from exploration");
    Ok(Model {
        config: config.clone(),
        kripke,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{check_ctl, Outcome};
    use crate::tlogic::parse;
    use SubTaskState as S;

    fn lone(external: bool, failures: bool) -> ModelConfig {
        let mut c = ModelConfig::preset("single").unwrap();
        c.clarify = false;
        c.silent = false;
        c.failures = failures;
        c.nodes[0].needs_external = external;
        c.nodes[0].retry_limit = 0;
        c.nodes[0].fallbacks.clear();
        c
    }

    #[test]
    fn internal_node_without_failures_walks_the_happy_path() {
        let m = build_kripke(&lone(false, false)).unwrap();
        assert_eq!(
            m.lifecycle_states("t1"),
            [S::Created, S::Ready, S::InProgress, S::Completed].into()
        );
    }

    #[test]
    fn failure_branch_adds_failed_and_error() {
        let m = build_kripke(&lone(true, true)).unwrap();
        assert_eq!(
            m.lifecycle_states("t1"),
            [
                S::Created,
                S::Ready,
                S::Dispatching,
                S::InProgress,
                S::Completed,
                S::Failed,
                S::Error
            ]
            .into()
        );
        let m = build_kripke(&lone(false, true)).unwrap();
        assert!(
            !m.lifecycle_states("t1").contains(&S::Failed),
            "internal work does not fail"
        );
    }

    #[test]
    fn successor_waits_for_its_predecessor() {
        let m = build_kripke(&ModelConfig::preset("chain2").unwrap()).unwrap();
        for g in &m.states {
            if g.nodes[0].state != S::Completed {
                assert_ne!(g.nodes[1].state, S::InProgress, "{g}");
            }
        }
    }

    #[test]
    fn cap_overflow_is_reported() {
        let mut c = ModelConfig::preset("chain2").unwrap();
        c.cancel = true;
        c.nodes.push(ModelNode {
            id: "t3".into(),
            deps: BTreeSet::new(),
            ..c.nodes[0].clone()
        });
        assert!(matches!(
            build_kripke_capped(&c, 10),
            Err(ModelError::StateCapExceeded {
                cap: 10,
                reached: 11
            })
        ));
    }

    #[test]
    fn structure_is_total_and_labels_are_in_vocabulary() {
        let m = build_kripke(&ModelConfig::preset("chain2").unwrap()).unwrap();
        let k = &m.kripke;
        for s in 0..k.len() {
            assert!(!k.successors(s).is_empty());
            assert!(k.labels(s).all(|a| k.knows(a) && a.validate().is_ok()));
        }
    }

    #[test]
    fn moves_explain_edges() {
        let m = build_kripke(&ModelConfig::preset("single").unwrap()).unwrap();
        let k = &m.kripke;
        let retry_edge = (0..k.len()).find_map(|s| {
            k.successors(s).iter().find_map(|&t| match m.step(s, t) {
                Some(Move::Node {
                    from: S::RetryScheduled,
                    to: S::Dispatching,
                    ..
                }) => Some((s, t)),
                _ => None,
            })
        });
        let (s, t) = retry_edge.expect("retry re-dispatch is reachable");
        assert_eq!(
            m.step(s, t).unwrap().to_string(),
            "t1: RETRY_SCHEDULED --DispatchRequested--> DISPATCHING"
        );
    }

    #[test]
    fn fairness_discharges_silence() {
        let m = build_kripke(&ModelConfig::preset("single").unwrap()).unwrap();
        let f = parse("AG(state_is(t1, DISPATCHING) -> AF(state_is(t1, IN_PROGRESS)))").unwrap();
        assert_eq!(
            check_ctl(&m.kripke, &f, true).unwrap().outcome,
            Outcome::Holds
        );
        assert_eq!(
            check_ctl(&m.kripke, &f, false).unwrap().outcome,
            Outcome::Fails
        );
    }
}
