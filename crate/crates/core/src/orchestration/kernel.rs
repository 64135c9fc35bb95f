//! The deterministic orchestration loop: resolve, discover, plan, execute
//! against the simulated environment, aggregate, respond.
//!
//! Every observable step is appended to the trace. Recovery of a failed
//! sub-task happens immediately after the failure, before any other node
//! moves.

use std::collections::{BTreeMap, BTreeSet};

use super::comm::{check_invocation, validate_ee, InvocationContext, InvocationPayload};
use super::dag::{aggregate, NodeOutcome, TaskDag};
use super::hac::{Planner, Resolution, TemplatePlanner};
use super::registry::Registry;
use super::{Intent, Response, ResponseStatus, SessionState};
use crate::lifecycle::{
    transition_with, GuardSnapshot, LifecycleEvent, SubTaskId, SubTaskRecord, SubTaskState,
};
use crate::scenarios::Scenario;
use crate::simnet::{Message, SimEnv, SimError, SimEvent};
use crate::trace::{DagNodeInfo, EventKind, TraceEvent};

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub response: Response,
    pub trace: Vec<TraceEvent>,
    pub records: BTreeMap<SubTaskId, SubTaskRecord>,
    pub session: SessionState,
}

/// How planning ended for a scenario's request.
#[derive(Debug, Clone)]
pub enum PlanOutcome {
    Planned {
        intent: Intent,
        discovered: Discovered,
        dag: TaskDag,
    },
    Clarify(String),
    /// The request itself was unusable.
    InputError(String),
    /// Discovery or planning failed after the intent was resolved.
    PlanFailed {
        intent: Intent,
        discovered: Discovered,
        reason: String,
    },
}

/// What the discovery step saw: the skills the plan needs and every
/// registered entity, before validation filtering.
#[derive(Debug, Clone)]
pub struct Discovered {
    pub skills: BTreeSet<String>,
    pub found: Vec<String>,
}

/// Registers the scenario's profiles, skipping rejected ones; returns the
/// registry and the rejections.
pub fn build_registry(scenario: &Scenario) -> (Registry, Vec<(String, String)>) {
    let mut registry = Registry::new(scenario.protocols.iter().cloned());
    let mut rejected = Vec::new();
    for p in &scenario.profiles {
        if let Err(e) = registry.register(p.clone()) {
            rejected.push((p.ee_id.clone(), e.to_string()));
        }
    }
    (registry, rejected)
}

/// Runs intent resolution, discovery and planning exactly as the kernel
/// does, without executing anything.
pub fn plan_scenario(
    request: &str,
    scenario: &Scenario,
    registry: &mut Registry,
    session: &mut SessionState,
) -> PlanOutcome {
    let planner = TemplatePlanner {
        templates: &scenario.intent_templates,
        plans: &scenario.plans,
        hint: &scenario.clarification_hint,
    };
    let intent = match planner.resolve(request, session) {
        Err(e) => return PlanOutcome::InputError(e.to_string()),
        Ok(Resolution::Clarification(hint)) => return PlanOutcome::Clarify(hint),
        Ok(Resolution::Intent(i)) => i,
    };
    let skills: BTreeSet<String> = scenario
        .plans
        .get(&intent.plan_template_ref)
        .map(|p| {
            p.nodes
                .iter()
                .filter(|n| !n.internal)
                .map(|n| n.skill.clone())
                .collect()
        })
        .unwrap_or_default();
    let mut discovery = registry.discover(&BTreeSet::new());
    let found = discovery
        .profiles()
        .iter()
        .map(|p| p.ee_id.clone())
        .collect();
    if scenario.enforcement.vm_gate {
        discovery = discovery.validated(&scenario.validation_policy);
    }
    let discovered = Discovered { skills, found };
    match planner.plan(&intent, &discovery) {
        Ok(dag) => PlanOutcome::Planned {
            intent,
            discovered,
            dag,
        },
        Err(e) => PlanOutcome::PlanFailed {
            intent,
            discovered,
            reason: e.to_string(),
        },
    }
}

pub fn run_task(request: &str, scenario: &Scenario) -> RunOutcome {
    run_task_observed(request, scenario, &mut |_| {})
}

/// Like [`run_task`], handing each trace record to `observer` as soon as it
/// is produced.
pub fn run_task_observed(
    request: &str,
    scenario: &Scenario,
    observer: &mut dyn FnMut(&TraceEvent),
) -> RunOutcome {
    let mut k = Kernel {
        scenario,
        trace: Vec::new(),
        observer,
        tick: 0,
        registry: Registry::default(),
        sim: SimEnv::new(scenario.behaviors.iter().cloned(), scenario.seed),
        dag: None,
        records: BTreeMap::new(),
        current: BTreeMap::new(),
        attempts: BTreeMap::new(),
        payloads: BTreeMap::new(),
        handle_nodes: BTreeMap::new(),
        next_handle: 1,
    };
    let mut session = SessionState::new();
    let response = k.run(request, &mut session);
    RunOutcome {
        response,
        trace: k.trace,
        records: k.records,
        session,
    }
}

struct Kernel<'a> {
    scenario: &'a Scenario,
    trace: Vec<TraceEvent>,
    observer: &'a mut dyn FnMut(&TraceEvent),
    tick: u64,
    registry: Registry,
    sim: SimEnv,
    dag: Option<TaskDag>,
    records: BTreeMap<SubTaskId, SubTaskRecord>,
    /// The live invocation of each node that is waiting for a result.
    current: BTreeMap<SubTaskId, u64>,
    attempts: BTreeMap<SubTaskId, u32>,
    payloads: BTreeMap<SubTaskId, String>,
    handle_nodes: BTreeMap<u64, SubTaskId>,
    next_handle: u64,
}

impl Kernel<'_> {
    fn emit(&mut self, kind: EventKind) {
        let e = TraceEvent {
            seq: self.trace.len() as u64,
            tick: self.tick,
            kind,
        };
        (self.observer)(&e);
        self.trace.push(e);
    }

    fn respond(&mut self, response: Response) -> Response {
        self.emit(EventKind::RespSent {
            status: response.status,
        });
        response
    }

    fn run(&mut self, request: &str, session: &mut SessionState) -> Response {
        let (registry, rejected) = build_registry(self.scenario);
        self.registry = registry;
        for p in &self.scenario.profiles {
            if let Some((_, reason)) = rejected.iter().find(|(e, _)| *e == p.ee_id) {
                let kind = EventKind::Rejected {
                    node: None,
                    ee: Some(p.ee_id.clone()),
                    reason: reason.clone(),
                };
                self.emit(kind);
            } else {
                let vm_ok = validate_ee(p, &self.scenario.validation_policy);
                self.emit(EventKind::Registered {
                    ee: p.ee_id.clone(),
                    ee_kind: p.kind,
                    vm_ok,
                });
            }
        }
        self.emit(EventKind::ReqReceived {
            request: request.to_string(),
        });

        let mut registry = std::mem::take(&mut self.registry);
        let outcome = plan_scenario(request, self.scenario, &mut registry, session);
        self.registry = registry;
        let (intent, discovered, dag) = match outcome {
            PlanOutcome::InputError(reason) => return self.respond(Response::error(reason)),
            PlanOutcome::Clarify(hint) => {
                self.emit(EventKind::ClarifyIntent { hint: hint.clone() });
                return self.respond(Response {
                    status: ResponseStatus::ClarificationNeeded,
                    payload: hint,
                    per_subtask: BTreeMap::new(),
                });
            }
            PlanOutcome::PlanFailed {
                intent,
                discovered,
                reason,
            } => {
                self.emit(EventKind::IntentResolved {
                    intent: intent.intent_id,
                    plan: intent.plan_template_ref,
                });
                self.emit(EventKind::Discover {
                    skills: discovered.skills,
                    found: discovered.found,
                });
                self.emit(EventKind::Rejected {
                    node: None,
                    ee: None,
                    reason: reason.clone(),
                });
                return self.respond(Response::error(reason));
            }
            PlanOutcome::Planned {
                intent,
                discovered,
                dag,
            } => (intent, discovered, dag),
        };
        self.emit(EventKind::IntentResolved {
            intent: intent.intent_id,
            plan: intent.plan_template_ref,
        });
        self.emit(EventKind::Discover {
            skills: discovered.skills,
            found: discovered.found,
        });
        let nodes = dag
            .nodes
            .iter()
            .map(|(id, seed)| DagNodeInfo {
                id: id.clone(),
                deps: seed.dependencies.clone(),
                ee: seed.assigned_ee.clone(),
                needs_external: seed.needs_external,
                retry_limit: seed.retry_limit,
                fallbacks: seed.fallback_queue.clone(),
            })
            .collect();
        self.emit(EventKind::DagBuilt { nodes });
        self.records = dag
            .nodes
            .iter()
            .map(|(id, seed)| {
                (
                    id.clone(),
                    SubTaskRecord::new(id.clone(), seed.dependencies.clone(), seed.config()),
                )
            })
            .collect();
        if let Err(e) = dag.validate() {
            self.emit(EventKind::Rejected {
                node: None,
                ee: None,
                reason: e.to_string(),
            });
            return self.respond(Response::error(e.to_string()));
        }
        self.dag = Some(dag);
        let response = self.execute();
        session.append(super::Speaker::Host, response.payload.clone());
        response
    }

    fn execute(&mut self) -> Response {
        loop {
            self.registry.set_clock(self.tick);
            self.apply_cancels();
            self.apply_injections();
            self.schedule();
            if self.records.values().all(|r| r.state.is_terminal()) {
                return self.finish();
            }
            if self.tick >= self.scenario.tick_budget {
                return self.exhaust();
            }
            let events = self.sim.tick();
            self.tick = self.sim.clock();
            for e in events {
                self.on_sim_event(e);
            }
        }
    }

    fn per_subtask(&self) -> BTreeMap<SubTaskId, SubTaskState> {
        self.records
            .iter()
            .map(|(id, r)| (id.clone(), r.state))
            .collect()
    }

    fn emit_pending(&mut self) {
        let pending: Vec<u64> = self.sim.outstanding().collect();
        for handle in pending {
            let node = self.handle_nodes.get(&handle).cloned().unwrap_or_default();
            self.emit(EventKind::Pending { handle, node });
        }
    }

    fn finish(&mut self) -> Response {
        self.emit_pending();
        let dag = self.dag.as_ref().expect("executing implies a DAG");
        let results: Vec<(SubTaskId, NodeOutcome)> = self
            .records
            .iter()
            .map(|(id, r)| {
                let payload = self.payloads.get(id).cloned().unwrap_or_default();
                (
                    id.clone(),
                    NodeOutcome {
                        state: r.state,
                        payload,
                    },
                )
            })
            .collect();
        let response = aggregate(dag, &results).unwrap_or_else(|e| Response::error(e.to_string()));
        self.emit(EventKind::Aggregated {
            payload: response.payload.clone(),
        });
        self.respond(response)
    }

    /// Budget cutoff: outstanding invocations are reported and their nodes
    /// failed. No response reaches the user.
    fn exhaust(&mut self) -> Response {
        self.emit_pending();
        let running: Vec<SubTaskId> = self
            .records
            .values()
            .filter(|r| r.state == SubTaskState::InProgress)
            .map(|r| r.id.clone())
            .collect();
        for id in &running {
            self.current.remove(id);
            self.fire(id, LifecycleEvent::ExecFailed, false);
        }
        let pending: Vec<String> = self
            .sim
            .outstanding()
            .map(|h| format!("h{h}({})", self.handle_nodes.get(&h).map_or("?", |n| n)))
            .collect();
        Response {
            status: ResponseStatus::Error,
            payload: format!(
                "tick budget of {} exhausted; pending: {}",
                self.scenario.tick_budget,
                if pending.is_empty() {
                    "none".to_string()
                } else {
                    pending.join(", ")
                }
            ),
            per_subtask: self.per_subtask(),
        }
    }

    fn guards(&self, record: &SubTaskRecord, cancel_allowed: bool) -> GuardSnapshot {
        let dep_state = |d: &SubTaskId| self.records.get(d).map(|r| r.state);
        let done = record
            .dependencies
            .iter()
            .all(|d| dep_state(d) == Some(SubTaskState::Completed));
        let failed = record.dependencies.iter().any(|d| {
            matches!(
                dep_state(d),
                Some(SubTaskState::Error | SubTaskState::Canceled)
            )
        });
        let satisfied = done || !self.scenario.enforcement.dependency_gate;
        GuardSnapshot::for_record(record, satisfied, failed, cancel_allowed)
    }

    /// Applies `event` to node `id`; records the transition or the
    /// rejection. Returns whether it was accepted.
    fn fire(&mut self, id: &str, event: LifecycleEvent, cancel_allowed: bool) -> bool {
        let record = &self.records[id];
        let guards = self.guards(record, cancel_allowed);
        match transition_with(record, event, &guards, &self.scenario.fsm) {
            Ok(next) => {
                let kind = EventKind::Transition {
                    node: id.to_string(),
                    from: record.state,
                    to: next.state,
                    event,
                    previous: next.previous_state,
                    retry_count: next.retry_count,
                    fallbacks_left: next.fallback_queue.len() as u32,
                };
                self.records.insert(id.to_string(), next);
                self.emit(kind);
                true
            }
            Err(rej) => {
                self.emit(EventKind::Rejected {
                    node: Some(id.to_string()),
                    ee: None,
                    reason: rej.to_string(),
                });
                false
            }
        }
    }

    fn apply_cancels(&mut self) {
        let due: Vec<SubTaskId> = self
            .scenario
            .cancel_schedule
            .iter()
            .filter(|c| c.tick == self.tick)
            .map(|c| c.node.clone())
            .collect();
        for id in due {
            if !self.records.contains_key(&id) {
                continue;
            }
            if self.fire(&id, LifecycleEvent::CancelRequested, true) {
                // The entity may still answer; its result will be refused.
                self.current.remove(&id);
            }
        }
    }

    fn invocation_check(&self, ee: &str, node: &str) -> Result<(), String> {
        let ctx = InvocationContext {
            dag: self.dag.as_ref().expect("executing implies a DAG"),
            records: &self.records,
            profile: self.registry.get(ee),
            protocols: &self.scenario.protocols,
            policy: &self.scenario.validation_policy,
            enforcement: &self.scenario.enforcement,
        };
        let payload = InvocationPayload {
            subtask_id: node.to_string(),
            body: String::new(),
        };
        check_invocation(&ctx, ee, &payload).map_err(|e| e.to_string())
    }

    fn vm_ok(&self, ee: &str) -> bool {
        self.registry
            .get(ee)
            .is_some_and(|p| validate_ee(p, &self.scenario.validation_policy))
    }

    fn protocol(&self, ee: &str) -> String {
        self.registry.get(ee).map_or_else(
            || "unknown".to_string(),
            |p| p.api_metadata.protocol.clone(),
        )
    }

    /// Sends a message for `node` to `ee` and logs the Invoke record.
    fn send(&mut self, node: &str, ee: &str) -> (u64, Result<Option<u64>, SimError>) {
        let handle = self.next_handle;
        self.next_handle += 1;
        let attempt = self.attempts.entry(node.to_string()).or_default();
        *attempt += 1;
        let attempt = *attempt;
        self.handle_nodes.insert(handle, node.to_string());
        let kind = EventKind::Invoke {
            handle,
            node: node.to_string(),
            ee: ee.to_string(),
            protocol: self.protocol(ee),
            via: None,
            vm_ok: self.vm_ok(ee),
        };
        self.emit(kind);
        let msg = Message {
            handle,
            target: ee.to_string(),
            node: node.to_string(),
            attempt,
            from: None,
        };
        (handle, self.sim.submit(msg))
    }

    fn apply_injections(&mut self) {
        let due: Vec<(SubTaskId, String)> = self
            .scenario
            .injections
            .iter()
            .filter(|i| i.tick == self.tick)
            .map(|i| (i.node.clone(), i.ee.clone()))
            .collect();
        for (node, ee) in due {
            match self.invocation_check(&ee, &node) {
                Ok(()) => {
                    let _ = self.send(&node, &ee);
                }
                Err(reason) => self.emit(EventKind::Rejected {
                    node: Some(node),
                    ee: Some(ee),
                    reason,
                }),
            }
        }
    }

    /// Moves waiting and ready nodes forward until nothing changes.
    fn schedule(&mut self) {
        loop {
            let mut changed = false;
            let ids: Vec<SubTaskId> = self.records.keys().cloned().collect();
            for id in ids {
                changed |= self.advance(&id);
            }
            if !changed {
                break;
            }
        }
    }

    fn advance(&mut self, id: &str) -> bool {
        let record = &self.records[id];
        let guards = self.guards(record, false);
        match record.state {
            SubTaskState::Created
                if self.scenario.fsm.skip_ready_gate && guards.dependencies_satisfied =>
            {
                self.dispatch(id)
            }
            SubTaskState::Created if guards.dependencies_satisfied => {
                self.fire(id, LifecycleEvent::DepsSatisfied, false)
            }
            SubTaskState::Created => self.fire(id, LifecycleEvent::DepsPending, false),
            SubTaskState::AwaitingDependency if guards.dependencies_satisfied => {
                self.fire(id, LifecycleEvent::DepsSatisfied, false)
            }
            SubTaskState::AwaitingDependency
                if guards.dependency_failed && self.scenario.enforcement.failure_propagation =>
            {
                self.fire(id, LifecycleEvent::DependencyTerminallyFailed, false)
            }
            SubTaskState::Ready => self.dispatch(id),
            SubTaskState::Failed
            | SubTaskState::RetryScheduled
            | SubTaskState::FallbackSelected => {
                let before = record.clone();
                self.recover(id);
                self.records[id] != before
            }
            _ => false,
        }
    }

    /// Starts node `id` from READY, RETRY_SCHEDULED, FALLBACK_SELECTED or,
    /// with the ready gate skipped, CREATED.
    fn dispatch(&mut self, id: &str) -> bool {
        let record = &self.records[id];
        if !record.needs_external {
            if !self.fire(id, LifecycleEvent::InternalStart, false) {
                return false;
            }
            self.emit(EventKind::ResultReturned {
                handle: None,
                node: id.to_string(),
                ee: None,
                ok: true,
            });
            self.payloads.insert(id.to_string(), format!("{id}=done"));
            return self.fire(id, LifecycleEvent::ExecSucceeded, false);
        }
        let ee = if record.state == SubTaskState::FallbackSelected {
            record.fallback_queue.first().cloned()
        } else {
            record.assigned_ee.clone()
        };
        let Some(ee) = ee else {
            self.emit(EventKind::Rejected {
                node: Some(id.to_string()),
                ee: None,
                reason: "no entity assigned".into(),
            });
            return self.fire(id, LifecycleEvent::CancelRequested, true);
        };
        if let Err(reason) = self.invocation_check(&ee, id) {
            self.emit(EventKind::Rejected {
                node: Some(id.to_string()),
                ee: Some(ee),
                reason,
            });
            return self.fire(id, LifecycleEvent::CancelRequested, true);
        }
        if !self.fire(id, LifecycleEvent::DispatchRequested, false) {
            return false;
        }
        let (handle, sent) = self.send(id, &ee);
        self.fire(id, LifecycleEvent::DeliveryAck, false);
        match sent {
            Ok(_) => {
                self.current.insert(id.to_string(), handle);
            }
            Err(_) => {
                self.sim.forget(handle);
                self.emit(EventKind::ResultReturned {
                    handle: Some(handle),
                    node: id.to_string(),
                    ee: Some(ee),
                    ok: false,
                });
                self.fire(id, LifecycleEvent::ExecFailed, false);
                self.recover(id);
            }
        }
        true
    }

    /// Drives a failed node through retry, fallback or error.
    fn recover(&mut self, id: &str) {
        loop {
            let record = &self.records[id];
            match record.state {
                SubTaskState::Failed if record.retry_policy_permits() => {
                    self.fire(id, LifecycleEvent::RetryGranted, false);
                }
                SubTaskState::Failed if record.has_fallbacks() => {
                    self.fire(id, LifecycleEvent::FallbackChosen, false);
                }
                SubTaskState::Failed => {
                    self.fire(id, LifecycleEvent::RecoveryExhausted, false);
                    return;
                }
                SubTaskState::RetryScheduled => {
                    self.dispatch(id);
                    return;
                }
                SubTaskState::FallbackSelected => {
                    let head = record.fallback_queue.first().cloned().unwrap_or_default();
                    let usable = self.registry.get(&head).is_some()
                        && (!self.scenario.enforcement.vm_gate || self.vm_ok(&head));
                    if usable {
                        self.dispatch(id);
                        return;
                    }
                    self.emit(EventKind::Rejected {
                        node: Some(id.to_string()),
                        ee: Some(head),
                        reason: "fallback entity unavailable".into(),
                    });
                    self.fire(id, LifecycleEvent::RecoveryExhausted, false);
                }
                _ => return,
            }
        }
    }

    fn on_sim_event(&mut self, event: SimEvent) {
        match event {
            SimEvent::Result {
                handle,
                node,
                ee,
                ok,
                payload,
            } => {
                let live = self.current.get(&node) == Some(&handle)
                    && self
                        .records
                        .get(&node)
                        .is_some_and(|r| r.state == SubTaskState::InProgress);
                if !live {
                    let reason = format!("result for h{handle} has no waiting sub-task");
                    self.emit(EventKind::Rejected {
                        node: Some(node),
                        ee: Some(ee),
                        reason,
                    });
                    return;
                }
                self.current.remove(&node);
                self.emit(EventKind::ResultReturned {
                    handle: Some(handle),
                    node: node.clone(),
                    ee: Some(ee),
                    ok,
                });
                if ok {
                    self.payloads.insert(node.clone(), payload);
                    self.fire(&node, LifecycleEvent::ExecSucceeded, false);
                } else {
                    self.fire(&node, LifecycleEvent::ExecFailed, false);
                    self.recover(&node);
                }
            }
            SimEvent::Delegated { handle, from, to } => {
                self.emit(EventKind::Delegate { handle, from, to })
            }
            SimEvent::Proxied {
                handle,
                node,
                via,
                tool,
            } => {
                let kind = EventKind::Invoke {
                    handle,
                    node,
                    protocol: self.protocol(&tool),
                    vm_ok: self.vm_ok(&tool),
                    ee: tool,
                    via: Some(via),
                };
                self.emit(kind);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::builtin;

    fn run(name: &str) -> RunOutcome {
        let s = builtin(name).unwrap();
        run_task(&s.request, &s)
    }

    fn kinds(o: &RunOutcome) -> Vec<&'static str> {
        o.trace.iter().map(|e| e.kind.name()).collect()
    }

    #[test]
    fn nominal_succeeds() {
        let o = run("nominal");
        assert_eq!(o.response.status, ResponseStatus::Success);
        assert!(o
            .records
            .values()
            .all(|r| r.state == SubTaskState::Completed));
        assert_eq!(o.response.payload, "prices=412 | total=1236 | report=ok");
        assert_eq!(kinds(&o).last(), Some(&"RespSent"));
        assert_eq!(kinds(&o).iter().filter(|k| **k == "ReqReceived").count(), 1);
    }

    #[test]
    fn circular_delegation_exhausts_budget() {
        let o = run("circular_delegation");
        assert_eq!(o.response.status, ResponseStatus::Error);
        assert!(o.response.payload.contains("tick budget"));
        assert!(!kinds(&o).contains(&"RespSent"));
        assert!(kinds(&o).contains(&"Pending"));
        assert_eq!(o.trace.last().unwrap().tick, 30);
    }

    #[test]
    fn clarification_invokes_nothing() {
        let o = run("clarification");
        assert_eq!(o.response.status, ResponseStatus::ClarificationNeeded);
        assert!(!kinds(&o).contains(&"Invoke"));
    }

    #[test]
    fn retry_then_fallback() {
        let o = run("retry_exhaustion");
        assert_eq!(o.response.status, ResponseStatus::Success);
        let fetch = &o.records["fetch"];
        assert_eq!(fetch.retry_count, 2);
        assert_eq!(fetch.assigned_ee.as_deref(), Some("backupFetchEE"));
        let failures = o
            .trace
            .iter()
            .filter(|e| matches!(&e.kind, EventKind::ResultReturned { ok: false, .. }))
            .count();
        assert_eq!(failures, 3);
    }

    #[test]
    fn failure_propagates_to_waiting_nodes() {
        let o = run("awaiting_starvation");
        assert_eq!(o.records["fetch"].state, SubTaskState::Error);
        assert_eq!(o.records["total"].state, SubTaskState::Canceled);
        assert_eq!(o.response.status, ResponseStatus::Error);
    }

    #[test]
    fn cancel_midflight_cancels_the_chain() {
        let o = run("cancel_midflight");
        assert!(o
            .records
            .values()
            .all(|r| r.state == SubTaskState::Canceled));
        assert!(kinds(&o).contains(&"Pending"));
    }

    #[test]
    fn empty_request_is_an_error_response() {
        let s = builtin("nominal").unwrap();
        let o = run_task("  ", &s);
        assert_eq!(o.response.status, ResponseStatus::Error);
        assert_eq!(kinds(&o).iter().filter(|k| **k == "RespSent").count(), 1);
    }

    #[test]
    fn gates_reject_off_plan_and_unvalidated_calls() {
        let o = run("nominal");
        assert!(o
            .trace
            .iter()
            .any(|e| matches!(&e.kind, EventKind::Rejected { node: Some(n), .. } if n == "audit")));
        assert!(!o
            .trace
            .iter()
            .any(|e| matches!(&e.kind, EventKind::Invoke { vm_ok: false, .. })));
    }
}
