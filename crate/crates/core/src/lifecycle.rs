//! Sub-task lifecycle state machine.
//!
//! Eleven states, thirteen events and a total transition function. Invalid
//! `(state, event)` pairs and failed guards produce a [`Rejection`] instead
//! of a panic, so callers (the kernel and the Kripke builder) can probe the
//! table freely.
//!
//! ```text
//! CREATED ──► AWAITING_DEPENDENCY ──► READY ──► DISPATCHING ──► IN_PROGRESS ──► COMPLETED
//!    │                 │                 └──────────────────────────►┘   │
//!    │                 └─► CANCELED                                      ▼
//!    └────────────────────► READY       RETRY_SCHEDULED ◄── FAILED ◄─────┘
//!                                       FALLBACK_SELECTED ◄─┘   └──► ERROR
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type SubTaskId = String;
pub type EeId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SubTaskState {
    Created,
    AwaitingDependency,
    Ready,
    Dispatching,
    InProgress,
    Completed,
    Failed,
    RetryScheduled,
    FallbackSelected,
    Canceled,
    Error,
}

impl SubTaskState {
    pub const ALL: [SubTaskState; 11] = [
        SubTaskState::Created,
        SubTaskState::AwaitingDependency,
        SubTaskState::Ready,
        SubTaskState::Dispatching,
        SubTaskState::InProgress,
        SubTaskState::Completed,
        SubTaskState::Failed,
        SubTaskState::RetryScheduled,
        SubTaskState::FallbackSelected,
        SubTaskState::Canceled,
        SubTaskState::Error,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SubTaskState::Created => "CREATED",
            SubTaskState::AwaitingDependency => "AWAITING_DEPENDENCY",
            SubTaskState::Ready => "READY",
            SubTaskState::Dispatching => "DISPATCHING",
            SubTaskState::InProgress => "IN_PROGRESS",
            SubTaskState::Completed => "COMPLETED",
            SubTaskState::Failed => "FAILED",
            SubTaskState::RetryScheduled => "RETRY_SCHEDULED",
            SubTaskState::FallbackSelected => "FALLBACK_SELECTED",
            SubTaskState::Canceled => "CANCELED",
            SubTaskState::Error => "ERROR",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_terminal(self) -> bool {
        is_terminal(self)
    }
}

impl fmt::Display for SubTaskState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `true` iff `state` is one of COMPLETED, ERROR, CANCELED.
pub fn is_terminal(state: SubTaskState) -> bool {
    matches!(
        state,
        SubTaskState::Completed | SubTaskState::Error | SubTaskState::Canceled
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LifecycleEvent {
    DepsPending,
    DepsSatisfied,
    DispatchRequested,
    InternalStart,
    DeliveryAck,
    ExecSucceeded,
    ExecFailed,
    RetryGranted,
    RetryDenied,
    FallbackChosen,
    RecoveryExhausted,
    CancelRequested,
    DependencyTerminallyFailed,
}

impl LifecycleEvent {
    pub const ALL: [LifecycleEvent; 13] = [
        LifecycleEvent::DepsPending,
        LifecycleEvent::DepsSatisfied,
        LifecycleEvent::DispatchRequested,
        LifecycleEvent::InternalStart,
        LifecycleEvent::DeliveryAck,
        LifecycleEvent::ExecSucceeded,
        LifecycleEvent::ExecFailed,
        LifecycleEvent::RetryGranted,
        LifecycleEvent::RetryDenied,
        LifecycleEvent::FallbackChosen,
        LifecycleEvent::RecoveryExhausted,
        LifecycleEvent::CancelRequested,
        LifecycleEvent::DependencyTerminallyFailed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LifecycleEvent::DepsPending => "DepsPending",
            LifecycleEvent::DepsSatisfied => "DepsSatisfied",
            LifecycleEvent::DispatchRequested => "DispatchRequested",
            LifecycleEvent::InternalStart => "InternalStart",
            LifecycleEvent::DeliveryAck => "DeliveryAck",
            LifecycleEvent::ExecSucceeded => "ExecSucceeded",
            LifecycleEvent::ExecFailed => "ExecFailed",
            LifecycleEvent::RetryGranted => "RetryGranted",
            LifecycleEvent::RetryDenied => "RetryDenied",
            LifecycleEvent::FallbackChosen => "FallbackChosen",
            LifecycleEvent::RecoveryExhausted => "RecoveryExhausted",
            LifecycleEvent::CancelRequested => "CancelRequested",
            LifecycleEvent::DependencyTerminallyFailed => "DependencyTerminallyFailed",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

impl fmt::Display for LifecycleEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-sub-task recovery and routing configuration supplied at creation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubTaskConfig {
    pub retry_limit: u32,
    pub fallback_queue: Vec<EeId>,
    pub needs_external: bool,
    pub assigned_ee: Option<EeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubTaskRecord {
    pub id: SubTaskId,
    pub state: SubTaskState,
    pub previous_state: Option<SubTaskState>,
    pub dependencies: BTreeSet<SubTaskId>,
    pub retry_count: u32,
    pub retry_limit: u32,
    pub fallback_queue: Vec<EeId>,
    pub needs_external: bool,
    pub assigned_ee: Option<EeId>,
}

impl SubTaskRecord {
    pub fn new(
        id: impl Into<SubTaskId>,
        dependencies: BTreeSet<SubTaskId>,
        config: SubTaskConfig,
    ) -> Self {
        SubTaskRecord {
            id: id.into(),
            state: SubTaskState::Created,
            previous_state: None,
            dependencies,
            retry_count: 0,
            retry_limit: config.retry_limit,
            fallback_queue: config.fallback_queue,
            needs_external: config.needs_external,
            assigned_ee: config.assigned_ee,
        }
    }

    pub fn retry_policy_permits(&self) -> bool {
        self.retry_count < self.retry_limit
    }

    pub fn has_fallbacks(&self) -> bool {
        !self.fallback_queue.is_empty()
    }
}

/// Guard predicates evaluated against one record at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct GuardSnapshot {
    pub dependencies_satisfied: bool,
    pub has_fallbacks: bool,
    pub retry_policy_permits: bool,
    pub external_entity_needed: bool,
    pub cancel_allowed: bool,
    /// Some dependency sits in ERROR or CANCELED.
    pub dependency_failed: bool,
}

impl GuardSnapshot {
    /// Derives the record-local guards; the remaining three come from the
    /// orchestrator's view of the DAG and the scenario.
    pub fn for_record(
        record: &SubTaskRecord,
        dependencies_satisfied: bool,
        dependency_failed: bool,
        cancel_allowed: bool,
    ) -> Self {
        GuardSnapshot {
            dependencies_satisfied,
            has_fallbacks: record.has_fallbacks(),
            retry_policy_permits: record.retry_policy_permits(),
            external_entity_needed: record.needs_external,
            cancel_allowed,
            dependency_failed,
        }
    }
}

/// Switches that weaken the transition table. Both are off in a correct
/// kernel; mutation testing turns them on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FsmConfig {
    /// Allow CREATED to start execution without passing through READY.
    pub skip_ready_gate: bool,
    /// Stop recording `previous_state` on transitions.
    pub forget_previous_state: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    Terminal,
    NoTransition,
    GuardFailed(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{event} rejected in {state}: {}", match .reason {
    RejectReason::Terminal => "state is terminal".to_string(),
    RejectReason::NoTransition => "no such transition".to_string(),
    RejectReason::GuardFailed(g) => format!("guard `{g}` failed"),
})]
pub struct Rejection {
    pub state: SubTaskState,
    pub event: LifecycleEvent,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LifecycleError {
    #[error("duplicate sub-task id `{0}`")]
    DuplicateId(SubTaskId),
}

/// The sub-task records of one parent task, keyed by id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubTaskSet {
    records: BTreeMap<SubTaskId, SubTaskRecord>,
}

impl SubTaskSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_subtask(
        &mut self,
        id: &str,
        dependencies: BTreeSet<SubTaskId>,
        config: SubTaskConfig,
    ) -> Result<&SubTaskRecord, LifecycleError> {
        if self.records.contains_key(id) {
            return Err(LifecycleError::DuplicateId(id.to_string()));
        }
        let record = SubTaskRecord::new(id, dependencies, config);
        Ok(self.records.entry(id.to_string()).or_insert(record))
    }

    pub fn get(&self, id: &str) -> Option<&SubTaskRecord> {
        self.records.get(id)
    }

    pub fn replace(&mut self, record: SubTaskRecord) {
        self.records.insert(record.id.clone(), record);
    }

    pub fn iter(&self) -> impl Iterator<Item = &SubTaskRecord> {
        self.records.values()
    }

    pub fn as_map(&self) -> &BTreeMap<SubTaskId, SubTaskRecord> {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn require(cond: bool, guard: &'static str) -> Result<(), RejectReason> {
    if cond {
        Ok(())
    } else {
        Err(RejectReason::GuardFailed(guard))
    }
}

/// Destination state of `(record.state, event)` under `guards`, or the reason
/// it is rejected.
fn target(
    record: &SubTaskRecord,
    event: LifecycleEvent,
    g: &GuardSnapshot,
    fsm: &FsmConfig,
) -> Result<SubTaskState, RejectReason> {
    use LifecycleEvent as E;
    use SubTaskState as S;

    let state = record.state;
    if is_terminal(state) {
        return Err(RejectReason::Terminal);
    }
    match (state, event) {
        (S::Created, E::DepsPending) => {
            require(!g.dependencies_satisfied, "!dependencies_satisfied")?;
            Ok(S::AwaitingDependency)
        }
        (S::Created | S::AwaitingDependency, E::DepsSatisfied) => {
            require(g.dependencies_satisfied, "dependencies_satisfied")?;
            Ok(S::Ready)
        }
        (S::AwaitingDependency, E::DependencyTerminallyFailed) => {
            require(g.dependency_failed, "dependency_failed")?;
            Ok(S::Canceled)
        }
        (S::Ready, E::DispatchRequested) => {
            require(g.external_entity_needed, "external_entity_needed")?;
            Ok(S::Dispatching)
        }
        (S::Ready, E::InternalStart) => {
            require(!g.external_entity_needed, "!external_entity_needed")?;
            Ok(S::InProgress)
        }
        (S::Created, E::DispatchRequested) if fsm.skip_ready_gate => {
            require(g.dependencies_satisfied, "dependencies_satisfied")?;
            require(g.external_entity_needed, "external_entity_needed")?;
            Ok(S::Dispatching)
        }
        (S::Created, E::InternalStart) if fsm.skip_ready_gate => {
            require(g.dependencies_satisfied, "dependencies_satisfied")?;
            require(!g.external_entity_needed, "!external_entity_needed")?;
            Ok(S::InProgress)
        }
        (S::Dispatching, E::DeliveryAck) => Ok(S::InProgress),
        (S::InProgress, E::ExecSucceeded) => Ok(S::Completed),
        (S::InProgress, E::ExecFailed) => Ok(S::Failed),
        (S::Failed, E::RetryGranted) => {
            require(
                g.retry_policy_permits && record.retry_policy_permits(),
                "retry_policy_permits",
            )?;
            Ok(S::RetryScheduled)
        }
        (S::Failed, E::FallbackChosen) => {
            require(!g.retry_policy_permits, "!retry_policy_permits")?;
            require(g.has_fallbacks && record.has_fallbacks(), "has_fallbacks")?;
            Ok(S::FallbackSelected)
        }
        (S::Failed, E::RecoveryExhausted) => {
            require(!g.retry_policy_permits, "!retry_policy_permits")?;
            require(!g.has_fallbacks, "!has_fallbacks")?;
            Ok(S::Error)
        }
        // Permission was consumed by RetryGranted; the scheduled attempt is
        // always inside the budget.
        (S::RetryScheduled, E::DispatchRequested) => Ok(S::Dispatching),
        (S::RetryScheduled, E::RetryDenied) => {
            require(!g.retry_policy_permits, "!retry_policy_permits")?;
            Ok(S::Failed)
        }
        (S::FallbackSelected, E::DispatchRequested) => {
            require(record.has_fallbacks(), "has_fallbacks")?;
            Ok(S::Dispatching)
        }
        (S::FallbackSelected, E::RecoveryExhausted) => Ok(S::Failed),
        (
            S::Created | S::AwaitingDependency | S::Ready | S::InProgress | S::FallbackSelected,
            E::CancelRequested,
        ) => {
            require(g.cancel_allowed, "cancel_allowed")?;
            Ok(S::Canceled)
        }
        _ => Err(RejectReason::NoTransition),
    }
}

/// Applies `event` to `record` with the unmodified table.
pub fn transition(
    record: &SubTaskRecord,
    event: LifecycleEvent,
    guards: &GuardSnapshot,
) -> Result<SubTaskRecord, Rejection> {
    transition_with(record, event, guards, &FsmConfig::default())
}

pub fn transition_with(
    record: &SubTaskRecord,
    event: LifecycleEvent,
    guards: &GuardSnapshot,
    fsm: &FsmConfig,
) -> Result<SubTaskRecord, Rejection> {
    let to = target(record, event, guards, fsm).map_err(|reason| Rejection {
        state: record.state,
        event,
        reason,
    })?;
    let mut next = record.clone();
    match (record.state, event) {
        (_, LifecycleEvent::RetryGranted) => next.retry_count += 1,
        (SubTaskState::FallbackSelected, LifecycleEvent::DispatchRequested) => {
            next.assigned_ee = Some(next.fallback_queue.remove(0));
        }
        // the selected fallback could not be used; drop it
        (SubTaskState::FallbackSelected, LifecycleEvent::RecoveryExhausted)
            if next.has_fallbacks() =>
        {
            next.fallback_queue.remove(0);
        }
        _ => {}
    }
    if !fsm.forget_previous_state {
        next.previous_state = Some(record.state);
    }
    next.state = to;
    Ok(next)
}

/// Events `transition` would accept, in declaration order.
pub fn enabled_events(record: &SubTaskRecord, guards: &GuardSnapshot) -> Vec<LifecycleEvent> {
    enabled_events_with(record, guards, &FsmConfig::default())
}

pub fn enabled_events_with(
    record: &SubTaskRecord,
    guards: &GuardSnapshot,
    fsm: &FsmConfig,
) -> Vec<LifecycleEvent> {
    LifecycleEvent::ALL
        .into_iter()
        .filter(|&e| target(record, e, guards, fsm).is_ok())
        .collect()
}
