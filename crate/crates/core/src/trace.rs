//! Execution traces: one record per kernel step, serialized as JSON lines.
//!
//! Records carry everything the runtime monitors need, so a trace file can
//! be checked without the scenario that produced it.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lifecycle::{EeId, LifecycleEvent, SubTaskId, SubTaskState};
use crate::orchestration::{EeKind, ResponseStatus};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DagNodeInfo {
    pub id: SubTaskId,
    pub deps: BTreeSet<SubTaskId>,
    pub ee: Option<EeId>,
    pub needs_external: bool,
    pub retry_limit: u32,
    pub fallbacks: Vec<EeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    Registered {
        ee: EeId,
        ee_kind: EeKind,
        vm_ok: bool,
    },
    ReqReceived {
        request: String,
    },
    IntentResolved {
        intent: String,
        plan: String,
    },
    ClarifyIntent {
        hint: String,
    },
    Discover {
        skills: BTreeSet<String>,
        found: Vec<EeId>,
    },
    DagBuilt {
        nodes: Vec<DagNodeInfo>,
    },
    Transition {
        node: SubTaskId,
        from: SubTaskState,
        to: SubTaskState,
        event: LifecycleEvent,
        previous: Option<SubTaskState>,
        retry_count: u32,
        fallbacks_left: u32,
    },
    Invoke {
        handle: u64,
        node: SubTaskId,
        ee: EeId,
        protocol: String,
        /// Entity that forwarded the call, for proxied invocations.
        via: Option<EeId>,
        vm_ok: bool,
    },
    ResultReturned {
        /// Absent for nodes the host handles itself.
        handle: Option<u64>,
        node: SubTaskId,
        ee: Option<EeId>,
        ok: bool,
    },
    Delegate {
        handle: u64,
        from: EeId,
        to: EeId,
    },
    Rejected {
        node: Option<SubTaskId>,
        ee: Option<EeId>,
        reason: String,
    },
    Aggregated {
        payload: String,
    },
    RespSent {
        status: ResponseStatus,
    },
    Pending {
        handle: u64,
        node: SubTaskId,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Registered { .. } => "Registered",
            EventKind::ReqReceived { .. } => "ReqReceived",
            EventKind::IntentResolved { .. } => "IntentResolved",
            EventKind::ClarifyIntent { .. } => "ClarifyIntent",
            EventKind::Discover { .. } => "Discover",
            EventKind::DagBuilt { .. } => "DagBuilt",
            EventKind::Transition { .. } => "Transition",
            EventKind::Invoke { .. } => "Invoke",
            EventKind::ResultReturned { .. } => "ResultReturned",
            EventKind::Delegate { .. } => "Delegate",
            EventKind::Rejected { .. } => "Rejected",
            EventKind::Aggregated { .. } => "Aggregated",
            EventKind::RespSent { .. } => "RespSent",
            EventKind::Pending { .. } => "Pending",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// Position in the trace, from 0; monitors use it as the step index.
    pub seq: u64,
    pub tick: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} t{} ", self.seq, self.tick)?;
        match &self.kind {
            EventKind::Registered { ee, ee_kind, vm_ok } => {
                write!(f, "Registered {ee} ({ee_kind}, vm_ok={vm_ok})")
            }
            EventKind::ReqReceived { request } => write!(f, "ReqReceived {request:?}"),
            EventKind::IntentResolved { intent, plan } => {
                write!(f, "IntentResolved {intent} -> {plan}")
            }
            EventKind::ClarifyIntent { hint } => write!(f, "ClarifyIntent {hint:?}"),
            EventKind::Discover { found, .. } => write!(f, "Discover [{}]", found.join(", ")),
            EventKind::DagBuilt { nodes } => {
                let ids: Vec<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
                write!(f, "DagBuilt [{}]", ids.join(", "))
            }
            EventKind::Transition {
                node,
                from,
                to,
                event,
                ..
            } => {
                write!(f, "Transition {node}: {from} --{event}--> {to}")
            }
            EventKind::Invoke {
                handle,
                node,
                ee,
                protocol,
                via,
                vm_ok,
            } => {
                write!(f, "Invoke h{handle} {node} on {ee} via {protocol}")?;
                if let Some(v) = via {
                    write!(f, " (proxied by {v})")?;
                }
                write!(f, " vm_ok={vm_ok}")
            }
            EventKind::ResultReturned { node, ee, ok, .. } => {
                write!(
                    f,
                    "ResultReturned {node} from {} ok={ok}",
                    ee.as_deref().unwrap_or("host")
                )
            }
            EventKind::Delegate { handle, from, to } => {
                write!(f, "Delegate h{handle} {from} -> {to}")
            }
            EventKind::Rejected { node, ee, reason } => write!(
                f,
                "Rejected node={} ee={}: {reason}",
                node.as_deref().unwrap_or("-"),
                ee.as_deref().unwrap_or("-")
            ),
            EventKind::Aggregated { payload } => write!(f, "Aggregated {payload:?}"),
            EventKind::RespSent { status } => write!(f, "RespSent {status}"),
            EventKind::Pending { handle, node } => write!(f, "Pending h{handle} ({node})"),
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: expected seq {expected}, found {found}")]
    Sequence {
        line: usize,
        expected: u64,
        found: u64,
    },
    #[error("trace has {0} ReqReceived records, expected exactly one")]
    RequestCount(usize),
    #[error("trace has {0} RespSent records, expected at most one")]
    ResponseCount(usize),
}

/// One JSON object per line, newline terminated.
pub fn to_jsonl(trace: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in trace {
        out.push_str(&serde_json::to_string(e).expect("trace records always serialize"));
        out.push('\n');
    }
    out
}

/// Parses and checks a JSON-lines trace: contiguous `seq` from 0, exactly
/// one request and at most one response. Blank lines are ignored.
pub fn from_jsonl(text: &str) -> Result<Vec<TraceEvent>, TraceError> {
    let mut out: Vec<TraceEvent> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let e: TraceEvent = serde_json::from_str(line).map_err(|source| TraceError::Json {
            line: i + 1,
            source,
        })?;
        let expected = out.len() as u64;
        if e.seq != expected {
            return Err(TraceError::Sequence {
                line: i + 1,
                expected,
                found: e.seq,
            });
        }
        out.push(e);
    }
    let count = |name: &str| out.iter().filter(|e| e.kind.name() == name).count();
    match (count("ReqReceived"), count("RespSent")) {
        (1, 0 | 1) => Ok(out),
        (1, n) => Err(TraceError::ResponseCount(n)),
        (n, _) => Err(TraceError::RequestCount(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(seq: u64, kind: EventKind) -> TraceEvent {
        TraceEvent { seq, tick: 0, kind }
    }

    #[test]
    fn field_order_is_fixed() {
        let e = ev(
            3,
            EventKind::RespSent {
                status: ResponseStatus::Success,
            },
        );
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"seq":3,"tick":0,"kind":"RespSent","status":"Success"}"#
        );
        let t = ev(
            0,
            EventKind::Transition {
                node: "a".into(),
                from: SubTaskState::Ready,
                to: SubTaskState::Dispatching,
                event: LifecycleEvent::DispatchRequested,
                previous: Some(SubTaskState::Ready),
                retry_count: 0,
                fallbacks_left: 1,
            },
        );
        assert_eq!(
            serde_json::to_string(&t).unwrap(),
            r#"{"seq":0,"tick":0,"kind":"Transition","node":"a","from":"READY","to":"DISPATCHING","event":"DispatchRequested","previous":"READY","retry_count":0,"fallbacks_left":1}"#
        );
    }

    #[test]
    fn parse_checks_structure() {
        let trace = vec![
            ev(
                0,
                EventKind::ReqReceived {
                    request: "x".into(),
                },
            ),
            ev(
                1,
                EventKind::RespSent {
                    status: ResponseStatus::Error,
                },
            ),
        ];
        let text = to_jsonl(&trace);
        assert_eq!(from_jsonl(&text).unwrap(), trace);
        assert!(matches!(
            from_jsonl(&text[..text.len() - 5]),
            Err(TraceError::Json { line: 2, .. })
        ));
        let skipped = to_jsonl(&[
            trace[0].clone(),
            ev(
                2,
                EventKind::Aggregated {
                    payload: String::new(),
                },
            ),
        ]);
        assert!(matches!(
            from_jsonl(&skipped),
            Err(TraceError::Sequence {
                expected: 1,
                found: 2,
                ..
            })
        ));
        assert!(matches!(from_jsonl(""), Err(TraceError::RequestCount(0))));
    }
}
