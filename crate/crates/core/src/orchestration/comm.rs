//! Communication layer gates: entity validation and invocation
//! preconditions.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dag::TaskDag;
use super::CapabilityProfile;
use crate::lifecycle::{EeId, SubTaskId, SubTaskRecord, SubTaskState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationPolicy {
    pub min_reliability: u8,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        ValidationPolicy {
            min_reliability: 50,
        }
    }
}

/// The validation-module verdict for an entity.
pub fn validate_ee(profile: &CapabilityProfile, policy: &ValidationPolicy) -> bool {
    profile.validated && profile.reliability >= policy.min_reliability
}

/// Kernel guards that mutations can switch off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Enforcement {
    /// Only validated entities may be planned for and invoked.
    pub vm_gate: bool,
    /// Only DAG nodes may be invoked.
    pub dag_membership_gate: bool,
    /// A node starts only after all its dependencies completed.
    pub dependency_gate: bool,
    /// Waiting nodes are canceled when a dependency ends in ERROR or CANCELED.
    pub failure_propagation: bool,
}

impl Default for Enforcement {
    fn default() -> Self {
        Enforcement {
            vm_gate: true,
            dag_membership_gate: true,
            dependency_gate: true,
            failure_propagation: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InvocationHandle(pub u64);

impl fmt::Display for InvocationHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvocationPayload {
    pub subtask_id: SubTaskId,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvokeError {
    #[error("entity `{0}` failed validation")]
    UnvalidatedEntity(EeId),
    #[error("sub-task `{0}` is not in the DAG")]
    SubtaskNotInDag(SubTaskId),
    #[error("sub-task `{0}` has uncompleted dependencies")]
    DependenciesUnmet(SubTaskId),
    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),
    #[error("entity `{0}` is not registered")]
    UnknownEntity(EeId),
}

/// What the invocation gates look at.
pub struct InvocationContext<'a> {
    pub dag: &'a TaskDag,
    pub records: &'a BTreeMap<SubTaskId, SubTaskRecord>,
    pub profile: Option<&'a CapabilityProfile>,
    pub protocols: &'a [String],
    pub policy: &'a ValidationPolicy,
    pub enforcement: &'a Enforcement,
}

/// Checks the preconditions of invoking `ee` for `payload`, honouring the
/// enforcement switches. Unregistered entities and unknown protocols are
/// always rejected.
pub fn check_invocation(
    ctx: &InvocationContext<'_>,
    ee: &str,
    payload: &InvocationPayload,
) -> Result<(), InvokeError> {
    let profile = ctx
        .profile
        .ok_or_else(|| InvokeError::UnknownEntity(ee.to_string()))?;
    let protocol = &profile.api_metadata.protocol;
    if !ctx.protocols.is_empty() && !ctx.protocols.contains(protocol) {
        return Err(InvokeError::UnknownProtocol(protocol.clone()));
    }
    if ctx.enforcement.vm_gate && !validate_ee(profile, ctx.policy) {
        return Err(InvokeError::UnvalidatedEntity(ee.to_string()));
    }
    let node = &payload.subtask_id;
    if ctx.enforcement.dag_membership_gate && !ctx.dag.contains(node) {
        return Err(InvokeError::SubtaskNotInDag(node.clone()));
    }
    if ctx.enforcement.dependency_gate {
        if let Some(seed) = ctx.dag.nodes.get(node) {
            let done = |d: &SubTaskId| {
                ctx.records
                    .get(d)
                    .is_some_and(|r| r.state == SubTaskState::Completed)
            };
            if !seed.dependencies.iter().all(done) {
                return Err(InvokeError::DependenciesUnmet(node.clone()));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifecycle::SubTaskRecord;
    use crate::orchestration::dag::NodeSeed;
    use crate::orchestration::{ApiMetadata, EeKind};
    use std::collections::BTreeSet;

    fn profile(validated: bool, reliability: u8) -> CapabilityProfile {
        CapabilityProfile {
            ee_id: "txEE".into(),
            kind: EeKind::Agent,
            skills: BTreeSet::new(),
            api_metadata: ApiMetadata {
                protocol: "a2a".into(),
                endpoint: "e".into(),
                schema: "s".into(),
            },
            validated,
            reliability,
        }
    }

    #[test]
    fn validation_threshold() {
        let policy = ValidationPolicy::default();
        assert!(validate_ee(&profile(true, 90), &policy));
        assert!(!validate_ee(&profile(false, 90), &policy));
        assert!(!validate_ee(&profile(true, 40), &policy));
        assert!(validate_ee(&profile(true, 50), &policy));
    }

    fn dag() -> TaskDag {
        let seed = |deps: &[&str]| NodeSeed {
            dependencies: deps.iter().map(|d| d.to_string()).collect(),
            skill: "s".into(),
            assigned_ee: Some("txEE".into()),
            needs_external: true,
            retry_limit: 0,
            fallback_queue: vec![],
        };
        TaskDag {
            nodes: [
                ("a".to_string(), seed(&[])),
                ("b".to_string(), seed(&["a"])),
            ]
            .into(),
            edges: [("a".to_string(), "b".to_string())].into(),
        }
    }

    #[test]
    fn gates() {
        let dag = dag();
        let records: BTreeMap<_, _> = dag
            .nodes
            .iter()
            .map(|(id, s)| {
                (
                    id.clone(),
                    SubTaskRecord::new(id.clone(), s.dependencies.clone(), s.config()),
                )
            })
            .collect();
        let good = profile(true, 90);
        let bad = profile(false, 90);
        let policy = ValidationPolicy::default();
        let on = Enforcement::default();
        let protocols = vec!["a2a".to_string()];
        let ctx = |p, e| InvocationContext {
            dag: &dag,
            records: &records,
            profile: p,
            protocols: &protocols,
            policy: &policy,
            enforcement: e,
        };
        let pay = |n: &str| InvocationPayload {
            subtask_id: n.into(),
            body: String::new(),
        };
        assert_eq!(
            check_invocation(&ctx(Some(&good), &on), "txEE", &pay("a")),
            Ok(())
        );
        assert_eq!(
            check_invocation(&ctx(Some(&bad), &on), "txEE", &pay("a")),
            Err(InvokeError::UnvalidatedEntity("txEE".into()))
        );
        assert_eq!(
            check_invocation(&ctx(Some(&good), &on), "txEE", &pay("ghost")),
            Err(InvokeError::SubtaskNotInDag("ghost".into()))
        );
        assert_eq!(
            check_invocation(&ctx(Some(&good), &on), "txEE", &pay("b")),
            Err(InvokeError::DependenciesUnmet("b".into()))
        );
        let off = Enforcement {
            vm_gate: false,
            dag_membership_gate: false,
            dependency_gate: false,
            failure_propagation: true,
        };
        for n in ["a", "b", "ghost"] {
            assert_eq!(
                check_invocation(&ctx(Some(&bad), &off), "txEE", &pay(n)),
                Ok(())
            );
        }
        assert_eq!(
            check_invocation(&ctx(None, &off), "nobody", &pay("a")),
            Err(InvokeError::UnknownEntity("nobody".into()))
        );
    }
}
