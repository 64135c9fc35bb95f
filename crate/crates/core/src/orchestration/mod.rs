//! The host agent: intent resolution, registry, DAG planning and execution,
//! validated invocation and aggregation.

pub mod comm;
pub mod dag;
pub mod hac;
pub mod kernel;
pub mod registry;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lifecycle::{EeId, SubTaskId, SubTaskState};

pub use comm::{validate_ee, Enforcement, InvokeError, ValidationPolicy};
pub use dag::{
    aggregate, build_task_dag, ready_frontier, DagError, NodeSeed, PlanNode, PlanTemplate, TaskDag,
};
pub use hac::{resolve_intent, InputError, IntentTemplate, Planner, Resolution, TemplatePlanner};
pub use kernel::{run_task, run_task_observed, RunOutcome};
pub use registry::{Discovery, Registry, RegistryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EeKind {
    Agent,
    Tool,
}

impl fmt::Display for EeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EeKind::Agent => "agent",
            EeKind::Tool => "tool",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiMetadata {
    pub protocol: String,
    pub endpoint: String,
    pub schema: String,
}

/// A registered external entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilityProfile {
    pub ee_id: EeId,
    pub kind: EeKind,
    pub skills: BTreeSet<String>,
    pub api_metadata: ApiMetadata,
    pub validated: bool,
    /// 0..=100
    pub reliability: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ResponseStatus {
    Success,
    Error,
    ClarificationNeeded,
}

impl ResponseStatus {
    pub const ALL: [ResponseStatus; 3] = [
        ResponseStatus::Success,
        ResponseStatus::Error,
        ResponseStatus::ClarificationNeeded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResponseStatus::Success => "Success",
            ResponseStatus::Error => "Error",
            ResponseStatus::ClarificationNeeded => "ClarificationNeeded",
        }
    }
}

impl fmt::Display for ResponseStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub status: ResponseStatus,
    /// Aggregated value, clarification question or diagnostic.
    pub payload: String,
    pub per_subtask: BTreeMap<SubTaskId, SubTaskState>,
}

impl Response {
    pub fn error(payload: impl Into<String>) -> Self {
        Response {
            status: ResponseStatus::Error,
            payload: payload.into(),
            per_subtask: BTreeMap::new(),
        }
    }
}

/// A user request and, once produced, its single response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserTask {
    pub request: String,
    response: Option<Response>,
}

impl UserTask {
    pub fn new(request: impl Into<String>) -> Self {
        UserTask {
            request: request.into(),
            response: None,
        }
    }

    pub fn response(&self) -> Option<&Response> {
        self.response.as_ref()
    }

    /// Sets the response; returns `false` and keeps the old one if a
    /// response already exists.
    pub fn respond(&mut self, response: Response) -> bool {
        if self.response.is_some() {
            return false;
        }
        self.response = Some(response);
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    pub intent_id: String,
    pub parameters: BTreeMap<String, String>,
    pub plan_template_ref: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    Host,
}

/// Dialogue context carried across turns.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionState {
    dialogue_history: Vec<(Speaker, String)>,
    pub credentials: BTreeMap<EeId, String>,
}

impl SessionState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, speaker: Speaker, text: impl Into<String>) {
        self.dialogue_history.push((speaker, text.into()));
    }

    pub fn history(&self) -> &[(Speaker, String)] {
        &self.dialogue_history
    }
}
