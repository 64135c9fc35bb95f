//! Declarative scenarios: the inputs of one orchestration run, their JSON
//! file format, and mutations that weaken kernel guards.

mod builtin;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lifecycle::{EeId, FsmConfig, SubTaskId};
use crate::orchestration::{
    CapabilityProfile, DagError, Enforcement, IntentTemplate, PlanTemplate, ValidationPolicy,
};
use crate::simnet::{Action, EeBehavior};

pub use builtin::{builtin, builtin_names};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CancelAt {
    pub tick: u64,
    pub node: SubTaskId,
}

/// An invocation issued outside the DAG schedule, as a compromised or buggy
/// planner would.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub tick: u64,
    pub node: SubTaskId,
    pub ee: EeId,
}

fn default_protocols() -> Vec<String> {
    vec!["a2a".into(), "mcp".into()]
}

fn default_hint() -> String {
    "Could you describe what you need in more detail?".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub v: u32,
    pub name: String,
    pub request: String,
    pub intent_templates: Vec<IntentTemplate>,
    #[serde(default = "default_hint")]
    pub clarification_hint: String,
    pub plans: BTreeMap<String, PlanTemplate>,
    /// Protocol labels accepted in API metadata.
    #[serde(default = "default_protocols")]
    pub protocols: Vec<String>,
    pub profiles: Vec<CapabilityProfile>,
    pub behaviors: Vec<EeBehavior>,
    #[serde(default)]
    pub validation_policy: ValidationPolicy,
    #[serde(default)]
    pub enforcement: Enforcement,
    #[serde(default)]
    pub fsm: FsmConfig,
    #[serde(default)]
    pub cancel_schedule: Vec<CancelAt>,
    #[serde(default)]
    pub injections: Vec<Injection>,
    pub tick_budget: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("schema error at `{path}`: {message}")]
    SchemaError { path: String, message: String },
    #[error("dangling reference to `{0}`")]
    DanglingReference(String),
    #[error("plan `{0}` has a cycle")]
    CycleDetected(String),
    #[error("plan `{plan}`: {source}")]
    BadPlan { plan: String, source: DagError },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

fn schema(path: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::SchemaError {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses a scenario document and checks its cross-references.
pub fn load_scenario(document: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(&path, e.into_inner().to_string())
    })?;
    scenario.check()?;
    Ok(scenario)
}

impl Scenario {
    /// Structural checks beyond the schema: version, budget, references
    /// between templates, plans, profiles and behaviors, plan acyclicity.
    pub fn check(&self) -> Result<(), ScenarioError> {
        if self.v != SCHEMA_VERSION {
            return Err(schema(
                "v",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.v),
            ));
        }
        if self.tick_budget == 0 {
            return Err(schema("tick_budget", "must be positive"));
        }
        let ees: BTreeSet<&str> = self.profiles.iter().map(|p| p.ee_id.as_str()).collect();
        let known = |e: &str| {
            if ees.contains(e) {
                Ok(())
            } else {
                Err(ScenarioError::DanglingReference(e.to_string()))
            }
        };
        for t in &self.intent_templates {
            if !self.plans.contains_key(&t.plan) {
                return Err(ScenarioError::DanglingReference(t.plan.clone()));
            }
        }
        for (name, plan) in &self.plans {
            plan.check().map_err(|e| match e {
                DagError::CycleDetected(_) => ScenarioError::CycleDetected(name.clone()),
                source => ScenarioError::BadPlan {
                    plan: name.clone(),
                    source,
                },
            })?;
            for n in &plan.nodes {
                n.fallbacks.iter().try_for_each(|f| known(f))?;
            }
        }
        for (i, b) in self.behaviors.iter().enumerate() {
            known(&b.ee_id)?;
            if !b.is_total() {
                return Err(schema(
                    &format!("behaviors[{i}].rules"),
                    "a catch-all `*` rule is required",
                ));
            }
            for r in &b.rules {
                match &r.action {
                    Action::DelegateTo { target } => known(target)?,
                    Action::ProxyInvoke { tool } => known(tool)?,
                    _ => {}
                }
            }
        }
        let nodes: BTreeSet<&str> = self
            .plans
            .values()
            .flat_map(|p| p.nodes.iter().map(|n| n.id.as_str()))
            .collect();
        for c in &self.cancel_schedule {
            if !nodes.contains(c.node.as_str()) {
                return Err(ScenarioError::DanglingReference(c.node.clone()));
            }
        }
        for inj in &self.injections {
            known(&inj.ee)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenarios always serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mutation {
    DisableVmGate,
    DisableDagMembershipGate,
    DisableDependencyGate,
    SkipReadyGate,
    ForgetPreviousState,
}

impl Mutation {
    pub const ALL: [Mutation; 5] = [
        Mutation::DisableVmGate,
        Mutation::DisableDagMembershipGate,
        Mutation::DisableDependencyGate,
        Mutation::SkipReadyGate,
        Mutation::ForgetPreviousState,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::DisableVmGate => "DisableVmGate",
            Mutation::DisableDagMembershipGate => "DisableDagMembershipGate",
            Mutation::DisableDependencyGate => "DisableDependencyGate",
            Mutation::SkipReadyGate => "SkipReadyGate",
            Mutation::ForgetPreviousState => "ForgetPreviousState",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{mutation} is not applicable to `{scenario}`: the guard is already off")]
pub struct NotApplicable {
    pub mutation: Mutation,
    pub scenario: String,
}

/// A copy of `scenario` with one guard switched off; the name gains a
/// `+Mutation` suffix.
pub fn mutate(scenario: &Scenario, mutation: Mutation) -> Result<Scenario, NotApplicable> {
    let mut out = scenario.clone();
    let flag = match mutation {
        Mutation::DisableVmGate => &mut out.enforcement.vm_gate,
        Mutation::DisableDagMembershipGate => &mut out.enforcement.dag_membership_gate,
        Mutation::DisableDependencyGate => &mut out.enforcement.dependency_gate,
        Mutation::SkipReadyGate => &mut out.fsm.skip_ready_gate,
        Mutation::ForgetPreviousState => &mut out.fsm.forget_previous_state,
    };
    // Enforcement flags are on in a sound kernel, FSM flags are off.
    let sound = matches!(
        mutation,
        Mutation::DisableVmGate
            | Mutation::DisableDagMembershipGate
            | Mutation::DisableDependencyGate
    );
    if *flag != sound {
        return Err(NotApplicable {
            mutation,
            scenario: scenario.name.clone(),
        });
    }
    *flag = !sound;
    out.name = format!("{}+{}", scenario.name, mutation.name());
    Ok(out)
}
