//! Host agent core: intent resolution and the planner interface.
//!
//! Planning is template driven. The [`Planner`] trait is the seam where a
//! non-deterministic planner could be plugged in.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dag::{build_task_dag, DagError, PlanTemplate, TaskDag};
use super::registry::Discovery;
use super::{Intent, SessionState, Speaker};

/// Maps requests containing `pattern` (case-insensitive) to an intent and a
/// plan template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentTemplate {
    pub pattern: String,
    pub intent: String,
    pub plan: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Intent(Intent),
    /// No template matched; carries the question to ask the user.
    Clarification(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InputError {
    #[error("empty request")]
    EmptyRequest,
}

/// Resolves `request` against the ordered template list; the first match
/// wins. Both the request and the host's reaction are appended to the
/// session history.
pub fn resolve_intent(
    request: &str,
    session: &mut SessionState,
    templates: &[IntentTemplate],
    hint: &str,
) -> Result<Resolution, InputError> {
    if request.trim().is_empty() {
        return Err(InputError::EmptyRequest);
    }
    session.append(Speaker::User, request);
    let lower = request.to_lowercase();
    match templates
        .iter()
        .find(|t| lower.contains(&t.pattern.to_lowercase()))
    {
        Some(t) => {
            session.append(Speaker::Host, format!("intent {}", t.intent));
            let mut parameters = BTreeMap::new();
            parameters.insert("request".to_string(), request.to_string());
            Ok(Resolution::Intent(Intent {
                intent_id: t.intent.clone(),
                parameters,
                plan_template_ref: t.plan.clone(),
            }))
        }
        None => {
            session.append(Speaker::Host, hint);
            Ok(Resolution::Clarification(hint.to_string()))
        }
    }
}

pub trait Planner {
    fn resolve(&self, request: &str, session: &mut SessionState) -> Result<Resolution, InputError>;
    fn plan(&self, intent: &Intent, discovery: &Discovery) -> Result<TaskDag, DagError>;
}

/// The deterministic planner backed by a scenario's templates and plans.
pub struct TemplatePlanner<'a> {
    pub templates: &'a [IntentTemplate],
    pub plans: &'a BTreeMap<String, PlanTemplate>,
    pub hint: &'a str,
}

impl Planner for TemplatePlanner<'_> {
    fn resolve(&self, request: &str, session: &mut SessionState) -> Result<Resolution, InputError> {
        resolve_intent(request, session, self.templates, self.hint)
    }

    fn plan(&self, intent: &Intent, discovery: &Discovery) -> Result<TaskDag, DagError> {
        let plan = self
            .plans
            .get(&intent.plan_template_ref)
            .ok_or_else(|| DagError::UnknownPlan(intent.plan_template_ref.clone()))?;
        build_task_dag(intent, plan, discovery)
    }
}
