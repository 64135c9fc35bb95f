//! The shipped scenarios: a nominal run and adversarial variations of it.

use std::collections::BTreeMap;

use super::{CancelAt, Injection, Scenario, ScenarioError, SCHEMA_VERSION};
use crate::orchestration::{
    ApiMetadata, CapabilityProfile, EeKind, Enforcement, IntentTemplate, PlanNode, PlanTemplate,
    ValidationPolicy,
};
use crate::simnet::{Action, EeBehavior, ReactionRule};

const NAMES: [&str; 9] = [
    "nominal",
    "circular_delegation",
    "privilege_escalation",
    "premature_invocation",
    "unvalidated_invoke",
    "retry_exhaustion",
    "cancel_midflight",
    "awaiting_starvation",
    "clarification",
];

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    let s = match name {
        "nominal" => nominal(),
        "circular_delegation" => circular_delegation(),
        "privilege_escalation" => privilege_escalation(),
        "premature_invocation" => premature_invocation(),
        "unvalidated_invoke" => unvalidated_invoke(),
        "retry_exhaustion" => retry_exhaustion(),
        "cancel_midflight" => cancel_midflight(),
        "awaiting_starvation" => awaiting_starvation(),
        "clarification" => clarification(),
        other => return Err(ScenarioError::UnknownScenario(other.to_string())),
    };
    debug_assert_eq!(s.check(), Ok(()));
    Ok(s)
}

fn profile(
    id: &str,
    kind: EeKind,
    skills: &[&str],
    validated: bool,
    reliability: u8,
) -> CapabilityProfile {
    let protocol = match kind {
        EeKind::Agent => "a2a",
        EeKind::Tool => "mcp",
    };
    CapabilityProfile {
        ee_id: id.into(),
        kind,
        skills: skills.iter().map(|s| s.to_string()).collect(),
        api_metadata: ApiMetadata {
            protocol: protocol.into(),
            endpoint: format!("{protocol}://{id}"),
            schema: format!("{id}.v1"),
        },
        validated,
        reliability,
    }
}

fn rule(matches: &str, delay: u64, action: Action) -> ReactionRule {
    ReactionRule {
        matches: matches.into(),
        delay,
        action,
    }
}

fn succeed(delay: u64, payload: &str) -> ReactionRule {
    rule(
        "*",
        delay,
        Action::Succeed {
            payload: payload.into(),
        },
    )
}

fn behavior(ee: &str, rules: Vec<ReactionRule>) -> EeBehavior {
    EeBehavior {
        ee_id: ee.into(),
        rules,
        jitter: 0,
    }
}

fn node(id: &str, skill: &str, retry_limit: u32, fallbacks: &[&str]) -> PlanNode {
    PlanNode {
        id: id.into(),
        skill: skill.into(),
        internal: false,
        retry_limit,
        fallbacks: fallbacks.iter().map(|f| f.to_string()).collect(),
    }
}

fn chain(nodes: Vec<PlanNode>) -> PlanTemplate {
    let edges = nodes
        .windows(2)
        .map(|w| (w[0].id.clone(), w[1].id.clone()))
        .collect();
    PlanTemplate { nodes, edges }
}

fn base(name: &str, plan: PlanTemplate) -> Scenario {
    Scenario {
        v: SCHEMA_VERSION,
        name: name.into(),
        request: "Plan my trip budget for Lisbon".into(),
        intent_templates: vec![IntentTemplate {
            pattern: "budget".into(),
            intent: "trip_budget".into(),
            plan: "budget_plan".into(),
        }],
        clarification_hint: "Which trip should I plan a budget for?".into(),
        plans: BTreeMap::from([("budget_plan".to_string(), plan)]),
        protocols: vec!["a2a".into(), "mcp".into()],
        profiles: vec![],
        behaviors: vec![],
        validation_policy: ValidationPolicy::default(),
        enforcement: Enforcement::default(),
        fsm: Default::default(),
        cancel_schedule: vec![],
        injections: vec![],
        tick_budget: 40,
        seed: 7,
    }
}

/// Fetch prices, compute a total, write a report. The calc skill is also
/// offered by a more reliable but unvalidated entity, and an audit call
/// outside the plan is attempted at tick 1; both are stopped by the
/// kernel's gates.
fn nominal() -> Scenario {
    let mut s = base(
        "nominal",
        chain(vec![
            node("fetch", "fetch_prices", 1, &["backupFetchEE"]),
            node("total", "calc", 1, &[]),
            node("report", "write_report", 1, &[]),
        ]),
    );
    s.profiles = vec![
        profile("priceEE", EeKind::Agent, &["fetch_prices"], true, 90),
        profile("backupFetchEE", EeKind::Agent, &["fetch_prices"], true, 60),
        profile("calcEE", EeKind::Tool, &["calc"], true, 85),
        profile("shadowCalcEE", EeKind::Tool, &["calc"], false, 99),
        profile("reportEE", EeKind::Agent, &["write_report"], true, 80),
    ];
    s.behaviors = vec![
        behavior("priceEE", vec![succeed(2, "prices=412")]),
        behavior("backupFetchEE", vec![succeed(1, "prices=430")]),
        behavior("calcEE", vec![succeed(1, "total=1236")]),
        behavior("shadowCalcEE", vec![succeed(1, "total=0")]),
        behavior("reportEE", vec![succeed(1, "report=ok")]),
    ];
    s.injections = vec![Injection {
        tick: 1,
        node: "audit".into(),
        ee: "calcEE".into(),
    }];
    s
}

/// Two planning agents hand the same request back and forth forever.
fn circular_delegation() -> Scenario {
    let mut s = base(
        "circular_delegation",
        chain(vec![node("itinerary", "plan_route", 0, &[])]),
    );
    s.profiles = vec![
        profile("plannerA", EeKind::Agent, &["plan_route"], true, 90),
        profile("plannerB", EeKind::Agent, &["plan_route"], true, 80),
    ];
    s.behaviors = vec![
        behavior(
            "plannerA",
            vec![rule(
                "*",
                1,
                Action::DelegateTo {
                    target: "plannerB".into(),
                },
            )],
        ),
        behavior(
            "plannerB",
            vec![rule(
                "*",
                1,
                Action::DelegateTo {
                    target: "plannerA".into(),
                },
            )],
        ),
    ];
    s.tick_budget = 30;
    s
}

/// A summarizing agent reaches a vault tool that never passed validation
/// by calling it on the host's behalf.
fn privilege_escalation() -> Scenario {
    let mut s = base(
        "privilege_escalation",
        chain(vec![
            node("lookup", "query", 0, &[]),
            node("summary", "summarize", 0, &[]),
        ]),
    );
    s.profiles = vec![
        profile("queryAgent", EeKind::Agent, &["query"], true, 90),
        profile("summaryAgent", EeKind::Agent, &["summarize"], true, 80),
        profile("vaultTool", EeKind::Tool, &["vault"], false, 95),
    ];
    s.behaviors = vec![
        behavior("queryAgent", vec![succeed(1, "rows=12")]),
        behavior(
            "summaryAgent",
            vec![rule(
                "*",
                1,
                Action::ProxyInvoke {
                    tool: "vaultTool".into(),
                },
            )],
        ),
        behavior("vaultTool", vec![succeed(1, "secrets")]),
    ];
    s
}

/// The nominal chain with the dependency gate off: later nodes start while
/// their inputs are still being computed.
fn premature_invocation() -> Scenario {
    let mut s = nominal();
    s.name = "premature_invocation".into();
    s.injections.clear();
    s.enforcement.dependency_gate = false;
    s
}

/// The only calc provider never passed validation and the VM gate is off.
fn unvalidated_invoke() -> Scenario {
    let mut s = base(
        "unvalidated_invoke",
        chain(vec![
            node("fetch", "fetch_prices", 0, &[]),
            node("total", "calc", 0, &[]),
        ]),
    );
    s.profiles = vec![
        profile("priceEE", EeKind::Agent, &["fetch_prices"], true, 90),
        profile("rogueCalcEE", EeKind::Tool, &["calc"], false, 90),
    ];
    s.behaviors = vec![
        behavior("priceEE", vec![succeed(1, "prices=412")]),
        behavior("rogueCalcEE", vec![succeed(1, "total=9")]),
    ];
    s.enforcement.vm_gate = false;
    s
}

/// The primary fetcher fails three times; two retries are allowed, then
/// the fallback succeeds.
fn retry_exhaustion() -> Scenario {
    let mut s = base(
        "retry_exhaustion",
        chain(vec![
            node("fetch", "fetch_prices", 2, &["backupFetchEE"]),
            node("total", "calc", 0, &[]),
        ]),
    );
    s.profiles = vec![
        profile("flakyFetchEE", EeKind::Agent, &["fetch_prices"], true, 90),
        profile("backupFetchEE", EeKind::Agent, &["fetch_prices"], true, 60),
        profile("calcEE", EeKind::Tool, &["calc"], true, 85),
    ];
    s.behaviors = vec![
        behavior(
            "flakyFetchEE",
            vec![rule(
                "*",
                1,
                Action::Fail {
                    code: "upstream timeout".into(),
                },
            )],
        ),
        behavior("backupFetchEE", vec![succeed(1, "prices=430")]),
        behavior("calcEE", vec![succeed(1, "total=1290")]),
    ];
    s
}

/// The user cancels the first node while its entity is still working.
fn cancel_midflight() -> Scenario {
    let mut s = nominal();
    s.name = "cancel_midflight".into();
    s.injections.clear();
    s.cancel_schedule = vec![CancelAt {
        tick: 1,
        node: "fetch".into(),
    }];
    s
}

/// The first node dies with no recovery; its dependent must not wait
/// forever.
fn awaiting_starvation() -> Scenario {
    let mut s = base(
        "awaiting_starvation",
        chain(vec![
            node("fetch", "fetch_prices", 0, &[]),
            node("total", "calc", 0, &[]),
        ]),
    );
    s.profiles = vec![
        profile("brokenFetchEE", EeKind::Agent, &["fetch_prices"], true, 90),
        profile("calcEE", EeKind::Tool, &["calc"], true, 85),
    ];
    s.behaviors = vec![
        behavior(
            "brokenFetchEE",
            vec![rule("*", 1, Action::Fail { code: "500".into() })],
        ),
        behavior("calcEE", vec![succeed(1, "total=0")]),
    ];
    s.tick_budget = 20;
    s
}

/// A request matching no intent template.
fn clarification() -> Scenario {
    let mut s = nominal();
    s.name = "clarification".into();
    s.request = "zzq lorem ipsum".into();
    s.injections.clear();
    s
}
