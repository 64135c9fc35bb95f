//! Runtime monitors against the model checker: a safety property that holds
//! on a scenario's model is never violated by a run of that scenario.

use akv::checker::model::build_kripke_capped;
use akv::checker::suite::check_model;
use akv::checker::{monitor_trace, ModelConfig, Outcome};
use akv::orchestration::run_task;
use akv::scenarios::{builtin, builtin_names};
use akv::simnet::Action;
use akv::tlogic::{catalog, Formula, PropertyEntry};
use proptest::prelude::*;

fn is_safety(e: &PropertyEntry) -> bool {
    match e.formula() {
        Formula::G(b) | Formula::AG(b) => b.is_propositional(),
        _ => false,
    }
}

/// Scenarios that plan a DAG and whose runs stay inside the behaviour their
/// model explores.
fn modeled() -> Vec<&'static str> {
    builtin_names()
        .iter()
        .copied()
        .filter(|n| {
            let s = builtin(n).unwrap();
            let forwards = s.behaviors.iter().flat_map(|b| &b.rules).any(|r| {
                matches!(
                    r.action,
                    Action::DelegateTo { .. } | Action::ProxyInvoke { .. }
                )
            });
            s.injections.is_empty() && !forwards && ModelConfig::from_scenario(&s).is_ok()
        })
        .collect()
}

fn holding_safety(name: &str) -> Vec<String> {
    let scenario = builtin(name).unwrap();
    let config = ModelConfig::from_scenario(&scenario).unwrap();
    let model = build_kripke_capped(&config, 1_000_000).unwrap();
    let entries: Vec<&'static PropertyEntry> = catalog().iter().filter(|e| is_safety(e)).collect();
    check_model(&model, &entries, true)
        .unwrap()
        .into_iter()
        .filter(|r| r.verdict.outcome == Outcome::Holds)
        .map(|r| r.property.name)
        .collect()
}

#[test]
fn some_safety_properties_hold_on_every_modeled_scenario() {
    for name in modeled() {
        assert!(!holding_safety(name).is_empty(), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn holding_safety_is_never_violated_at_runtime(pick in 0usize..64, seed in any::<u64>()) {
        let names = modeled();
        let name = names[pick % names.len()];
        let holds = holding_safety(name);
        let mut scenario = builtin(name).unwrap();
        scenario.seed = seed;
        let out = run_task(&scenario.request, &scenario);
        let entries: Vec<&'static PropertyEntry> = catalog().iter().filter(|e| is_safety(e)).collect();
        for r in monitor_trace(&out.trace, &entries) {
            if holds.contains(&r.name) {
                prop_assert_ne!(r.outcome, Outcome::Violated, "{} on {} seed {}", r.name, name, seed);
            }
        }
    }
}

#[test]
fn the_modeled_set_is_not_trivial() {
    let names = modeled();
    assert!(names.len() >= 4, "{names:?}");
}
