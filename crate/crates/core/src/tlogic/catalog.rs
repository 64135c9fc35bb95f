//! The property catalog: host-agent properties HP1..HP17, lifecycle
//! properties TL1..TL14, and a few flagged variants.
//!
//! Templates are written in the concrete syntax of [`super::parser`]. `$v`
//! stands for a DAG node, `$ee` for an external entity, and an atom whose
//! argument is `$all` expands to the conjunction of that atom over every node.

use std::fmt;

use thiserror::Error;

use super::ast::{Formula, Logic};
use super::parser::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Liveness,
    Safety,
    Completeness,
    Fairness,
    Reachability,
    Flow,
}

impl Category {
    pub fn label(self) -> &'static str {
        match self {
            Category::Liveness => "Liveness",
            Category::Safety => "Safety",
            Category::Completeness => "Completeness",
            Category::Fairness => "Fairness",
            Category::Reachability => "Reachability",
            Category::Flow => "Specific Flow/Path Properties",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How a template is grounded against a concrete DAG.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    /// No parameters.
    Global,
    /// One instance per DAG node.
    PerNode,
    /// One instance per node assigned to an agent-kind entity.
    PerAgentNode,
    /// One instance per node assigned to a tool-kind entity.
    PerToolNode,
    /// One instance per registered external entity.
    PerEe,
    /// A single instance whose `$all` atoms become conjunctions over nodes.
    AllNodes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Host,
    Lifecycle,
}

#[derive(Debug)]
pub struct PropertyEntry {
    pub name: &'static str,
    pub origin: Origin,
    pub category: Category,
    pub binding: Binding,
    /// Machine-readable template.
    pub template: &'static str,
    /// The formula as typeset in the property tables, transcribed to ASCII.
    pub typeset: &'static str,
    pub summary: &'static str,
    pub notes: &'static str,
    /// Set on variants: the verbatim entry this one amends.
    pub variant_of: Option<&'static str>,
    /// Variant substituted for this entry in range selections and runtime
    /// suites.
    pub replaced_by: Option<&'static str>,
    /// Expected outcome per built-in configuration: `single` and `chain2`
    /// model presets (fair), and the `nominal` runtime trace.
    pub expected: &'static [(&'static str, &'static str)],
}

impl PropertyEntry {
    pub fn formula(&self) -> Formula {
        parse(self.template).unwrap_or_else(|e| panic!("catalog template {}: {e}", self.name))
    }

    pub fn logic(&self) -> Logic {
        self.formula()
            .logic()
            .expect("catalog templates use a single logic")
    }

    pub fn is_variant(&self) -> bool {
        self.variant_of.is_some()
    }

    pub fn expected_for(&self, config: &str) -> Option<&'static str> {
        self.expected
            .iter()
            .find(|(c, _)| *c == config)
            .map(|(_, o)| *o)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("unknown property `{0}`")]
    NotFound(String),
    #[error("bad property range `{0}`")]
    BadRange(String),
}

macro_rules! entry {
    (
        $name:literal, $origin:ident, $cat:ident, $binding:ident,
        template: $template:literal,
        typeset: $typeset:literal,
        summary: $summary:literal,
        notes: $notes:literal,
        variant_of: $variant_of:expr,
        replaced_by: $replaced_by:expr,
        expected: [$(($cfg:literal, $out:literal)),* $(,)?] $(,)?
    ) => {
        PropertyEntry {
            name: $name,
            origin: Origin::$origin,
            category: Category::$cat,
            binding: Binding::$binding,
            template: $template,
            typeset: $typeset,
            summary: $summary,
            notes: $notes,
            variant_of: $variant_of,
            replaced_by: $replaced_by,
            expected: &[$(($cfg, $out)),*],
        }
    };
}

static CATALOG: [PropertyEntry; 35] = [
    entry!("HP1", Host, Liveness, Global,
        template: "AG(req_received -> AF(resp_sent))",
        typeset: "AG(Req_U -> AF Resp_H)",
        summary: "A received request is always eventually answered.",
        notes: "Req_U maps to req_received and Resp_H to resp_sent (any status).",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP2", Host, Liveness, Global,
        template: "AG(req_received -> AF(intent_resolved))",
        typeset: "AG(Req_U -> AF I_U)",
        summary: "Every request eventually has its intent resolved.",
        notes: "A clarification dialogue may loop; fairness on the host phase rules out endless clarification in the model.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP3", Host, Liveness, Global,
        template: "AG(intent_resolved -> AF(dag_built))",
        typeset: "AG(I_U -> AF LLM.Build_Task_DAG(I_U, {EE_info}))",
        summary: "A resolved intent is eventually planned into a task DAG.",
        notes: "The planning call maps to the dag_built atom.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP4", Host, Liveness, PerNode,
        template: "AG(dag_built -> AF(invoked($v)))",
        typeset: "AG(LLM.Build_Task_DAG(I_U, {EE_info})) -> (AND_{i=1}^{n=|D|} AF(CL.invoke(EE, protocol, sub_task_i)))",
        summary: "Once a DAG exists, each of its sub-tasks is eventually invoked.",
        notes: "The typeset bracket closes AG before the implication, which would make the formula vacuous at the initial state; the template uses the response scope AG(p -> AF q) per node. Sub-tasks canceled by a failed dependency are never invoked, so the per-node instance fails on models that explore failures of a predecessor.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Fails"), ("nominal", "Satisfied")]),
    entry!("HP5", Host, Liveness, PerNode,
        template: "AG(invoked($v) -> AF(result_returned($v)))",
        typeset: "AG(CL.invoke(EE, protocol, sub_task)) -> AF(CL.return_result(sub_task))",
        summary: "Every invoked sub-task eventually produces a result.",
        notes: "Read with response scope, as for HP4. invoked(v) covers external dispatch and internal start.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP6", Host, Liveness, AllNodes,
        template: "AG(result_returned($all) -> AF(aggregated))",
        typeset: "AND_{i=1}^{n=|D|} AG(CL.return_result(sub_task_i)) -> AF(O.aggregate(sub_task_1, ..., sub_task_n))",
        summary: "When every sub-task has returned, results are eventually aggregated.",
        notes: "The conjunction over nodes is moved inside the response scope.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP7", Host, Safety, Global,
        template: "AG(discovered -> AX(dag_built))",
        typeset: "AG(R.entities -> AX(LLM.Build_Task_DAG(I_U, {EE_info})))",
        summary: "Planning happens only after registry discovery.",
        notes: "Kept verbatim: the literal reading demands the DAG in the very next state after discovery. The kernel plans immediately after discovering, so the literal form holds on its traces and models. HP7' states plain precedence.",
        variant_of: None, replaced_by: Some("HP7'"),
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP7'", Host, Safety, Global,
        template: "AG(dag_built -> discovered)",
        typeset: "AG(dag_built -> discovered)",
        summary: "Variant of HP7: a DAG never exists unless discovery already happened.",
        notes: "Precedence reading of HP7.",
        variant_of: Some("HP7"), replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP8", Host, Safety, Global,
        template: "AG(invoked -> in_dag)",
        typeset: "AG(CL.invoke(EE, protocol, sub_task) -> sub_task in D)",
        summary: "Only sub-tasks of the constructed DAG are invoked.",
        notes: "At runtime invoked and in_dag are evaluated on each invocation event: in_dag holds iff the invoked sub-task is a node of the DAG.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP9", Host, Safety, PerEe,
        template: "AG(invoked_ee($ee) -> vm_ok($ee))",
        typeset: "AG(CL.invoke(EE, protocol, payload) -> VM(EE))",
        summary: "An entity is invoked only if it passes validation and meets the reliability threshold.",
        notes: "invoked_ee(e) holds on an invocation addressed to e, including proxied invocations; vm_ok(e) is the validation verdict at that instant.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP10", Host, Safety, PerNode,
        template: "AG(invoked($v) -> dependencies_satisfied($v))",
        typeset: "AND_{i=1}^{n=|D|} AG(CL.invoke(EE, protocol, sub_task_i)) -> dependencies[sub_task_i] = {}",
        summary: "A sub-task is invoked only when all its dependencies have completed.",
        notes: "dependencies[v] = {} is read as 'no uncompleted dependency', i.e. dependencies_satisfied(v). Scope moved inside AG as for HP4.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP11", Host, Safety, PerNode,
        template: "resp_sent(Success) -> AG(invoked($v))",
        typeset: "Resp_H -> (AND_{i=1}^{n=|D|} AG(CL.invoke(EE, protocol, sub_task_i)))",
        summary: "A successful response is returned only after every sub-task was invoked.",
        notes: "Kept verbatim with the response on the left and no outer AG, so it is only evaluated in the initial state. Bound to Success responses: error and clarification responses may precede full invocation. HP11' is the globally scoped form.",
        variant_of: None, replaced_by: Some("HP11'"),
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP11'", Host, Safety, PerNode,
        template: "AG(resp_sent(Success) -> invoked($v))",
        typeset: "AG(resp_sent(Success) -> invoked(v))",
        summary: "Variant of HP11: whenever a successful response has been sent, the node was invoked.",
        notes: "Success-only, globally scoped.",
        variant_of: Some("HP11"), replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP12", Host, Completeness, Global,
        template: "AG(req_received -> EX(dag_built | clarify_intent))",
        typeset: "AG(Req_U -> EX(LLM.Build_Task_DAG(I_U, {EE_info})) \\/ Clarify_Intent))",
        summary: "Every request leads to clarification or to planning.",
        notes: "The literal EX demands planning or clarification in the next state, but intent resolution and discovery sit in between, so the verbatim form fails on the models. EX has no single-trace reading; HP12' (AF) is used for runtime checks.",
        variant_of: None, replaced_by: Some("HP12'"),
        expected: [("single", "Fails"), ("chain2", "Fails")]),
    entry!("HP12'", Host, Completeness, Global,
        template: "AG(req_received -> AF(dag_built | clarify_intent))",
        typeset: "AG(req_received -> AF(dag_built \\/ clarify_intent))",
        summary: "Variant of HP12: every request eventually reaches clarification or planning.",
        notes: "Eventual reading of HP12; linearizable.",
        variant_of: Some("HP12"), replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP13", Host, Fairness, PerAgentNode,
        template: "G(invoked($v) -> F(result_returned($v)))",
        typeset: "FAIRNESS(Agent_RPC_Calls)",
        summary: "Calls to agent-kind entities do not stay pending forever.",
        notes: "The fairness operator is informal; cataloged as G(pending -> F resolved) over nodes assigned to agents. At runtime a call pending at the tick budget counts as unresolved.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP14", Host, Fairness, PerToolNode,
        template: "G(invoked($v) -> F(result_returned($v)))",
        typeset: "FAIRNESS(JSON_RPC_Calls)",
        summary: "Calls to tool-kind entities do not stay pending forever.",
        notes: "As HP13, over nodes assigned to tools.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP15", Host, Fairness, PerNode,
        template: "G(invoked($v) -> F(result_returned($v)))",
        typeset: "FAIRNESS(CL.return_result(sub_task))",
        summary: "Every sub-task invocation eventually yields a result.",
        notes: "As HP13, over every node.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP16", Host, Reachability, Global,
        template: "EF(resp_sent)",
        typeset: "EF(Resp_H)",
        summary: "A reply to the user is reachable.",
        notes: "Existential; runtime check is a witness search over the trace.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("HP17", Host, Reachability, Global,
        template: "EF(dag_built)",
        typeset: "EF(LLM.Build_Task_DAG(I_U, {EE_info}))",
        summary: "Building a task DAG is reachable.",
        notes: "Existential; runtime check is a witness search over the trace.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL1", Lifecycle, Liveness, PerNode,
        template: "AG(state_is($v, CREATED) -> AF(state_is($v, COMPLETED) | state_is($v, ERROR) | state_is($v, CANCELED)))",
        typeset: "AG(state = CREATED -> AF(state = COMPLETED \\/ state = ERROR \\/ state = CANCELED))",
        summary: "Every created sub-task eventually terminates.",
        notes: "Needs fairness when silent entities are modeled.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL2", Lifecycle, Liveness, PerNode,
        template: "AG((state_is($v, READY) & external_entity_needed($v)) -> AF(state_is($v, DISPATCHING)))",
        typeset: "AG((state = READY /\\ external_entity_needed) -> AF(state = DISPATCHING))",
        summary: "A ready sub-task that needs an external entity is eventually dispatched.",
        notes: "Fails if cancellation from READY is enabled.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL3", Lifecycle, Liveness, PerNode,
        template: "AG(state_is($v, FALLBACK_SELECTED) -> AF(state_is($v, DISPATCHING) | state_is($v, CANCELED) | state_is($v, FAILED)))",
        typeset: "AG(state = FALLBACK SELECTED -> AF(state = DISPATCHING \\/ state = CANCELED \\/ state = FAILED))",
        summary: "A selected fallback eventually leads to dispatch, cancellation or failure.",
        notes: "",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL4", Lifecycle, Liveness, PerNode,
        template: "AG(state_is($v, DISPATCHING) -> AF(state_is($v, IN_PROGRESS)))",
        typeset: "AG(state = DISPATCHING -> AF(state = IN PROGRESS))",
        summary: "A dispatching sub-task eventually starts running.",
        notes: "Holds only under fairness when a silent entity can stall delivery; without fairness the stall loop is a counterexample.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL5", Lifecycle, Safety, PerNode,
        template: "G(state_is($v, DISPATCHING) -> previous_state_is($v, READY))",
        typeset: "G((state = DISPATCHING) -> (previous_state = READY))",
        summary: "Dispatch is entered only from READY.",
        notes: "Kept verbatim. Retries and fallbacks re-dispatch from RETRY_SCHEDULED and FALLBACK_SELECTED, so the literal form fails whenever recovery is possible. TL5' admits all three sources.",
        variant_of: None, replaced_by: Some("TL5'"),
        expected: [("single", "Fails"), ("chain2", "Fails"), ("nominal", "Satisfied")]),
    entry!("TL5'", Lifecycle, Safety, PerNode,
        template: "G(state_is($v, DISPATCHING) -> (previous_state_is($v, READY) | previous_state_is($v, RETRY_SCHEDULED) | previous_state_is($v, FALLBACK_SELECTED)))",
        typeset: "G(state = DISPATCHING -> previous_state in {READY, RETRY SCHEDULED, FALLBACK SELECTED})",
        summary: "Variant of TL5: dispatch is entered only from READY or a recovery state.",
        notes: "Matches the transition table.",
        variant_of: Some("TL5"), replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL6", Lifecycle, Safety, PerNode,
        template: "G(state_is($v, COMPLETED) -> previous_state_is($v, IN_PROGRESS))",
        typeset: "G((state = COMPLETED) -> (previous_state = IN PROGRESS))",
        summary: "Completion is entered only from IN_PROGRESS.",
        notes: "",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL7", Lifecycle, Safety, PerNode,
        template: "AG(state_is($v, ERROR) -> AG(state_is($v, ERROR)))",
        typeset: "AG((state = ERROR) -> AG(state = ERROR))",
        summary: "ERROR is permanent.",
        notes: "",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL8", Lifecycle, Safety, PerNode,
        template: "AG(state_is($v, RETRY_SCHEDULED) -> previous_state_is($v, FAILED))",
        typeset: "AG(state = RETRY SCHEDULED -> previous_state = FAILED)",
        summary: "A retry is scheduled only right after a failure.",
        notes: "",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL9", Lifecycle, Safety, PerNode,
        template: "AG(state_is($v, CANCELED) -> AG(state_is($v, CANCELED)))",
        typeset: "AG((state = CANCELED) -> AG(state = CANCELED))",
        summary: "CANCELED is permanent.",
        notes: "",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL10", Lifecycle, Safety, PerNode,
        template: "AG(state_is($v, AWAITING_DEPENDENCY) -> AF(!state_is($v, AWAITING_DEPENDENCY)))",
        typeset: "AG(state = AWAITING DEPENDENCY -> AF(state != AWAITING DEPENDENCY))",
        summary: "A sub-task cannot remain indefinitely in AWAITING_DEPENDENCY.",
        notes: "Relies on dependency failure propagation: a waiting sub-task whose dependency ends in ERROR or CANCELED is canceled.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL11", Lifecycle, Fairness, PerNode,
        template: "AG((state_is($v, AWAITING_DEPENDENCY) & dependencies_satisfied($v)) -> AF(state_is($v, READY)))",
        typeset: "AG(state = AWAITING DEPENDENCY /\\ dependencies_satisfied -> AF(state = READY))",
        summary: "A waiting sub-task whose dependencies are met eventually becomes ready.",
        notes: "",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL12", Lifecycle, Flow, PerNode,
        template: "AG((state_is($v, FAILED) & !has_fallbacks($v)) -> (AX(state_is($v, RETRY_SCHEDULED)) | AX(state_is($v, ERROR))))",
        typeset: "AG((state = FAILED /\\ ~has_fallbacks) -> (AX(state = RETRY SCHEDULED \\/ AX(state = ERROR)))",
        summary: "A failed sub-task without fallbacks moves next to a retry or to ERROR.",
        notes: "The typeset brackets are unbalanced; read as a disjunction of two AX branches. Recovery is not interleaved with other sub-task moves in the model, so AX refers to this sub-task's next step.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL13", Lifecycle, Flow, PerNode,
        template: "AG((state_is($v, FAILED) & has_fallbacks($v)) -> (AX(state_is($v, RETRY_SCHEDULED)) | AX(state_is($v, FALLBACK_SELECTED)) | AX(state_is($v, ERROR))))",
        typeset: "AG((state = FAILED /\\ has_fallbacks) -> (AX(state = RETRY SCHEDULED \\/ AX(state = FALLBACK SELECTED) \\/ AX(state = ERROR))))",
        summary: "A failed sub-task with fallbacks moves next to a retry, a fallback or ERROR.",
        notes: "Same bracket reading as TL12.",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
    entry!("TL14", Lifecycle, Flow, PerNode,
        template: "AG((state_is($v, RETRY_SCHEDULED) & retry_policy_permits($v)) -> AX(state_is($v, DISPATCHING)))",
        typeset: "AG((state = RETRY SCHEDULED /\\ retry_policy_permits) -> AX(state = DISPATCHING))",
        summary: "A scheduled retry within budget is dispatched next.",
        notes: "",
        variant_of: None, replaced_by: None,
        expected: [("single", "Holds"), ("chain2", "Holds"), ("nominal", "Satisfied")]),
];

/// Every entry in stable order: host properties, then lifecycle properties,
/// variants right after the entry they amend.
pub fn catalog() -> &'static [PropertyEntry] {
    &CATALOG
}

pub fn lookup(name: &str) -> Result<&'static PropertyEntry, CatalogError> {
    CATALOG
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CatalogError::NotFound(name.to_string()))
}

/// Verbatim entries only (the 31 table rows).
pub fn verbatim() -> impl Iterator<Item = &'static PropertyEntry> {
    CATALOG.iter().filter(|e| !e.is_variant())
}

/// Resolves a selection such as `all`, `HP9`, `TL5,TL5'` or `TL1..TL14`.
///
/// Ranges walk the verbatim entries and substitute flagged entries by their
/// variant; explicit names select exactly; `all` is every entry.
pub fn select(spec: &str) -> Result<Vec<&'static PropertyEntry>, CatalogError> {
    let mut out: Vec<&'static PropertyEntry> = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("all") {
            out.extend(CATALOG.iter());
        } else if let Some((from, to)) = item.split_once("..") {
            let rows: Vec<&PropertyEntry> = verbatim().collect();
            let pos = |n: &str| rows.iter().position(|e| e.name == n.trim());
            let (Some(a), Some(b)) = (pos(from), pos(to)) else {
                return Err(CatalogError::BadRange(item.to_string()));
            };
            if a > b {
                return Err(CatalogError::BadRange(item.to_string()));
            }
            for e in &rows[a..=b] {
                out.push(match e.replaced_by {
                    Some(v) => lookup(v)?,
                    None => e,
                });
            }
        } else {
            out.push(lookup(item)?);
        }
    }
    let mut seen = std::collections::HashSet::new();
    out.retain(|e| seen.insert(e.name));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_one_verbatim_entries_in_order() {
        let names: Vec<&str> = verbatim().map(|e| e.name).collect();
        let mut expected: Vec<String> = (1..=17).map(|i| format!("HP{i}")).collect();
        expected.extend((1..=14).map(|i| format!("TL{i}")));
        assert_eq!(names, expected);
        for v in catalog().iter().filter(|e| e.is_variant()) {
            let base = lookup(v.variant_of.unwrap()).unwrap();
            assert_eq!(base.replaced_by, Some(v.name));
            assert_eq!(base.category, v.category);
        }
    }

    #[test]
    fn templates_parse_with_expected_logic() {
        for e in catalog() {
            let f = e.formula();
            let ltl = matches!(e.name, "TL5" | "TL5'" | "TL6" | "HP13" | "HP14" | "HP15");
            assert_eq!(
                e.logic(),
                if ltl { Logic::Ltl } else { Logic::Ctl },
                "{}",
                e.name
            );
            assert_eq!(super::super::parser::parse(&f.render()).unwrap(), f);
        }
    }

    #[test]
    fn categories_follow_table_sections() {
        let cat = |n| lookup(n).unwrap().category;
        assert_eq!(cat("HP1"), Category::Liveness);
        assert_eq!(cat("HP9"), Category::Safety);
        assert_eq!(cat("HP12"), Category::Completeness);
        assert_eq!(cat("HP14"), Category::Fairness);
        assert_eq!(cat("HP17"), Category::Reachability);
        assert_eq!(cat("TL7"), Category::Safety);
        assert_eq!(cat("TL11"), Category::Fairness);
        assert_eq!(cat("TL13").label(), "Specific Flow/Path Properties");
    }

    #[test]
    fn lookups() {
        let tl7 = lookup("TL7").unwrap();
        assert_eq!(tl7.category, Category::Safety);
        assert_eq!(
            tl7.formula().render(),
            "AG((state_is($v, ERROR) -> AG(state_is($v, ERROR))))"
        );
        let hp12 = lookup("HP12").unwrap();
        assert_eq!(hp12.category, Category::Completeness);
        assert!(hp12.template.contains("EX(dag_built | clarify_intent)"));
        assert_eq!(
            lookup("HP99").unwrap_err(),
            CatalogError::NotFound("HP99".into())
        );
        assert!(lookup("TL10")
            .unwrap()
            .summary
            .contains("cannot remain indefinitely in"));
    }

    #[test]
    fn selections() {
        let names = |s: &str| {
            select(s)
                .unwrap()
                .iter()
                .map(|e| e.name)
                .collect::<Vec<_>>()
        };
        let tl = names("TL1..TL14");
        assert_eq!(tl.len(), 14);
        assert!(tl.contains(&"TL5'") && !tl.contains(&"TL5"));
        assert_eq!(names("TL5"), ["TL5"]);
        assert_eq!(names("HP9, HP9,TL6"), ["HP9", "TL6"]);
        assert_eq!(names("all").len(), 35);
        assert!(select("TL9..TL2").is_err());
        assert!(select("HP1..XX").is_err());
    }
}
