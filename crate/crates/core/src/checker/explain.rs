//! Human-readable and line-delimited renderings of failing verdicts.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::model::{Model, Move};
use super::runtime::RuntimeReport;
use super::{Evidence, Verdict};
use crate::lifecycle::SubTaskState;
use crate::trace::{EventKind, TraceEvent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{0}` has no counterexample to explain")]
pub struct NoEvidence(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeSnapshot {
    pub id: String,
    pub state: SubTaskState,
    pub previous: Option<SubTaskState>,
    pub retry_count: u32,
    pub invoked: bool,
    pub returned: bool,
}

/// One state of a counterexample path, as exported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CexRecord {
    pub seq: u64,
    pub state: usize,
    pub phase: String,
    pub nodes: Vec<NodeSnapshot>,
    /// The move that led here from the previous record.
    #[serde(rename = "move")]
    pub via: Option<String>,
    /// First state of the repeated cycle.
    pub loop_start: bool,
    /// The violated subformula fails here.
    pub focus: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelExplanation {
    pub property: String,
    pub subformula: String,
    pub records: Vec<CexRecord>,
    /// Lifecycle step entering the state where the subformula fails, or for
    /// liveness failures the first lifecycle step on the cycle.
    pub offending: Option<Move>,
    /// The cycle returns to this record.
    pub loop_back: usize,
}

impl ModelExplanation {
    /// The path as JSON lines, one record per state.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect()
    }
}

impl fmt::Display for ModelExplanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} Fails", self.property)?;
        writeln!(f, "  violated: {}", self.subformula)?;
        for r in &self.records {
            if let Some(m) = &r.via {
                writeln!(f, "        {m}")?;
            }
            let mark = match (r.loop_start, r.focus) {
                (true, true) => "@*",
                (true, false) => "@ ",
                (false, true) => " *",
                (false, false) => "  ",
            };
            write!(f, "  {mark} {:>3} s{} {}", r.seq, r.state, r.phase)?;
            for n in &r.nodes {
                write!(f, " {}={}", n.id, n.state)?;
                if let Some(p) = n.previous {
                    write!(f, "(prev {p})")?;
                }
            }
            writeln!(f)?;
        }
        writeln!(f, "  loops back to {}", self.loop_back)?;
        match &self.offending {
            Some(m) => writeln!(f, "  offending transition: {m}"),
            None => Ok(()),
        }
    }
}

/// Renders a failing model-checking verdict along its lasso.
pub fn explain_model(
    model: &Model,
    property: &str,
    verdict: &Verdict,
) -> Result<ModelExplanation, NoEvidence> {
    let Some(Evidence::Lasso {
        lasso,
        focus,
        subformula,
    }) = verdict
        .evidence
        .as_ref()
        .filter(|_| verdict.outcome.is_failure())
    else {
        return Err(NoEvidence(property.to_string()));
    };
    let path: Vec<usize> = lasso.states().collect();
    let moves: Vec<Option<Move>> = path
        .iter()
        .enumerate()
        .map(|(i, &s)| i.checked_sub(1).and_then(|j| model.step(path[j], s)))
        .collect();
    let records = path
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let g = &model.states[s];
            CexRecord {
                seq: i as u64,
                state: s,
                phase: g.phase.to_string(),
                nodes: g
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(j, r)| NodeSnapshot {
                        id: r.id.clone(),
                        state: r.state,
                        previous: r.previous_state,
                        retry_count: r.retry_count,
                        invoked: g.invoked[j],
                        returned: g.returned[j],
                    })
                    .collect(),
                via: moves[i].as_ref().map(ToString::to_string),
                loop_start: i == lasso.prefix.len(),
                focus: i == *focus,
            }
        })
        .collect();
    let is_node = |m: &&Move| matches!(m, Move::Node { .. });
    let offending = moves[*focus]
        .as_ref()
        .filter(is_node)
        .or_else(|| {
            moves[lasso.prefix.len() + 1..]
                .iter()
                .flatten()
                .find(is_node)
        })
        .cloned();
    Ok(ModelExplanation {
        property: property.to_string(),
        subformula: subformula.clone(),
        records,
        offending,
        loop_back: lasso.prefix.len(),
    })
}

/// Renders a runtime violation with the record that decided it.
pub fn explain_runtime(report: &RuntimeReport, trace: &[TraceEvent]) -> Result<String, NoEvidence> {
    if !report.outcome.is_failure() {
        return Err(NoEvidence(report.name.clone()));
    }
    let mut out = format!("{} {}", report.name, report.outcome);
    if let Some(via) = report.via {
        out += &format!(" (monitored as {via})");
    }
    out.push('\n');
    if let Some(f) = &report.formula {
        out += &format!("  monitored: {}\n", f.render());
    }
    match report.decided_at.map(|i| (i, trace.get(i))) {
        Some((i, Some(e))) => {
            out += &format!("  step {i}: {e}\n");
            match &e.kind {
                EventKind::Invoke {
                    node, ee, vm_ok, ..
                } => {
                    out += &format!("  entity {ee} invoked for {node} (vm_ok={vm_ok})\n");
                }
                EventKind::Transition {
                    node,
                    from,
                    to,
                    event,
                    ..
                } => {
                    out += &format!("  transition {node}: {from} --{event}--> {to}\n");
                }
                _ => {}
            }
        }
        Some((i, None)) => {
            out += &format!(
                "  step {i}: end of trace with obligations outstanding (strong finalization)\n"
            );
        }
        None => {}
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::suite::check_model;
    use crate::checker::{build_kripke, check_ctl, monitor_trace, ModelConfig, Outcome};
    use crate::orchestration::run_task;
    use crate::scenarios::builtin;
    use crate::tlogic::{instantiate, lookup};

    #[test]
    fn tl5_failure_names_the_retry_edge() {
        let model = build_kripke(&ModelConfig::preset("single").unwrap()).unwrap();
        let report = &check_model(&model, &[lookup("TL5").unwrap()], true).unwrap()[0];
        let ex = explain_model(&model, &report.property.name, &report.verdict).unwrap();
        let Some(Move::Node { from, to, .. }) = &ex.offending else {
            panic!("{ex}")
        };
        assert_eq!(
            (*from, *to),
            (SubTaskState::RetryScheduled, SubTaskState::Dispatching)
        );
        assert!(ex
            .to_string()
            .contains("RETRY_SCHEDULED --DispatchRequested--> DISPATCHING"));
        assert_eq!(ex.to_jsonl().lines().count(), ex.records.len());
    }

    #[test]
    fn holds_has_no_evidence() {
        let model = build_kripke(&ModelConfig::preset("single").unwrap()).unwrap();
        let g = &instantiate(lookup("TL1").unwrap(), &model.config.bindings())[0];
        let verdict = check_ctl(&model.kripke, &g.formula, true).unwrap();
        assert_eq!(verdict.outcome, Outcome::Holds);
        assert_eq!(
            explain_model(&model, &g.name, &verdict),
            Err(NoEvidence(g.name.clone()))
        );
    }

    #[test]
    fn hp9_report_names_entity_and_step() {
        let s = builtin("unvalidated_invoke").unwrap();
        let out = run_task(&s.request, &s);
        let reports = monitor_trace(&out.trace, &[lookup("HP9").unwrap()]);
        let bad = reports
            .iter()
            .find(|r| r.outcome == Outcome::Violated)
            .unwrap();
        let text = explain_runtime(bad, &out.trace).unwrap();
        let step = bad.decided_at.unwrap();
        assert!(text.contains(&format!("step {step}:")), "{text}");
        assert!(text.contains("entity rogueCalcEE"), "{text}");
        let fine = reports
            .iter()
            .find(|r| r.outcome != Outcome::Violated)
            .unwrap();
        assert!(explain_runtime(fine, &out.trace).is_err());
    }
}
