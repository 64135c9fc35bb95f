//! Verification engines: explicit-state CTL model checking with fairness
//! over Kripke structures, and three-valued LTL monitoring of traces.

pub mod ctl;
pub mod explain;
pub mod kripke;
pub mod model;
pub mod monitor;
pub mod runtime;
pub mod suite;

use std::fmt;

pub use ctl::{check_ctl, CheckError};
pub use explain::{explain_model, explain_runtime, ModelExplanation, NoEvidence};
pub use kripke::{KripkeBuilder, KripkeError, KripkeStructure};
pub use model::{build_kripke, GlobalState, Model, ModelConfig, ModelError, Move, Phase};
pub use monitor::{Monitor, MonitorError, Valuation};
pub use runtime::{monitor_trace, RuntimeReport, TraceMonitor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// Model checking: the formula holds in every initial state.
    Holds,
    /// Model checking: some initial state falsifies the formula.
    Fails,
    /// Monitoring: the trace refutes the formula.
    Violated,
    /// Monitoring: the trace confirms the formula.
    Satisfied,
    /// Monitoring: undecided.
    Inconclusive,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Holds => "Holds",
            Outcome::Fails => "Fails",
            Outcome::Violated => "Violated",
            Outcome::Satisfied => "Satisfied",
            Outcome::Inconclusive => "Inconclusive",
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(self, Outcome::Fails | Outcome::Violated)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An infinite path `prefix · cycle^ω` through a Kripke structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub prefix: Vec<usize>,
    /// Never empty.
    pub cycle: Vec<usize>,
}

impl Lasso {
    pub fn start(&self) -> usize {
        self.prefix.first().copied().unwrap_or(self.cycle[0])
    }

    /// States of one unrolling, prefix then cycle.
    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        self.prefix.iter().chain(&self.cycle).copied()
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `[a, b]` followed by this lasso, where `b` must be this lasso's start.
    fn prepend(mut self, path: &[usize]) -> Lasso {
        if let Some((_, init)) = path.split_last() {
            let mut prefix = init.to_vec();
            prefix.append(&mut self.prefix);
            self.prefix = prefix;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evidence {
    /// A path falsifying the formula at its start. `focus` indexes the
    /// state (in [`Lasso::states`] order) where `subformula` fails.
    Lasso {
        lasso: Lasso,
        focus: usize,
        subformula: String,
    },
    /// The trace step at which a monitor reached its verdict.
    Step { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub evidence: Option<Evidence>,
}
