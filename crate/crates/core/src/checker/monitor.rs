//! Three-valued LTL monitoring by formula progression.
//!
//! The formula is put in negation normal form with Release, then rewritten
//! against each snapshot into the obligation the rest of the trace must
//! meet. Reaching `true` or `false` decides the verdict for good. When the
//! trace ends, the remaining obligation is finalized under strong
//! finite-trace semantics: pending `F` / `U` obligations are violations,
//! pending `G` / `R` obligations are met. `X` is read as weak next, so an
//! `X` obligation that outlives the trace is met; its negation is strong.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use super::{Evidence, Outcome, Verdict};
use crate::tlogic::{Atom, Formula};

/// What holds at one trace step.
pub trait Valuation {
    fn holds(&self, atom: &Atom) -> bool;
}

impl Valuation for BTreeSet<Atom> {
    fn holds(&self, atom: &Atom) -> bool {
        self.contains(atom)
    }
}

impl Valuation for HashSet<Atom> {
    fn holds(&self, atom: &Atom) -> bool {
        self.contains(atom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonitorError {
    #[error("`{0}` has branching-time operators; monitors take linear-time formulas")]
    NotLtl(String),
}

/// NNF obligations. `Next` is consumed by the step it is progressed
/// through; `Pending` is what it leaves behind for the following step.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Ltl {
    True,
    False,
    Lit(Atom, bool),
    And(BTreeSet<Ltl>),
    Or(BTreeSet<Ltl>),
    Next { weak: bool, body: Box<Ltl> },
    Pending { weak: bool, body: Box<Ltl> },
    Until(Box<Ltl>, Box<Ltl>),
    Release(Box<Ltl>, Box<Ltl>),
}

fn and(parts: impl IntoIterator<Item = Ltl>) -> Ltl {
    let mut set = BTreeSet::new();
    for p in parts {
        match p {
            Ltl::True => {}
            Ltl::False => return Ltl::False,
            Ltl::And(inner) => set.extend(inner),
            other => {
                set.insert(other);
            }
        }
    }
    match set.len() {
        0 => Ltl::True,
        1 => set.into_iter().next().expect("one element"),
        _ => Ltl::And(set),
    }
}

fn or(parts: impl IntoIterator<Item = Ltl>) -> Ltl {
    let mut set = BTreeSet::new();
    for p in parts {
        match p {
            Ltl::False => {}
            Ltl::True => return Ltl::True,
            Ltl::Or(inner) => set.extend(inner),
            other => {
                set.insert(other);
            }
        }
    }
    match set.len() {
        0 => Ltl::False,
        1 => set.into_iter().next().expect("one element"),
        _ => Ltl::Or(set),
    }
}

fn nnf(f: &Formula, positive: bool) -> Result<Ltl, MonitorError> {
    use Formula as F;
    let b = |f: &Formula, pos: bool| nnf(f, pos).map(Box::new);
    Ok(match (f, positive) {
        (F::True, true) | (F::False, false) => Ltl::True,
        (F::True, false) | (F::False, true) => Ltl::False,
        (F::Atom(a), pos) => Ltl::Lit(a.clone(), pos),
        (F::Not(g), pos) => nnf(g, !pos)?,
        (F::And(x, y), true) | (F::Or(x, y), false) => and([nnf(x, positive)?, nnf(y, positive)?]),
        (F::Or(x, y), true) | (F::And(x, y), false) => or([nnf(x, positive)?, nnf(y, positive)?]),
        (F::Implies(x, y), true) => or([nnf(x, false)?, nnf(y, true)?]),
        (F::Implies(x, y), false) => and([nnf(x, true)?, nnf(y, false)?]),
        (F::X(g), pos) => Ltl::Next {
            weak: pos,
            body: b(g, pos)?,
        },
        (F::F(g), true) | (F::G(g), false) => Ltl::Until(Box::new(Ltl::True), b(g, positive)?),
        (F::G(g), true) | (F::F(g), false) => Ltl::Release(Box::new(Ltl::False), b(g, positive)?),
        (F::U(x, y), true) => Ltl::Until(b(x, true)?, b(y, true)?),
        (F::U(x, y), false) => Ltl::Release(b(x, false)?, b(y, false)?),
        _ => return Err(MonitorError::NotLtl(f.render())),
    })
}

fn progress(f: &Ltl, v: &dyn Valuation) -> Ltl {
    match f {
        Ltl::True => Ltl::True,
        Ltl::False => Ltl::False,
        Ltl::Lit(a, pos) => {
            if v.holds(a) == *pos {
                Ltl::True
            } else {
                Ltl::False
            }
        }
        Ltl::And(parts) => and(parts.iter().map(|p| progress(p, v))),
        Ltl::Or(parts) => or(parts.iter().map(|p| progress(p, v))),
        Ltl::Next { weak, body } => Ltl::Pending {
            weak: *weak,
            body: body.clone(),
        },
        Ltl::Pending { body, .. } => progress(body, v),
        Ltl::Until(a, b) => or([progress(b, v), and([progress(a, v), f.clone()])]),
        Ltl::Release(a, b) => and([progress(b, v), or([progress(a, v), f.clone()])]),
    }
}

/// Truth of an obligation on the empty remainder of a finished trace.
fn finalize(f: &Ltl) -> bool {
    match f {
        Ltl::True => true,
        Ltl::False | Ltl::Lit(..) => false,
        Ltl::And(parts) => parts.iter().all(finalize),
        Ltl::Or(parts) => parts.iter().any(finalize),
        Ltl::Next { weak, .. } | Ltl::Pending { weak, .. } => *weak,
        Ltl::Until(..) => false,
        Ltl::Release(..) => true,
    }
}

/// A single-owner monitor for one LTL formula.
#[derive(Debug, Clone)]
pub struct Monitor {
    formula: Formula,
    state: Ltl,
    verdict: Outcome,
    steps: usize,
    decided_at: Option<usize>,
    finalized: bool,
}

impl Monitor {
    pub fn new(formula: &Formula) -> Result<Monitor, MonitorError> {
        Ok(Monitor {
            formula: formula.clone(),
            state: nnf(formula, true)?,
            verdict: Outcome::Inconclusive,
            steps: 0,
            decided_at: None,
            finalized: false,
        })
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn verdict(&self) -> Outcome {
        self.verdict
    }

    /// Steps consumed so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Index of the step that decided the verdict, if any.
    pub fn decided_at(&self) -> Option<usize> {
        self.decided_at
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    /// Feeds one snapshot. A decided verdict never changes.
    pub fn step(&mut self, snapshot: &dyn Valuation) -> Outcome {
        let index = self.steps;
        self.steps += 1;
        if self.verdict != Outcome::Inconclusive {
            return self.verdict;
        }
        self.state = progress(&self.state, snapshot);
        self.verdict = match self.state {
            Ltl::True => Outcome::Satisfied,
            Ltl::False => Outcome::Violated,
            _ => Outcome::Inconclusive,
        };
        if self.verdict != Outcome::Inconclusive {
            self.decided_at = Some(index);
        }
        self.verdict
    }

    /// Ends the trace. Undecided monitors are decided by strong
    /// finalization; the evidence is the deciding step, or the trace length
    /// when the end itself decided.
    pub fn finalize(&mut self) -> Verdict {
        if !self.finalized && self.verdict == Outcome::Inconclusive {
            self.verdict = if finalize(&self.state) {
                Outcome::Satisfied
            } else {
                Outcome::Violated
            };
            self.decided_at = Some(self.steps);
        }
        self.finalized = true;
        Verdict {
            outcome: self.verdict,
            evidence: self.decided_at.map(|index| Evidence::Step { index }),
        }
    }

    /// True when the verdict was reached only by finalization.
    pub fn decided_by_end(&self) -> bool {
        self.finalized && self.decided_at == Some(self.steps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tlogic::{parse, Predicate};
    use proptest::prelude::*;

    const PREDS: [Predicate; 3] = [
        Predicate::ReqReceived,
        Predicate::RespSent,
        Predicate::Aggregated,
    ];

    fn snap(bits: u8) -> BTreeSet<Atom> {
        PREDS
            .iter()
            .enumerate()
            .filter(|(i, _)| bits & (1 << i) != 0)
            .map(|(_, p)| Atom::plain(*p))
            .collect()
    }

    fn run(text: &str, trace: &[u8]) -> (Monitor, Verdict) {
        let mut m = Monitor::new(&parse(text).unwrap()).unwrap();
        for &b in trace {
            m.step(&snap(b));
        }
        let v = m.clone().finalize();
        (m, v)
    }

    #[test]
    fn safety_is_violated_at_the_bad_step() {
        let (m, v) = run("G(!resp_sent)", &[0, 0, 2, 0]);
        assert_eq!(m.verdict(), Outcome::Violated);
        assert_eq!(v.evidence, Some(Evidence::Step { index: 2 }));
    }

    #[test]
    fn fresh_monitors_are_inconclusive() {
        for f in ["G(req_received)", "F(req_received)", "req_received"] {
            assert_eq!(
                Monitor::new(&parse(f).unwrap()).unwrap().verdict(),
                Outcome::Inconclusive
            );
        }
        let (m, _) = run("req_received", &[1]);
        assert_eq!(m.verdict(), Outcome::Satisfied);
        let (m, _) = run("req_received", &[0]);
        assert_eq!(m.verdict(), Outcome::Violated);
    }

    #[test]
    fn eventuality_is_satisfied_when_seen() {
        let (m, v) = run("F(resp_sent)", &[1, 0, 2]);
        assert_eq!(m.verdict(), Outcome::Satisfied);
        assert_eq!(m.decided_at(), Some(2));
        assert_eq!(v.outcome, Outcome::Satisfied);
    }

    #[test]
    fn strong_finalization() {
        let (m, v) = run("G(req_received)", &[1, 1]);
        assert_eq!(m.verdict(), Outcome::Inconclusive);
        assert_eq!(v.outcome, Outcome::Satisfied);
        let (_, v) = run("F(resp_sent)", &[1, 1]);
        assert_eq!(
            v,
            Verdict {
                outcome: Outcome::Violated,
                evidence: Some(Evidence::Step { index: 2 })
            }
        );
        let (_, v) = run("G(req_received -> X(resp_sent))", &[0, 1]);
        assert_eq!(v.outcome, Outcome::Satisfied, "weak next at the end");
        let (_, v) = run("!X(resp_sent)", &[0]);
        assert_eq!(v.outcome, Outcome::Violated, "negated next is strong");
    }

    #[test]
    fn verdicts_are_final() {
        let mut m = Monitor::new(&parse("G(!resp_sent)").unwrap()).unwrap();
        m.step(&snap(2));
        m.step(&snap(0));
        assert_eq!(m.finalize().outcome, Outcome::Violated);
        assert_eq!(m.finalize().outcome, Outcome::Violated);
        assert_eq!(m.steps(), 2);
    }

    #[test]
    fn branching_formulas_are_rejected() {
        assert!(Monitor::new(&parse("AG(req_received)").unwrap()).is_err());
    }

    /// Finite-trace semantics evaluated directly on the whole trace.
    fn holds(f: &Formula, t: &[BTreeSet<Atom>], i: usize) -> bool {
        let n = t.len();
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => i < n && t[i].contains(a),
            Formula::Not(g) => !holds(g, t, i),
            Formula::And(a, b) => holds(a, t, i) && holds(b, t, i),
            Formula::Or(a, b) => holds(a, t, i) || holds(b, t, i),
            Formula::Implies(a, b) => !holds(a, t, i) || holds(b, t, i),
            Formula::X(g) => i + 1 >= n || holds(g, t, i + 1),
            Formula::F(g) => (i..n).any(|k| holds(g, t, k)),
            Formula::G(g) => (i..n).all(|k| holds(g, t, k)),
            Formula::U(a, b) => (i..n).any(|k| holds(b, t, k) && (i..k).all(|j| holds(a, t, j))),
            other => unreachable!("{other:?}"),
        }
    }

    fn arb_ltl() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::True),
            Just(Formula::False),
            (0usize..3).prop_map(|i| Formula::Atom(Atom::plain(PREDS[i]))),
        ];
        leaf.prop_recursive(5, 32, 2, |inner| {
            let b = |f: Formula| Box::new(f);
            prop_oneof![
                inner.clone().prop_map(move |f| Formula::Not(b(f))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Formula::And(b(x), b(y))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Formula::Or(b(x), b(y))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Formula::Implies(b(x), b(y))),
                inner.clone().prop_map(move |f| Formula::X(b(f))),
                inner.clone().prop_map(move |f| Formula::F(b(f))),
                inner.clone().prop_map(move |f| Formula::G(b(f))),
                (inner.clone(), inner).prop_map(move |(x, y)| Formula::U(b(x), b(y))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn finalized_verdict_matches_direct_semantics(f in arb_ltl(), bits in prop::collection::vec(0u8..8, 1..8)) {
            let trace: Vec<BTreeSet<Atom>> = bits.iter().map(|&b| snap(b)).collect();
            let mut m = Monitor::new(&f).unwrap();
            let mut early = None;
            for s in &trace {
                let o = m.step(s);
                if early.is_none() && o != Outcome::Inconclusive {
                    early = Some(o);
                }
            }
            let expected = if holds(&f, &trace, 0) { Outcome::Satisfied } else { Outcome::Violated };
            prop_assert_eq!(m.finalize().outcome, expected, "{}", f.render());
            if let Some(o) = early {
                prop_assert_eq!(o, expected);
            }
        }
    }
}
