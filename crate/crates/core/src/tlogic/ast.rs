//! Formula AST over a fixed atom vocabulary, canonical rendering, and the
//! CTL <-> LTL mappings used to move properties between the model checker
//! and the runtime monitors.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lifecycle::SubTaskState;

/// Response statuses accepted as the optional argument of `resp_sent`.
pub const RESPONSE_STATUSES: [&str; 3] = ["Success", "Error", "ClarificationNeeded"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Predicate {
    StateIs,
    PreviousStateIs,
    DependenciesSatisfied,
    HasFallbacks,
    RetryPolicyPermits,
    ExternalEntityNeeded,
    ReqReceived,
    RespSent,
    IntentResolved,
    ClarifyIntent,
    DagBuilt,
    Discovered,
    Invoked,
    InvokedEe,
    ResultReturned,
    Aggregated,
    VmOk,
    InDag,
}

/// What an argument position accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgKind {
    Node,
    Entity,
    State,
    Status,
}

impl Predicate {
    pub const ALL: [Predicate; 18] = [
        Predicate::StateIs,
        Predicate::PreviousStateIs,
        Predicate::DependenciesSatisfied,
        Predicate::HasFallbacks,
        Predicate::RetryPolicyPermits,
        Predicate::ExternalEntityNeeded,
        Predicate::ReqReceived,
        Predicate::RespSent,
        Predicate::IntentResolved,
        Predicate::ClarifyIntent,
        Predicate::DagBuilt,
        Predicate::Discovered,
        Predicate::Invoked,
        Predicate::InvokedEe,
        Predicate::ResultReturned,
        Predicate::Aggregated,
        Predicate::VmOk,
        Predicate::InDag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predicate::StateIs => "state_is",
            Predicate::PreviousStateIs => "previous_state_is",
            Predicate::DependenciesSatisfied => "dependencies_satisfied",
            Predicate::HasFallbacks => "has_fallbacks",
            Predicate::RetryPolicyPermits => "retry_policy_permits",
            Predicate::ExternalEntityNeeded => "external_entity_needed",
            Predicate::ReqReceived => "req_received",
            Predicate::RespSent => "resp_sent",
            Predicate::IntentResolved => "intent_resolved",
            Predicate::ClarifyIntent => "clarify_intent",
            Predicate::DagBuilt => "dag_built",
            Predicate::Discovered => "discovered",
            Predicate::Invoked => "invoked",
            Predicate::InvokedEe => "invoked_ee",
            Predicate::ResultReturned => "result_returned",
            Predicate::Aggregated => "aggregated",
            Predicate::VmOk => "vm_ok",
            Predicate::InDag => "in_dag",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Accepted argument signatures, shortest first.
    pub fn signatures(self) -> &'static [&'static [ArgKind]] {
        use ArgKind::*;
        match self {
            Predicate::StateIs | Predicate::PreviousStateIs => &[&[State], &[Node, State]],
            Predicate::DependenciesSatisfied
            | Predicate::HasFallbacks
            | Predicate::RetryPolicyPermits
            | Predicate::ExternalEntityNeeded => &[&[], &[Node]],
            Predicate::ReqReceived
            | Predicate::IntentResolved
            | Predicate::ClarifyIntent
            | Predicate::DagBuilt
            | Predicate::Discovered
            | Predicate::Aggregated => &[&[]],
            Predicate::RespSent => &[&[], &[Status]],
            Predicate::Invoked | Predicate::InDag => &[&[], &[Node]],
            Predicate::ResultReturned => &[&[Node]],
            Predicate::InvokedEe | Predicate::VmOk => &[&[Entity]],
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: Predicate,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(predicate: Predicate, args: &[&str]) -> Self {
        Atom {
            predicate,
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn plain(predicate: Predicate) -> Self {
        Atom {
            predicate,
            args: Vec::new(),
        }
    }

    pub fn of_node(predicate: Predicate, node: &str) -> Self {
        Atom {
            predicate,
            args: vec![node.to_string()],
        }
    }

    pub fn state_is(node: &str, state: SubTaskState) -> Self {
        Atom {
            predicate: Predicate::StateIs,
            args: vec![node.to_string(), state.name().to_string()],
        }
    }

    pub fn previous_state_is(node: &str, state: SubTaskState) -> Self {
        Atom {
            predicate: Predicate::PreviousStateIs,
            args: vec![node.to_string(), state.name().to_string()],
        }
    }

    /// Checks the argument list against the predicate's signatures.
    pub fn validate(&self) -> Result<(), String> {
        let sig = self
            .predicate
            .signatures()
            .iter()
            .find(|s| s.len() == self.args.len())
            .ok_or_else(|| {
                let arities: Vec<String> = self
                    .predicate
                    .signatures()
                    .iter()
                    .map(|s| s.len().to_string())
                    .collect();
                format!(
                    "`{}` takes {} argument(s)",
                    self.predicate,
                    arities.join(" or ")
                )
            })?;
        for (kind, arg) in sig.iter().zip(&self.args) {
            match kind {
                ArgKind::State if SubTaskState::from_name(arg).is_none() => {
                    return Err(format!("`{arg}` is not a sub-task state"));
                }
                ArgKind::Status if !RESPONSE_STATUSES.contains(&arg.as_str()) => {
                    return Err(format!("`{arg}` is not a response status"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.predicate.name())?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Logic {
    Ctl,
    Ltl,
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Logic::Ctl => "CTL",
            Logic::Ltl => "LTL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    // CTL
    AX(Box<Formula>),
    EX(Box<Formula>),
    AF(Box<Formula>),
    EF(Box<Formula>),
    AG(Box<Formula>),
    EG(Box<Formula>),
    AU(Box<Formula>, Box<Formula>),
    EU(Box<Formula>, Box<Formula>),
    // LTL
    X(Box<Formula>),
    F(Box<Formula>),
    G(Box<Formula>),
    U(Box<Formula>, Box<Formula>),
}

/// Shorthand constructors used by the catalog, tests and the checker.
pub mod build {
    use super::{Atom, Formula};

    pub fn atom(a: Atom) -> Formula {
        Formula::Atom(a)
    }
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }
    pub fn ax(f: Formula) -> Formula {
        Formula::AX(Box::new(f))
    }
    pub fn ex(f: Formula) -> Formula {
        Formula::EX(Box::new(f))
    }
    pub fn af(f: Formula) -> Formula {
        Formula::AF(Box::new(f))
    }
    pub fn ef(f: Formula) -> Formula {
        Formula::EF(Box::new(f))
    }
    pub fn ag(f: Formula) -> Formula {
        Formula::AG(Box::new(f))
    }
    pub fn eg(f: Formula) -> Formula {
        Formula::EG(Box::new(f))
    }
    pub fn au(a: Formula, b: Formula) -> Formula {
        Formula::AU(Box::new(a), Box::new(b))
    }
    pub fn eu(a: Formula, b: Formula) -> Formula {
        Formula::EU(Box::new(a), Box::new(b))
    }
    pub fn x(f: Formula) -> Formula {
        Formula::X(Box::new(f))
    }
    pub fn f(f: Formula) -> Formula {
        Formula::F(Box::new(f))
    }
    pub fn g(f: Formula) -> Formula {
        Formula::G(Box::new(f))
    }
    pub fn u(a: Formula, b: Formula) -> Formula {
        Formula::U(Box::new(a), Box::new(b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjectionError {
    /// The input already uses LTL operators.
    NotCtl,
    /// An existential operator has no single-trace reading. `witness` holds
    /// the linear body for top-level `EF`, which is checked as "holds
    /// somewhere on the trace" instead.
    NotLinearizable { witness: Option<Formula> },
}

impl fmt::Display for ProjectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectionError::NotCtl => f.write_str("formula is not CTL"),
            ProjectionError::NotLinearizable { witness: Some(_) } => {
                f.write_str("not linearizable (witness mode)")
            }
            ProjectionError::NotLinearizable { witness: None } => f.write_str("not linearizable"),
        }
    }
}

impl Formula {
    pub fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            True | False | Atom(_) => vec![],
            Not(a) | AX(a) | EX(a) | AF(a) | EF(a) | AG(a) | EG(a) | X(a) | F(a) | G(a) => vec![a],
            And(a, b) | Or(a, b) | Implies(a, b) | AU(a, b) | EU(a, b) | U(a, b) => vec![a, b],
        }
    }

    pub fn is_ctl_temporal(&self) -> bool {
        use Formula::*;
        matches!(
            self,
            AX(_) | EX(_) | AF(_) | EF(_) | AG(_) | EG(_) | AU(..) | EU(..)
        )
    }

    pub fn is_ltl_temporal(&self) -> bool {
        matches!(
            self,
            Formula::X(_) | Formula::F(_) | Formula::G(_) | Formula::U(..)
        )
    }

    /// No temporal operator anywhere.
    pub fn is_propositional(&self) -> bool {
        !self.is_ctl_temporal()
            && !self.is_ltl_temporal()
            && self.children().iter().all(|c| c.is_propositional())
    }

    fn any(&self, pred: &dyn Fn(&Formula) -> bool) -> bool {
        pred(self) || self.children().iter().any(|c| c.any(pred))
    }

    /// The logic tag. Purely propositional formulas count as CTL state
    /// formulas. `None` if CTL and LTL operators are mixed.
    pub fn logic(&self) -> Option<Logic> {
        let ctl = self.any(&|f| f.is_ctl_temporal());
        let ltl = self.any(&|f| f.is_ltl_temporal());
        match (ctl, ltl) {
            (true, true) => None,
            (false, true) => Some(Logic::Ltl),
            _ => Some(Logic::Ctl),
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        if let Formula::Atom(a) = self {
            out.push(a);
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Canonical fully-parenthesized text; `parse(render(f)) == f`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_into(&mut s);
        s
    }

    fn render_into(&self, out: &mut String) {
        use Formula::*;
        let unary = |out: &mut String, op: &str, a: &Formula| {
            out.push_str(op);
            out.push('(');
            a.render_into(out);
            out.push(')');
        };
        let binary = |out: &mut String, op: &str, a: &Formula, b: &Formula| {
            out.push('(');
            a.render_into(out);
            out.push(' ');
            out.push_str(op);
            out.push(' ');
            b.render_into(out);
            out.push(')');
        };
        match self {
            True => out.push_str("true"),
            False => out.push_str("false"),
            Atom(a) => out.push_str(&a.to_string()),
            Not(a) => unary(out, "!", a),
            And(a, b) => binary(out, "&", a, b),
            Or(a, b) => binary(out, "|", a, b),
            Implies(a, b) => binary(out, "->", a, b),
            AX(a) => unary(out, "AX", a),
            EX(a) => unary(out, "EX", a),
            AF(a) => unary(out, "AF", a),
            EF(a) => unary(out, "EF", a),
            AG(a) => unary(out, "AG", a),
            EG(a) => unary(out, "EG", a),
            X(a) => unary(out, "X", a),
            F(a) => unary(out, "F", a),
            G(a) => unary(out, "G", a),
            AU(a, b) | EU(a, b) => {
                out.push_str(if matches!(self, AU(..)) { "A[" } else { "E[" });
                a.render_into(out);
                out.push_str(" U ");
                b.render_into(out);
                out.push(']');
            }
            U(a, b) => binary(out, "U", a, b),
        }
    }

    /// Linear-time reading of a CTL formula: universal path quantifiers are
    /// dropped (AG -> G, AF -> F, AX -> X, A[U] -> U). Existential operators
    /// have no single-trace meaning.
    pub fn ltl_projection(&self) -> Result<Formula, ProjectionError> {
        if self.logic() != Some(Logic::Ctl) {
            return Err(ProjectionError::NotCtl);
        }
        if let Formula::EF(body) = self {
            let witness = body.project_inner().ok();
            return Err(ProjectionError::NotLinearizable { witness });
        }
        self.project_inner()
    }

    fn project_inner(&self) -> Result<Formula, ProjectionError> {
        use Formula::*;
        let p = |f: &Formula| f.project_inner().map(Box::new);
        Ok(match self {
            True => True,
            False => False,
            Atom(a) => Atom(a.clone()),
            Not(a) => Not(p(a)?),
            And(a, b) => And(p(a)?, p(b)?),
            Or(a, b) => Or(p(a)?, p(b)?),
            Implies(a, b) => Implies(p(a)?, p(b)?),
            AX(a) => X(p(a)?),
            AF(a) => F(p(a)?),
            AG(a) => G(p(a)?),
            AU(a, b) => U(p(a)?, p(b)?),
            EX(_) | EF(_) | EG(_) | EU(..) => {
                return Err(ProjectionError::NotLinearizable { witness: None })
            }
            X(_) | F(_) | G(_) | U(..) => return Err(ProjectionError::NotCtl),
        })
    }

    /// Universal CTL formula equivalent to this LTL formula, when the formula
    /// lies in a syntactic fragment where adding `A` to every operator
    /// preserves meaning: propositional formulas, conjunction, `p -> f` and
    /// `p | f` with propositional `p`, `X f`, `G f`, and `F`/`U` over
    /// propositional operands.
    pub fn ctl_lifting(&self) -> Option<Formula> {
        use Formula::*;
        if self.is_propositional() {
            return Some(self.clone());
        }
        let l = |f: &Formula| f.ctl_lifting().map(Box::new);
        match self {
            And(a, b) => Some(And(l(a)?, l(b)?)),
            Implies(a, b) if a.is_propositional() => Some(Implies(a.clone(), l(b)?)),
            Or(a, b) if a.is_propositional() => Some(Or(a.clone(), l(b)?)),
            Or(a, b) if b.is_propositional() => Some(Or(l(a)?, b.clone())),
            X(a) => Some(AX(l(a)?)),
            G(a) => Some(AG(l(a)?)),
            F(a) if a.is_propositional() => Some(AF(a.clone())),
            U(a, b) if a.is_propositional() && b.is_propositional() => {
                Some(AU(a.clone(), b.clone()))
            }
            _ => None,
        }
    }

    /// Replaces `$v`, `$ee` style placeholders inside atom arguments.
    pub fn substitute(&self, placeholder: &str, value: &str) -> Formula {
        self.map_atoms(&|a| {
            let mut a = a.clone();
            for arg in &mut a.args {
                if arg == placeholder {
                    *arg = value.to_string();
                }
            }
            Formula::Atom(a)
        })
    }

    pub fn map_atoms(&self, f: &dyn Fn(&Atom) -> Formula) -> Formula {
        use Formula::*;
        let m = |x: &Formula| Box::new(x.map_atoms(f));
        match self {
            True => True,
            False => False,
            Atom(a) => f(a),
            Not(a) => Not(m(a)),
            And(a, b) => And(m(a), m(b)),
            Or(a, b) => Or(m(a), m(b)),
            Implies(a, b) => Implies(m(a), m(b)),
            AX(a) => AX(m(a)),
            EX(a) => EX(m(a)),
            AF(a) => AF(m(a)),
            EF(a) => EF(m(a)),
            AG(a) => AG(m(a)),
            EG(a) => EG(m(a)),
            AU(a, b) => AU(m(a), m(b)),
            EU(a, b) => EU(m(a), m(b)),
            X(a) => X(m(a)),
            F(a) => F(m(a)),
            G(a) => G(m(a)),
            U(a, b) => U(m(a), m(b)),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::build::*;
    use super::*;

    fn p(name: Predicate) -> Formula {
        Formula::Atom(Atom::plain(name))
    }

    #[test]
    fn renders_fully_parenthesized() {
        let hp1 = ag(implies(
            p(Predicate::ReqReceived),
            af(p(Predicate::RespSent)),
        ));
        assert_eq!(hp1.render(), "AG((req_received -> AF(resp_sent)))");
        assert_eq!(p(Predicate::DagBuilt).render(), "dag_built");
        let until = au(p(Predicate::Discovered), not(p(Predicate::DagBuilt)));
        assert_eq!(until.render(), "A[discovered U !(dag_built)]");
    }

    #[test]
    fn logic_tags() {
        assert_eq!(ag(p(Predicate::Aggregated)).logic(), Some(Logic::Ctl));
        assert_eq!(g(p(Predicate::Aggregated)).logic(), Some(Logic::Ltl));
        assert_eq!(p(Predicate::Aggregated).logic(), Some(Logic::Ctl));
        assert_eq!(
            and(ag(p(Predicate::Aggregated)), f(p(Predicate::DagBuilt))).logic(),
            None
        );
    }

    #[test]
    fn projection_maps_universal_operators() {
        let q = p(Predicate::RespSent);
        let pp = p(Predicate::ReqReceived);
        let ctl = ag(implies(pp.clone(), af(q.clone())));
        assert_eq!(
            ctl.ltl_projection().unwrap(),
            g(implies(pp.clone(), f(q.clone())))
        );
        assert_eq!(pp.ltl_projection().unwrap(), pp);
        match ef(q.clone()).ltl_projection() {
            Err(ProjectionError::NotLinearizable { witness: Some(w) }) => assert_eq!(w, q),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            ag(ex(q.clone())).ltl_projection(),
            Err(ProjectionError::NotLinearizable { witness: None })
        );
        assert_eq!(g(q).ltl_projection(), Err(ProjectionError::NotCtl));
    }

    #[test]
    fn lifting_covers_response_patterns_only() {
        let a = p(Predicate::Invoked);
        let b = p(Predicate::Aggregated);
        assert_eq!(
            g(implies(a.clone(), f(b.clone()))).ctl_lifting(),
            Some(ag(implies(a.clone(), af(b.clone()))))
        );
        assert_eq!(f(g(a.clone())).ctl_lifting(), None);
        assert_eq!(g(or(f(a.clone()), f(b.clone()))).ctl_lifting(), None);
    }

    #[test]
    fn atom_validation() {
        assert!(Atom::new(Predicate::StateIs, &["t1", "READY"])
            .validate()
            .is_ok());
        assert!(Atom::new(Predicate::StateIs, &["t1", "BOGUS"])
            .validate()
            .is_err());
        assert!(Atom::new(Predicate::ReqReceived, &["x"])
            .validate()
            .is_err());
        assert!(Atom::new(Predicate::RespSent, &["Success"])
            .validate()
            .is_ok());
        assert!(Atom::new(Predicate::RespSent, &["Maybe"])
            .validate()
            .is_err());
    }
}
