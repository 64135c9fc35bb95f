//! CTL checker against hand-computed truth tables and a brute-force
//! closure-based oracle.

mod support;

use akv::checker::ctl::{replays, satisfying_states};
use akv::checker::{check_ctl, Evidence, KripkeBuilder, KripkeStructure, Outcome};
use akv::tlogic::{Atom, Formula};
use proptest::prelude::*;
use support::{build, formula, Case, CASES, P, Q, R};

fn case(name: &str) -> &'static Case {
    CASES.iter().find(|c| c.name == name).unwrap()
}

fn expect(name: &str) {
    let bad = case(name).mismatches();
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn two_state_loop() {
    expect("two_state_loop");
    let k = build(&case("two_state_loop").spec, false);
    assert_eq!(
        check_ctl(&k, &formula("AG(EF(p))"), false).unwrap().outcome,
        Outcome::Holds
    );
}

#[test]
fn branch_into_two_sinks() {
    expect("branch_into_two_sinks");
}

#[test]
fn loop_with_exit() {
    expect("loop_with_exit");
}

#[test]
fn six_states_with_unfair_cycle() {
    expect("six_states_with_unfair_cycle");
}

#[test]
fn two_fairness_sets() {
    expect("two_fairness_sets");
}

#[test]
fn diamond_with_stutter() {
    expect("diamond_with_stutter");
}

#[test]
fn single_self_loop_and_empty_fairness() {
    expect("single_self_loop_and_empty_fairness");
}

#[test]
fn deadlock_is_totalized() {
    expect("deadlock_is_totalized");
}

#[test]
fn nested_liveness_needs_fairness() {
    expect("nested_liveness_needs_fairness");
}

#[test]
fn response_pattern_on_a_request_cycle() {
    expect("response_pattern_on_a_request_cycle");
}

#[test]
fn unknown_atoms_and_linear_operators_are_errors() {
    let mut b = KripkeBuilder::new();
    let s = b.add_state("s", [Atom::plain(P)]);
    b.set_initial(s);
    let k = b.build().unwrap();
    assert!(check_ctl(&k, &formula("AF(q)"), false).is_err());
    assert!(check_ctl(&k, &formula("F(p)"), false).is_err());
}

// Brute-force oracle: reachability closures by Floyd–Warshall.

struct Oracle<'a> {
    k: &'a KripkeStructure,
    fair: bool,
}

impl Oracle<'_> {
    /// `reach[a][b]`: a path of one or more steps from `a` to `b` inside `mask`.
    fn closure(&self, mask: &[bool]) -> Vec<Vec<bool>> {
        let n = self.k.len();
        let mut reach = vec![vec![false; n]; n];
        for a in 0..n {
            for &b in self.k.successors(a) {
                reach[a][b] = mask[a] && mask[b];
            }
        }
        for m in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if reach[a][m] && reach[m][b] {
                        reach[a][b] = true;
                    }
                }
            }
        }
        reach
    }

    /// States with an infinite path inside `mask`, fair when enabled.
    fn eg(&self, mask: &[bool]) -> Vec<bool> {
        let n = self.k.len();
        let reach = self.closure(mask);
        let star = |a: usize, b: usize| a == b || reach[a][b];
        let sets: &[Vec<bool>] = if self.fair { self.k.fairness() } else { &[] };
        let cyclic: Vec<bool> = (0..n)
            .map(|t| {
                reach[t][t]
                    && sets
                        .iter()
                        .all(|set| (0..n).any(|u| set[u] && star(t, u) && star(u, t)))
            })
            .collect();
        (0..n)
            .map(|s| mask[s] && (0..n).any(|t| cyclic[t] && star(s, t)))
            .collect()
    }

    fn fair_states(&self) -> Vec<bool> {
        self.eg(&vec![true; self.k.len()])
    }

    fn eu(&self, a: &[bool], b: &[bool]) -> Vec<bool> {
        let n = self.k.len();
        let fair = self.fair_states();
        let reach = self.closure(a);
        (0..n)
            .map(|s| {
                let goal = |t: usize| b[t] && fair[t];
                goal(s)
                    || (a[s]
                        && (0..n).any(|t| {
                            goal(t)
                                && self
                                    .k
                                    .predecessors(t)
                                    .iter()
                                    .any(|&m| m == s || reach[s][m])
                        }))
            })
            .collect()
    }

    fn eval(&self, f: &Formula) -> Vec<bool> {
        let n = self.k.len();
        let not = |v: Vec<bool>| v.into_iter().map(|b| !b).collect::<Vec<_>>();
        let all = vec![true; n];
        match f {
            Formula::True => all,
            Formula::False => vec![false; n],
            Formula::Atom(a) => (0..n).map(|s| self.k.holds_at(s, a)).collect(),
            Formula::Not(g) => not(self.eval(g)),
            Formula::And(a, b) => self
                .eval(a)
                .iter()
                .zip(self.eval(b))
                .map(|(x, y)| *x && y)
                .collect(),
            Formula::Or(a, b) => self
                .eval(a)
                .iter()
                .zip(self.eval(b))
                .map(|(x, y)| *x || y)
                .collect(),
            Formula::Implies(a, b) => self
                .eval(a)
                .iter()
                .zip(self.eval(b))
                .map(|(x, y)| !*x || y)
                .collect(),
            Formula::EX(g) => {
                let g = self.eval(g);
                let fair = self.fair_states();
                (0..n)
                    .map(|s| self.k.successors(s).iter().any(|&t| g[t] && fair[t]))
                    .collect()
            }
            Formula::EU(a, b) => self.eu(&self.eval(a), &self.eval(b)),
            Formula::EF(g) => self.eu(&all, &self.eval(g)),
            Formula::EG(g) => self.eg(&self.eval(g)),
            Formula::AX(g) => not(self.eval(&Formula::EX(Box::new(Formula::Not(g.clone()))))),
            Formula::AG(g) => not(self.eu(&all, &not(self.eval(g)))),
            Formula::AF(g) => not(self.eg(&not(self.eval(g)))),
            Formula::AU(a, b) => {
                let na = not(self.eval(a));
                let nb = not(self.eval(b));
                let both: Vec<bool> = na.iter().zip(&nb).map(|(x, y)| *x && *y).collect();
                let stuck = self.eu(&nb, &both);
                let stall = self.eg(&nb);
                (0..n).map(|s| !(stuck[s] || stall[s])).collect()
            }
            other => panic!("not CTL: {other:?}"),
        }
    }
}

/// State count, edges, label bits per state, fairness sets.
type RawStructure = (usize, Vec<(usize, usize)>, Vec<u8>, Vec<Vec<usize>>);

fn arb_structure() -> impl Strategy<Value = RawStructure> {
    (1usize..=6).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec((0..n, 0..n), 0..=3 * n),
            prop::collection::vec(0u8..8, n),
            prop::collection::vec(prop::collection::vec(0..n, 0..=2), 0..=2),
        )
    })
}

fn arb_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::Atom(Atom::plain(P))),
        Just(Formula::Atom(Atom::plain(Q))),
        Just(Formula::Atom(Atom::plain(R))),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let b = |f: Formula| Box::new(f);
        prop_oneof![
            inner.clone().prop_map(move |f| Formula::Not(b(f))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Formula::And(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Formula::Or(b(x), b(y))),
            inner.clone().prop_map(move |f| Formula::EX(b(f))),
            inner.clone().prop_map(move |f| Formula::AX(b(f))),
            inner.clone().prop_map(move |f| Formula::EF(b(f))),
            inner.clone().prop_map(move |f| Formula::AF(b(f))),
            inner.clone().prop_map(move |f| Formula::EG(b(f))),
            inner.clone().prop_map(move |f| Formula::AG(b(f))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Formula::EU(b(x), b(y))),
            (inner.clone(), inner).prop_map(move |(x, y)| Formula::AU(b(x), b(y))),
        ]
    })
}

fn random_kripke(
    n: usize,
    edges: &[(usize, usize)],
    labels: &[u8],
    fairness: &[Vec<usize>],
    initial: usize,
) -> KripkeStructure {
    let mut b = KripkeBuilder::new();
    for p in [P, Q, R] {
        b.declare(Atom::plain(p));
    }
    for (s, bits) in labels.iter().enumerate() {
        let atoms = [P, Q, R]
            .into_iter()
            .enumerate()
            .filter(|(i, _)| bits & (1 << i) != 0)
            .map(|(_, p)| Atom::plain(p));
        b.add_state(format!("s{s}"), atoms);
    }
    for &(x, y) in edges {
        b.add_edge(x, y);
    }
    b.set_initial(initial % n);
    for set in fairness {
        b.add_fairness(set.iter().copied());
    }
    b.build().unwrap()
}

fn neg(f: Formula) -> Formula {
    Formula::Not(Box::new(f))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn agrees_with_closure_oracle((n, edges, labels, fairness) in arb_structure(), f in arb_formula(), fair: bool, init in 0usize..6) {
        let k = random_kripke(n, &edges, &labels, &fairness, init);
        let oracle = Oracle { k: &k, fair };
        prop_assert_eq!(satisfying_states(&k, &f, fair).unwrap(), oracle.eval(&f), "{}", f.render());
    }

    #[test]
    fn universal_operators_are_dual_to_existential((n, edges, labels, fairness) in arb_structure(), a in arb_formula(), b in arb_formula(), fair: bool) {
        let k = random_kripke(n, &edges, &labels, &fairness, 0);
        let sat = |f: Formula| satisfying_states(&k, &f, fair).unwrap();
        let flip = |v: Vec<bool>| v.into_iter().map(|x| !x).collect::<Vec<_>>();
        let bx = |f: &Formula| Box::new(f.clone());
        prop_assert_eq!(sat(Formula::AX(bx(&a))), flip(sat(Formula::EX(Box::new(neg(a.clone()))))));
        prop_assert_eq!(sat(Formula::AG(bx(&a))), flip(sat(Formula::EF(Box::new(neg(a.clone()))))));
        prop_assert_eq!(sat(Formula::AF(bx(&a))), flip(sat(Formula::EG(Box::new(neg(a.clone()))))));
        let release = Formula::Or(
            Box::new(Formula::EU(Box::new(neg(b.clone())), Box::new(Formula::And(Box::new(neg(a.clone())), Box::new(neg(b.clone())))))),
            Box::new(Formula::EG(Box::new(neg(b.clone())))),
        );
        prop_assert_eq!(sat(Formula::AU(bx(&a), bx(&b))), flip(sat(release)));
    }

    #[test]
    fn counterexamples_replay_and_start_in_a_falsifying_initial_state((n, edges, labels, fairness) in arb_structure(), f in arb_formula(), fair: bool, init in 0usize..6) {
        let k = random_kripke(n, &edges, &labels, &fairness, init);
        let verdict = check_ctl(&k, &f, fair).unwrap();
        let truth = Oracle { k: &k, fair }.eval(&f);
        let holds = k.initial().iter().all(|&s| truth[s]);
        prop_assert_eq!(verdict.outcome == Outcome::Holds, holds);
        if let Some(Evidence::Lasso { lasso, focus, .. }) = verdict.evidence {
            prop_assert!(replays(&k, &lasso));
            prop_assert!(k.initial().contains(&lasso.start()));
            prop_assert!(!truth[lasso.start()]);
            prop_assert!(focus < lasso.len());
        } else {
            prop_assert!(holds);
        }
    }
}
