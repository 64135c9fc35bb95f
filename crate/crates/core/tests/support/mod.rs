//! Hand-computed CTL truth tables shared by the oracle and acceptance
//! tests. Each row gives, per state, whether the formula holds without and
//! with the structure's fairness sets.

#![allow(dead_code)]

use akv::checker::ctl::satisfying_states;
use akv::checker::{KripkeBuilder, KripkeStructure};
use akv::tlogic::{parse, Atom, Formula, Predicate};

pub const P: Predicate = Predicate::ReqReceived;
pub const Q: Predicate = Predicate::RespSent;
pub const R: Predicate = Predicate::Aggregated;

/// `p`, `q`, `r` as standalone letters stand for three plain atoms.
pub fn formula(text: &str) -> Formula {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let alone = |j: Option<&char>| j.is_none_or(|c| !c.is_alphanumeric() && *c != '_');
        let isolated =
            alone(i.checked_sub(1).and_then(|j| chars.get(j))) && alone(chars.get(i + 1));
        match c {
            'p' if isolated => out.push_str(P.name()),
            'q' if isolated => out.push_str(Q.name()),
            'r' if isolated => out.push_str(R.name()),
            _ => out.push(c),
        }
    }
    parse(&out).unwrap_or_else(|e| panic!("{text}: {e}"))
}

pub struct Spec {
    pub n: usize,
    pub edges: &'static [(usize, usize)],
    /// One string per state, holding any of `p`, `q`, `r`.
    pub labels: &'static [&'static str],
    pub fairness: &'static [&'static [usize]],
}

pub fn build(spec: &Spec, fair: bool) -> KripkeStructure {
    let mut b = KripkeBuilder::new();
    for p in [P, Q, R] {
        b.declare(Atom::plain(p));
    }
    for s in 0..spec.n {
        let l = spec.labels[s];
        let atoms = [('p', P), ('q', Q), ('r', R)]
            .into_iter()
            .filter(|(c, _)| l.contains(*c))
            .map(|(_, p)| Atom::plain(p));
        b.add_state(format!("s{s}"), atoms);
    }
    for &(x, y) in spec.edges {
        b.add_edge(x, y);
    }
    b.set_initial(0);
    if fair {
        for set in spec.fairness {
            b.add_fairness(set.iter().copied());
        }
    }
    b.build().unwrap()
}

pub fn table(k: &KripkeStructure, f: &str, fair: bool) -> String {
    satisfying_states(k, &formula(f), fair)
        .unwrap()
        .iter()
        .map(|&b| if b { '1' } else { '0' })
        .collect()
}

pub struct Case {
    pub name: &'static str,
    pub spec: Spec,
    /// `(formula, expected without fairness, expected with fairness)`.
    pub rows: &'static [(&'static str, &'static str, &'static str)],
}

impl Case {
    /// Rows whose computed table differs from the hand table.
    pub fn mismatches(&self) -> Vec<String> {
        let plain = build(&self.spec, false);
        let fair = build(&self.spec, true);
        let mut out = Vec::new();
        for &(f, without, with) in self.rows {
            for (k, on, want) in [(&plain, false, without), (&fair, true, with)] {
                let got = table(k, f, on);
                if got != want {
                    out.push(format!(
                        "{}: {f} fair={on}: got {got}, expected {want}",
                        self.name
                    ));
                }
            }
        }
        out
    }
}

pub const CASES: &[Case] = &[
    Case {
        name: "two_state_loop",
        spec: Spec {
            n: 2,
            edges: &[(0, 1), (1, 0)],
            labels: &["", "p"],
            fairness: &[&[1]],
        },
        rows: &[
            ("EX(p)", "10", "10"),
            ("AX(p)", "10", "10"),
            ("AG(EF(p))", "11", "11"),
            ("EG(p)", "00", "00"),
            ("EF(p)", "11", "11"),
            ("AF(p)", "11", "11"),
            ("A[!p U p]", "11", "11"),
        ],
    },
    Case {
        name: "branch_into_two_sinks",
        spec: Spec {
            n: 3,
            edges: &[(0, 1), (0, 2), (1, 1), (2, 2)],
            labels: &["p", "p", "q"],
            fairness: &[&[2]],
        },
        rows: &[
            ("EX(q)", "101", "101"),
            ("AX(q)", "001", "111"),
            ("EX(p)", "110", "000"),
            ("EG(p)", "110", "000"),
            ("AG(p)", "010", "010"),
            ("AF(q)", "001", "111"),
            ("EF(q)", "101", "101"),
            ("E[p U q]", "101", "101"),
            ("A[p U q]", "001", "111"),
            ("EG(true)", "111", "101"),
        ],
    },
    Case {
        name: "loop_with_exit",
        spec: Spec {
            n: 4,
            edges: &[(0, 1), (1, 2), (2, 3), (3, 3), (1, 0)],
            labels: &["p", "p", "r", "q"],
            fairness: &[&[3]],
        },
        rows: &[
            ("EG(p)", "1100", "0000"),
            ("AF(q)", "0011", "1111"),
            ("E[p U r]", "1110", "1110"),
            ("A[p U r]", "0010", "1110"),
            ("AX(r)", "0000", "0000"),
            ("EX(r)", "0100", "0100"),
            ("AG(!r)", "0001", "0001"),
        ],
    },
    Case {
        name: "six_states_with_unfair_cycle",
        spec: Spec {
            n: 6,
            edges: &[(0, 1), (0, 2), (1, 3), (2, 4), (3, 5), (4, 4), (5, 1)],
            labels: &["r", "p", "", "p", "q", "p"],
            fairness: &[&[4]],
        },
        rows: &[
            ("EG(p)", "010101", "000000"),
            ("AF(q)", "001010", "111111"),
            ("EF(q)", "101010", "101010"),
            ("EF(p)", "110101", "000000"),
            ("AG(p)", "010101", "010101"),
            ("EX(p)", "110101", "000000"),
            ("AX(p)", "010101", "010101"),
            ("E[r U q]", "000010", "000010"),
            ("E[r U p]", "110101", "000000"),
            ("A[r U p]", "010101", "010101"),
            ("EG(!q)", "110101", "000000"),
            ("EX(true)", "111111", "101010"),
        ],
    },
    Case {
        name: "two_fairness_sets",
        spec: Spec {
            n: 3,
            edges: &[(0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (2, 2)],
            labels: &["p", "", "p"],
            fairness: &[&[0], &[1]],
        },
        rows: &[
            ("EG(p)", "101", "000"),
            ("AF(!p)", "010", "111"),
            ("AG(p)", "001", "001"),
            ("EX(p)", "111", "110"),
            ("EG(true)", "111", "110"),
            ("AG(AF(!p))", "000", "111"),
        ],
    },
    Case {
        name: "diamond_with_stutter",
        spec: Spec {
            n: 5,
            edges: &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (4, 4), (2, 2)],
            labels: &["p", "p", "p", "q", "r"],
            fairness: &[&[4]],
        },
        rows: &[
            ("A[p U q]", "01010", "11110"),
            ("E[p U q]", "11110", "11110"),
            ("AF(r)", "01011", "11111"),
            ("EG(p)", "10100", "00000"),
            ("AG(q -> AX(r))", "11111", "11111"),
            ("EF(q & EX(r))", "11110", "11110"),
        ],
    },
    Case {
        name: "single_self_loop_and_empty_fairness",
        spec: Spec {
            n: 1,
            edges: &[(0, 0)],
            labels: &["p"],
            fairness: &[&[]],
        },
        rows: &[
            ("EX(p)", "1", "0"),
            ("AX(q)", "0", "1"),
            ("EG(p)", "1", "0"),
            ("AG(q)", "0", "1"),
            ("AF(q)", "0", "1"),
            ("EF(p)", "1", "0"),
            ("A[q U p]", "1", "1"),
            ("E[q U q]", "0", "0"),
        ],
    },
    Case {
        name: "deadlock_is_totalized",
        spec: Spec {
            n: 4,
            edges: &[(0, 1), (1, 2), (3, 0)],
            labels: &["", "", "p", "q"],
            fairness: &[&[2]],
        },
        rows: &[
            ("AF(p)", "1111", "1111"),
            ("AX(p)", "0110", "0110"),
            ("EG(!p)", "0000", "0000"),
            ("AG(!q)", "1110", "1110"),
            ("E[!p U q]", "0001", "0001"),
        ],
    },
    Case {
        name: "nested_liveness_needs_fairness",
        spec: Spec {
            n: 3,
            edges: &[(0, 1), (1, 2), (2, 0), (1, 1)],
            labels: &["p", "", "q"],
            fairness: &[&[2]],
        },
        rows: &[
            ("AF(p)", "101", "111"),
            ("AG(AF(p))", "000", "111"),
            ("EG(!p)", "010", "000"),
            ("EX(q)", "010", "010"),
            ("AX(q)", "000", "000"),
            ("E[!q U p]", "100", "100"),
        ],
    },
    // 0 idle, 1 request, 2 busy (may stall), 3 responded.
    Case {
        name: "response_pattern_on_a_request_cycle",
        spec: Spec {
            n: 4,
            edges: &[(0, 1), (1, 2), (2, 2), (2, 3), (3, 0)],
            labels: &["", "p", "", "q"],
            fairness: &[&[3]],
        },
        rows: &[
            ("AG(p -> AF(q))", "0000", "1111"),
            ("AG(p -> EF(q))", "1111", "1111"),
            ("AX(!q)", "1101", "1101"),
            ("EG(!q)", "1110", "0000"),
            ("A[!q U q]", "0001", "1111"),
            ("AG(q -> AX(!p))", "1111", "1111"),
        ],
    },
];
