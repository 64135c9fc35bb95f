//! Explicit-state CTL model checking.
//!
//! Formulas are evaluated bottom-up over the `{EX, EU, EG}` basis; the
//! universal operators are rewritten by duality. Under fairness, path
//! quantifiers range over fair paths only: paths visiting every fairness
//! set infinitely often. Fair `EG` keeps the strongly connected components
//! that are nontrivial and meet every fairness set.

use std::cell::RefCell;
use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use super::kripke::KripkeStructure;
use super::{Evidence, Lasso, Outcome, Verdict};
use crate::tlogic::{Atom, Formula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("`{0}` uses linear-time operators; only CTL can be model checked")]
    NotCtl(String),
    #[error("atom `{0}` is not in the structure's vocabulary")]
    UnknownAtom(Atom),
}

type States = Vec<bool>;

fn not(s: &[bool]) -> States {
    s.iter().map(|b| !b).collect()
}

fn and(a: &[bool], b: &[bool]) -> States {
    a.iter().zip(b).map(|(x, y)| *x && *y).collect()
}

fn or(a: &[bool], b: &[bool]) -> States {
    a.iter().zip(b).map(|(x, y)| *x || *y).collect()
}

/// Strongly connected components of the subgraph induced by `mask`, as a
/// component id per state (`usize::MAX` outside the mask) plus the member
/// lists. Iterative Tarjan.
fn sccs(k: &KripkeStructure, mask: &[bool]) -> (Vec<usize>, Vec<Vec<usize>>) {
    const UNSEEN: usize = usize::MAX;
    let n = k.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![UNSEEN; n];
    let mut comps = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if !mask[root] || index[root] != UNSEEN {
            continue;
        }
        let mut frames: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = frames.last_mut() {
            let succ = k.successors(v);
            if *i < succ.len() {
                let w = succ[*i];
                *i += 1;
                if !mask[w] {
                    continue;
                }
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if low[v] == index[v] {
                let id = comps.len();
                let mut members = Vec::new();
                loop {
                    let w = stack.pop().expect("v is on the stack");
                    on_stack[w] = false;
                    comp[w] = id;
                    members.push(w);
                    if w == v {
                        break;
                    }
                }
                comps.push(members);
            }
            if let Some(&(parent, _)) = frames.last() {
                low[parent] = low[parent].min(low[v]);
            }
        }
    }
    (comp, comps)
}

pub(crate) struct Engine<'a> {
    k: &'a KripkeStructure,
    fair: bool,
    /// States with at least one fair path; all states when fairness is off.
    fair_states: States,
    cache: RefCell<HashMap<Formula, States>>,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(k: &'a KripkeStructure, fair: bool) -> Self {
        let mut e = Engine {
            k,
            fair,
            fair_states: vec![true; k.len()],
            cache: RefCell::new(HashMap::new()),
        };
        if fair {
            e.fair_states = e.eg(&vec![true; k.len()]);
        }
        e
    }

    fn all(&self) -> States {
        vec![true; self.k.len()]
    }

    /// States with a successor in `target`.
    fn ex(&self, target: &[bool]) -> States {
        let mut out = vec![false; self.k.len()];
        for (t, _) in target.iter().enumerate().filter(|(_, b)| **b) {
            for &p in self.k.predecessors(t) {
                out[p] = true;
            }
        }
        out
    }

    /// Least fixpoint: `target` states plus `stay` states that can reach
    /// them through `stay`.
    fn eu(&self, stay: &[bool], target: &[bool]) -> States {
        let mut out = target.to_vec();
        let mut queue: VecDeque<usize> = (0..out.len()).filter(|&s| out[s]).collect();
        while let Some(t) = queue.pop_front() {
            for &p in self.k.predecessors(t) {
                if !out[p] && stay[p] {
                    out[p] = true;
                    queue.push_back(p);
                }
            }
        }
        out
    }

    /// Components inside `mask` that can host an infinite (fair) path.
    fn good_components(&self, mask: &[bool]) -> (Vec<usize>, Vec<Vec<usize>>, Vec<bool>) {
        let (comp, comps) = sccs(self.k, mask);
        let good: Vec<bool> = comps
            .iter()
            .map(|members| {
                let nontrivial = members.len() > 1 || self.k.has_edge(members[0], members[0]);
                nontrivial
                    && (!self.fair
                        || self
                            .k
                            .fairness()
                            .iter()
                            .all(|set| members.iter().any(|&s| set[s])))
            })
            .collect();
        (comp, comps, good)
    }

    /// Greatest fixpoint: states with an infinite (fair) path inside `mask`.
    fn eg(&self, mask: &[bool]) -> States {
        let (comp, _, good) = self.good_components(mask);
        let seeds: States = (0..self.k.len())
            .map(|s| comp[s] != usize::MAX && good[comp[s]])
            .collect();
        self.eu(mask, &seeds)
    }

    pub(crate) fn sat(&self, f: &Formula) -> Result<States, CheckError> {
        if let Some(hit) = self.cache.borrow().get(f) {
            return Ok(hit.clone());
        }
        let fs = &self.fair_states;
        let out = match f {
            Formula::True => self.all(),
            Formula::False => vec![false; self.k.len()],
            Formula::Atom(a) => self
                .k
                .states_with(a)
                .ok_or_else(|| CheckError::UnknownAtom(a.clone()))?,
            Formula::Not(g) => not(&self.sat(g)?),
            Formula::And(a, b) => and(&self.sat(a)?, &self.sat(b)?),
            Formula::Or(a, b) => or(&self.sat(a)?, &self.sat(b)?),
            Formula::Implies(a, b) => or(&not(&self.sat(a)?), &self.sat(b)?),
            Formula::EX(g) => self.ex(&and(&self.sat(g)?, fs)),
            Formula::EF(g) => self.eu(&self.all(), &and(&self.sat(g)?, fs)),
            Formula::EU(a, b) => self.eu(&self.sat(a)?, &and(&self.sat(b)?, fs)),
            Formula::EG(g) => self.eg(&self.sat(g)?),
            Formula::AX(g) => not(&self.ex(&and(&not(&self.sat(g)?), fs))),
            Formula::AF(g) => not(&self.eg(&not(&self.sat(g)?))),
            Formula::AG(g) => not(&self.eu(&self.all(), &and(&not(&self.sat(g)?), fs))),
            Formula::AU(a, b) => {
                let na = not(&self.sat(a)?);
                let nb = not(&self.sat(b)?);
                let stuck = self.eu(&nb, &and(&and(&na, &nb), fs));
                not(&or(&stuck, &self.eg(&nb)))
            }
            Formula::X(_) | Formula::F(_) | Formula::G(_) | Formula::U(..) => {
                return Err(CheckError::NotCtl(f.render()))
            }
        };
        self.cache.borrow_mut().insert(f.clone(), out.clone());
        Ok(out)
    }

    /// Shortest path from `from` to a `target` state whose intermediate
    /// states lie in `stay`.
    fn path_to(&self, from: usize, stay: &[bool], target: &[bool]) -> Option<Vec<usize>> {
        let mut parent = vec![usize::MAX; self.k.len()];
        let mut seen = vec![false; self.k.len()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(s) = queue.pop_front() {
            if target[s] {
                let mut path = vec![s];
                let mut cur = s;
                while cur != from {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            if !stay[s] {
                continue;
            }
            for &t in self.k.successors(s) {
                if !seen[t] {
                    seen[t] = true;
                    parent[t] = s;
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// Path of at least one step from `from` to a `target` state, within
    /// `stay`.
    fn step_path(&self, from: usize, stay: &[bool], target: &[bool]) -> Option<Vec<usize>> {
        self.k
            .successors(from)
            .iter()
            .filter(|&&t| stay[t])
            .filter_map(|&t| self.path_to(t, stay, target).map(|p| (t, p)))
            .min_by_key(|(_, p)| p.len())
            .map(|(_, p)| {
                let mut full = vec![from];
                full.extend(p);
                full
            })
    }

    /// A lasso from `from` staying inside `mask` whose cycle meets every
    /// fairness set (when fairness is on).
    fn lasso_within(&self, from: usize, mask: &[bool]) -> Option<Lasso> {
        if !mask[from] {
            return None;
        }
        let (comp, comps, good) = self.good_components(mask);
        let seeds: States = (0..self.k.len())
            .map(|s| comp[s] != usize::MAX && good[comp[s]])
            .collect();
        let path = self.path_to(from, mask, &seeds)?;
        let entry = *path.last().expect("paths are nonempty");
        let members = &comps[comp[entry]];
        let mut inside = vec![false; self.k.len()];
        for &m in members {
            inside[m] = true;
        }
        let mut cycle = vec![entry];
        let mut cur = entry;
        if self.fair {
            for set in self.k.fairness() {
                if set[cur] {
                    continue;
                }
                let target = and(set, &inside);
                let seg = self
                    .path_to(cur, &inside, &target)
                    .expect("component meets every fairness set");
                cycle.extend(&seg[1..]);
                cur = *seg.last().expect("nonempty");
            }
        }
        let mut home = vec![false; self.k.len()];
        home[entry] = true;
        let back = self
            .step_path(cur, &inside, &home)
            .expect("nontrivial component");
        cycle.extend(&back[1..back.len() - 1]);
        Some(Lasso {
            prefix: path[..path.len() - 1].to_vec(),
            cycle,
        })
    }

    /// Some (fair if possible) infinite path from `from`.
    fn any_lasso(&self, from: usize) -> Lasso {
        self.lasso_within(from, &self.all())
            .or_else(|| {
                Engine {
                    fair: false,
                    ..self.shallow()
                }
                .lasso_within(from, &self.all())
            })
            .expect("total structures have an infinite path from every state")
    }

    fn shallow(&self) -> Engine<'a> {
        Engine {
            k: self.k,
            fair: self.fair,
            fair_states: Vec::new(),
            cache: RefCell::new(HashMap::new()),
        }
    }

    fn leaf(&self, s: usize, sub: &Formula) -> Cex {
        Cex {
            lasso: self.any_lasso(s),
            focus: 0,
            sub: sub.clone(),
        }
    }

    fn then(&self, path: &[usize], rest: Cex) -> Cex {
        Cex {
            focus: rest.focus + path.len() - 1,
            lasso: rest.lasso.prepend(path),
            sub: rest.sub,
        }
    }

    /// A path from `s` on which `f` (false at `s`) visibly fails.
    fn counterexample(&self, s: usize, f: &Formula) -> Result<Cex, CheckError> {
        let fs = &self.fair_states;
        Ok(match f {
            Formula::Not(g) => self.witness(s, g)?,
            Formula::And(a, b) => {
                if !self.sat(a)?[s] {
                    self.counterexample(s, a)?
                } else {
                    self.counterexample(s, b)?
                }
            }
            Formula::Or(a, _) => self.counterexample(s, a)?,
            Formula::Implies(_, b) => self.counterexample(s, b)?,
            Formula::AX(g) => {
                let bad = and(&not(&self.sat(g)?), fs);
                match self.k.successors(s).iter().find(|&&t| bad[t]) {
                    Some(&t) => self.then(&[s, t], self.counterexample(t, g)?),
                    None => self.leaf(s, f),
                }
            }
            Formula::AG(g) => {
                let bad = and(&not(&self.sat(g)?), fs);
                match self.path_to(s, &self.all(), &bad) {
                    Some(path) => {
                        let t = *path.last().expect("nonempty");
                        self.then(&path, self.counterexample(t, g)?)
                    }
                    None => self.leaf(s, f),
                }
            }
            Formula::AF(g) => match self.lasso_within(s, &not(&self.sat(g)?)) {
                Some(lasso) => Cex {
                    lasso,
                    focus: 0,
                    sub: f.clone(),
                },
                None => self.leaf(s, f),
            },
            Formula::AU(a, b) => {
                let na = not(&self.sat(a)?);
                let nb = not(&self.sat(b)?);
                if let Some(lasso) = self.lasso_within(s, &nb) {
                    Cex {
                        lasso,
                        focus: 0,
                        sub: f.clone(),
                    }
                } else {
                    let stuck = and(&and(&na, &nb), fs);
                    match self.path_to(s, &and(&nb, &not(&na)), &stuck) {
                        Some(path) => {
                            let t = *path.last().expect("nonempty");
                            self.then(&path, self.leaf(t, f))
                        }
                        None => self.leaf(s, f),
                    }
                }
            }
            _ => self.leaf(s, f),
        })
    }

    /// A path from `s` on which `g` (true at `s`) visibly holds; used to
    /// refute `!g`.
    fn witness(&self, s: usize, g: &Formula) -> Result<Cex, CheckError> {
        let fs = &self.fair_states;
        let neg = Formula::Not(Box::new(g.clone()));
        Ok(match g {
            Formula::Not(h) => self.counterexample(s, h)?,
            Formula::EX(h) => {
                let good = and(&self.sat(h)?, fs);
                match self.k.successors(s).iter().find(|&&t| good[t]) {
                    Some(&t) => self.then(&[s, t], self.witness(t, h)?),
                    None => self.leaf(s, &neg),
                }
            }
            Formula::EF(h) | Formula::EU(_, h) => {
                let stay = match g {
                    Formula::EU(a, _) => self.sat(a)?,
                    _ => self.all(),
                };
                match self.path_to(s, &stay, &and(&self.sat(h)?, fs)) {
                    Some(path) => {
                        let t = *path.last().expect("nonempty");
                        self.then(&path, self.witness(t, h)?)
                    }
                    None => self.leaf(s, &neg),
                }
            }
            Formula::EG(h) => match self.lasso_within(s, &self.sat(h)?) {
                Some(lasso) => Cex {
                    lasso,
                    focus: 0,
                    sub: neg,
                },
                None => self.leaf(s, &neg),
            },
            Formula::And(a, b) => {
                if a.is_propositional() {
                    self.witness(s, b)?
                } else {
                    self.witness(s, a)?
                }
            }
            Formula::Or(a, b) => {
                if self.sat(a)?[s] {
                    self.witness(s, a)?
                } else {
                    self.witness(s, b)?
                }
            }
            Formula::Implies(a, b) => {
                if !self.sat(a)?[s] {
                    self.counterexample(s, a)?
                } else {
                    self.witness(s, b)?
                }
            }
            _ => self.leaf(s, &neg),
        })
    }
}

pub(crate) struct Cex {
    lasso: Lasso,
    focus: usize,
    sub: Formula,
}

/// States of `k` satisfying `f`.
pub fn satisfying_states(
    k: &KripkeStructure,
    f: &Formula,
    fair: bool,
) -> Result<Vec<bool>, CheckError> {
    Engine::new(k, fair).sat(f)
}

/// `Holds` iff every initial state satisfies `f`; otherwise `Fails` with a
/// lasso from the first falsifying initial state.
pub fn check_ctl(k: &KripkeStructure, f: &Formula, fair: bool) -> Result<Verdict, CheckError> {
    let engine = Engine::new(k, fair);
    let sat = engine.sat(f)?;
    match k.initial().iter().find(|&&s| !sat[s]) {
        None => Ok(Verdict {
            outcome: Outcome::Holds,
            evidence: None,
        }),
        Some(&s) => {
            let cex = engine.counterexample(s, f)?;
            Ok(Verdict {
                outcome: Outcome::Fails,
                evidence: Some(Evidence::Lasso {
                    lasso: cex.lasso,
                    focus: cex.focus,
                    subformula: cex.sub.render(),
                }),
            })
        }
    }
}

/// True iff `lasso` is a path of `k`: consecutive states are linked and the
/// cycle closes.
pub fn replays(k: &KripkeStructure, lasso: &Lasso) -> bool {
    let states: Vec<usize> = lasso.states().collect();
    !lasso.cycle.is_empty()
        && states.windows(2).all(|w| k.has_edge(w[0], w[1]))
        && k.has_edge(*lasso.cycle.last().expect("nonempty"), lasso.cycle[0])
}
