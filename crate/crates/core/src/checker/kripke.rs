//! Finite labeled transition systems.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::tlogic::Atom;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KripkeError {
    #[error("state index {0} out of range")]
    BadState(usize),
    #[error("no initial state")]
    NoInitial,
}

/// States are dense indices. The transition relation is total: states
/// without successors get a self-loop when built.
#[derive(Debug, Clone)]
pub struct KripkeStructure {
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    initial: Vec<usize>,
    labels: Vec<Vec<u32>>,
    atoms: Vec<Atom>,
    atom_ids: HashMap<Atom, u32>,
    fairness: Vec<Vec<bool>>,
    names: Vec<String>,
}

impl KripkeStructure {
    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn successors(&self, s: usize) -> &[usize] {
        &self.succ[s]
    }

    pub fn predecessors(&self, s: usize) -> &[usize] {
        &self.pred[s]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.succ.get(from).is_some_and(|s| s.contains(&to))
    }

    pub fn transition_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// Every atom the structure can label, labeled somewhere or not.
    pub fn vocabulary(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn knows(&self, atom: &Atom) -> bool {
        self.atom_ids.contains_key(atom)
    }

    pub fn labels(&self, s: usize) -> impl Iterator<Item = &Atom> {
        self.labels[s].iter().map(|&i| &self.atoms[i as usize])
    }

    /// Membership vector of the states labeled with `atom`.
    pub fn states_with(&self, atom: &Atom) -> Option<Vec<bool>> {
        let id = *self.atom_ids.get(atom)?;
        Some(
            self.labels
                .iter()
                .map(|l| l.binary_search(&id).is_ok())
                .collect(),
        )
    }

    pub fn holds_at(&self, s: usize, atom: &Atom) -> bool {
        self.atom_ids
            .get(atom)
            .is_some_and(|id| self.labels[s].binary_search(id).is_ok())
    }

    /// Sets of states every fair path must visit infinitely often.
    pub fn fairness(&self) -> &[Vec<bool>] {
        &self.fairness
    }

    pub fn name(&self, s: usize) -> String {
        self.names
            .get(s)
            .cloned()
            .unwrap_or_else(|| format!("s{s}"))
    }
}

#[derive(Debug, Clone, Default)]
pub struct KripkeBuilder {
    succ: Vec<BTreeSet<usize>>,
    initial: BTreeSet<usize>,
    labels: Vec<BTreeSet<u32>>,
    atoms: Vec<Atom>,
    atom_ids: HashMap<Atom, u32>,
    fairness: Vec<Vec<usize>>,
    names: Vec<String>,
}

impl KripkeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    fn intern(&mut self, atom: Atom) -> u32 {
        if let Some(&id) = self.atom_ids.get(&atom) {
            return id;
        }
        let id = self.atoms.len() as u32;
        self.atom_ids.insert(atom.clone(), id);
        self.atoms.push(atom);
        id
    }

    /// Adds `atom` to the vocabulary without labeling any state.
    pub fn declare(&mut self, atom: Atom) {
        self.intern(atom);
    }

    pub fn add_state(
        &mut self,
        name: impl Into<String>,
        labels: impl IntoIterator<Item = Atom>,
    ) -> usize {
        let ids = labels.into_iter().map(|a| self.intern(a)).collect();
        self.succ.push(BTreeSet::new());
        self.labels.push(ids);
        self.names.push(name.into());
        self.succ.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, to: usize) {
        self.succ[from].insert(to);
    }

    pub fn set_initial(&mut self, s: usize) {
        self.initial.insert(s);
    }

    pub fn add_fairness(&mut self, states: impl IntoIterator<Item = usize>) {
        self.fairness.push(states.into_iter().collect());
    }

    pub fn build(self) -> Result<KripkeStructure, KripkeError> {
        let n = self.succ.len();
        if self.initial.is_empty() {
            return Err(KripkeError::NoInitial);
        }
        let bad = self
            .succ
            .iter()
            .flatten()
            .chain(&self.initial)
            .chain(self.fairness.iter().flatten())
            .find(|&&s| s >= n);
        if let Some(&s) = bad {
            return Err(KripkeError::BadState(s));
        }
        let succ: Vec<Vec<usize>> = self
            .succ
            .into_iter()
            .enumerate()
            .map(|(s, out)| {
                if out.is_empty() {
                    vec![s]
                } else {
                    out.into_iter().collect()
                }
            })
            .collect();
        let mut pred = vec![Vec::new(); n];
        for (s, out) in succ.iter().enumerate() {
            for &t in out {
                pred[t].push(s);
            }
        }
        let fairness = self
            .fairness
            .into_iter()
            .map(|set| {
                let mut mask = vec![false; n];
                for s in set {
                    mask[s] = true;
                }
                mask
            })
            .collect();
        Ok(KripkeStructure {
            succ,
            pred,
            initial: self.initial.into_iter().collect(),
            labels: self
                .labels
                .into_iter()
                .map(|l| l.into_iter().collect())
                .collect(),
            atoms: self.atoms,
            atom_ids: self.atom_ids,
            fairness,
            names: self.names,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tlogic::Predicate;

    #[test]
    fn build_totalizes_and_indexes() {
        let p = Atom::plain(Predicate::ReqReceived);
        let q = Atom::plain(Predicate::RespSent);
        let mut b = KripkeBuilder::new();
        let s0 = b.add_state("s0", [p.clone()]);
        let s1 = b.add_state("s1", []);
        b.declare(q.clone());
        b.add_edge(s0, s1);
        b.set_initial(s0);
        let k = b.build().unwrap();
        assert_eq!(k.successors(s1), [s1]);
        assert_eq!(k.predecessors(s1), [s0, s1]);
        assert!(k.holds_at(s0, &p) && !k.holds_at(s1, &p));
        assert_eq!(k.states_with(&q), Some(vec![false, false]));
        assert!(k.states_with(&Atom::plain(Predicate::Aggregated)).is_none());
        assert!(KripkeBuilder::new().build().is_err());
    }
}
