//! The backtracking engine behind every homomorphism query.
//!
//! A [`Pattern`] is a compiled source atom list: fixed terms are compared literally, movable terms
//! become numbered slots. The search picks, at each level, the unmatched source atom with the most
//! bound positions (ties: smallest predicate bucket) and scans its candidates, using the first
//! argument as an index when it is known.

use std::collections::{BTreeMap, HashMap};
use std::ops::ControlFlow;

use crate::model::{Atom, FactBase, Symbol, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Arg {
    Fixed(Term),
    Slot(usize),
}

#[derive(Clone, Debug)]
pub(crate) struct PatAtom {
    pub predicate: Symbol,
    pub args: Vec<Arg>,
}

#[derive(Clone, Debug)]
pub(crate) struct Pattern {
    pub atoms: Vec<PatAtom>,
    /// Source term of each slot.
    pub slots: Vec<Term>,
}

impl Pattern {
    /// Compiles `source`. Terms in `fixed` are replaced by their image; other terms for which
    /// `movable` holds become slots; everything else is compared literally.
    pub fn new(
        source: &[Atom],
        fixed: &BTreeMap<Term, Term>,
        movable: impl Fn(&Term) -> bool,
    ) -> Pattern {
        let mut slot_of: HashMap<Term, usize> = HashMap::new();
        let mut slots = Vec::new();
        let atoms = source
            .iter()
            .map(|a| PatAtom {
                predicate: a.predicate.clone(),
                args: a
                    .args
                    .iter()
                    .map(|t| {
                        if let Some(img) = fixed.get(t) {
                            Arg::Fixed(img.clone())
                        } else if movable(t) {
                            let next = slots.len();
                            let s = *slot_of.entry(t.clone()).or_insert(next);
                            if s == next {
                                slots.push(t.clone());
                            }
                            Arg::Slot(s)
                        } else {
                            Arg::Fixed(t.clone())
                        }
                    })
                    .collect(),
            })
            .collect();
        Pattern { atoms, slots }
    }

    /// Compiles with an explicit slot list (used by rules, whose slots are their body variables).
    pub fn with_slots(source: &[Atom], slots: &[Term]) -> Pattern {
        let index: HashMap<&Term, usize> = slots.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let atoms = source
            .iter()
            .map(|a| PatAtom {
                predicate: a.predicate.clone(),
                args: a
                    .args
                    .iter()
                    .map(|t| match index.get(t) {
                        Some(&i) => Arg::Slot(i),
                        None => Arg::Fixed(t.clone()),
                    })
                    .collect(),
            })
            .collect();
        Pattern {
            atoms,
            slots: slots.to_vec(),
        }
    }
}

/// The node budget of a search was exhausted before it could answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExceeded;

pub(crate) type AtomFilter<'a> = &'a dyn Fn(usize, &Atom) -> bool;

pub(crate) struct Search<'a> {
    pattern: &'a Pattern,
    target: &'a FactBase,
    injective: bool,
    filter: Option<AtomFilter<'a>>,
    budget: Option<u64>,
    pinned: Option<(usize, &'a Atom)>,
    nodes: u64,
    bindings: Vec<Option<Term>>,
    fixed_images: Vec<Term>,
}

impl<'a> Search<'a> {
    pub fn new(pattern: &'a Pattern, target: &'a FactBase) -> Search<'a> {
        Search {
            pattern,
            target,
            injective: false,
            filter: None,
            budget: None,
            pinned: None,
            nodes: 0,
            bindings: vec![None; pattern.slots.len()],
            fixed_images: Vec::new(),
        }
    }

    /// Requires distinct source terms to receive distinct images. `fixed_images` are the images
    /// of source terms that are not slots (constants and pre-fixed terms).
    pub fn injective(mut self, fixed_images: Vec<Term>) -> Self {
        self.injective = true;
        self.fixed_images = fixed_images;
        self
    }

    /// Restricts which target atoms source atom `i` may map to.
    pub fn filter(mut self, filter: AtomFilter<'a>) -> Self {
        self.filter = Some(filter);
        self
    }

    /// Forces source atom `idx` onto `atom`; the pinned atom is matched first.
    pub fn pin(mut self, idx: usize, atom: &'a Atom) -> Self {
        self.pinned = Some((idx, atom));
        self
    }

    pub fn budget(mut self, budget: Option<u64>) -> Self {
        self.budget = budget;
        self
    }

    /// Calls `on_match` with the slot images of every solution until it breaks.
    pub fn run(
        &mut self,
        on_match: &mut dyn FnMut(&[Term]) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, BudgetExceeded> {
        let mut remaining: Vec<usize> = (0..self.pattern.atoms.len()).collect();
        self.rec(&mut remaining, on_match)
    }

    fn bound_count(&self, atom: &PatAtom) -> usize {
        atom.args
            .iter()
            .filter(|a| match a {
                Arg::Fixed(_) => true,
                Arg::Slot(s) => self.bindings[*s].is_some(),
            })
            .count()
    }

    fn first_arg(&self, atom: &PatAtom) -> Option<Term> {
        match atom.args.first()? {
            Arg::Fixed(t) => Some(t.clone()),
            Arg::Slot(s) => self.bindings[*s].clone(),
        }
    }

    fn pick(&self, remaining: &[usize]) -> usize {
        let mut best = 0;
        let mut best_key = (usize::MAX, usize::MAX);
        for (pos, &i) in remaining.iter().enumerate() {
            if self.pinned.is_some_and(|(p, _)| p == i) {
                return pos;
            }
            let atom = &self.pattern.atoms[i];
            let unbound = atom.args.len() - self.bound_count(atom);
            let key = (unbound, self.target.predicate_count(&atom.predicate));
            if key < best_key {
                best_key = key;
                best = pos;
            }
        }
        best
    }

    fn rec(
        &mut self,
        remaining: &mut Vec<usize>,
        on_match: &mut dyn FnMut(&[Term]) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, BudgetExceeded> {
        self.nodes += 1;
        if let Some(b) = self.budget {
            if self.nodes > b {
                return Err(BudgetExceeded);
            }
        }
        if remaining.is_empty() {
            let images: Vec<Term> = self
                .bindings
                .iter()
                .map(|b| b.clone().expect("all slots bound"))
                .collect();
            return Ok(on_match(&images));
        }
        let pos = self.pick(remaining);
        let idx = remaining.swap_remove(pos);
        let pattern = self.pattern;
        let atom = &pattern.atoms[idx];
        let first = self.first_arg(atom);
        let target = self.target;
        let mut newly = Vec::with_capacity(atom.args.len());
        let mut outcome = ControlFlow::Continue(());
        let candidates: Box<dyn Iterator<Item = &Atom>> = match self.pinned {
            Some((p, pinned)) if p == idx => {
                Box::new(std::iter::once(pinned).filter(|a| a.predicate == atom.predicate))
            }
            _ => target.candidates(&atom.predicate, first.as_ref()),
        };
        for cand in candidates {
            if cand.args.len() != atom.args.len() {
                continue;
            }
            if let Some(f) = self.filter {
                if !f(idx, cand) {
                    continue;
                }
            }
            newly.clear();
            if self.unify(atom, cand, &mut newly) {
                match self.rec(remaining, on_match) {
                    Ok(ControlFlow::Continue(())) => {}
                    Ok(ControlFlow::Break(())) => outcome = ControlFlow::Break(()),
                    Err(e) => {
                        self.undo(&newly);
                        remaining.push(idx);
                        let last = remaining.len() - 1;
                        remaining.swap(pos, last);
                        return Err(e);
                    }
                }
            }
            self.undo(&newly);
            if outcome.is_break() {
                break;
            }
        }
        remaining.push(idx);
        let last = remaining.len() - 1;
        remaining.swap(pos, last);
        Ok(outcome)
    }

    fn unify(&mut self, atom: &PatAtom, cand: &Atom, newly: &mut Vec<usize>) -> bool {
        for (arg, t) in atom.args.iter().zip(cand.args.iter()) {
            match arg {
                Arg::Fixed(f) => {
                    if f != t {
                        self.undo(newly);
                        newly.clear();
                        return false;
                    }
                }
                Arg::Slot(s) => match &self.bindings[*s] {
                    Some(b) => {
                        if b != t {
                            self.undo(newly);
                            newly.clear();
                            return false;
                        }
                    }
                    None => {
                        if self.injective
                            && (self.fixed_images.contains(t)
                                || self.bindings.iter().any(|b| b.as_ref() == Some(t)))
                        {
                            self.undo(newly);
                            newly.clear();
                            return false;
                        }
                        self.bindings[*s] = Some(t.clone());
                        newly.push(*s);
                    }
                },
            }
        }
        true
    }

    fn undo(&mut self, newly: &[usize]) {
        for &s in newly {
            self.bindings[s] = None;
        }
    }
}
