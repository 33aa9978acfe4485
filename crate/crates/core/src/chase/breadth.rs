//! The breadth-first chase: layer `i + 1` adds the output of every trigger on layer `i`.
//!
//! A trigger's nulls depend only on the trigger (rule and body match): a match that is found again
//! on a later layer reproduces its earlier output instead of minting new nulls.

use std::collections::HashMap;
use std::sync::Arc;

use super::state::CompiledRule;
use crate::derivation::Trigger;
use crate::model::{FactBase, KnowledgeBase, Rule, Term};

/// Incremental computation of `Ch_0, Ch_1, …`.
#[derive(Debug)]
pub struct BreadthFirst {
    rules: Vec<CompiledRule>,
    serials: HashMap<(usize, Vec<Term>), u64>,
    facts: FactBase,
    layer: usize,
}

impl BreadthFirst {
    pub fn new(kb: &KnowledgeBase) -> BreadthFirst {
        BreadthFirst::from_parts(kb.rules(), kb.facts().clone())
    }

    pub fn from_parts(rules: &[Arc<Rule>], facts: FactBase) -> BreadthFirst {
        BreadthFirst {
            rules: rules.iter().map(|r| CompiledRule::new(r.clone())).collect(),
            serials: HashMap::new(),
            facts,
            layer: 0,
        }
    }

    /// Index of the current layer.
    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn facts(&self) -> &FactBase {
        &self.facts
    }

    /// Computes the next layer; returns whether it grew.
    pub fn step(&mut self) -> bool {
        let mut next = self.facts.clone();
        for (i, c) in self.rules.iter().enumerate() {
            for img in c.matches(&self.facts) {
                let fresh = self.serials.len() as u64 + 1;
                let serial = *self.serials.entry((i, img.clone())).or_insert(fresh);
                for a in Trigger::new(c.rule.clone(), img, serial).output() {
                    next.insert(a);
                }
            }
        }
        self.layer += 1;
        let grew = next.len() > self.facts.len();
        self.facts = next;
        grew
    }
}

/// `F ∪ ⋃ out(t)` over all triggers `t` of `rules` on `facts`.
pub fn breadth_first_layer(rules: &[Arc<Rule>], facts: &FactBase) -> FactBase {
    let mut bf = BreadthFirst::from_parts(rules, facts.clone());
    bf.step();
    bf.facts
}

/// `Ch_k` of `kb`.
pub fn ch_k(kb: &KnowledgeBase, k: usize) -> FactBase {
    ch_layers(kb, k).pop().expect("layer 0 is always present")
}

/// `[Ch_0, …, Ch_k]`.
pub fn ch_layers(kb: &KnowledgeBase, k: usize) -> Vec<FactBase> {
    let mut bf = BreadthFirst::new(kb);
    let mut out = vec![bf.facts.clone()];
    for _ in 0..k {
        bf.step();
        out.push(bf.facts.clone());
    }
    out
}
