//! Value types shared by every other module: terms, atoms, rules, fact bases and knowledge bases.
//!
//! All types are immutable once built. Atom collections are kept in a canonical total order
//! (predicate name, then argument terms) so that iteration, serialization and every search that
//! walks them are deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Interned-ish name. Cheap to clone, ordered by string content.
pub type Symbol = Arc<str>;

pub fn sym(s: &str) -> Symbol {
    Arc::from(s)
}

/// A term: a constant, a labelled null, or (only inside rules and queries) a variable.
///
/// The derived order puts constants before nulls before variables, each group ordered by name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Constant(Symbol),
    Null(Symbol),
    Variable(Symbol),
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Constant(sym(name))
    }

    pub fn null(label: &str) -> Term {
        Term::Null(sym(label))
    }

    pub fn variable(name: &str) -> Term {
        Term::Variable(sym(name))
    }

    pub fn name(&self) -> &Symbol {
        match self {
            Term::Constant(s) | Term::Null(s) | Term::Variable(s) => s,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Term::Constant(_))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Term::Null(_))
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Constant(s) | Term::Variable(s) => write!(f, "{s}"),
            Term::Null(s) => write!(f, "_{s}"),
        }
    }
}

/// `predicate(args...)`; the arity is the length of `args`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Atom {
        Atom {
            predicate: sym(predicate),
            args,
        }
    }

    pub fn with_symbol(predicate: Symbol, args: Vec<Term>) -> Atom {
        Atom { predicate, args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.args.iter()
    }

    pub fn variables(&self) -> impl Iterator<Item = &Symbol> {
        self.args.iter().filter_map(|t| match t {
            Term::Variable(v) => Some(v),
            _ => None,
        })
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(Term::is_variable)
    }

    /// Applies `f` to every argument.
    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(&mut f).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, t) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{t}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("rule {rule}: {what} must not be empty")]
    EmptyConjunction { rule: String, what: &'static str },
    #[error("rule {rule}: nulls are not allowed in rules ({term})")]
    NullInRule { rule: String, term: String },
    #[error("predicate {predicate} used with arity {seen}, expected {expected}")]
    Arity {
        predicate: String,
        seen: usize,
        expected: usize,
    },
    #[error("duplicate rule id {0}")]
    DuplicateRuleId(String),
    #[error("fact {0} contains a variable")]
    VariableInFact(String),
}

/// An existential rule `body → ∃existentials. head`.
///
/// Body and head are stored as canonical (sorted, duplicate-free) atom lists. Variable sets are
/// kept sorted by name, which is the canonical variable order used wherever an order is needed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    id: Symbol,
    body: Vec<Atom>,
    head: Vec<Atom>,
    body_vars: Vec<Symbol>,
    frontier: Vec<Symbol>,
    existentials: Vec<Symbol>,
}

impl Rule {
    /// Builds a rule; existential variables are the head variables absent from the body.
    pub fn new(id: &str, body: Vec<Atom>, head: Vec<Atom>) -> Result<Rule, ModelError> {
        let body: Vec<Atom> = body
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let head: Vec<Atom> = head
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if body.is_empty() {
            return Err(ModelError::EmptyConjunction {
                rule: id.to_string(),
                what: "body",
            });
        }
        if head.is_empty() {
            return Err(ModelError::EmptyConjunction {
                rule: id.to_string(),
                what: "head",
            });
        }
        for t in body.iter().chain(head.iter()).flat_map(|a| a.args.iter()) {
            if t.is_null() {
                return Err(ModelError::NullInRule {
                    rule: id.to_string(),
                    term: t.to_string(),
                });
            }
        }
        let body_vars: BTreeSet<Symbol> =
            body.iter().flat_map(|a| a.variables().cloned()).collect();
        let head_vars: BTreeSet<Symbol> =
            head.iter().flat_map(|a| a.variables().cloned()).collect();
        let frontier = body_vars.intersection(&head_vars).cloned().collect();
        let existentials = head_vars.difference(&body_vars).cloned().collect();
        Ok(Rule {
            id: sym(id),
            body,
            head,
            body_vars: body_vars.into_iter().collect(),
            frontier,
            existentials,
        })
    }

    pub fn id(&self) -> &Symbol {
        &self.id
    }

    pub fn body(&self) -> &[Atom] {
        &self.body
    }

    pub fn head(&self) -> &[Atom] {
        &self.head
    }

    /// All variables of the body, in canonical order. Trigger matches are images of this list.
    pub fn body_variables(&self) -> &[Symbol] {
        &self.body_vars
    }

    pub fn frontier(&self) -> &[Symbol] {
        &self.frontier
    }

    pub fn existentials(&self) -> &[Symbol] {
        &self.existentials
    }

    pub fn is_datalog(&self) -> bool {
        self.existentials.is_empty()
    }

    pub fn is_atomic_headed(&self) -> bool {
        self.head.len() == 1
    }

    /// Same rule under a different id.
    pub fn renamed(&self, id: &str) -> Rule {
        Rule {
            id: sym(id),
            ..self.clone()
        }
    }

    pub fn predicates(&self) -> impl Iterator<Item = (&Symbol, usize)> {
        self.body
            .iter()
            .chain(self.head.iter())
            .map(|a| (&a.predicate, a.arity()))
    }
}

/// Returns `vars(body) ∩ vars(head)` of a rule.
pub fn frontier_of(rule: &Rule) -> BTreeSet<Symbol> {
    rule.frontier().iter().cloned().collect()
}

/// A finite set of atoms over constants and nulls, bucketed by predicate.
///
/// Iteration follows the canonical atom order. Construction via [`FactBase::from_atoms`] rejects
/// variables; internal engine code extends fact bases in place through crate-private methods.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FactBase {
    by_predicate: BTreeMap<Symbol, BTreeSet<Atom>>,
    len: usize,
}

impl FactBase {
    pub fn new() -> FactBase {
        FactBase::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Result<FactBase, ModelError> {
        let mut fb = FactBase::new();
        for a in atoms {
            if !a.is_ground() {
                return Err(ModelError::VariableInFact(a.to_string()));
            }
            fb.insert(a);
        }
        Ok(fb)
    }

    /// Returns the union of `self` and `atoms` as a new value.
    pub fn extended(&self, atoms: impl IntoIterator<Item = Atom>) -> Result<FactBase, ModelError> {
        let mut fb = self.clone();
        for a in atoms {
            if !a.is_ground() {
                return Err(ModelError::VariableInFact(a.to_string()));
            }
            fb.insert(a);
        }
        Ok(fb)
    }

    pub(crate) fn insert(&mut self, atom: Atom) -> bool {
        let fresh = self
            .by_predicate
            .entry(atom.predicate.clone())
            .or_default()
            .insert(atom);
        if fresh {
            self.len += 1;
        }
        fresh
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.by_predicate
            .get(&atom.predicate)
            .is_some_and(|s| s.contains(atom))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.by_predicate.values().flat_map(|s| s.iter())
    }

    pub fn atoms(&self) -> Vec<Atom> {
        self.iter().cloned().collect()
    }

    /// Atoms with the given predicate, optionally restricted to a known first argument.
    pub fn candidates<'a>(
        &'a self,
        predicate: &Symbol,
        first: Option<&Term>,
    ) -> Box<dyn Iterator<Item = &'a Atom> + 'a> {
        let Some(bucket) = self.by_predicate.get(predicate) else {
            return Box::new(std::iter::empty());
        };
        match first {
            None => Box::new(bucket.iter()),
            Some(t) => {
                let lower = Atom {
                    predicate: predicate.clone(),
                    args: vec![t.clone()],
                };
                let t = t.clone();
                Box::new(
                    bucket
                        .range(lower..)
                        .take_while(move |a| a.args.first() == Some(&t)),
                )
            }
        }
    }

    pub fn predicate_count(&self, predicate: &Symbol) -> usize {
        self.by_predicate.get(predicate).map_or(0, BTreeSet::len)
    }

    /// Predicate → arity for every predicate occurring in the fact base.
    pub fn signature(&self) -> BTreeMap<Symbol, usize> {
        self.by_predicate
            .iter()
            .filter_map(|(p, s)| s.iter().next().map(|a| (p.clone(), a.arity())))
            .collect()
    }

    pub fn terms(&self) -> BTreeSet<Term> {
        self.iter().flat_map(|a| a.args.iter().cloned()).collect()
    }

    pub fn nulls(&self) -> BTreeSet<Term> {
        self.iter()
            .flat_map(|a| a.args.iter().filter(|t| t.is_null()).cloned())
            .collect()
    }

    pub fn is_subset(&self, other: &FactBase) -> bool {
        self.len <= other.len && self.iter().all(|a| other.contains(a))
    }
}

impl<'a> IntoIterator for &'a FactBase {
    type Item = &'a Atom;
    type IntoIter = Box<dyn Iterator<Item = &'a Atom> + 'a>;

    fn into_iter(self) -> Self::IntoIter {
        Box::new(self.iter())
    }
}

impl FromIterator<Atom> for FactBase {
    /// Collects ground atoms; panics on variables (use [`FactBase::from_atoms`] for fallible input).
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        FactBase::from_atoms(iter).expect("fact base atoms must be ground")
    }
}

/// A knowledge base ⟨R, F⟩ with unique rule ids and one arity per predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnowledgeBase {
    rules: Vec<Arc<Rule>>,
    facts: FactBase,
}

impl KnowledgeBase {
    pub fn new(rules: Vec<Rule>, facts: FactBase) -> Result<KnowledgeBase, ModelError> {
        let mut ids = BTreeSet::new();
        for r in &rules {
            if !ids.insert(r.id().clone()) {
                return Err(ModelError::DuplicateRuleId(r.id().to_string()));
            }
        }
        let mut arities: BTreeMap<Symbol, usize> = BTreeMap::new();
        let rule_preds = rules.iter().flat_map(|r| r.predicates());
        let fact_preds = facts.iter().map(|a| (&a.predicate, a.arity()));
        for (p, n) in rule_preds.chain(fact_preds) {
            let expected = *arities.entry(p.clone()).or_insert(n);
            if expected != n {
                return Err(ModelError::Arity {
                    predicate: p.to_string(),
                    seen: n,
                    expected,
                });
            }
        }
        Ok(KnowledgeBase {
            rules: rules.into_iter().map(Arc::new).collect(),
            facts,
        })
    }

    pub fn rules(&self) -> &[Arc<Rule>] {
        &self.rules
    }

    pub fn facts(&self) -> &FactBase {
        &self.facts
    }

    pub fn rule(&self, id: &str) -> Option<&Arc<Rule>> {
        self.rules.iter().find(|r| &**r.id() == id)
    }

    pub fn with_facts(&self, facts: FactBase) -> Result<KnowledgeBase, ModelError> {
        KnowledgeBase::new(self.rules.iter().map(|r| (**r).clone()).collect(), facts)
    }

    /// Predicate → arity over rules and facts.
    pub fn signature(&self) -> BTreeMap<Symbol, usize> {
        let mut sig = self.facts.signature();
        for r in &self.rules {
            for (p, n) in r.predicates() {
                sig.insert(p.clone(), n);
            }
        }
        sig
    }
}

/// Predicate → arity over a rule list.
pub fn rules_signature(rules: &[Rule]) -> BTreeMap<Symbol, usize> {
    rules
        .iter()
        .flat_map(|r| r.predicates().map(|(p, n)| (p.clone(), n)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::variable(n)
    }

    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    #[test]
    fn frontier_and_existentials_partition_head_variables() {
        let rule = Rule::new(
            "r6",
            vec![Atom::new("R", vec![v("X"), v("Y")])],
            vec![
                Atom::new("P", vec![v("X"), v("Z")]),
                Atom::new("A", vec![v("Z")]),
                Atom::new("A", vec![v("U")]),
                Atom::new("P", vec![v("X"), v("Y")]),
            ],
        )
        .unwrap();
        assert_eq!(
            frontier_of(&rule),
            [sym("X"), sym("Y")].into_iter().collect()
        );
        assert_eq!(rule.existentials(), &[sym("U"), sym("Z")]);
        assert!(!rule.is_datalog());
    }

    #[test]
    fn datalog_rule_has_full_frontier() {
        let rule = Rule::new(
            "d",
            vec![Atom::new("P", vec![v("X")])],
            vec![Atom::new("Q", vec![v("X")])],
        )
        .unwrap();
        assert_eq!(frontier_of(&rule), [sym("X")].into_iter().collect());
        assert!(rule.is_datalog());
    }

    #[test]
    fn empty_head_is_rejected() {
        let err = Rule::new("e", vec![Atom::new("P", vec![])], vec![]).unwrap_err();
        assert!(matches!(
            err,
            ModelError::EmptyConjunction { what: "head", .. }
        ));
    }

    #[test]
    fn arity_clash_is_rejected_at_load() {
        let facts = FactBase::from_atoms([Atom::new("P", vec![c("a")])]).unwrap();
        let rule = Rule::new(
            "r",
            vec![Atom::new("P", vec![v("X"), v("Y")])],
            vec![Atom::new("Q", vec![v("X")])],
        )
        .unwrap();
        let err = KnowledgeBase::new(vec![rule], facts).unwrap_err();
        assert_eq!(
            err,
            ModelError::Arity {
                predicate: "P".into(),
                seen: 1,
                expected: 2
            }
        );
    }

    #[test]
    fn fact_base_iterates_in_canonical_order_and_has_set_semantics() {
        let fb = FactBase::from_atoms([
            Atom::new("Q", vec![c("b")]),
            Atom::new("P", vec![c("b"), c("a")]),
            Atom::new("P", vec![c("a"), c("b")]),
            Atom::new("P", vec![c("a"), c("b")]),
        ])
        .unwrap();
        let shown: Vec<String> = fb.iter().map(ToString::to_string).collect();
        assert_eq!(shown, ["P(a,b)", "P(b,a)", "Q(b)"]);
        assert_eq!(fb.len(), 3);
    }

    #[test]
    fn candidates_by_first_argument() {
        let fb = FactBase::from_atoms([
            Atom::new("P", vec![c("a"), c("b")]),
            Atom::new("P", vec![c("a"), c("c")]),
            Atom::new("P", vec![c("b"), c("a")]),
        ])
        .unwrap();
        let p = sym("P");
        assert_eq!(fb.candidates(&p, Some(&c("a"))).count(), 2);
        assert_eq!(fb.candidates(&p, Some(&c("c"))).count(), 0);
        assert_eq!(fb.candidates(&p, None).count(), 3);
    }

    #[test]
    fn variables_are_rejected_in_facts() {
        assert!(FactBase::from_atoms([Atom::new("P", vec![v("X")])]).is_err());
    }
}
