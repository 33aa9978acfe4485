//! Rule normalisation: single-piece decomposition and the one-way / two-way atomic decompositions.
//!
//! Naming is fixed so reports stay readable and phased strategies can refer to output rules:
//! - pieces of rule `r`: rules `r.p1`, `r.p2`, … in canonical piece order;
//! - atomic decomposition of `r`: fresh predicate `X__r` (characters outside `[A-Za-z0-9_]` in the
//!   id become `_`), generator `r.x`, projections `r.h1`, `r.h2`, …, and for the two-way variant the
//!   backward rule `r.back`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{rules_signature, Atom, FactBase, ModelError, Rule, Symbol, Term};

/// The piece graph of a rule head: atoms are linked when they share an existential variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PieceGraph {
    pub vertices: Vec<Atom>,
    /// Index pairs `(i, j)`, `i < j`.
    pub edges: Vec<(usize, usize)>,
}

impl PieceGraph {
    pub fn of(rule: &Rule) -> PieceGraph {
        let vertices = rule.head().to_vec();
        let ex: BTreeSet<&Symbol> = rule.existentials().iter().collect();
        let vars = |a: &Atom| {
            a.variables()
                .filter(|v| ex.contains(v))
                .cloned()
                .collect::<BTreeSet<_>>()
        };
        let mut edges = Vec::new();
        for i in 0..vertices.len() {
            for j in i + 1..vertices.len() {
                if !vars(&vertices[i]).is_disjoint(&vars(&vertices[j])) {
                    edges.push((i, j));
                }
            }
        }
        PieceGraph { vertices, edges }
    }

    /// Connected components, each in head order, ordered by their first atom.
    pub fn components(&self) -> Vec<Vec<Atom>> {
        let n = self.vertices.len();
        let mut comp: Vec<usize> = (0..n).collect();
        fn root(comp: &mut [usize], mut i: usize) -> usize {
            while comp[i] != i {
                comp[i] = comp[comp[i]];
                i = comp[i];
            }
            i
        }
        for &(i, j) in &self.edges {
            let (a, b) = (root(&mut comp, i), root(&mut comp, j));
            comp[a.max(b)] = a.min(b);
        }
        let mut groups: BTreeMap<usize, Vec<Atom>> = BTreeMap::new();
        for i in 0..n {
            let r = root(&mut comp, i);
            groups.entry(r).or_default().push(self.vertices[i].clone());
        }
        groups.into_values().collect()
    }
}

/// The pieces of a rule's head.
pub fn pieces(rule: &Rule) -> Vec<Vec<Atom>> {
    PieceGraph::of(rule).components()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FreshPredicate {
    pub name: String,
    pub arity: usize,
}

/// Input and output of a normalisation, with the fresh predicates and the rule mapping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionReport {
    pub procedure: &'static str,
    pub input: Vec<Rule>,
    pub output: Vec<Rule>,
    pub fresh: Vec<FreshPredicate>,
    /// Input rule id → output rule ids, in input order.
    pub mapping: Vec<(String, Vec<String>)>,
}

impl DecompositionReport {
    /// Ids of the output rules derived from input rule `id`.
    pub fn outputs_of(&self, id: &str) -> &[String] {
        self.mapping
            .iter()
            .find(|(i, _)| i == id)
            .map(|(_, o)| o.as_slice())
            .unwrap_or(&[])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("fresh predicate {0} already occurs in the rule set")]
    FreshNameClash(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Replaces every rule by one rule per piece of its head (same body).
pub fn single_piece(rules: &[Rule]) -> DecompositionReport {
    let mut output = Vec::new();
    let mut mapping = Vec::new();
    for r in rules {
        let mut ids = Vec::new();
        for (k, piece) in pieces(r).into_iter().enumerate() {
            let id = format!("{}.p{}", r.id(), k + 1);
            output.push(
                Rule::new(&id, r.body().to_vec(), piece)
                    .expect("a piece of a well-formed rule is well-formed"),
            );
            ids.push(id);
        }
        mapping.push((r.id().to_string(), ids));
    }
    DecompositionReport {
        procedure: "sp",
        input: rules.to_vec(),
        output,
        fresh: Vec::new(),
        mapping,
    }
}

/// One-way atomic decomposition: `B → ∃z. X(x,z)` and `X(x,z) → a` for every head atom `a`.
///
/// With `skip_atomic`, rules whose head is a single atom are kept as they are.
pub fn one_way(rules: &[Rule], skip_atomic: bool) -> Result<DecompositionReport, NormalizeError> {
    atomic(rules, skip_atomic, false)
}

/// Two-way atomic decomposition: the one-way rules plus `H → X(x,z)` for every decomposed rule.
pub fn two_way(rules: &[Rule], skip_atomic: bool) -> Result<DecompositionReport, NormalizeError> {
    atomic(rules, skip_atomic, true)
}

/// The name of the fresh predicate introduced for rule `id`.
pub fn fresh_predicate_name(id: &str) -> String {
    let clean: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("X__{clean}")
}

fn atomic(
    rules: &[Rule],
    skip_atomic: bool,
    backward: bool,
) -> Result<DecompositionReport, NormalizeError> {
    let signature = rules_signature(rules);
    let mut fresh: Vec<FreshPredicate> = Vec::new();
    let mut output = Vec::new();
    let mut mapping = Vec::new();
    for r in rules {
        if skip_atomic && r.is_atomic_headed() {
            output.push(r.clone());
            mapping.push((r.id().to_string(), vec![r.id().to_string()]));
            continue;
        }
        let name = fresh_predicate_name(r.id());
        if signature.contains_key(name.as_str()) || fresh.iter().any(|f| f.name == name) {
            return Err(NormalizeError::FreshNameClash(name));
        }
        let args: Vec<Term> = r
            .frontier()
            .iter()
            .chain(r.existentials())
            .map(|v| Term::Variable(v.clone()))
            .collect();
        let x = Atom::new(&name, args);
        fresh.push(FreshPredicate {
            name,
            arity: x.arity(),
        });
        let mut ids = Vec::new();
        let mut push =
            |id: String, body: Vec<Atom>, head: Vec<Atom>| -> Result<(), NormalizeError> {
                output.push(Rule::new(&id, body, head)?);
                ids.push(id);
                Ok(())
            };
        push(format!("{}.x", r.id()), r.body().to_vec(), vec![x.clone()])?;
        for (k, a) in r.head().iter().enumerate() {
            push(
                format!("{}.h{}", r.id(), k + 1),
                vec![x.clone()],
                vec![a.clone()],
            )?;
        }
        if backward {
            push(
                format!("{}.back", r.id()),
                r.head().to_vec(),
                vec![x.clone()],
            )?;
        }
        mapping.push((r.id().to_string(), ids));
    }
    let procedure = if backward { "2ad" } else { "1ad" };
    Ok(DecompositionReport {
        procedure,
        input: rules.to_vec(),
        output,
        fresh,
        mapping,
    })
}

/// The atoms of `facts` whose predicate is in `signature`.
pub fn restrict_signature(facts: &FactBase, signature: &BTreeSet<Symbol>) -> FactBase {
    FactBase::from_atoms(
        facts
            .iter()
            .filter(|a| signature.contains(&a.predicate))
            .cloned(),
    )
    .expect("a subset of a fact base is a fact base")
}

/// The predicates of a rule set.
pub fn predicates_of(rules: &[Rule]) -> BTreeSet<Symbol> {
    rules_signature(rules).into_keys().collect()
}
