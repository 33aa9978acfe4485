//! Homomorphisms, retractions, isomorphisms and canonical codes between atom sets.
//!
//! Constants are rigid everywhere. Variables and nulls of the source are movable unless pinned by
//! the `fixed` assignment. A retraction keeps every term of the target part in place; the
//! E-chase homomorphism lets every null move. The two are different questions and are kept apart.

mod canonical;
mod search;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

pub use canonical::{canonical_code, CanonicalCode};
pub use search::BudgetExceeded;
pub(crate) use search::{Arg, Pattern, Search};

use crate::model::{Atom, FactBase, Rule, Term};

/// A partial map from source terms (variables and nulls) to target terms.
pub type Assignment = BTreeMap<Term, Term>;

fn movable(t: &Term) -> bool {
    !t.is_constant()
}

fn assignment_of(pattern: &Pattern, fixed: &Assignment, images: &[Term]) -> Assignment {
    let mut out = fixed.clone();
    for (src, img) in pattern.slots.iter().zip(images) {
        out.insert(src.clone(), img.clone());
    }
    out
}

/// First homomorphism `h ⊇ fixed` with `h(source) ⊆ target`, if any.
pub fn find_homomorphism(
    source: &[Atom],
    target: &FactBase,
    fixed: &Assignment,
) -> Option<Assignment> {
    find_homomorphism_bounded(source, target, fixed, None)
        .ok()
        .flatten()
}

/// As [`find_homomorphism`] with a node budget on the backtracking search.
pub fn find_homomorphism_bounded(
    source: &[Atom],
    target: &FactBase,
    fixed: &Assignment,
    budget: Option<u64>,
) -> Result<Option<Assignment>, BudgetExceeded> {
    let pattern = Pattern::new(source, fixed, movable);
    let mut found = None;
    let _ = Search::new(&pattern, target)
        .budget(budget)
        .run(&mut |images| {
            found = Some(assignment_of(&pattern, fixed, images));
            ControlFlow::Break(())
        })?;
    Ok(found)
}

/// Every homomorphism extending `fixed`, in search order.
pub fn all_homomorphisms(
    source: &[Atom],
    target: &FactBase,
    fixed: &Assignment,
) -> Vec<Assignment> {
    let pattern = Pattern::new(source, fixed, movable);
    let mut out = Vec::new();
    let _ = Search::new(&pattern, target).run(&mut |images| {
        out.push(assignment_of(&pattern, fixed, images));
        ControlFlow::Continue(())
    });
    out
}

/// First injective homomorphism (distinct source terms get distinct images).
pub fn find_injective_homomorphism(
    source: &[Atom],
    target: &FactBase,
    fixed: &Assignment,
) -> Option<Assignment> {
    let pattern = Pattern::new(source, fixed, movable);
    let fixed_images: Vec<Term> = pattern
        .atoms
        .iter()
        .flat_map(|a| a.args.iter())
        .filter_map(|a| match a {
            Arg::Fixed(t) => Some(t.clone()),
            Arg::Slot(_) => None,
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut found = None;
    let _ = Search::new(&pattern, target)
        .injective(fixed_images)
        .run(&mut |images| {
            found = Some(assignment_of(&pattern, fixed, images));
            ControlFlow::Break(())
        });
    found
}

/// Is there a homomorphism from `whole` to `part` that is the identity on every term of `part`?
pub fn exists_retraction(whole: &[Atom], part: &FactBase) -> bool {
    retraction_bounded(whole, part, None).unwrap_or(false)
}

pub(crate) fn retraction_bounded(
    whole: &[Atom],
    part: &FactBase,
    budget: Option<u64>,
) -> Result<bool, BudgetExceeded> {
    let part_terms = part.terms();
    let source: Vec<Atom> = whole
        .iter()
        .filter(|a| !part.contains(a))
        .cloned()
        .collect();
    let fixed: Assignment = source
        .iter()
        .flat_map(|a| a.args.iter())
        .filter(|t| part_terms.contains(t))
        .map(|t| (t.clone(), t.clone()))
        .collect();
    Ok(find_homomorphism_bounded(&source, part, &fixed, budget)?.is_some())
}

/// Is there a bijective renaming of nulls and variables mapping `a` exactly onto `b`?
pub fn are_isomorphic(a: &FactBase, b: &FactBase) -> bool {
    if a.len() != b.len() || a.signature() != b.signature() {
        return false;
    }
    let atoms = a.atoms();
    let pattern = Pattern::new(&atoms, &Assignment::new(), movable);
    // Constants of either side are forbidden images for nulls: constants are rigid both ways.
    let fixed_images: Vec<Term> = a
        .terms()
        .into_iter()
        .chain(b.terms())
        .filter(Term::is_constant)
        .collect();
    let mut found = false;
    let _ = Search::new(&pattern, b)
        .injective(fixed_images)
        .run(&mut |_| {
            // An injective homomorphism between equal-size sets is onto, hence an isomorphism.
            found = true;
            ControlFlow::Break(())
        });
    found
}

/// Are two rules equal up to renaming their variables (ids ignored)?
pub fn rules_isomorphic(a: &Rule, b: &Rule) -> bool {
    fn frozen(r: &Rule) -> FactBase {
        let tag = |part: &str, at: &Atom| {
            Atom::new(
                &format!("{part}:{}", at.predicate),
                at.args
                    .iter()
                    .map(|t| {
                        if t.is_variable() {
                            Term::null(t.name())
                        } else {
                            t.clone()
                        }
                    })
                    .collect(),
            )
        };
        let atoms = r
            .body()
            .iter()
            .map(|at| tag("body", at))
            .chain(r.head().iter().map(|at| tag("head", at)));
        FactBase::from_atoms(atoms).expect("variables were frozen into nulls")
    }
    are_isomorphic(&frozen(a), &frozen(b))
}

/// Homomorphisms both ways.
pub fn hom_equivalent(a: &FactBase, b: &FactBase) -> bool {
    find_homomorphism(&a.atoms(), b, &Assignment::new()).is_some()
        && find_homomorphism(&b.atoms(), a, &Assignment::new()).is_some()
}
