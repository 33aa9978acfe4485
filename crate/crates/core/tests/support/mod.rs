//! Seeded generators and property checks shared by the integration suites.
//!
//! Every check returns the counterexamples it found, so callers can either assert on an empty
//! list or report the count.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chasekit::analysis::{entails, TriState};
use chasekit::chase::{ch_k, is_applicable, run_chase, ChaseState, Phase, PhaseMode, Strategy};
use chasekit::derivation::{ChaseVariant, Derivation, Verdict};
use chasekit::hom::{are_isomorphic, find_homomorphism, find_injective_homomorphism, Assignment};
use chasekit::model::{Atom, FactBase, KnowledgeBase, Rule, Term};
use chasekit::normalize::{one_way, restrict_signature, single_piece, two_way};
use chasekit::textio::parse_document;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CONSTANTS: [&str; 4] = ["a", "b", "c", "d"];
const PREDICATES: [&str; 3] = ["P", "Q", "S"];
const BODY_VARS: [&str; 3] = ["X", "Y", "Z"];
const EXISTENTIALS: [&str; 2] = ["U", "V"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn kb(text: &str) -> KnowledgeBase {
    parse_document(text)
        .expect("test document parses")
        .knowledge_base()
        .expect("test document is consistent")
}

/// A random knowledge base: 1–3 rules over up to three predicates of arity 1–3, and 1–3 facts
/// over at most four constants.
pub fn random_kb(rng: &mut ChaCha8Rng) -> KnowledgeBase {
    let arities: BTreeMap<&str, usize> = PREDICATES
        .iter()
        .map(|&p| (p, rng.gen_range(1..=3)))
        .collect();
    let random_atom = |rng: &mut ChaCha8Rng, terms: &[Term]| {
        let p = *PREDICATES.choose(rng).expect("non-empty");
        let args = (0..arities[p])
            .map(|_| terms.choose(rng).expect("non-empty").clone())
            .collect();
        Atom::new(p, args)
    };
    let mut rules = Vec::new();
    for k in 0..rng.gen_range(1..=3) {
        let vars: Vec<Term> = BODY_VARS.iter().map(|v| Term::variable(v)).collect();
        let body: Vec<Atom> = (0..rng.gen_range(1..=2))
            .map(|_| random_atom(rng, &vars))
            .collect();
        let body_vars: Vec<Term> = body
            .iter()
            .flat_map(|a| a.args.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut head_terms = body_vars.clone();
        let existentials = rng.gen_range(0..=EXISTENTIALS.len());
        head_terms.extend(
            EXISTENTIALS[..existentials]
                .iter()
                .map(|v| Term::variable(v)),
        );
        let head: Vec<Atom> = (0..rng.gen_range(1..=2))
            .map(|_| random_atom(rng, &head_terms))
            .collect();
        rules.push(
            Rule::new(&format!("g{}", k + 1), body, head).expect("generated rule is well-formed"),
        );
    }
    let constants: Vec<Term> = CONSTANTS.iter().map(|c| Term::constant(c)).collect();
    let facts: Vec<Atom> = (0..rng.gen_range(1..=3))
        .map(|_| random_atom(rng, &constants))
        .collect();
    KnowledgeBase::new(rules, FactBase::from_atoms(facts).expect("ground"))
        .expect("one arity per predicate")
}

pub fn rules_of(kb: &KnowledgeBase) -> Vec<Rule> {
    kb.rules().iter().map(|r| (**r).clone()).collect()
}

pub fn original_signature(kb: &KnowledgeBase) -> BTreeSet<chasekit::model::Symbol> {
    kb.signature().into_keys().collect()
}

/// The one-way atomic decomposition of `kb`'s rules on the same facts.
pub fn one_way_kb(kb: &KnowledgeBase) -> KnowledgeBase {
    let out = one_way(&rules_of(kb), false)
        .expect("generated names do not clash")
        .output;
    KnowledgeBase::new(out, kb.facts().clone()).expect("decomposition keeps arities")
}

pub fn two_way_kb(kb: &KnowledgeBase) -> KnowledgeBase {
    let out = two_way(&rules_of(kb), false)
        .expect("generated names do not clash")
        .output;
    KnowledgeBase::new(out, kb.facts().clone()).expect("decomposition keeps arities")
}

pub fn single_piece_kb(kb: &KnowledgeBase) -> KnowledgeBase {
    KnowledgeBase::new(single_piece(&rules_of(kb)).output, kb.facts().clone())
        .expect("pieces keep arities")
}

/// Does `facts` satisfy every rule: each body match extends to a head match?
pub fn satisfies(rules: &[std::sync::Arc<Rule>], facts: &FactBase) -> Option<String> {
    for r in rules {
        let body_only = Assignment::new();
        for h in chasekit::hom::all_homomorphisms(r.body(), facts, &body_only) {
            if find_homomorphism(r.head(), facts, &h).is_none() {
                return Some(format!("rule {} is violated", r.id()));
            }
        }
    }
    None
}

/// R- and SO-applicability agree on every trigger of random R-derivations (at most `max_steps`
/// steps) from the one-way atomic decomposition of `kbs` random knowledge bases.
pub fn one_way_applicability_counterexamples(
    kbs: usize,
    max_steps: usize,
    seed: u64,
) -> Vec<String> {
    let mut rng = rng(seed);
    let mut bad = Vec::new();
    for n in 0..kbs {
        let kb = one_way_kb(&random_kb(&mut rng));
        let mut st = ChaseState::new(&kb, ChaseVariant::R);
        for step in 0..=max_steps {
            let triggers = st.triggers();
            let mut applicable = Vec::new();
            for t in &triggers {
                let r = is_applicable(ChaseVariant::R, t, st.facts(), st.history());
                let so = is_applicable(ChaseVariant::SO, t, st.facts(), st.history());
                if r != so {
                    bad.push(format!(
                        "kb #{n}, step {step}: {t} is R-applicable={r}, SO-applicable={so}"
                    ));
                }
                if r {
                    applicable.push(t.clone());
                }
            }
            match applicable.choose(&mut rng) {
                Some(t) if step < max_steps => {
                    st.apply(t);
                }
                _ => break,
            }
        }
    }
    bad
}

/// Largest breadth-first layer kept in the layer comparisons; bigger samples are redrawn.
const LAYER_CAP: usize = 400;

/// `Ch_i(R, F) ≅ Ch_2i(1ad(R), F)|Σ` and `Ch_i(R, F)` embeds injectively into `Ch_2i(2ad(R), F)|Σ`
/// for `i ∈ {1, 2, 3}`, on `kbs` random knowledge bases.
pub fn breadth_first_counterexamples(kbs: usize, seed: u64) -> Vec<String> {
    let mut rng = rng(seed);
    let mut bad = Vec::new();
    let mut done = 0;
    while done < kbs {
        let kb = random_kb(&mut rng);
        let (one, two) = (one_way_kb(&kb), two_way_kb(&kb));
        if ch_k(&two, 6).len() > LAYER_CAP {
            continue;
        }
        done += 1;
        let sigma = original_signature(&kb);
        for i in 1..=3 {
            let orig = ch_k(&kb, i);
            let via_one = restrict_signature(&ch_k(&one, 2 * i), &sigma);
            if !are_isomorphic(&orig, &via_one) {
                bad.push(format!(
                    "kb #{done}, i = {i}: Ch_i and the 1ad layer 2i differ"
                ));
            }
            let via_two = restrict_signature(&ch_k(&two, 2 * i), &sigma);
            if find_injective_homomorphism(&orig.atoms(), &via_two, &Assignment::new()).is_none() {
                bad.push(format!(
                    "kb #{done}, i = {i}: Ch_i does not embed into the 2ad layer 2i"
                ));
            }
        }
    }
    bad
}

/// `E ⇒ R ⇒ SO ⇒ O` applicability on `triggers` random triggers taken from random oblivious
/// derivations.
pub fn applicability_chain_counterexamples(triggers: usize, seed: u64) -> Vec<String> {
    let mut rng = rng(seed);
    let mut bad = Vec::new();
    let mut checked = 0;
    while checked < triggers {
        let kb = random_kb(&mut rng);
        let mut st = ChaseState::new(&kb, ChaseVariant::O);
        for _ in 0..rng.gen_range(0..8) {
            let applicable: Vec<_> = st
                .triggers()
                .into_iter()
                .filter(|t| is_applicable(ChaseVariant::O, t, st.facts(), st.history()))
                .collect();
            match applicable.choose(&mut rng) {
                Some(t) => {
                    st.apply(t);
                }
                None => break,
            }
        }
        let all = st.triggers();
        let Some(t) = all.choose(&mut rng) else {
            continue;
        };
        checked += 1;
        let app = |v| is_applicable(v, t, st.facts(), st.history());
        let (e, r, so, o) = (
            app(ChaseVariant::E),
            app(ChaseVariant::R),
            app(ChaseVariant::SO),
            app(ChaseVariant::O),
        );
        if (e && !r) || (r && !so) || (so && !o) {
            bad.push(format!("{t}: E={e} R={r} SO={so} O={o}"));
        }
    }
    bad
}

/// Rule sets on which the oblivious chase terminates from their facts.
pub const O_TERMINATING: [&str; 4] = [
    "[succ] P(X,Y) -> exists Z. Q(Y,Z).\n[copy] Q(X,Y) -> S(X).\nP(a,b). P(b,c).",
    "[a] A(X) -> exists Y. R(X,Y).\n[b] R(X,Y) -> B(Y).\n[c] B(X), R(Z,X) -> C(Z).\nA(a). A(b).",
    "[p] P(X,Y) -> exists Z. R(X,Z), R(Z,Y).\n[t] R(X,Y), R(Y,Z) -> T(X,Z).\nP(a,b).",
    "[tc] E(X,Y), E(Y,Z) -> E(X,Z).\nE(a,b). E(b,c). E(c,d).",
];

/// Rule sets on which the semi-oblivious chase terminates (the oblivious chase may not).
pub const SO_TERMINATING: [&str; 3] = [
    "[succ] P(X,Y) -> exists Z. P(X,Z).\nP(a,b).",
    "[pr] P(X,Y) -> exists Z. P(X,Z).\n[r] P(X,Y) -> R(X,Y).\nP(a,b).",
    "[ex] A(X), B(Y) -> exists Z. R(X,Z).\n[back] R(X,Z) -> B(Z).\nA(a). B(b).",
];

fn strategies(kb: &KnowledgeBase) -> Vec<Strategy> {
    let mut reversed: Vec<String> = kb.rules().iter().map(|r| r.id().to_string()).collect();
    reversed.reverse();
    let all = reversed.clone();
    let mut phases: Vec<Phase> = reversed
        .into_iter()
        .map(|id| Phase::new([id], PhaseMode::Exhaust))
        .collect();
    phases.push(Phase::new(all, PhaseMode::Exhaust));
    vec![
        Strategy::Fifo,
        Strategy::DatalogFirst,
        Strategy::Phased(phases),
    ]
}

/// The result with every null renamed after the trigger that minted it: rule, existential
/// variable and the (renamed) body match. Oblivious results of different strategies then agree
/// literally, since the step serial no longer appears in the names.
pub fn skolem_named(d: &Derivation) -> FactBase {
    let mut names: BTreeMap<Term, Term> = BTreeMap::new();
    let rename =
        |names: &BTreeMap<Term, Term>, t: &Term| names.get(t).cloned().unwrap_or_else(|| t.clone());
    for step in &d.steps {
        let t = &step.trigger;
        let image: Vec<String> = t
            .image()
            .iter()
            .map(|x| rename(&names, x).name().to_string())
            .collect();
        for z in t.rule().existentials() {
            let label = format!("{}.{}({})", t.rule().id(), z, image.join(","));
            names.insert(t.null_for(z), Term::null(&label));
        }
    }
    FactBase::from_atoms(d.result.iter().map(|a| a.map_terms(|t| rename(&names, t))))
        .expect("renaming keeps arities")
}

fn check_strategies(name: &str, kb: &KnowledgeBase, variant: ChaseVariant, bad: &mut Vec<String>) {
    let runs: Vec<_> = strategies(kb)
        .iter()
        .map(|s| run_chase(kb, variant, s, 300).expect("generated strategies are valid"))
        .collect();
    for d in &runs {
        for i in 0..d.len() {
            if !d.factbase_at(i).is_subset(&d.factbase_at(i + 1)) {
                bad.push(format!(
                    "{name} [{variant}]: step {} shrinks the fact base",
                    i + 1
                ));
            }
        }
    }
    if runs.iter().all(|d| d.verdict == Verdict::TerminatedFair) {
        if variant == ChaseVariant::O {
            let named: Vec<FactBase> = runs.iter().map(skolem_named).collect();
            if named.windows(2).any(|w| w[0] != w[1]) {
                bad.push(format!("{name} [O]: results differ across strategies"));
            }
        }
        if runs
            .windows(2)
            .any(|w| !are_isomorphic(&w[0].result, &w[1].result))
        {
            bad.push(format!(
                "{name} [{variant}]: results differ across strategies"
            ));
        }
    } else if variant != ChaseVariant::R {
        bad.push(format!(
            "{name} [{variant}]: a run did not terminate fairly"
        ));
    }
    if variant == ChaseVariant::R {
        for d in runs.iter().filter(|d| d.verdict == Verdict::TerminatedFair) {
            if let Some(why) = satisfies(kb.rules(), &d.result) {
                bad.push(format!(
                    "{name} [R]: fair terminal result is not a model: {why}"
                ));
            }
        }
    }
}

/// O-results agree (up to null names) and SO-results are isomorphic across three strategies;
/// every derivation grows monotonically; R results that are fair and terminal satisfy all rules.
pub fn strategy_independence_counterexamples(random_kbs: usize, seed: u64) -> Vec<String> {
    let mut bad = Vec::new();
    for (k, text) in O_TERMINATING.iter().enumerate() {
        let kb = kb(text);
        for v in [ChaseVariant::O, ChaseVariant::SO, ChaseVariant::R] {
            check_strategies(&format!("o-terminating #{}", k + 1), &kb, v, &mut bad);
        }
    }
    for (k, text) in SO_TERMINATING.iter().enumerate() {
        let kb = kb(text);
        for v in [ChaseVariant::SO, ChaseVariant::R] {
            check_strategies(&format!("so-terminating #{}", k + 1), &kb, v, &mut bad);
        }
    }
    let mut rng = rng(seed);
    let mut done = 0;
    while done < random_kbs {
        let kb = random_kb(&mut rng);
        // Only knowledge bases whose oblivious chase stops are fixtures for the O/SO comparison.
        if !run_chase(&kb, ChaseVariant::O, &Strategy::Fifo, 300)
            .is_ok_and(|d| d.verdict == Verdict::TerminatedFair)
        {
            continue;
        }
        done += 1;
        for v in [ChaseVariant::O, ChaseVariant::SO, ChaseVariant::R] {
            check_strategies(&format!("random #{done}"), &kb, v, &mut bad);
        }
    }
    bad
}

/// Rule sets on which the restricted chase terminates from small fact bases (their decompositions
/// need not).
pub const R_TERMINATING: [&str; 5] = [
    "[ex1] P(X,Y) -> exists Z. P(Y,Z), P(Z,Y).",
    "[succ] P(X,Y) -> exists Z. P(X,Z).",
    "[pr] P(X,Y) -> exists Z. R(Y,Z), A(Z).\n[d] R(X,Y), A(Y) -> S(X).",
    "[loop_a] P(X,Y) -> P(Y,Y), A(Y).\n[a] A(X) -> exists Z. P(X,Z), B(Z).",
    "[r6] R(X,Y) -> exists Z,U. P(X,Z), A(Z), A(U), P(X,Y).\n[d] P(X,Y), A(Y) -> S(X).",
];

/// A random fact base and a random Boolean query over the signature of `kb`.
fn random_pair(kb: &KnowledgeBase, rng: &mut ChaCha8Rng) -> (FactBase, Vec<Atom>) {
    let sig: Vec<(chasekit::model::Symbol, usize)> = kb.signature().into_iter().collect();
    let constants: Vec<Term> = CONSTANTS[..3].iter().map(|c| Term::constant(c)).collect();
    let mut query_terms: Vec<Term> = ["X", "Y", "W"].iter().map(|v| Term::variable(v)).collect();
    query_terms.push(Term::constant("a"));
    let atom = |rng: &mut ChaCha8Rng, terms: &[Term]| {
        let (p, n) = sig.choose(rng).expect("non-empty signature");
        Atom::with_symbol(
            p.clone(),
            (0..*n)
                .map(|_| terms.choose(rng).expect("non-empty").clone())
                .collect(),
        )
    };
    let facts = FactBase::from_atoms((0..rng.gen_range(1..=3)).map(|_| atom(rng, &constants)))
        .expect("ground");
    let query = (0..rng.gen_range(1..=2))
        .map(|_| atom(rng, &query_terms))
        .collect();
    (facts, query)
}

/// Entailment of `pairs` random (facts, query) pairs per terminating rule set agrees across the
/// rule set and its three decompositions. A disagreement is one `Yes` against one `No`, or an
/// undecided answer on the original rule set.
pub fn conservativity_counterexamples(pairs: usize, seed: u64) -> Vec<String> {
    let mut rng = rng(seed);
    let mut bad = Vec::new();
    let bases: Vec<KnowledgeBase> = R_TERMINATING
        .iter()
        .map(|t| kb(&format!("{t}\nP(a,b).")))
        .collect();
    for n in 0..pairs {
        let base = &bases[n % bases.len()];
        let (facts, query) = random_pair(base, &mut rng);
        let original = base.with_facts(facts.clone()).expect("same signature");
        let kbs = [
            ("R", original.clone()),
            ("sp(R)", single_piece_kb(&original)),
            ("1ad(R)", one_way_kb(&original)),
            ("2ad(R)", two_way_kb(&original)),
        ];
        let answers: Vec<(&str, TriState)> = kbs
            .iter()
            .map(|(name, k)| (*name, entails(k, &query, ChaseVariant::R, 400)))
            .collect();
        let yes = answers.iter().any(|(_, a)| matches!(a, TriState::Yes(_)));
        let no = answers.iter().any(|(_, a)| *a == TriState::No);
        let undecided = matches!(answers[0].1, TriState::Unknown(_));
        if (yes && no) || undecided {
            let shown: Vec<String> = answers
                .iter()
                .map(|(k, a)| format!("{k}: {}", a.name()))
                .collect();
            bad.push(format!(
                "pair #{n} on rule set {}: {}",
                n % bases.len() + 1,
                shown.join(", ")
            ));
        }
    }
    bad
}
