//! Golden runs of the published witness examples: exact step counts, result sizes, derivation
//! prefixes up to null renaming, decomposition outputs and the machine encoding.

mod support;

use std::collections::BTreeMap;

use chasekit::analysis::{explore_all, prefix_matches, ExplorationVerdict, ExploreBudget};
use chasekit::chase::{run_chase, Phase, PhaseMode, Strategy, TriggerChoice};
use chasekit::derivation::{ChaseVariant, Verdict};
use chasekit::hom::{are_isomorphic, rules_isomorphic};
use chasekit::model::{Atom, FactBase, Rule, Term};
use chasekit::normalize::{one_way, single_piece, two_way};
use chasekit::textio::{parse_facts, parse_rules};
use chasekit::tmgen::{encode, tape_generation_strategy, TuringMachine};
use support::{kb, one_way_kb, single_piece_kb, two_way_kb};

const EX1: &str = "[R] P(X,Y) -> exists Z. P(Y,Z), P(Z,Y).\nP(a,b).";

const RULES_1_TO_5: &str = "\
[r1] A(X) -> R(X,X).
[r2] R(X,Y), S(Y,Z) -> S(X,X).
[r3] A(X), S(X,Y) -> A(Y).
[r4] A(X) -> exists Z. R(X,Z).
[r5] R(X,Y) -> exists Z. S(Y,Z).
A(a).";

const T4A: &str = "[loop_a] P(X,Y) -> P(Y,Y), A(Y).\n[succ] A(X) -> exists Z. P(X,Z).\nA(a).";

fn facts(text: &str) -> FactBase {
    parse_facts(text).unwrap()
}

fn deltas(steps: &[&str]) -> Vec<Vec<Atom>> {
    steps.iter().map(|s| facts(s).atoms()).collect()
}

fn same_rules(got: &[Rule], want: &str) -> bool {
    let want = parse_rules(want).unwrap();
    got.len() == want.len()
        && want
            .iter()
            .all(|w| got.iter().any(|g| rules_isomorphic(g, w)))
}

#[test]
fn example_restricted_chase_stops_after_one_step() {
    let d = run_chase(&kb(EX1), ChaseVariant::R, &Strategy::Fifo, 100).unwrap();
    assert_eq!(d.verdict, Verdict::TerminatedFair);
    assert_eq!((d.len(), d.result.len()), (1, 3));
    assert!(are_isomorphic(
        &d.result,
        &facts("P(a,b). P(b,_z). P(_z,b).")
    ));
}

#[test]
fn example_oblivious_chase_adds_two_atoms_per_step() {
    let d = run_chase(&kb(EX1), ChaseVariant::O, &Strategy::Fifo, 20).unwrap();
    assert_eq!(d.verdict, Verdict::BudgetExhausted);
    assert_eq!(d.len(), 20);
    assert!(d.steps.iter().all(|s| s.added.len() == 2));
    assert_eq!(d.result.len(), 41);
}

#[test]
fn successors_first_phases_stop_rules_1_to_5() {
    let strategy = Strategy::Phased(vec![
        Phase::new(["r3", "r4", "r5"], PhaseMode::Exhaust),
        Phase::new(["r2"], PhaseMode::Exhaust),
        Phase::new(["r1"], PhaseMode::Exhaust),
    ]);
    let d = run_chase(&kb(RULES_1_TO_5), ChaseVariant::R, &strategy, 100).unwrap();
    assert_eq!(d.verdict, Verdict::TerminatedFair);
    assert_eq!(d.len(), 4);
    assert!(are_isomorphic(
        &d.result,
        &facts("A(a). R(a,_z1). S(_z1,_z2). S(a,a). R(a,a).")
    ));
}

#[test]
fn datalog_first_rounds_on_rules_1_to_5() {
    // Round k on v_k (v_0 = a): S(v_k, v_{k+1}) by r5, then S(v_k, v_k), A(v_{k+1}) and
    // R(v_{k+1}, v_{k+1}) by Datalog rules, in some order.
    let d = run_chase(&kb(RULES_1_TO_5), ChaseVariant::DF_R, &Strategy::Fifo, 13).unwrap();
    assert_eq!(d.len(), 13);
    assert_eq!(d.steps[0].added, facts("R(a,a).").atoms());
    let v = |k: usize| {
        if k == 0 {
            "a".to_string()
        } else {
            format!("_v{k}")
        }
    };
    let mut expected = String::from("A(a). R(a,a).");
    for k in 0..3 {
        assert_eq!(&**d.steps[1 + 4 * k].trigger.rule().id(), "r5", "round {k}");
        let (a, b) = (v(k), v(k + 1));
        expected += &format!(" S({a},{b}). S({a},{a}). A({b}). R({b},{b}).");
        assert!(
            are_isomorphic(&d.factbase_at(5 + 4 * k), &facts(&expected)),
            "round {k}"
        );
    }
}

#[test]
fn single_piece_of_the_three_piece_rule() {
    let rules = parse_rules("[r6] R(X,Y) -> exists Z,U. P(X,Z), A(Z), A(U), P(X,Y).").unwrap();
    let out = single_piece(&rules).output;
    assert!(same_rules(
        &out,
        "R(X,Y) -> exists Z. P(X,Z), A(Z).\nR(X,Y) -> exists U. A(U).\nR(X,Y) -> P(X,Y)."
    ));
}

#[test]
fn single_piece_of_the_loop_pair() {
    let out = single_piece(&rules_of(T4A)).output;
    assert!(same_rules(
        &out,
        "A(X) -> exists Z. P(X,Z).\nP(X,Y) -> P(Y,Y).\nP(X,Y) -> A(Y)."
    ));
}

fn rules_of(doc: &str) -> Vec<Rule> {
    support::rules_of(&kb(doc))
}

#[test]
fn one_way_and_two_way_of_the_one_way_example() {
    let rules = parse_rules("[e] R(X,Y) -> exists Z. P(X,Z), S(X,Y,Z).").unwrap();
    let one = one_way(&rules, false).unwrap();
    assert_eq!(one.fresh.len(), 1);
    assert_eq!(one.fresh[0].arity, 3);
    let x = &one.fresh[0].name;
    let expected =
        format!("R(X,Y) -> exists Z. {x}(X,Y,Z).\n{x}(X,Y,Z) -> P(X,Z).\n{x}(X,Y,Z) -> S(X,Y,Z).");
    assert!(same_rules(&one.output, &expected));
    let two = two_way(&rules, false).unwrap();
    assert!(same_rules(
        &two.output,
        &format!("{expected}\nP(X,Z), S(X,Y,Z) -> {x}(X,Y,Z).")
    ));
}

#[test]
fn two_way_of_the_example_has_the_backward_rule() {
    let two = two_way(&rules_of(EX1), false).unwrap();
    let x = &two.fresh[0].name;
    assert_eq!(two.output.len(), 4);
    let back = parse_rules(&format!("P(Y,Z), P(Z,Y) -> {x}(Y,Z)."))
        .unwrap()
        .remove(0);
    assert!(two.output.iter().any(|r| rules_isomorphic(r, &back)));
}

#[test]
fn loop_pair_terminates_but_its_pieces_grow() {
    let original = explore_all(&kb(T4A), ChaseVariant::R, ExploreBudget::default());
    assert!(
        matches!(original.verdict, ExplorationVerdict::AllFinite { .. }),
        "{:?}",
        original.verdict
    );
    let pieces = explore_all(
        &single_piece_kb(&kb(T4A)),
        ChaseVariant::R,
        ExploreBudget::default(),
    );
    let ExplorationVerdict::GrowthWitness(w) = pieces.verdict else {
        panic!("{:?}", pieces.verdict)
    };
    let listed = deltas(&[
        "P(a,_z1).",
        "A(_z1).",
        "P(_z1,_z2).",
        "P(_z1,_z1).",
        "A(_z2).",
        "P(_z2,_z3).",
        "P(_z2,_z2).",
    ]);
    assert!(prefix_matches(&listed, &w.deltas), "{:?}", w.triggers);
}

#[test]
fn one_way_equivalent_chase_grows_three_atoms_per_round() {
    let k = one_way_kb(&kb(EX1));
    let x = one_way(&rules_of(EX1), false).unwrap().fresh[0]
        .name
        .clone();
    let d = run_chase(&k, ChaseVariant::E, &Strategy::Fifo, 15).unwrap();
    assert_eq!(d.verdict, Verdict::BudgetExhausted);
    assert!(d.steps.iter().all(|s| s.added.len() == 1));
    // Round i adds X(z_i, z_{i+1}), P(z_i, z_{i+1}), P(z_{i+1}, z_i) with z_0 = b.
    let z = |i: usize| {
        if i == 0 {
            "b".to_string()
        } else {
            format!("_z{i}")
        }
    };
    let mut expected = String::from("P(a,b).");
    for round in 0..5 {
        let (p, q) = (z(round), z(round + 1));
        expected += &format!(" {x}({p},{q}). P({p},{q}). P({q},{p}).");
        assert!(
            are_isomorphic(&d.factbase_at(3 * (round + 1)), &facts(&expected)),
            "round {round}"
        );
    }
}

#[test]
fn two_way_restricted_chase_admits_an_infinite_derivation() {
    let k = two_way_kb(&kb(EX1));
    let null = |step: usize| Term::null(&format!("R.x#{step}.Z"));
    // z_0 = b; z_{i+1} is minted by the R.x step of iteration i.
    let mut z = vec![Term::constant("b")];
    let mut script = Vec::new();
    let mut push = |rule: &str, vars: [(&'static str, Term); 2]| {
        script.push(TriggerChoice::new(rule, vars));
        script.len()
    };
    let s = push("R.x", [("X", Term::constant("a")), ("Y", z[0].clone())]);
    z.push(null(s));
    push("R.h1", [("Y", z[0].clone()), ("Z", z[1].clone())]);
    let iterations = 4;
    for i in 1..=iterations {
        let s = push("R.x", [("X", z[i - 1].clone()), ("Y", z[i].clone())]);
        z.push(null(s));
        push("R.h1", [("Y", z[i].clone()), ("Z", z[i + 1].clone())]);
        push("R.h2", [("Y", z[i - 1].clone()), ("Z", z[i].clone())]);
        push("R.back", [("Y", z[i].clone()), ("Z", z[i - 1].clone())]);
    }
    let d = run_chase(&k, ChaseVariant::R, &Strategy::Scripted(script), 100).unwrap();
    assert_eq!(d.len(), 2 + 4 * iterations);
    // The script stops while R.x is still applicable on the newest P atom.
    assert_eq!(d.verdict, Verdict::TerminatedUnfair);
    assert_eq!(d.result.nulls().len(), iterations + 1);
}

fn components(facts: &FactBase) -> Vec<FactBase> {
    // Atoms linked by shared nulls.
    let atoms: Vec<Atom> = facts
        .iter()
        .filter(|a| a.args.iter().any(Term::is_null))
        .cloned()
        .collect();
    let mut comp: Vec<usize> = (0..atoms.len()).collect();
    fn root(c: &mut [usize], mut i: usize) -> usize {
        while c[i] != i {
            c[i] = c[c[i]];
            i = c[i];
        }
        i
    }
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            if atoms[i]
                .args
                .iter()
                .any(|t| t.is_null() && atoms[j].args.contains(t))
            {
                let (a, b) = (root(&mut comp, i), root(&mut comp, j));
                comp[a] = b;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<Atom>> = BTreeMap::new();
    for (i, a) in atoms.into_iter().enumerate() {
        groups.entry(root(&mut comp, i)).or_default().push(a);
    }
    groups
        .into_values()
        .map(|g| FactBase::from_atoms(g).unwrap())
        .collect()
}

#[test]
fn tape_generation_for_two() {
    let e = encode(&TuringMachine::halt1()).unwrap();
    assert_eq!(e.rules_w.len(), 8);
    let d = run_chase(
        &e.tape_creation_kb(),
        ChaseVariant::R,
        &tape_generation_strategy(2).unwrap(),
        500,
    )
    .unwrap();
    assert_eq!(d.verdict, Verdict::TerminatedFair);
    assert_eq!((d.len(), d.result.len()), (17, 67));
    let counts: BTreeMap<String, usize> = d
        .result
        .signature()
        .into_keys()
        .map(|p| (p.to_string(), d.result.predicate_count(&p)))
        .collect();
    let expected: BTreeMap<String, usize> = [
        ("B", 1),
        ("Content_1", 8),
        ("Content_blank", 5),
        ("D", 11),
        ("End", 5),
        ("F", 3),
        ("Frst", 6),
        ("HeadState_qA", 1),
        ("HeadState_qI", 6),
        ("HeadState_qR", 1),
        ("Int", 1),
        ("Lst", 1),
        ("NF", 5),
        ("Nxt", 8),
        ("NxtPlus", 1),
        ("R", 3),
        ("Stp", 1),
    ]
    .into_iter()
    .map(|(p, n)| (p.to_string(), n))
    .collect();
    assert_eq!(counts, expected);
    // Two generated tapes (input lengths 2 and 3) and the cell the first-cell rule hangs on b.
    let comps = components(&d.result);
    assert_eq!(comps.len(), 3);
    let mut ones: Vec<usize> = comps
        .iter()
        .map(|c| c.predicate_count(&"Content_1".into()))
        .collect();
    ones.sort();
    assert_eq!(ones, [1, 2, 3]);
    let ends: usize = comps.iter().map(|c| c.predicate_count(&"End".into())).sum();
    assert_eq!(ends, 2);
}
