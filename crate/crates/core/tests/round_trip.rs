//! `parse ∘ serialize` is the identity on documents, rules produced by the decompositions, chase
//! results with nulls, and generated machine encodings.

mod support;

use chasekit::chase::{run_chase, Strategy};
use chasekit::derivation::ChaseVariant;
use chasekit::model::FactBase;
use chasekit::normalize::{one_way, single_piece, two_way};
use chasekit::textio::{
    parse_document, parse_facts, parse_rules, serialize_document, serialize_factbase,
    serialize_rules,
};
use chasekit::tmgen::{encode, simulation_kb, TuringMachine};
use support::{random_kb, rng, rules_of};

const DOCUMENTS: [&str; 3] = [
    "% the example\n[R] P(X,Y) -> exists Z. P(Y,Z), P(Z,Y).\nP(a,b).\n? P(X,Y), P(Y,X).\n",
    "[r6] R(X,Y) -> exists Z,U. P(X,Z), A(Z), A(U), P(X,Y).\nR(a,b).\n",
    "[r1] A(X) -> exists Y,Z. R(X,X,X), R(X,Y,Z).\n[r4] R(X,X,Y), S(X,Y,Z) -> S(X,X,X).\nA(a).\n? S(X,X,X).\n",
];

#[test]
fn documents_survive_a_round_trip() {
    for text in DOCUMENTS {
        let doc = parse_document(text).unwrap();
        let printed = serialize_document(&doc);
        let again = parse_document(&printed).unwrap();
        assert_eq!(again, doc);
        assert_eq!(
            serialize_document(&again),
            printed,
            "printing is a fixpoint"
        );
    }
}

#[test]
fn decomposed_rules_survive_a_round_trip() {
    for text in DOCUMENTS {
        let rules = parse_document(text).unwrap().rules;
        for out in [
            single_piece(&rules).output,
            one_way(&rules, false).unwrap().output,
            two_way(&rules, true).unwrap().output,
        ] {
            assert_eq!(parse_rules(&serialize_rules(&out)).unwrap(), out);
        }
    }
}

#[test]
fn results_with_nulls_survive_a_round_trip() {
    let mut r = rng(0x27);
    for _ in 0..50 {
        let kb = random_kb(&mut r);
        for v in [ChaseVariant::O, ChaseVariant::R] {
            let d = run_chase(&kb, v, &Strategy::Fifo, 30).unwrap();
            let back: FactBase = parse_facts(&serialize_factbase(&d.result)).unwrap();
            assert_eq!(back, d.result);
        }
        assert_eq!(
            parse_rules(&serialize_rules(&rules_of(&kb))).unwrap(),
            rules_of(&kb)
        );
    }
}

#[test]
fn machine_encodings_survive_a_round_trip() {
    for m in [TuringMachine::halt1(), TuringMachine::loop_right()] {
        let e = encode(&m).unwrap();
        assert_eq!(
            parse_rules(&serialize_rules(&e.rules_w)).unwrap(),
            e.rules_w
        );
        assert_eq!(
            parse_rules(&serialize_rules(&e.rules_m)).unwrap(),
            e.rules_m
        );
        assert_eq!(parse_facts(&serialize_factbase(&e.seed)).unwrap(), e.seed);
        let kb = simulation_kb(&m, 2).unwrap();
        assert_eq!(
            parse_facts(&serialize_factbase(kb.facts())).unwrap(),
            *kb.facts()
        );
        assert_eq!(m.to_text().parse::<TuringMachine>().unwrap(), m);
    }
}
