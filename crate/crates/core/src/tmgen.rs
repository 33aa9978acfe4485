//! Compiling a Turing machine with unary input into existential rules.
//!
//! The tape-creation rules build, from a seed fact base, input tapes of every length up to a point
//! chosen by the derivation (an "emergency brake" stops the generator). The simulation rules copy a
//! configuration into its successor along `Stp` edges and extend the tape by one blank cell per
//! step, so the chase terminates exactly when the machine halts.
//!
//! Symbols and states become predicate suffixes (`Content_<symbol>`, `HeadState_<state>`), so they
//! must be identifiers. The transitive closure of `Nxt` is `NxtPlus`.
//!
//! Machine files (`.tm`) have header lines `initial:`, `accept:`, `reject:`, `blank:` and one line
//! `q a -> r b L|R` per transition; `%` starts a comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::chase::{Phase, PhaseMode, Strategy};
use crate::model::{Atom, FactBase, KnowledgeBase, Rule, Term};
use crate::textio::parse_rules;

/// The input symbol of the unary alphabet.
pub const INPUT_SYMBOL: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Left,
    Right,
}

/// A deterministic Turing machine over a unary input alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TuringMachine {
    pub initial: String,
    pub accept: String,
    pub reject: String,
    pub blank: String,
    /// `(state, read) → (state, write, move)`.
    pub delta: BTreeMap<(String, String), (String, String, Direction)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TmError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("invalid machine: {0}")]
    InvalidMachine(String),
}

impl TuringMachine {
    /// All states: initial, halting, and every state of a transition.
    pub fn states(&self) -> BTreeSet<String> {
        let mut s: BTreeSet<String> = [&self.initial, &self.accept, &self.reject]
            .into_iter()
            .cloned()
            .collect();
        for ((q, _), (r, _, _)) in &self.delta {
            s.insert(q.clone());
            s.insert(r.clone());
        }
        s
    }

    /// The tape alphabet: input symbol, blank, and every symbol of a transition.
    pub fn alphabet(&self) -> BTreeSet<String> {
        let mut g: BTreeSet<String> = [INPUT_SYMBOL.to_string(), self.blank.clone()]
            .into_iter()
            .collect();
        for ((_, a), (_, b, _)) in &self.delta {
            g.insert(a.clone());
            g.insert(b.clone());
        }
        g
    }

    pub fn is_halting(&self, q: &str) -> bool {
        q == self.accept || q == self.reject
    }

    /// Non-halting states.
    pub fn working_states(&self) -> Vec<String> {
        self.states()
            .into_iter()
            .filter(|q| !self.is_halting(q))
            .collect()
    }

    /// Checks totality on working states, the absence of transitions out of halting states, and
    /// that names are usable inside predicate names.
    pub fn validate(&self) -> Result<(), TmError> {
        let bad = |what: &str, s: &str| {
            TmError::InvalidMachine(format!("{what} '{s}' is not an identifier"))
        };
        for q in self.states() {
            if !is_ident(&q) {
                return Err(bad("state", &q));
            }
        }
        for c in self.alphabet() {
            if !is_ident(&c) {
                return Err(bad("symbol", &c));
            }
        }
        if self.blank == INPUT_SYMBOL {
            return Err(TmError::InvalidMachine(
                "the blank must differ from the input symbol".into(),
            ));
        }
        if self.accept == self.reject {
            return Err(TmError::InvalidMachine(
                "accepting and rejecting states must differ".into(),
            ));
        }
        for (q, _) in self.delta.keys() {
            if self.is_halting(q) {
                return Err(TmError::InvalidMachine(format!(
                    "transition out of halting state {q}"
                )));
            }
        }
        for q in self.working_states() {
            for c in self.alphabet() {
                if !self.delta.contains_key(&(q.clone(), c.clone())) {
                    return Err(TmError::InvalidMachine(format!(
                        "no transition for ({q}, {c})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Halts immediately, moving right, whatever it reads.
    pub fn halt1() -> TuringMachine {
        let mut m = TuringMachine::empty("qI", "qA", "qR", "blank");
        for c in [INPUT_SYMBOL, "blank"] {
            m.delta.insert(
                ("qI".into(), c.into()),
                ("qA".into(), c.into(), Direction::Right),
            );
        }
        m
    }

    /// Moves right forever without changing the tape.
    pub fn loop_right() -> TuringMachine {
        let mut m = TuringMachine::empty("qI", "qA", "qR", "blank");
        for c in [INPUT_SYMBOL, "blank"] {
            m.delta.insert(
                ("qI".into(), c.into()),
                ("qI".into(), c.into(), Direction::Right),
            );
        }
        m
    }

    fn empty(initial: &str, accept: &str, reject: &str, blank: &str) -> TuringMachine {
        TuringMachine {
            initial: initial.into(),
            accept: accept.into(),
            reject: reject.into(),
            blank: blank.into(),
            delta: BTreeMap::new(),
        }
    }

    /// The `.tm` text of the machine.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "initial: {}\naccept: {}\nreject: {}\nblank: {}\n",
            self.initial, self.accept, self.reject, self.blank
        );
        for ((q, a), (r, b, d)) in &self.delta {
            let d = match d {
                Direction::Left => "L",
                Direction::Right => "R",
            };
            let _ = writeln!(s, "{q} {a} -> {r} {b} {d}");
        }
        s
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl FromStr for TuringMachine {
    type Err = TmError;

    fn from_str(text: &str) -> Result<TuringMachine, TmError> {
        let mut headers: BTreeMap<&str, String> = BTreeMap::new();
        let mut delta = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('%').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |reason: String| TmError::Syntax {
                line: i + 1,
                reason,
            };
            if let Some((key, value)) = line.split_once(':') {
                let key = key.trim();
                if !["initial", "accept", "reject", "blank"].contains(&key) {
                    return Err(syntax(format!("unknown header '{key}'")));
                }
                let key = ["initial", "accept", "reject", "blank"]
                    .into_iter()
                    .find(|k| *k == key)
                    .expect("checked");
                headers.insert(key, value.trim().to_string());
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [q, a, "->", r, b, d] = parts.as_slice() else {
                return Err(syntax("expected 'q a -> r b L|R'".into()));
            };
            let d = match *d {
                "L" => Direction::Left,
                "R" => Direction::Right,
                other => return Err(syntax(format!("direction must be L or R, found '{other}'"))),
            };
            let key = (q.to_string(), a.to_string());
            if delta
                .insert(key, (r.to_string(), b.to_string(), d))
                .is_some()
            {
                return Err(syntax(format!("second transition for ({q}, {a})")));
            }
        }
        let header = |k: &str| {
            headers
                .get(k)
                .cloned()
                .ok_or_else(|| TmError::InvalidMachine(format!("missing header '{k}:'")))
        };
        let m = TuringMachine {
            initial: header("initial")?,
            accept: header("accept")?,
            reject: header("reject")?,
            blank: header("blank")?,
            delta,
        };
        m.validate()?;
        Ok(m)
    }
}

/// The rule sets and seed fact base of a machine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoding {
    /// Tape creation (8 rules).
    pub rules_w: Vec<Rule>,
    /// Simulation.
    pub rules_m: Vec<Rule>,
    /// Short tapes, generator seeds and the brake.
    pub seed: FactBase,
    /// Every predicate with its arity.
    pub predicates: BTreeMap<String, usize>,
}

impl Encoding {
    /// `⟨rules_w ∪ rules_m, seed⟩`.
    pub fn knowledge_base(&self) -> KnowledgeBase {
        let rules = self.rules_w.iter().chain(&self.rules_m).cloned().collect();
        KnowledgeBase::new(rules, self.seed.clone())
            .expect("generated rules and seed agree on arities")
    }

    /// `⟨rules_w, seed⟩`.
    pub fn tape_creation_kb(&self) -> KnowledgeBase {
        KnowledgeBase::new(self.rules_w.clone(), self.seed.clone())
            .expect("generated rules and seed agree on arities")
    }
}

fn content(c: &str) -> String {
    format!("Content_{c}")
}

fn head_state(q: &str) -> String {
    format!("HeadState_{q}")
}

/// The tape-creation rules.
pub fn tape_creation_rules(m: &TuringMachine) -> Vec<Rule> {
    let (one, blank, init) = (
        content(INPUT_SYMBOL),
        content(&m.blank),
        head_state(&m.initial),
    );
    let text = format!(
        "[chain] B(b), NF(Z,X), R(X) -> exists Y. NF(X,Y), R(Y), D(Y,b), NF(Y,b).
[brake] B(b) -> R(b).
[final] NF(X,Y) -> exists Z. F(Y,Z).
[end] F(X,Y) -> exists Z. D(Y,Z), End(Z), {blank}(Z).
[tape_f] NF(T,X), F(X,Y), D(Y,Z) -> exists U. Nxt(U,Z), D(X,U), {one}(U).
[tape_nf] NF(T,X), NF(X,Y), D(Y,Z) -> exists U. Nxt(U,Z), D(X,U), {one}(U).
[first] Int(X), NF(X,Y), D(Y,Z) -> exists U. Nxt(U,Z), D(X,U), {one}(U), Frst(U).
[head] Frst(X) -> {init}(X).
"
    );
    parse_rules(&text).expect("tape-creation rules are well-formed")
}

/// The simulation rules.
pub fn simulation_rules(m: &TuringMachine) -> Vec<Rule> {
    let blank = content(&m.blank);
    let mut text = format!(
        "[nxt_plus] Nxt(X,Y) -> NxtPlus(X,Y).
[nxt_plus_trans] NxtPlus(X,Y), NxtPlus(Y,Z) -> NxtPlus(X,Z).
[nxt_step] Nxt(X,Y), Stp(X,Z), Stp(Y,W) -> Nxt(Z,W).
[extend] End(X), Stp(X,Z) -> exists V. Nxt(Z,V), {blank}(V), End(V).
"
    );
    for q in m.working_states() {
        let hq = head_state(&q);
        for c in m.alphabet() {
            let cc = content(&c);
            let _ = writeln!(text, "[inertia_r_{q}_{c}] {hq}(X), NxtPlus(X,Y), {cc}(Y) -> exists Z. Stp(Y,Z), {cc}(Z).");
            let _ = writeln!(text, "[inertia_l_{q}_{c}] {hq}(X), NxtPlus(Y,X), {cc}(Y) -> exists Z. Stp(Y,Z), {cc}(Z).");
        }
    }
    for ((q, a), (r, b, d)) in &m.delta {
        let (hq, ca, cb, hr) = (head_state(q), content(a), content(b), head_state(r));
        let _ = writeln!(
            text,
            "[write_{q}_{a}] {hq}(X), {ca}(X) -> exists Z. Stp(X,Z), {cb}(Z)."
        );
        let step = match d {
            Direction::Right => "Nxt(Z,W)",
            Direction::Left => "Nxt(W,Z)",
        };
        let _ = writeln!(
            text,
            "[move_{q}_{a}] {hq}(X), {ca}(X), Stp(X,Z), {step} -> {hr}(W)."
        );
    }
    parse_rules(&text).expect("simulation rules are well-formed")
}

fn atom(p: &str, args: &[&str]) -> Atom {
    Atom::new(p, args.iter().map(|a| Term::constant(a)).collect())
}

/// Seed atoms shared by every reading: the tapes of length 0 and 1, the generator seed and the
/// brake on `b`.
fn seed_base(m: &TuringMachine) -> Vec<Atom> {
    let (one, blank) = (content(INPUT_SYMBOL), content(&m.blank));
    vec![
        // Tapes of length 1 and 0.
        atom("Frst", &["c1_0"]),
        atom(&one, &["c1_0"]),
        atom("Nxt", &["c1_0", "c1_1"]),
        atom("End", &["c1_1"]),
        atom(&blank, &["c1_1"]),
        atom("Frst", &["c0_0"]),
        atom("End", &["c0_0"]),
        atom(&blank, &["c0_0"]),
        // Generator seed.
        atom("Int", &["a"]),
        atom("NF", &["a", "nf1"]),
        atom("R", &["nf1"]),
        atom("NF", &["nf1", "b"]),
        atom("D", &["nf1", "b"]),
        // Brake.
        atom("B", &["b"]),
        atom("F", &["b", "b"]),
        atom("NF", &["b", "b"]),
        atom("D", &["b", "b"]),
        atom("Nxt", &["b", "b"]),
        atom("Lst", &["b"]),
        atom("Frst", &["b"]),
        // Brake for the simulation predicates.
        atom("End", &["b"]),
        atom("Stp", &["b", "b"]),
        atom("NxtPlus", &["b", "b"]),
    ]
}

/// The seed fact base: the brake `b` carries `HeadState_q` for every state and `Content_c` for
/// every symbol, so that no rule can extend from `b`.
pub fn seed(m: &TuringMachine) -> FactBase {
    let mut atoms = seed_base(m);
    for q in m.states() {
        atoms.push(atom(&head_state(&q), &["b"]));
    }
    for c in m.alphabet() {
        atoms.push(atom(&content(&c), &["b"]));
    }
    FactBase::from_atoms(atoms).expect("ground")
}

/// The seed with a single dummy state `s` and dummy symbol `l` on the brake (25 atoms). Under
/// this seed the brake does not block the end-of-tape rule on `F(b,b)`, and tape generation
/// diverges.
pub fn dummy_seed(m: &TuringMachine) -> FactBase {
    let mut atoms = seed_base(m);
    atoms.push(atom(&head_state("s"), &["b"]));
    atoms.push(atom(&content("l"), &["b"]));
    FactBase::from_atoms(atoms).expect("ground")
}

pub fn encode(m: &TuringMachine) -> Result<Encoding, TmError> {
    m.validate()?;
    let rules_w = tape_creation_rules(m);
    let rules_m = simulation_rules(m);
    let seed = seed(m);
    let mut predicates = BTreeMap::new();
    for r in rules_w.iter().chain(&rules_m) {
        for (p, n) in r.predicates() {
            predicates.insert(p.to_string(), n);
        }
    }
    for (p, n) in seed.signature() {
        predicates.insert(p.to_string(), n);
    }
    Ok(Encoding {
        rules_w,
        rules_m,
        seed,
        predicates,
    })
}

/// The input tape `1ⁿ` followed by one blank end cell, on cells `c0 … cn`.
pub fn tape_factbase(n: usize, blank: &str) -> Result<FactBase, TmError> {
    if n == 0 {
        return Err(TmError::InvalidMachine(
            "tape length must be positive; the empty tape is part of the seed".into(),
        ));
    }
    let cell = |j: usize| format!("c{j}");
    let one = content(INPUT_SYMBOL);
    let mut atoms = vec![
        atom("Frst", &[&cell(0)]),
        atom("End", &[&cell(n)]),
        atom(&content(blank), &[&cell(n)]),
    ];
    for j in 0..n {
        atoms.push(atom(&one, &[&cell(j)]));
        atoms.push(atom("Nxt", &[&cell(j), &cell(j + 1)]));
    }
    Ok(FactBase::from_atoms(atoms).expect("ground"))
}

/// `⟨rules_m ∪ {head}, tape_factbase(n)⟩`: the simulation on one input, with the rule placing the
/// head on the first cell.
pub fn simulation_kb(m: &TuringMachine, n: usize) -> Result<KnowledgeBase, TmError> {
    m.validate()?;
    let mut rules = simulation_rules(m);
    rules.extend(
        tape_creation_rules(m)
            .into_iter()
            .filter(|r| &**r.id() == "head"),
    );
    Ok(KnowledgeBase::new(rules, tape_factbase(n, &m.blank)?)
        .expect("generated rules and tape agree on arities"))
}

/// A phased strategy for `⟨rules_w, seed⟩` that extends the generator chain `n − 1` times, pulls
/// the brake, and then completes the tapes: the result holds tapes of lengths `0 … n + 1`.
pub fn tape_generation_strategy(n: usize) -> Result<Strategy, TmError> {
    if n < 2 {
        return Err(TmError::InvalidMachine(
            "tape generation needs n ≥ 2".into(),
        ));
    }
    Ok(Strategy::Phased(vec![
        Phase::new(["chain"], PhaseMode::Times(n - 1)),
        Phase::new(["brake"], PhaseMode::Once),
        Phase::new(["final"], PhaseMode::Exhaust),
        Phase::new(["end"], PhaseMode::Exhaust),
        Phase::new(["tape_f", "tape_nf", "first"], PhaseMode::Exhaust),
        Phase::new(["head"], PhaseMode::Exhaust),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chase::run_chase;
    use crate::derivation::{ChaseVariant, Verdict};

    #[test]
    fn machine_file_round_trip() {
        let m = TuringMachine::halt1();
        assert_eq!(m.to_text().parse::<TuringMachine>().unwrap(), m);
    }

    #[test]
    fn machine_file_errors() {
        assert!(matches!(
            "initial: q\nq 1 -> q 1 X".parse::<TuringMachine>(),
            Err(TmError::Syntax { line: 2, .. })
        ));
        let partial = "initial: qI\naccept: qA\nreject: qR\nblank: blank\nqI 1 -> qA 1 R\n";
        assert!(matches!(
            partial.parse::<TuringMachine>(),
            Err(TmError::InvalidMachine(_))
        ));
    }

    #[test]
    fn rule_counts_of_halt1() {
        // 4 schema rules + 1 working state × 2 symbols × 2 directions + 2 transitions × 2 rules.
        let e = encode(&TuringMachine::halt1()).unwrap();
        assert_eq!(e.rules_w.len(), 8);
        assert_eq!(e.rules_m.len(), 4 + 4 + 4);
    }

    #[test]
    fn predicate_arities() {
        let e = encode(&TuringMachine::halt1()).unwrap();
        for (p, n) in [
            ("Nxt", 2),
            ("NxtPlus", 2),
            ("Stp", 2),
            ("NF", 2),
            ("F", 2),
            ("D", 2),
        ] {
            assert_eq!(e.predicates[p], n, "{p}");
        }
        for p in [
            "R",
            "B",
            "Int",
            "Frst",
            "End",
            "Lst",
            "Content_1",
            "Content_blank",
            "HeadState_qI",
        ] {
            assert_eq!(e.predicates[p], 1, "{p}");
        }
    }

    #[test]
    fn seed_sizes() {
        let m = TuringMachine::halt1();
        // 8 + 5 + 7 shared atoms, End/Stp/NxtPlus on b, then 3 states and 2 symbols on b.
        assert_eq!(seed(&m).len(), 28);
        assert_eq!(dummy_seed(&m).len(), 25);
        let s = seed(&m);
        for a in [atom("Int", &["a"]), atom("B", &["b"]), atom("R", &["nf1"])] {
            assert!(s.contains(&a));
        }
    }

    #[test]
    fn tapes() {
        assert_eq!(tape_factbase(1, "blank").unwrap().len(), 5);
        assert_eq!(tape_factbase(2, "blank").unwrap().len(), 7);
        assert!(tape_factbase(0, "blank").is_err());
    }

    #[test]
    fn halt1_simulation_terminates() {
        for n in 1..=3 {
            let kb = simulation_kb(&TuringMachine::halt1(), n).unwrap();
            let d = run_chase(&kb, ChaseVariant::R, &Strategy::DatalogFirst, 500).unwrap();
            assert_eq!(d.verdict, Verdict::TerminatedFair, "n = {n}");
        }
    }

    #[test]
    fn loop_simulation_diverges() {
        let kb = simulation_kb(&TuringMachine::loop_right(), 2).unwrap();
        let d = run_chase(&kb, ChaseVariant::R, &Strategy::DatalogFirst, 500).unwrap();
        assert_eq!(d.verdict, Verdict::BudgetExhausted);
        assert!(
            d.steps
                .iter()
                .filter(|s| &**s.trigger.rule().id() == "extend")
                .count()
                > 5
        );
    }

    #[test]
    fn tape_generation_is_fair_and_terminates() {
        let e = encode(&TuringMachine::halt1()).unwrap();
        let d = run_chase(
            &e.tape_creation_kb(),
            ChaseVariant::R,
            &tape_generation_strategy(2).unwrap(),
            500,
        )
        .unwrap();
        assert_eq!(d.verdict, Verdict::TerminatedFair);
    }
}
