//! The `.erl` text format: rules, facts and boolean conjunctive queries.
//!
//! ```text
//! % comment to end of line
//! [r1] P(X,Y) -> exists Z. P(Y,Z), P(Z,Y).
//! P(X) -> Q(X).                 % id r2 assigned automatically
//! P(a,b).
//! ? P(X,X).
//! ```
//!
//! Variables start with an uppercase letter, constants with a lowercase letter, nulls are `_`
//! followed by a label (which may contain `#` and `.`, as minted by the chase). `exists` lists are
//! optional: head variables missing from the body are existential either way.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{sym, Atom, FactBase, KnowledgeBase, ModelError, Rule, Symbol, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("syntax error at {line}:{col}: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("arity error: predicate {predicate} used with arity {seen}, expected {expected}")]
    Arity {
        predicate: String,
        seen: usize,
        expected: usize,
    },
    #[error("variable scope error in rule {rule}: {variable} {reason}")]
    VariableScope {
        rule: String,
        variable: String,
        reason: &'static str,
    },
    #[error("duplicate rule id {0}")]
    DuplicateRuleId(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A boolean conjunctive query; all its variables are existentially quantified.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    pub atoms: Vec<Atom>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ItemKind {
    Rule,
    Fact,
    Query,
}

/// Where an item came from: its kind, its index within that kind, and its 1-based source line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub kind: ItemKind,
    pub index: usize,
    pub line: usize,
}

#[derive(Clone, Debug, Default)]
pub struct SourceDocument {
    pub rules: Vec<Rule>,
    pub facts: Vec<Atom>,
    pub queries: Vec<Query>,
    pub provenance: Vec<Provenance>,
}

impl PartialEq for SourceDocument {
    /// Structural equality; provenance is not part of the content.
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules && self.facts == other.facts && self.queries == other.queries
    }
}

impl SourceDocument {
    pub fn fact_base(&self) -> FactBase {
        FactBase::from_atoms(self.facts.iter().cloned()).expect("parser only admits ground facts")
    }

    pub fn knowledge_base(&self) -> Result<KnowledgeBase, ModelError> {
        KnowledgeBase::new(self.rules.clone(), self.fact_base())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Null(String),
    Label(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    Question,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Null(s) => format!("null '_{s}'"),
            Tok::Label(s) => format!("label '[{s}]'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Dot => "'.'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Question => "'?'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, TextError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let syntax = |line, col, expected: &str| TextError::Syntax {
        line,
        col,
        expected: expected.into(),
    };
    while i < chars.len() {
        let ch = chars[i];
        let (l0, c0) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match ch {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                out.push(Spanned {
                    tok: Tok::LParen,
                    line: l0,
                    col: c0,
                });
                advance(1, &mut i, &mut col);
            }
            ')' => {
                out.push(Spanned {
                    tok: Tok::RParen,
                    line: l0,
                    col: c0,
                });
                advance(1, &mut i, &mut col);
            }
            ',' => {
                out.push(Spanned {
                    tok: Tok::Comma,
                    line: l0,
                    col: c0,
                });
                advance(1, &mut i, &mut col);
            }
            '.' => {
                out.push(Spanned {
                    tok: Tok::Dot,
                    line: l0,
                    col: c0,
                });
                advance(1, &mut i, &mut col);
            }
            '?' => {
                out.push(Spanned {
                    tok: Tok::Question,
                    line: l0,
                    col: c0,
                });
                advance(1, &mut i, &mut col);
            }
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    out.push(Spanned {
                        tok: Tok::Arrow,
                        line: l0,
                        col: c0,
                    });
                    advance(2, &mut i, &mut col);
                } else {
                    return Err(syntax(l0, c0, "'->'"));
                }
            }
            '[' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != ']' && chars[j] != '\n' {
                    j += 1;
                }
                if chars.get(j) != Some(&']') {
                    return Err(syntax(l0, c0, "']' closing the rule label"));
                }
                let label: String = chars[start..j]
                    .iter()
                    .collect::<String>()
                    .trim()
                    .to_string();
                if label.is_empty() || !label.chars().all(is_label_char) {
                    return Err(syntax(
                        l0,
                        c0 + 1,
                        "rule label of letters, digits and _ . # : + -",
                    ));
                }
                out.push(Spanned {
                    tok: Tok::Label(label),
                    line: l0,
                    col: c0,
                });
                col += j + 1 - i;
                i = j + 1;
            }
            '_' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && !chars[j].is_whitespace() && !"(),".contains(chars[j]) {
                    j += 1;
                }
                if j == start {
                    return Err(syntax(l0, c0 + 1, "null label after '_'"));
                }
                out.push(Spanned {
                    tok: Tok::Null(chars[start..j].iter().collect()),
                    line: l0,
                    col: c0,
                });
                col += j - i;
                i = j;
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                out.push(Spanned {
                    tok: Tok::Ident(chars[start..j].iter().collect()),
                    line: l0,
                    col: c0,
                });
                col += j - i;
                i = j;
            }
            _ => return Err(syntax(l0, c0, "an identifier, term, or punctuation")),
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

fn is_label_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "_.#:+-".contains(c)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    arities: BTreeMap<Symbol, usize>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn line(&self) -> usize {
        self.toks[self.pos].line
    }

    fn err(&self, expected: &str) -> TextError {
        let s = &self.toks[self.pos];
        TextError::Syntax {
            line: s.line,
            col: s.col,
            expected: format!("{expected}, found {}", s.tok.describe()),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), TextError> {
        if *self.peek() == tok {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    fn term(&mut self) -> Result<Term, TextError> {
        let t = match self.peek().clone() {
            Tok::Ident(s) => {
                let first = s.chars().next().expect("identifiers are non-empty");
                if first.is_ascii_uppercase() {
                    Term::Variable(sym(&s))
                } else {
                    Term::Constant(sym(&s))
                }
            }
            Tok::Null(l) => Term::Null(sym(&l)),
            _ => return Err(self.err("a term")),
        };
        self.pos += 1;
        Ok(t)
    }

    fn atom(&mut self) -> Result<Atom, TextError> {
        let name = match self.peek().clone() {
            Tok::Ident(s) if s != "exists" => s,
            _ => return Err(self.err("a predicate name")),
        };
        self.pos += 1;
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.pos += 1;
            args.push(self.term()?);
            while *self.peek() == Tok::Comma {
                self.pos += 1;
                args.push(self.term()?);
            }
            self.expect(Tok::RParen, "',' or ')'")?;
        }
        let predicate = sym(&name);
        let expected = *self.arities.entry(predicate.clone()).or_insert(args.len());
        if expected != args.len() {
            return Err(TextError::Arity {
                predicate: name,
                seen: args.len(),
                expected,
            });
        }
        Ok(Atom { predicate, args })
    }

    fn atom_list(&mut self) -> Result<Vec<Atom>, TextError> {
        let mut atoms = vec![self.atom()?];
        while *self.peek() == Tok::Comma {
            self.pos += 1;
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }

    fn exists_list(&mut self) -> Result<Option<Vec<Symbol>>, TextError> {
        let is_exists = matches!(self.peek(), Tok::Ident(s) if s == "exists")
            && matches!(self.peek_at(1), Tok::Ident(s) if s.starts_with(|c: char| c.is_ascii_uppercase()));
        if !is_exists {
            return Ok(None);
        }
        self.pos += 1;
        let mut vars = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(s) if s.starts_with(|c: char| c.is_ascii_uppercase()) => {
                    vars.push(sym(&s));
                    self.pos += 1;
                }
                _ => return Err(self.err("an existential variable")),
            }
            if *self.peek() == Tok::Comma {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.expect(Tok::Dot, "'.' after the existential variables")?;
        Ok(Some(vars))
    }
}

/// Parses an `.erl` document.
pub fn parse_document(text: &str) -> Result<SourceDocument, TextError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        arities: BTreeMap::new(),
    };
    let mut doc = SourceDocument::default();
    let mut ids: BTreeSet<String> = BTreeSet::new();
    while *p.peek() != Tok::Eof {
        let line = p.line();
        match p.peek().clone() {
            Tok::Question => {
                p.pos += 1;
                let atoms = p.atom_list()?;
                p.expect(Tok::Dot, "',' or '.' ending the query")?;
                doc.provenance.push(Provenance {
                    kind: ItemKind::Query,
                    index: doc.queries.len(),
                    line,
                });
                doc.queries.push(Query { atoms });
            }
            tok => {
                let label = if let Tok::Label(l) = tok {
                    p.pos += 1;
                    Some(l)
                } else {
                    None
                };
                let body = p.atom_list()?;
                if label.is_none() && body.len() == 1 && *p.peek() == Tok::Dot {
                    p.pos += 1;
                    let fact = body.into_iter().next().expect("one atom");
                    if let Some(v) = fact.args.iter().find(|t| t.is_variable()) {
                        let s = &p.toks[p.pos - 1];
                        return Err(TextError::Syntax {
                            line: s.line,
                            col: s.col,
                            expected: format!("a ground fact, found variable {v}"),
                        });
                    }
                    doc.provenance.push(Provenance {
                        kind: ItemKind::Fact,
                        index: doc.facts.len(),
                        line,
                    });
                    doc.facts.push(fact);
                    continue;
                }
                p.expect(Tok::Arrow, "'->'")?;
                let declared = p.exists_list()?;
                let head = p.atom_list()?;
                p.expect(Tok::Dot, "',' or '.' ending the rule")?;
                let id = label.unwrap_or_else(|| format!("r{}", doc.rules.len() + 1));
                if !ids.insert(id.clone()) {
                    return Err(TextError::DuplicateRuleId(id));
                }
                let body_vars: BTreeSet<&Symbol> =
                    body.iter().flat_map(|a| a.variables()).collect();
                let head_vars: BTreeSet<&Symbol> =
                    head.iter().flat_map(|a| a.variables()).collect();
                for v in declared.iter().flatten() {
                    if body_vars.contains(v) {
                        return Err(TextError::VariableScope {
                            rule: id,
                            variable: v.to_string(),
                            reason: "is declared existential but occurs in the body",
                        });
                    }
                    if !head_vars.contains(v) {
                        return Err(TextError::VariableScope {
                            rule: id,
                            variable: v.to_string(),
                            reason: "is declared existential but does not occur in the head",
                        });
                    }
                }
                let rule = Rule::new(&id, body, head)?;
                doc.provenance.push(Provenance {
                    kind: ItemKind::Rule,
                    index: doc.rules.len(),
                    line,
                });
                doc.rules.push(rule);
            }
        }
    }
    Ok(doc)
}

fn join_atoms(atoms: &[Atom]) -> String {
    atoms
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// `[id] body -> exists Z. head.`
pub fn serialize_rule(rule: &Rule) -> String {
    let mut s = format!("[{}] {} -> ", rule.id(), join_atoms(rule.body()));
    if !rule.is_datalog() {
        let vars: Vec<&str> = rule.existentials().iter().map(|v| &**v).collect();
        let _ = write!(s, "exists {}. ", vars.join(","));
    }
    s.push_str(&join_atoms(rule.head()));
    s.push('.');
    s
}

pub fn serialize_query(q: &Query) -> String {
    format!("? {}.", join_atoms(&q.atoms))
}

/// One rule per line, in the given order.
pub fn serialize_rules(rules: &[Rule]) -> String {
    rules.iter().map(|r| serialize_rule(r) + "\n").collect()
}

/// One fact per line, in canonical atom order. The empty fact base serializes to "".
pub fn serialize_factbase(facts: &FactBase) -> String {
    facts.iter().map(|a| format!("{a}.\n")).collect()
}

/// Rules, then facts, then queries.
pub fn serialize_document(doc: &SourceDocument) -> String {
    let mut s = serialize_rules(&doc.rules);
    for f in &doc.facts {
        let _ = writeln!(s, "{f}.");
    }
    for q in &doc.queries {
        s.push_str(&serialize_query(q));
        s.push('\n');
    }
    s
}

/// Parses a fact list (no rules or queries allowed).
pub fn parse_facts(text: &str) -> Result<FactBase, TextError> {
    let doc = parse_document(text)?;
    if !doc.rules.is_empty() || !doc.queries.is_empty() {
        return Err(TextError::Syntax {
            line: 1,
            col: 1,
            expected: "facts only".into(),
        });
    }
    Ok(doc.fact_base())
}

/// Parses a rule list (facts and queries are ignored).
pub fn parse_rules(text: &str) -> Result<Vec<Rule>, TextError> {
    Ok(parse_document(text)?.rules)
}
