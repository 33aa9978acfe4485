//! Trigger-selection strategies and their text forms.
//!
//! Phase lines: `r3,r4,r5:exhaust`, `r1:once`, `chain:3` (apply up to three times); the mode
//! defaults to `exhaust`. Script lines: `<rule id> X=a Y=_R#1.Z` binding every body variable.
//! Both formats accept `%` comments and blank lines.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{sym, Symbol, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseMode {
    /// Apply at most one trigger of the phase rules.
    Once,
    /// Apply triggers of the phase rules until none is admissible.
    Exhaust,
    /// Apply at most `n` triggers of the phase rules.
    Times(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phase {
    pub rules: Vec<String>,
    pub mode: PhaseMode,
}

impl Phase {
    pub fn new<S: Into<String>>(rules: impl IntoIterator<Item = S>, mode: PhaseMode) -> Phase {
        Phase {
            rules: rules.into_iter().map(Into::into).collect(),
            mode,
        }
    }

    pub(crate) fn limit(&self) -> Option<usize> {
        match self.mode {
            PhaseMode::Once => Some(1),
            PhaseMode::Exhaust => None,
            PhaseMode::Times(n) => Some(n),
        }
    }
}

/// One scripted step: a rule id and a value for each of its body variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriggerChoice {
    pub rule: String,
    pub matching: BTreeMap<Symbol, Term>,
}

impl TriggerChoice {
    pub fn new<'a>(
        rule: &str,
        matching: impl IntoIterator<Item = (&'a str, Term)>,
    ) -> TriggerChoice {
        TriggerChoice {
            rule: rule.to_string(),
            matching: matching.into_iter().map(|(v, t)| (sym(v), t)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Triggers in discovery order; triggers enabled by a step are queued behind older ones.
    #[default]
    Fifo,
    /// FIFO with a separate queue for Datalog triggers that is always drained first.
    DatalogFirst,
    /// Phases applied in order; the run ends when the last phase is done.
    Phased(Vec<Phase>),
    /// Exactly these triggers, in this order.
    Scripted(Vec<TriggerChoice>),
}

impl Strategy {
    /// Parses a phase file: one phase per line.
    pub fn parse_phases(text: &str) -> Result<Strategy, StrategyParseError> {
        let phases = content_lines(text)
            .map(|(n, l)| l.parse::<Phase>().map_err(|e| e.at_line(n)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Strategy::Phased(phases))
    }

    /// Parses a script file: one trigger choice per line.
    pub fn parse_script(text: &str) -> Result<Strategy, StrategyParseError> {
        let choices = content_lines(text)
            .map(|(n, l)| l.parse::<TriggerChoice>().map_err(|e| e.at_line(n)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Strategy::Scripted(choices))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Fifo => "fifo",
            Strategy::DatalogFirst => "datalog-first",
            Strategy::Phased(_) => "phased",
            Strategy::Scripted(_) => "scripted",
        }
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('%').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct StrategyParseError {
    pub line: usize,
    pub reason: String,
}

impl StrategyParseError {
    fn new(reason: impl Into<String>) -> StrategyParseError {
        StrategyParseError {
            line: 1,
            reason: reason.into(),
        }
    }

    fn at_line(mut self, line: usize) -> StrategyParseError {
        self.line = line;
        self
    }
}

impl FromStr for Phase {
    type Err = StrategyParseError;

    fn from_str(s: &str) -> Result<Phase, StrategyParseError> {
        let (rules, mode) = match s.rsplit_once(':') {
            Some((r, m)) => (r, m.trim()),
            None => (s, "exhaust"),
        };
        let mode = match mode {
            "exhaust" => PhaseMode::Exhaust,
            "once" => PhaseMode::Once,
            n => PhaseMode::Times(
                n.parse()
                    .map_err(|_| StrategyParseError::new(format!("unknown phase mode '{n}'")))?,
            ),
        };
        let rules: Vec<String> = rules.split(',').map(|r| r.trim().to_string()).collect();
        if rules.iter().any(String::is_empty) {
            return Err(StrategyParseError::new("empty rule id in phase"));
        }
        Ok(Phase { rules, mode })
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            PhaseMode::Once => "once".to_string(),
            PhaseMode::Exhaust => "exhaust".to_string(),
            PhaseMode::Times(n) => n.to_string(),
        };
        write!(f, "{}:{}", self.rules.join(","), mode)
    }
}

impl FromStr for TriggerChoice {
    type Err = StrategyParseError;

    fn from_str(s: &str) -> Result<TriggerChoice, StrategyParseError> {
        let mut parts = s.split_whitespace();
        let rule = parts
            .next()
            .ok_or_else(|| StrategyParseError::new("missing rule id"))?
            .to_string();
        let mut matching = BTreeMap::new();
        for binding in parts {
            let (var, value) = binding.split_once('=').ok_or_else(|| {
                StrategyParseError::new(format!("expected VAR=term, found '{binding}'"))
            })?;
            if !var.starts_with(|c: char| c.is_ascii_uppercase()) {
                return Err(StrategyParseError::new(format!(
                    "'{var}' is not a variable name"
                )));
            }
            let term = if let Some(label) = value.strip_prefix('_') {
                Term::null(label)
            } else if value.starts_with(|c: char| c.is_ascii_lowercase()) {
                Term::constant(value)
            } else {
                return Err(StrategyParseError::new(format!(
                    "'{value}' is neither a constant nor a null"
                )));
            };
            matching.insert(sym(var), term);
        }
        Ok(TriggerChoice { rule, matching })
    }
}

impl fmt::Display for TriggerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rule)?;
        for (v, t) in &self.matching {
            write!(f, " {v}={t}")?;
        }
        Ok(())
    }
}
