//! The `chasekit` command line: chase runs, normalisation, exploration, entailment, corpus
//! classification and Turing-machine encodings, with human-readable or JSON reports.
//!
//! Every report is a pure function of the command line and the input files, so two runs with the
//! same inputs print the same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chasekit::analysis::{
    classify, entails, explore_all, ClassificationRow, ExplorationVerdict, ExploreBudget, Fixture,
    TriState,
};
use chasekit::chase::{Chase, Strategy};
use chasekit::derivation::{ChaseVariant, Derivation};
use chasekit::model::{Atom, FactBase, KnowledgeBase, Rule};
use chasekit::normalize::{one_way, single_piece, two_way, DecompositionReport};
use chasekit::textio::{parse_document, serialize_factbase, serialize_rules, SourceDocument};
use chasekit::tmgen::{encode, simulation_kb, TuringMachine};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(
    name = "chasekit",
    version,
    about = "Chase engines and termination analysis for existential rules"
)]
pub struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the chase on an `.erl` document.
    Run(RunArgs),
    /// Normalise the rules of an `.erl` document.
    Normalize(NormalizeArgs),
    /// Explore every derivation of an `.erl` document up to a depth bound.
    Explore(ExploreArgs),
    /// Decide whether a query of an `.erl` document is entailed.
    Entails(EntailsArgs),
    /// Check a directory of `.toml` fixtures against their expectations.
    Classify(ClassifyArgs),
    /// Encode a Turing machine into rules.
    Tm(TmArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub file: PathBuf,
    /// o, so, r, e, or the Datalog-first dfo, dfso, dfr, dfe.
    #[arg(long, default_value = "r")]
    pub variant: String,
    /// fifo, datalog-first, phased:<file> or script:<file>.
    #[arg(long, default_value = "fifo")]
    pub strategy: String,
    #[arg(long, default_value_t = 1000)]
    pub max_steps: usize,
    /// Include the per-step deltas in the report.
    #[arg(long)]
    pub derivation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Procedure {
    Sp,
    #[value(name = "1ad")]
    OneWay,
    #[value(name = "2ad")]
    TwoWay,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    pub file: PathBuf,
    #[arg(long = "proc", value_enum)]
    pub procedure: Procedure,
    /// Keep single-atom-head rules unchanged (atomic decompositions only).
    #[arg(long)]
    pub skip_atomic: bool,
}

#[derive(Debug, Args)]
pub struct ExploreArgs {
    pub file: PathBuf,
    #[arg(long, default_value = "r")]
    pub variant: String,
    #[arg(long, default_value_t = 12)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 5000)]
    pub max_nodes: usize,
    /// Do not merge isomorphic states.
    #[arg(long)]
    pub no_dedup: bool,
}

#[derive(Debug, Args)]
pub struct EntailsArgs {
    pub file: PathBuf,
    /// Which query of the document to answer (1-based).
    #[arg(long, default_value_t = 1)]
    pub query_index: usize,
    #[arg(long, default_value = "r")]
    pub variant: String,
    #[arg(long, default_value_t = 1000)]
    pub max_steps: usize,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Directory of `.toml` fixtures.
    #[arg(long)]
    pub fixtures: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TmAction {
    /// Tape-creation and simulation rules with the seed fact base.
    Encode,
    /// Simulation rules on the tape of length `--len`.
    Tape,
}

#[derive(Debug, Args)]
pub struct TmArgs {
    #[arg(value_enum)]
    pub action: TmAction,
    #[arg(long)]
    pub machine: PathBuf,
    #[arg(long)]
    pub len: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation or unreadable input: exit code 2.
    #[error("{0}")]
    Usage(String),
    /// The engine refused the input or failed while running: exit code 1.
    #[error("{0}")]
    Engine(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Engine(_) => 1,
        }
    }
}

/// The machine-readable report common to all commands.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub inputs: BTreeMap<&'static str, Value>,
    pub verdict: String,
    pub steps: Option<usize>,
    pub atoms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivation: Option<Vec<Value>>,
    pub stats: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    fn new(command: &'static str, inputs: Inputs, verdict: impl Into<String>) -> Report {
        Report {
            command,
            inputs,
            verdict: verdict.into(),
            steps: None,
            atoms: None,
            derivation: None,
            stats: Value::Null,
            error: None,
        }
    }
}

/// What a command prints, and its exit code.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub text: String,
    pub code: i32,
}

/// Captured result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and runs the command.
pub fn execute<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            let (stdout, stderr) = if e.use_stderr() {
                (String::new(), rendered)
            } else {
                (rendered, String::new())
            };
            return Output {
                code: e.exit_code(),
                stdout,
                stderr,
            };
        }
    };
    let (name, inputs) = describe(&cli.command);
    match dispatch(&cli.command, inputs.clone()) {
        Ok(o) => {
            let stdout = if cli.json { to_json(&o.report) } else { o.text };
            Output {
                code: o.code,
                stdout,
                stderr: String::new(),
            }
        }
        Err(e) => {
            if cli.json {
                let mut report = Report::new(name, inputs, "error");
                report.error = Some(e.to_string());
                Output {
                    code: e.exit_code(),
                    stdout: to_json(&report),
                    stderr: String::new(),
                }
            } else {
                Output {
                    code: e.exit_code(),
                    stdout: String::new(),
                    stderr: format!("error: {e}\n"),
                }
            }
        }
    }
}

fn to_json(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("reports serialize") + "\n"
}

pub type Inputs = BTreeMap<&'static str, Value>;

/// Runs one command; `inputs` is echoed in the report.
pub fn dispatch(command: &Command, inputs: Inputs) -> Result<Outcome, CliError> {
    match command {
        Command::Run(a) => run(a, inputs),
        Command::Normalize(a) => normalize(a, inputs),
        Command::Explore(a) => explore(a, inputs),
        Command::Entails(a) => entails_cmd(a, inputs),
        Command::Classify(a) => classify_cmd(a, inputs),
        Command::Tm(a) => tm(a, inputs),
    }
}

fn path_value(p: &Path) -> Value {
    Value::String(p.display().to_string())
}

/// Command name and its inputs, as echoed in the report.
pub fn describe(command: &Command) -> (&'static str, Inputs) {
    let mut m = BTreeMap::new();
    let name = match command {
        Command::Run(a) => {
            m.insert("file", path_value(&a.file));
            m.insert("variant", json!(a.variant));
            m.insert("strategy", json!(a.strategy));
            m.insert("max_steps", json!(a.max_steps));
            "run"
        }
        Command::Normalize(a) => {
            m.insert("file", path_value(&a.file));
            m.insert("proc", json!(procedure_name(a.procedure)));
            m.insert("skip_atomic", json!(a.skip_atomic));
            "normalize"
        }
        Command::Explore(a) => {
            m.insert("file", path_value(&a.file));
            m.insert("variant", json!(a.variant));
            m.insert("max_depth", json!(a.max_depth));
            m.insert("max_nodes", json!(a.max_nodes));
            m.insert("dedup", json!(!a.no_dedup));
            "explore"
        }
        Command::Entails(a) => {
            m.insert("file", path_value(&a.file));
            m.insert("query_index", json!(a.query_index));
            m.insert("variant", json!(a.variant));
            m.insert("max_steps", json!(a.max_steps));
            "entails"
        }
        Command::Classify(a) => {
            m.insert("fixtures", path_value(&a.fixtures));
            "classify"
        }
        Command::Tm(a) => {
            m.insert(
                "action",
                json!(match a.action {
                    TmAction::Encode => "encode",
                    TmAction::Tape => "tape",
                }),
            );
            m.insert("machine", path_value(&a.machine));
            if let Some(n) = a.len {
                m.insert("len", json!(n));
            }
            "tm"
        }
    };
    (name, m)
}

fn procedure_name(p: Procedure) -> &'static str {
    match p {
        Procedure::Sp => "sp",
        Procedure::OneWay => "1ad",
        Procedure::TwoWay => "2ad",
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn read_document(path: &Path) -> Result<SourceDocument, CliError> {
    parse_document(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn knowledge_base(path: &Path, doc: &SourceDocument) -> Result<KnowledgeBase, CliError> {
    doc.knowledge_base()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn variant(s: &str) -> Result<ChaseVariant, CliError> {
    s.parse()
        .map_err(|e: chasekit::derivation::UnknownVariant| CliError::Usage(e.to_string()))
}

/// `fifo`, `datalog-first`, `phased:<file>` or `script:<file>`.
pub fn strategy(s: &str) -> Result<Strategy, CliError> {
    let from_file =
        |path: &str, parse: fn(&str) -> Result<Strategy, chasekit::chase::StrategyParseError>| {
            let text = read(Path::new(path))?;
            parse(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))
        };
    match s {
        "fifo" => Ok(Strategy::Fifo),
        "datalog-first" => Ok(Strategy::DatalogFirst),
        _ => match s.split_once(':') {
            Some(("phased", path)) => from_file(path, Strategy::parse_phases),
            Some(("script", path)) => from_file(path, Strategy::parse_script),
            _ => Err(CliError::Usage(format!(
                "unknown strategy '{s}' (expected fifo, datalog-first, phased:<file> or script:<file>)"
            ))),
        },
    }
}

fn atoms_text(atoms: &[Atom]) -> Vec<String> {
    atoms.iter().map(ToString::to_string).collect()
}

fn delta_list(d: &Derivation) -> Vec<Value> {
    d.steps
        .iter()
        .map(|s| json!({ "trigger": s.trigger.to_string(), "added": atoms_text(&s.added) }))
        .collect()
}

fn run(a: &RunArgs, inputs: Inputs) -> Result<Outcome, CliError> {
    let doc = read_document(&a.file)?;
    let kb = knowledge_base(&a.file, &doc)?;
    let v = variant(&a.variant)?;
    let s = strategy(&a.strategy)?;
    let d = Chase::new(&kb, v)
        .strategy(&s)
        .max_steps(a.max_steps)
        .run()
        .map_err(|e| CliError::Engine(e.to_string()))?;
    let mut report = Report::new("run", inputs, d.verdict.to_string());
    report.steps = Some(d.len());
    report.atoms = Some(d.result.len());
    report.derivation = a.derivation.then(|| delta_list(&d));
    report.stats = json!({
        "variant": v.to_string(),
        "strategy": s.name(),
        "triggers_considered": d.stats.triggers_considered,
        "hom_checks": d.stats.hom_checks,
        "note": d.note,
    });
    let mut text = format!(
        "variant: {v}\nstrategy: {}\nverdict: {}\nsteps: {}\natoms: {}\n",
        s.name(),
        d.verdict,
        d.len(),
        d.result.len()
    );
    if let Some(n) = &d.note {
        text.push_str(&format!("note: {n}\n"));
    }
    if a.derivation {
        for (i, step) in d.steps.iter().enumerate() {
            text.push_str(&format!(
                "% step {}: {} adds {}\n",
                i + 1,
                step.trigger,
                atoms_text(&step.added).join(", ")
            ));
        }
    }
    text.push_str("% result\n");
    text.push_str(&serialize_factbase(&d.result));
    Ok(Outcome {
        report,
        text,
        code: 0,
    })
}

fn normalize(a: &NormalizeArgs, inputs: Inputs) -> Result<Outcome, CliError> {
    let doc = read_document(&a.file)?;
    let rules: &[Rule] = &doc.rules;
    let report: DecompositionReport = match a.procedure {
        Procedure::Sp => single_piece(rules),
        Procedure::OneWay => {
            one_way(rules, a.skip_atomic).map_err(|e| CliError::Engine(e.to_string()))?
        }
        Procedure::TwoWay => {
            two_way(rules, a.skip_atomic).map_err(|e| CliError::Engine(e.to_string()))?
        }
    };
    let text = serialize_rules(&report.output);
    let mut out = Report::new("normalize", inputs, "ok");
    out.stats = json!({
        "procedure": report.procedure,
        "input_rules": report.input.len(),
        "output_rules": report.output.len(),
        "rules": report.output.iter().map(chasekit::textio::serialize_rule).collect::<Vec<_>>(),
        "fresh": report.fresh,
        "mapping": report.mapping.iter().map(|(i, o)| json!({ "input": i, "output": o })).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        report: out,
        text,
        code: 0,
    })
}

fn explore(a: &ExploreArgs, inputs: Inputs) -> Result<Outcome, CliError> {
    let doc = read_document(&a.file)?;
    let kb = knowledge_base(&a.file, &doc)?;
    let v = variant(&a.variant)?;
    if a.max_depth == 0 || a.max_nodes == 0 {
        return Err(CliError::Usage("budgets must be positive".into()));
    }
    let budget = ExploreBudget {
        max_depth: a.max_depth,
        max_nodes: a.max_nodes,
        dedup: !a.no_dedup,
        ..Default::default()
    };
    let rep = explore_all(&kb, v, budget);
    let mut report = Report::new("explore", inputs, rep.verdict.name());
    let mut text = format!("variant: {v}\nverdict: {}\n", rep.verdict.name());
    let mut stats = json!({ "expanded": rep.expanded, "dedup_hits": rep.dedup_hits });
    match &rep.verdict {
        ExplorationVerdict::AllFinite { max_len, nodes } => {
            report.steps = Some(*max_len);
            stats["nodes"] = json!(nodes);
            text.push_str(&format!("max_len: {max_len}\nnodes: {nodes}\n"));
        }
        ExplorationVerdict::GrowthWitness(w) => {
            report.steps = Some(w.deltas.len());
            report.derivation = Some(
                w.triggers
                    .iter()
                    .zip(&w.deltas)
                    .map(|(t, d)| json!({ "trigger": t, "added": atoms_text(d) }))
                    .collect(),
            );
            stats["certified"] = json!(w.certified);
            stats["reason"] = json!(w.reason);
            text.push_str(&format!("reason: {}\n", w.reason));
            for (i, (t, d)) in w.triggers.iter().zip(&w.deltas).enumerate() {
                text.push_str(&format!(
                    "% step {}: {t} adds {}\n",
                    i + 1,
                    atoms_text(d).join(", ")
                ));
            }
        }
        ExplorationVerdict::BudgetExceeded { frontier, reason } => {
            stats["frontier"] = json!(frontier);
            stats["reason"] = json!(reason);
            text.push_str(&format!("reason: {reason}\nfrontier: {frontier}\n"));
        }
    }
    text.push_str(&format!(
        "expanded: {}\ndedup_hits: {}\n",
        rep.expanded, rep.dedup_hits
    ));
    report.stats = stats;
    Ok(Outcome {
        report,
        text,
        code: 0,
    })
}

fn entails_cmd(a: &EntailsArgs, inputs: Inputs) -> Result<Outcome, CliError> {
    let doc = read_document(&a.file)?;
    let kb = knowledge_base(&a.file, &doc)?;
    let v = variant(&a.variant)?;
    let query = a
        .query_index
        .checked_sub(1)
        .and_then(|i| doc.queries.get(i))
        .ok_or_else(|| {
            CliError::Usage(format!(
                "the document has {} queries; --query-index is 1-based",
                doc.queries.len()
            ))
        })?;
    let answer = entails(&kb, &query.atoms, v, a.max_steps);
    let mut report = Report::new("entails", inputs, answer.name());
    let mut text = format!(
        "query: {}\nvariant: {v}\nanswer: {}\n",
        chasekit::textio::serialize_query(query),
        answer.name()
    );
    report.stats = match &answer {
        TriState::Yes(h) => {
            let witness: BTreeMap<String, String> = h
                .iter()
                .map(|(k, t)| (k.to_string(), t.to_string()))
                .collect();
            for (k, t) in &witness {
                text.push_str(&format!("  {k} -> {t}\n"));
            }
            json!({ "witness": witness })
        }
        TriState::No => json!({ "certificate": "fair terminal fact base without a match" }),
        TriState::Unknown(reason) => {
            text.push_str(&format!("reason: {reason}\n"));
            json!({ "reason": reason })
        }
    };
    Ok(Outcome {
        report,
        text,
        code: 0,
    })
}

/// Reads every `.toml` file of `dir`, in file-name order.
pub fn load_fixtures(dir: &Path) -> Result<Vec<Fixture>, CliError> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            toml::from_str(&read(p)?).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn table(rows: &[ClassificationRow]) -> String {
    let headers = ["fixture", "variant", "expected", "observed", "pass"];
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.fixture.clone(),
                r.variant.clone(),
                r.expected.clone(),
                r.observed.clone(),
                if r.pass { "pass" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    let mut widths = headers.map(|h| h.chars().count());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |row: &[&str]| -> String {
        let padded: Vec<String> = row
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut s = line(&headers);
    for row in &cells {
        s.push_str(&line(&row.each_ref().map(String::as_str)));
    }
    s
}

fn classify_cmd(a: &ClassifyArgs, inputs: Inputs) -> Result<Outcome, CliError> {
    let fixtures = load_fixtures(&a.fixtures)?;
    let rows = classify(&fixtures).map_err(|e| CliError::Usage(e.to_string()))?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    let verdict = if failed == 0 { "pass" } else { "fail" };
    let mut report = Report::new("classify", inputs, verdict);
    report.stats = json!({
        "fixtures": fixtures.len(),
        "rows": rows,
        "passed": rows.len() - failed,
        "failed": failed,
    });
    let mut text = table(&rows);
    text.push_str(&format!(
        "{} of {} expectations hold\n",
        rows.len() - failed,
        rows.len()
    ));
    Ok(Outcome {
        report,
        text,
        code: if failed == 0 { 0 } else { 1 },
    })
}

fn tm(a: &TmArgs, inputs: Inputs) -> Result<Outcome, CliError> {
    let m: TuringMachine = read(&a.machine)?
        .parse()
        .map_err(|e| CliError::Usage(format!("{}: {e}", a.machine.display())))?;
    let (rules, facts): (Vec<Rule>, FactBase) = match a.action {
        TmAction::Encode => {
            if a.len.is_some() {
                return Err(CliError::Usage("--len only applies to 'tm tape'".into()));
            }
            let e = encode(&m).map_err(|e| CliError::Engine(e.to_string()))?;
            (
                e.rules_w.iter().chain(&e.rules_m).cloned().collect(),
                e.seed,
            )
        }
        TmAction::Tape => {
            let n = a
                .len
                .ok_or_else(|| CliError::Usage("'tm tape' needs --len".into()))?;
            let kb = simulation_kb(&m, n).map_err(|e| CliError::Usage(e.to_string()))?;
            (
                kb.rules().iter().map(|r| (**r).clone()).collect(),
                kb.facts().clone(),
            )
        }
    };
    let text = serialize_rules(&rules) + &serialize_factbase(&facts);
    let mut report = Report::new("tm", inputs, "ok");
    report.atoms = Some(facts.len());
    report.stats = json!({ "rules": rules.len(), "document": text });
    Ok(Outcome {
        report,
        text,
        code: 0,
    })
}
