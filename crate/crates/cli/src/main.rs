//! `glpt`: run general logic programs under constructive negation and
//! check termination annotations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use glpt::annotation::parse_annotation;
use glpt::checkers::{check, check_bounded_query, CheckConfig};
use glpt::corpus::run_corpus;
use glpt::decompose::{format_ids, skeleton, suggest_partition};
use glpt::engine::{solve, Mode, Outcome, DEFAULT_BUDGET};
use glpt::error::ParseError;
use glpt::parser::{parse_query, parse_source};
use glpt::term::Program;

const PASS: u8 = 0;
const REFUTED: u8 = 1;
const INVALID: u8 = 2;
const PARSE: u8 = 3;
const BUDGET: u8 = 5;
const FLOUNDER: u8 = 6;

#[derive(Parser)]
#[command(name = "glpt", version, about = "General logic programs: LDCNF interpreter and termination-proof checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and list its clauses with their ids.
    Parse {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Run a query under constructive negation or negation as failure.
    Run {
        file: PathBuf,
        #[arg(long, short)]
        query: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Cn)]
        mode: ModeArg,
        /// Resolution steps before giving up.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Stop after this many answers.
        #[arg(long)]
        max_answers: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Check a termination annotation against a program.
    Check {
        program: PathBuf,
        annotation: PathBuf,
        /// Overrides the annotation's universe depth (default 3).
        #[arg(long)]
        universe_depth: Option<usize>,
        /// Exit with 4 when the best verdict is only bounded.
        #[arg(long)]
        require_proof: bool,
        /// Enumerate even after a symbolic proof and abort on disagreement.
        #[arg(long)]
        cross_check: bool,
        /// Also report whether this query is bounded.
        #[arg(long, short)]
        query: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Suggest upper/lower splits and annotation skeletons.
    Decompose {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Run the built-in fixtures of the worked examples.
    Corpus {
        /// Only fixtures whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args, Clone, Copy)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Machine,
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    /// Constructive negation.
    Cn,
    /// Negation as failure; flounders on non-ground negative literals.
    Naf,
}

/// A failure before any result is produced.
enum Failure {
    Io(String),
    Parse(String, ParseError),
    Invalid(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(..) => PARSE,
            Failure::Io(_) | Failure::Invalid(_) => INVALID,
        }
    }

    fn json(&self) -> Value {
        match self {
            Failure::Io(m) => json!({ "kind": "io", "message": m }),
            Failure::Parse(f, e) => json!({ "kind": "parse", "file": f, "line": e.line, "col": e.col, "message": e.msg }),
            Failure::Invalid(m) => json!({ "kind": "invalid", "message": m }),
        }
    }

    fn text(&self) -> String {
        match self {
            Failure::Io(m) | Failure::Invalid(m) => format!("error: {m}"),
            Failure::Parse(f, e) => format!("{f}:{e}"),
        }
    }
}

/// What a subcommand prints and how it exits.
struct Report {
    text: String,
    json: Value,
    code: u8,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    let name = path.display().to_string();
    let text = read(path)?;
    parse_source(&name, &text).map(|s| s.parsed).map_err(|e| Failure::Parse(name, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, format) = match &cli.command {
        Command::Parse { out, .. } => ("parse", out.format),
        Command::Run { out, .. } => ("run", out.format),
        Command::Check { out, .. } => ("check", out.format),
        Command::Decompose { out, .. } => ("decompose", out.format),
        Command::Corpus { out, .. } => ("corpus", out.format),
    };
    let result = match cli.command {
        Command::Parse { file, .. } => cmd_parse(&file),
        Command::Run { file, query, mode, budget, max_answers, .. } => cmd_run(&file, &query, mode, budget, max_answers),
        Command::Check { program, annotation, universe_depth, require_proof, cross_check, query, .. } => {
            cmd_check(&program, &annotation, universe_depth, require_proof, cross_check, query.as_deref())
        }
        Command::Decompose { file, .. } => cmd_decompose(&file),
        Command::Corpus { filter, .. } => Ok(cmd_corpus(filter.as_deref())),
    };
    let code = match result {
        Ok(r) => {
            match format {
                Format::Text => emit(&r.text),
                Format::Machine => {
                    let mut v = r.json;
                    v["command"] = json!(name);
                    v["exit_code"] = json!(r.code);
                    emit(&v.to_string());
                }
            }
            r.code
        }
        Err(f) => {
            eprintln!("{}", f.text());
            if format == Format::Machine {
                emit(&json!({ "command": name, "error": f.json(), "exit_code": f.code() }).to_string());
            }
            f.code()
        }
    };
    ExitCode::from(code)
}

/// Writes a line to stdout. A closed pipe (`glpt ... | head`) is not an
/// error worth a panic.
fn emit(s: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{s}");
}

fn cmd_parse(file: &Path) -> Result<Report, Failure> {
    let p = load_program(file)?;
    let clauses: Vec<String> = p.clauses.iter().map(|c| c.to_string()).collect();
    let text = p.clauses.iter().zip(&clauses).map(|(c, s)| format!("{:>3}  {s}", c.id)).collect::<Vec<_>>().join("\n");
    let json = json!({
        "clauses": p.clauses.iter().zip(&clauses).map(|(c, s)| json!({ "id": c.id, "clause": s })).collect::<Vec<_>>(),
        "relations": p.relations().iter().map(|r| r.to_string()).collect::<Vec<_>>(),
    });
    Ok(Report { text, json, code: PASS })
}

fn cmd_run(file: &Path, query: &str, mode: ModeArg, budget: u64, max_answers: Option<usize>) -> Result<Report, Failure> {
    let p = load_program(file)?;
    let q = parse_query(query).map_err(|e| Failure::Parse("<query>".into(), e))?;
    let mode = match mode {
        ModeArg::Cn => Mode::Constructive,
        ModeArg::Naf => Mode::Naf,
    };
    let mut solver = solve(&p, &q, mode, budget);
    if let Some(k) = max_answers {
        solver = solver.with_max_answers(k);
    }
    let mut answers = Vec::new();
    let mut stop = None;
    for o in solver.by_ref() {
        match o {
            Outcome::Answer(s) => answers.push(s.to_string()),
            other => stop = Some(other),
        }
    }
    let steps = solver.steps();
    let (status, code, why) = match &stop {
        None if answers.is_empty() => ("failure", REFUTED, "no (finite failure)".to_string()),
        None => ("answers", PASS, String::new()),
        Some(Outcome::Flounder(a)) => ("flounder", FLOUNDER, format!("floundered on \\+ {a}")),
        Some(Outcome::BudgetExceeded(n)) => ("budget_exceeded", BUDGET, format!("budget exceeded after {n} steps")),
        Some(Outcome::Error(e)) => ("resource_error", BUDGET, e.to_string()),
        Some(Outcome::Answer(_)) => unreachable!("answers are collected above"),
    };
    let mut lines = answers.clone();
    if !why.is_empty() {
        lines.push(why.clone());
    }
    let json = json!({ "status": status, "answers": answers, "steps": steps, "message": why });
    Ok(Report { text: lines.join("\n"), json, code })
}

fn cmd_check(
    program: &Path,
    annotation: &Path,
    depth: Option<usize>,
    require_proof: bool,
    cross_check: bool,
    query: Option<&str>,
) -> Result<Report, Failure> {
    let p = load_program(program)?;
    let name = annotation.display().to_string();
    let ann = parse_annotation(&read(annotation)?).map_err(|e| Failure::Parse(name, e))?;
    let bounds = match query {
        None => None,
        Some(q) => {
            let q = parse_query(q).map_err(|e| Failure::Parse("<query>".into(), e))?;
            Some(check_bounded_query(&q, &ann.level).map_err(|e| Failure::Invalid(e.to_string()))?)
        }
    };
    let report = check(&p, &ann, CheckConfig { depth, cross_check });
    let code = report.exit_code(require_proof) as u8;
    let mut text = report.to_string();
    if let Some(b) = &bounds {
        text.push_str(&format!("\nquery {}bounded", if b.bounded { "" } else { "not " }));
        for (l, rigid) in &b.literals {
            text.push_str(&format!("\n  {l}: {}", if *rigid { "rigid" } else { "not rigid" }));
        }
    }
    let json = json!({ "report": report, "query_bounds": bounds });
    Ok(Report { text, json, code })
}

fn cmd_decompose(file: &Path) -> Result<Report, Failure> {
    let p = load_program(file)?;
    let parts = suggest_partition(&p);
    let mut text = String::new();
    let mut items = Vec::new();
    for (i, part) in parts.iter().enumerate() {
        let sk = skeleton(&p, part);
        text.push_str(&format!(
            "# split {}: upper {} / lower {}\n{sk}\n",
            i + 1,
            format_ids(&part.upper),
            if part.lower.is_empty() { "(empty)".to_string() } else { format_ids(&part.lower) }
        ));
        items.push(json!({ "upper": format_ids(&part.upper), "lower": format_ids(&part.lower), "skeleton": sk }));
    }
    Ok(Report { text: text.trim_end().to_string(), json: json!({ "partitions": items }), code: PASS })
}

fn cmd_corpus(filter: Option<&str>) -> Report {
    let r = run_corpus(filter);
    let code = if r.passed() { PASS } else { REFUTED };
    Report { text: r.to_string(), json: json!({ "report": r }), code }
}
