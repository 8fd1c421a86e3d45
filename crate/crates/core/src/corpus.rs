//! The worked example programs as executable fixtures.
//!
//! Programs and annotations live in `corpus/` and are compiled into the
//! library, so `glpt corpus` needs no files on disk.

use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::annotation::parse_annotation;
use crate::checkers::{check, CheckConfig, CheckReport, Verdict};
use crate::constraints::{equivalent_answers, Signature, Store};
use crate::decompose::{diff, structurally_equal};
use crate::engine::{prove_ground, solve, Mode, Outcome, DEFAULT_BUDGET};
use crate::parser::{parse_program, parse_query};
use crate::term::{Literal, Program, Var};

macro_rules! files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../corpus/", $name)))),*]
    };
}

/// Every corpus file, by name.
pub const FILES: &[(&str, &str)] = files![
    "blocksworld.glp",
    "blocksworld.ann",
    "chan.glp",
    "flounder.glp",
    "flounder.ann",
    "hamiltonian.glp",
    "hamiltonian.ann",
    "hamiltonian-strong.ann",
    "new-up.glp",
    "new-up-neg.glp",
    "new-up.ann",
    "new-up-high.ann",
    "planning.glp",
    "planning.ann",
    "reduce.glp",
    "reduce-no-unif.glp",
    "reduce.ann",
    "specialize.glp",
    "specialize.ann",
    "specialize-wrong-level.ann",
    "tras.glp",
    "tras.ann",
    "tras-printed.ann",
    "upper-lower.glp",
    "upper-lower.ann",
];

pub fn file(name: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Expect {
    /// Exit code 0: proved or verified to the bound.
    Pass,
    /// Refuted, optionally at a named condition.
    Refuted(Option<&'static str>),
    Invalid,
}

pub struct CheckCase {
    pub program: &'static str,
    pub annotation: &'static str,
    pub expect: Expect,
}

#[derive(Clone, Copy, Debug)]
pub enum QueryExpect {
    /// The answers, as constraint conjunctions, up to equivalence.
    Answers(&'static [&'static str]),
    /// Finite failure: no answers.
    Fail,
    Flounder,
    /// A ground atom with a refutation.
    Holds,
    /// Run and report, asserting nothing.
    Observe,
}

pub struct QueryCase {
    pub program: &'static str,
    pub query: &'static str,
    pub mode: Mode,
    pub expect: QueryExpect,
}

/// `diff(program, lower)` is structurally `expected`, where `lower` is
/// a part of the annotation.
pub struct DiffCase {
    pub program: &'static str,
    pub annotation: &'static str,
    pub lower: &'static str,
    pub expected: &'static str,
}

pub struct Fixture {
    pub name: &'static str,
    pub provenance: &'static str,
    pub checks: &'static [CheckCase],
    pub queries: &'static [QueryCase],
    pub diffs: &'static [DiffCase],
}

const fn pass(program: &'static str, annotation: &'static str) -> CheckCase {
    CheckCase { program, annotation, expect: Expect::Pass }
}

const fn refuted(program: &'static str, annotation: &'static str, at: &'static str) -> CheckCase {
    CheckCase { program, annotation, expect: Expect::Refuted(Some(at)) }
}

const fn query(program: &'static str, query: &'static str, expect: QueryExpect) -> QueryCase {
    QueryCase { program, query, mode: Mode::Constructive, expect }
}

const fn naf(program: &'static str, query: &'static str, expect: QueryExpect) -> QueryCase {
    QueryCase { program, query, mode: Mode::Naf, expect }
}

pub const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "chan",
        provenance: "constructive negation on {p(a), p(b)}",
        checks: &[],
        queries: &[
            query("chan.glp", "\\+ p(X)", QueryExpect::Answers(&["X \\= a, X \\= b"])),
            naf("chan.glp", "\\+ p(X)", QueryExpect::Flounder),
            naf("chan.glp", "\\+ p(c)", QueryExpect::Answers(&["true"])),
        ],
        diffs: &[],
    },
    Fixture {
        name: "blocksworld",
        provenance: "BLOCKSWORLD, acyclic under its level mapping",
        checks: &[pass("blocksworld.glp", "blocksworld.ann")],
        queries: &[
            query("blocksworld.glp", "holds(loc(a,p), [A])", QueryExpect::Answers(&["forall([L], A \\= move(a,L))"])),
            naf("blocksworld.glp", "holds(loc(a,p), [A])", QueryExpect::Flounder),
            query("blocksworld.glp", "holds(loc(a,p), [])", QueryExpect::Holds),
        ],
        diffs: &[],
    },
    Fixture {
        name: "flounder",
        provenance: "terminating (floundering) but not acyclic",
        checks: &[refuted("flounder.glp", "flounder.ann", "decrease")],
        queries: &[naf("flounder.glp", "p(a)", QueryExpect::Flounder)],
        diffs: &[],
    },
    Fixture {
        name: "tras",
        provenance: "TRAS, acceptable; the printed trans level does not decrease",
        checks: &[pass("tras.glp", "tras.ann"), refuted("tras.glp", "tras-printed.ann", "decrease")],
        queries: &[query("tras.glp", "member(X, [a,b])", QueryExpect::Answers(&["X = a", "X = b"]))],
        diffs: &[],
    },
    Fixture {
        name: "planning",
        provenance: "PLANNING, up-acceptable with TRAS as the upper part",
        checks: &[pass("planning.glp", "planning.ann")],
        queries: &[query("planning.glp", "legals(S, [])", QueryExpect::Answers(&["S = [(a,p),(b,q),(c,r)]"]))],
        diffs: &[DiffCase { program: "planning.glp", annotation: "planning.ann", lower: "lower", expected: "tras.glp" }],
    },
    Fixture {
        name: "upper-lower",
        provenance: "two-clause program that fails condition 4 of up-acceptability",
        checks: &[refuted("upper-lower.glp", "upper-lower.ann", "4")],
        queries: &[],
        diffs: &[],
    },
    Fixture {
        name: "hamiltonian",
        provenance: "HAMILTONIAN, weakly up-acceptable with member as the weak set",
        checks: &[pass("hamiltonian.glp", "hamiltonian.ann"), refuted("hamiltonian.glp", "hamiltonian-strong.ann", "1")],
        queries: &[
            query("hamiltonian.glp", "ham([[a,b],[b,c],[a,a],[c,b]], [a,b,c])", QueryExpect::Holds),
            query("hamiltonian.glp", "ham([[a,b],[b,c],[a,a],[c,b]], [c,b,a])", QueryExpect::Fail),
        ],
        diffs: &[],
    },
    Fixture {
        name: "specialize",
        provenance: "SPECIALIZE, low-acceptable with SPEC1 as the lower part",
        checks: &[pass("specialize.glp", "specialize.ann"), refuted("specialize.glp", "specialize-wrong-level.ann", "4")],
        queries: &[
            query("specialize.glp", "spec(a, b, X, [[a,b],[b,c],[a,a]])", QueryExpect::Answers(&["X \\= a, X \\= b"])),
            naf("specialize.glp", "spec(a, b, X, [[a,b],[b,c],[a,a]])", QueryExpect::Flounder),
            query("specialize.glp", "spec(a, b, c, [[a,b],[b,c],[a,a],[c,b]])", QueryExpect::Holds),
        ],
        diffs: &[],
    },
    Fixture {
        name: "reduce",
        provenance: "REDUCE, by the incremental method in three parts",
        checks: &[pass("reduce.glp", "reduce.ann"), refuted("reduce-no-unif.glp", "reduce.ann", "i.B")],
        queries: &[
            query("reduce.glp", "red(a, b, [], [])", QueryExpect::Fail),
            query("reduce.glp", "red(a, b, [], [[a,b]])", QueryExpect::Fail),
            query("reduce.glp", "red(a, b, [[a,b],[b,c],[a,a],[c,b]], [[a,b],[a,a]])", QueryExpect::Observe),
        ],
        diffs: &[],
    },
    Fixture {
        name: "new-up",
        provenance: "new up-acceptability on p <- q, p and q <- s",
        checks: &[
            pass("new-up.glp", "new-up.ann"),
            refuted("new-up.glp", "new-up-high.ann", "2"),
            refuted("new-up-neg.glp", "new-up.ann", "model"),
        ],
        queries: &[query("new-up.glp", "p", QueryExpect::Fail)],
        diffs: &[],
    },
];

/// Outcome of one check, query or diff case.
#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    pub fixture: &'static str,
    pub case: String,
    pub ok: bool,
    pub detail: String,
    #[serde(serialize_with = "millis")]
    pub elapsed: Duration,
}

fn millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u128(d.as_millis())
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CorpusReport {
    pub results: Vec<CaseResult>,
}

impl CorpusReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.ok)
    }

    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| !r.ok).count()
    }
}

impl fmt::Display for CorpusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            let mark = if r.ok { "ok  " } else { "FAIL" };
            writeln!(f, "{mark} {:<12} {} ({} ms)", r.fixture, r.case, r.elapsed.as_millis())?;
            if !r.ok || !r.detail.is_empty() {
                for line in r.detail.lines() {
                    writeln!(f, "       {line}")?;
                }
            }
        }
        write!(f, "{} cases, {} failed", self.results.len(), self.failures())
    }
}

pub fn load_program(name: &str) -> Result<Program, String> {
    let text = file(name).ok_or_else(|| format!("no corpus file {name}"))?;
    parse_program(text).map_err(|e| format!("{name}: {e}"))
}

/// Runs the check of a corpus program against a corpus annotation.
pub fn run_check(program: &str, annotation: &str, cfg: CheckConfig) -> Result<CheckReport, String> {
    let p = load_program(program)?;
    let text = file(annotation).ok_or_else(|| format!("no corpus file {annotation}"))?;
    let ann = parse_annotation(text).map_err(|e| format!("{annotation}: {e}"))?;
    Ok(check(&p, &ann, cfg))
}

fn judge_check(c: &CheckCase) -> (bool, String) {
    let r = match run_check(c.program, c.annotation, CheckConfig::default()) {
        Ok(r) => r,
        Err(e) => return (false, e),
    };
    let failed_at = r.failed.as_ref().map(|o| format!("{} {}", o.definition, o.condition)).unwrap_or_default();
    let ok = match (c.expect, &r.status) {
        (Expect::Pass, Verdict::ProvedSymbolic | Verdict::VerifiedToBound { .. }) => true,
        (Expect::Refuted(at), Verdict::Refuted { .. }) => at.map_or(true, |a| failed_at.contains(a)),
        (Expect::Invalid, Verdict::Invalid { .. }) => true,
        _ => false,
    };
    let detail = if ok { format!("{}", r.status) } else { format!("expected {:?}, got:\n{r}", c.expect) };
    (ok, detail)
}

/// All outcomes of a query, stopping after `limit` answers.
pub fn collect_outcomes(p: &Program, q: &[Literal], mode: Mode, budget: u64, limit: usize) -> Vec<Outcome> {
    solve(p, q, mode, budget).with_max_answers(limit).collect()
}

fn parse_store(text: &str) -> Result<Store, String> {
    if text == "true" {
        return Ok(Store::new());
    }
    let lits = parse_query(text).map_err(|e| format!("{text}: {e}"))?;
    match Store::from_literals(&lits) {
        Ok(Some(s)) => Ok(s),
        Ok(None) => Err(format!("{text} is unsatisfiable")),
        Err(l) => Err(format!("{l} is not a constraint")),
    }
}

fn judge_query(c: &QueryCase) -> (bool, String) {
    let p = match load_program(c.program) {
        Ok(p) => p,
        Err(e) => return (false, e),
    };
    let q = match parse_query(c.query) {
        Ok(q) => q,
        Err(e) => return (false, e.to_string()),
    };
    if let QueryExpect::Holds = c.expect {
        let [Literal::Pos(a)] = q.as_slice() else {
            return (false, "not a single atom".into());
        };
        return match prove_ground(a, &p, DEFAULT_BUDGET) {
            Ok(true) => (true, "holds".into()),
            Ok(false) => (false, "fails".into()),
            Err(e) => (false, e.to_string()),
        };
    }
    let outs = collect_outcomes(&p, &q, c.mode, DEFAULT_BUDGET, 1000);
    let mut answers = Vec::new();
    let mut abnormal = None;
    for o in outs {
        match o {
            Outcome::Answer(s) => answers.push(s),
            other => abnormal = Some(other),
        }
    }
    let shown: Vec<String> = answers.iter().map(|s| s.to_string()).collect();
    let seen = match &abnormal {
        None => format!("{} answer(s): {}", answers.len(), shown.join(" ; ")),
        Some(Outcome::Flounder(a)) => format!("flounders on \\+ {a}"),
        Some(Outcome::BudgetExceeded(n)) => format!("budget exceeded after {n} steps"),
        Some(Outcome::Error(e)) => e.to_string(),
        Some(Outcome::Answer(_)) => unreachable!(),
    };
    let ok = match c.expect {
        QueryExpect::Flounder => matches!(abnormal, Some(Outcome::Flounder(_))),
        QueryExpect::Fail => abnormal.is_none() && answers.is_empty(),
        QueryExpect::Observe => true,
        QueryExpect::Holds => unreachable!(),
        QueryExpect::Answers(want) => {
            if abnormal.is_some() {
                false
            } else {
                match want.iter().map(|w| parse_store(w)).collect::<Result<Vec<_>, _>>() {
                    Err(e) => return (false, e),
                    Ok(want) => {
                        let vars: BTreeSet<Var> = q.iter().flat_map(|l| l.vars()).collect();
                        let sig = Signature::of_program(&p, true).with_terms(q.iter().flat_map(literal_terms));
                        equivalent_answers(&vars, &answers, &want, &sig).unwrap_or(false)
                    }
                }
            }
        }
    };
    (ok, seen)
}

fn literal_terms(l: &Literal) -> Vec<&crate::term::Term> {
    match l {
        Literal::Pos(a) | Literal::Neg(a) => a.args.iter().collect(),
        Literal::Eq(x, y) | Literal::Ineq(_, x, y) => vec![x, y],
    }
}

fn judge_diff(c: &DiffCase) -> (bool, String) {
    let run = || -> Result<bool, String> {
        let p = load_program(c.program)?;
        let text = file(c.annotation).ok_or_else(|| format!("no corpus file {}", c.annotation))?;
        let ann = parse_annotation(text).map_err(|e| e.to_string())?;
        let parts = ann.resolve(&p).map_err(|e| e.to_string())?;
        let lower = parts.iter().find(|x| x.name == c.lower).ok_or_else(|| format!("no part {}", c.lower))?;
        let d = diff(&p, &p.select(&lower.clauses)).map_err(|e| e.to_string())?;
        Ok(structurally_equal(&d, &load_program(c.expected)?))
    };
    match run() {
        Ok(true) => (true, String::new()),
        Ok(false) => (false, "programs differ".into()),
        Err(e) => (false, e),
    }
}

fn timed(fixture: &'static str, case: String, f: impl FnOnce() -> (bool, String)) -> CaseResult {
    let t = Instant::now();
    let (ok, detail) = f();
    CaseResult { fixture, case, ok, detail, elapsed: t.elapsed() }
}

/// Runs every fixture whose name contains `filter`.
pub fn run_corpus(filter: Option<&str>) -> CorpusReport {
    let mut report = CorpusReport::default();
    for fx in FIXTURES.iter().filter(|f| filter.map_or(true, |s| f.name.contains(s))) {
        for c in fx.checks {
            let name = format!("check {} {}", c.program, c.annotation);
            report.results.push(timed(fx.name, name, || judge_check(c)));
        }
        for c in fx.queries {
            let mode = if c.mode == Mode::Naf { " [naf]" } else { "" };
            let name = format!("query {}{mode}: {}", c.program, c.query);
            report.results.push(timed(fx.name, name, || judge_query(c)));
        }
        for c in fx.diffs {
            let name = format!("diff {} minus part {} = {}", c.program, c.lower, c.expected);
            report.results.push(timed(fx.name, name, || judge_diff(c)));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_file_parses() {
        for (name, text) in FILES {
            if name.ends_with(".glp") {
                parse_program(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            } else {
                parse_annotation(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            }
        }
    }

    #[test]
    fn fixtures_name_existing_files() {
        for fx in FIXTURES {
            let names = fx.checks.iter().flat_map(|c| [c.program, c.annotation]).chain(fx.queries.iter().map(|q| q.program));
            for n in names {
                assert!(file(n).is_some(), "{}: {n}", fx.name);
            }
        }
    }

    #[test]
    fn corpus_is_green() {
        let r = run_corpus(None);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn filter_selects_fixtures() {
        let r = run_corpus(Some("chan"));
        assert!(r.results.iter().all(|c| c.fixture == "chan"));
        assert_eq!(r.results.len(), 3);
        assert!(run_corpus(Some("no such fixture")).results.is_empty());
    }
}
