//! Oracles shared by the property suites and the acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngSeed, TestRunner};

use glpt::annotation::{parse_annotation, Annotation};
use glpt::checkers::{check, CheckConfig, CheckReport, Verdict};
use glpt::constraints::{Signature, Store};
use glpt::corpus::{collect_outcomes, file, load_program, Expect, FIXTURES};
use glpt::engine::{solve, Mode, Outcome, DEFAULT_BUDGET};
use glpt::levelmap::is_rigid;
use glpt::parser::parse_query;
use glpt::term::{unify, Literal, Program, Subst, Term, Var};
use glpt::universe::HerbrandSlice;

pub fn c(n: &str) -> Term {
    Term::constant(n)
}

pub fn free_vars(lits: &[Literal]) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    for l in lits {
        match l {
            Literal::Eq(x, y) => {
                x.collect_vars(&mut out);
                y.collect_vars(&mut out);
            }
            Literal::Ineq(u, x, y) => {
                out.extend(x.vars().into_iter().chain(y.vars()).filter(|v| !u.contains(v)));
            }
            _ => unreachable!("constraints only"),
        }
    }
    out
}

/// Truth of a constraint under a ground assignment of its free variables.
/// A disequation holds iff its sides do not unify, universals being
/// ordinary variables there.
pub fn holds(l: &Literal, s: &Subst) -> bool {
    match l {
        Literal::Eq(x, y) => s.apply(x) == s.apply(y),
        Literal::Ineq(_, x, y) => unify(&s.apply(x), &s.apply(y)).is_none(),
        _ => unreachable!(),
    }
}

/// Some assignment over `domain` satisfies every literal. Equalities are
/// solved by unification first; the instances of their mgu are exactly
/// their solutions.
pub fn witness(lits: &[Literal], domain: &[Term]) -> bool {
    let mut mgu = Subst::new();
    let mut rest = Vec::new();
    for l in lits {
        match l {
            Literal::Eq(x, y) => match mgu.unify(x, y) {
                Some(m) => mgu = m,
                None => return false,
            },
            Literal::Ineq(u, x, y) => rest.push(Literal::Ineq(u.clone(), mgu_apply(&mgu, u, x), mgu_apply(&mgu, u, y))),
            _ => unreachable!(),
        }
    }
    // Later bindings may refine earlier disequations.
    let rest: Vec<Literal> = rest
        .iter()
        .map(|l| match l {
            Literal::Ineq(u, x, y) => Literal::Ineq(u.clone(), mgu_apply(&mgu, u, x), mgu_apply(&mgu, u, y)),
            _ => unreachable!(),
        })
        .collect();
    let mut vars = free_vars(&rest);
    for v in free_vars(lits) {
        mgu.apply(&Term::Var(v)).collect_vars(&mut vars);
    }
    let vars: Vec<Var> = vars.into_iter().collect();
    let mut idx = vec![0usize; vars.len()];
    loop {
        let mut s = Subst::new();
        for (v, &i) in vars.iter().zip(&idx) {
            s.bind(v.clone(), domain[i].clone());
        }
        if rest.iter().all(|l| holds(l, &s)) {
            return true;
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return false;
            }
            idx[k] += 1;
            if idx[k] < domain.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Applies `s` to a disequation side, leaving its universals alone.
pub fn mgu_apply(s: &Subst, univ: &BTreeSet<Var>, t: &Term) -> Term {
    let mut k = Subst::new();
    for (v, b) in s.iter() {
        if !univ.contains(v) {
            k.bind(v.clone(), s.apply(b));
        }
    }
    k.apply(t)
}

pub fn solver_sat(lits: &[Literal], sig: &Signature) -> bool {
    match Store::from_literals(lits).expect("constraints only") {
        None => false,
        Some(s) => s.satisfiable(sig).expect("within the normalization cap"),
    }
}

/// The literal whose conjunction with a store is unsatisfiable exactly
/// when the store entails `l`.
pub fn negation(l: &Literal) -> Literal {
    match l {
        Literal::Eq(x, y) => Literal::Ineq(BTreeSet::new(), x.clone(), y.clone()),
        Literal::Ineq(u, x, y) => {
            let mut s = Subst::new();
            for v in u {
                s.bind(v.clone(), Term::var(&format!("{}_neg", v.name)));
            }
            Literal::Eq(s.apply(x), s.apply(y))
        }
        _ => unreachable!(),
    }
}

pub fn term(leaves: Vec<Term>, funs: bool) -> BoxedStrategy<Term> {
    let leaf = prop::sample::select(leaves).boxed();
    if !funs {
        return leaf;
    }
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::app("f", vec![t])),
            (inner.clone(), inner).prop_map(|(x, y)| Term::app("g", vec![x, y])),
        ]
    })
    .boxed()
}

/// Equalities over X, Y, Z and disequations that may quantify W.
pub fn literal(consts: &[&str], funs: bool) -> BoxedStrategy<Literal> {
    let mut plain: Vec<Term> = consts.iter().map(|n| c(n)).collect();
    plain.extend(["X", "Y", "Z"].map(Term::var));
    let mut with_w = plain.clone();
    with_w.push(Term::var("W"));
    let eq = (term(plain.clone(), funs), term(plain, funs)).prop_map(|(x, y)| Literal::Eq(x, y));
    let ineq = (term(with_w.clone(), funs), term(with_w, funs), any::<bool>()).prop_map(|(x, y, q)| {
        if q {
            return Literal::Ineq(BTreeSet::from([Var::new("W")]), x, y);
        }
        // W only ever names a universal.
        let mut s = Subst::new();
        s.bind(Var::new("W"), Term::var("Z"));
        Literal::Ineq(BTreeSet::new(), s.apply(&x), s.apply(&y))
    });
    prop_oneof![eq, ineq].boxed()
}

pub fn closed_constants() -> (Signature, Vec<Term>) {
    let names = ["a", "b", "c"];
    let sig = Signature::new(names.iter().map(|n| (Arc::from(*n), 0)), false);
    (sig, names.iter().map(|n| c(n)).collect())
}

/// Fresh constants stand for the terms an open signature adds.
pub fn open_domain() -> Vec<Term> {
    let mut d: Vec<Term> = ["a", "b", "k1", "k2", "k3", "k4"].iter().map(|n| c(n)).collect();
    d.push(Term::app("f", vec![c("a")]));
    d.push(Term::app("g", vec![c("a"), c("b")]));
    d
}

/// Answers the engine computes for the corpus queries, as literal lists.
pub fn corpus_answers() -> Vec<(String, Vec<Literal>, Vec<Term>)> {
    let mut out = Vec::new();
    for f in FIXTURES {
        for q in f.queries {
            let p = load_program(q.program).unwrap();
            let Ok(query) = parse_query(q.query) else { continue };
            let mut dom: Vec<Term> = p.functors().into_iter().filter(|(_, k)| *k == 0).map(|(n, _)| Term::App(n, vec![])).collect();
            dom.extend(["k1", "k2", "k3"].map(c));
            for o in collect_outcomes(&p, &query, q.mode, 200_000, 20) {
                if let Outcome::Answer(s) = o {
                    out.push((format!("{} ?- {}", q.program, q.query), s.literals(), dom.clone()));
                }
            }
        }
    }
    out
}


/// Every corpus answer is satisfiable with a ground witness, and the
/// conjunctions of answers to one query agree with grounding. Returns the
/// number of stores checked.
pub fn corpus_store_agreement() -> Result<usize, String> {
    let answers = corpus_answers();
    if !answers.iter().any(|(_, l, _)| l.iter().any(|l| matches!(l, Literal::Ineq(u, ..) if !u.is_empty()))) {
        return Err("no universally quantified answer in the corpus".into());
    }
    let sig = Signature::open();
    let mut checked = 0;
    for (i, (name, a, dom)) in answers.iter().enumerate() {
        if !solver_sat(a, &sig) || !witness(a, dom) {
            return Err(format!("{name}: answer {a:?}"));
        }
        checked += 1;
        for (other, b, _) in &answers[i + 1..] {
            if other != name || free_vars(a).len() + free_vars(b).len() > 4 {
                continue;
            }
            let both: Vec<Literal> = a.iter().chain(b).cloned().collect();
            if solver_sat(&both, &sig) != witness(&both, dom) {
                return Err(format!("{name}: {a:?} and {b:?}"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

fn lits(consts: &'static [&'static str], funs: bool, n: usize) -> impl Strategy<Value = Vec<Literal>> {
    prop::collection::vec(literal(consts, funs), 1..n)
}

/// Satisfiability and entailment on random stores over a closed constant
/// signature and an open one, against grounding. Returns the number of
/// stores checked.
pub fn random_store_agreement(cases: u32) -> Result<usize, String> {
    let mut runner = TestRunner::new(Config { cases, rng_seed: RngSeed::Fixed(11), ..Config::default() });
    let (csig, cdom) = closed_constants();
    let (osig, odom) = (Signature::open(), open_domain());
    let mut n = 0;
    let setups: [(&Signature, &[Term], &'static [&'static str], bool); 2] =
        [(&csig, &cdom, &["a", "b", "c"], false), (&osig, &odom, &["a", "b"], true)];
    for _ in 0..cases {
        for &(sig, dom, consts, funs) in &setups {
            let ls = lits(consts, funs, 5).new_tree(&mut runner).unwrap().current();
            let l = literal(consts, funs).new_tree(&mut runner).unwrap().current();
            if solver_sat(&ls, sig) != witness(&ls, dom) {
                return Err(format!("satisfiable: {ls:?}"));
            }
            if let Some(s) = Store::from_literals(&ls).unwrap() {
                let mut neg = ls.clone();
                neg.push(negation(&l));
                if s.entails(&l, sig).unwrap() == witness(&neg, dom) {
                    return Err(format!("entails: {ls:?} |= {l:?}"));
                }
            }
            n += 1;
        }
    }
    Ok(n)
}

pub fn cases() -> Vec<(&'static str, &'static str, Expect)> {
    FIXTURES.iter().flat_map(|f| f.checks.iter().map(|c| (c.program, c.annotation, c.expect))).collect()
}

pub fn load(program: &str, annotation: &str) -> (Program, Annotation) {
    let p = load_program(program).unwrap();
    let a = parse_annotation(file(annotation).unwrap()).unwrap();
    (p, a)
}

/// Programs whose levels count pairs exhaust the instance cap at depth 3.
pub fn cross_depth(program: &str) -> usize {
    if ["hamiltonian", "specialize", "reduce"].iter().any(|n| program.starts_with(n)) {
        2
    } else {
        3
    }
}

pub fn verdict_class(r: &CheckReport) -> i32 {
    r.exit_code(false)
}


/// Symbolic verdicts match enumeration at the corpus depths; cross-checking
/// panics on any proof that enumeration contradicts. Returns the number of
/// cases compared.
pub fn cross_check_agreement() -> Result<usize, String> {
    let mut n = 0;
    for (program, annotation, _) in cases() {
        let (p, a) = load(program, annotation);
        let depth = Some(cross_depth(program));
        let plain = check(&p, &a, CheckConfig { depth, cross_check: false });
        let crossed = check(&p, &a, CheckConfig { depth, cross_check: true });
        if matches!(crossed.status, Verdict::ResourceExceeded { .. }) {
            return Err(format!("{program} {annotation}: {}", crossed.status));
        }
        if verdict_class(&plain) != verdict_class(&crossed) {
            return Err(format!("{program} {annotation}\n{plain}\n{crossed}"));
        }
        n += 1;
    }
    Ok(n)
}

/// Each method with the empty set in place of a part or weak set agrees
/// with the simpler method it reduces to. Returns the number of laws
/// checked.
pub fn reduction_laws() -> Result<usize, String> {
    let mut pairs = BTreeSet::new();
    for (program, annotation, _) in cases() {
        pairs.insert((program, annotation));
    }
    let mut n = 0;
    for (program, annotation) in pairs {
        let p = load_program(program).unwrap();
        let body = strip(file(annotation).unwrap());
        let with = |head: &str| run_text(&p, &format!("{head}\n{body}"));
        let mut law = |name: &str, a: CheckReport, b: CheckReport| {
            n += 1;
            if verdict_class(&a) == verdict_class(&b) {
                Ok(())
            } else {
                Err(format!("{name} on {program} {annotation}\n{a}\n{b}"))
            }
        };
        let acceptable = with("method: acceptable");
        let acyclic = with("method: acyclic");
        law("up with R empty", with("method: up_acceptable"), acceptable)?;
        law("low with R empty", with("method: low_acceptable"), acyclic.clone())?;
        let one = with(&format!("method: incremental\npart all acyclic: clauses {}", all_ids(&p)));
        law("incremental with one acyclic part", one, acyclic)?;
        // Keeps the declared split.
        let parts: Vec<&str> = file(annotation).unwrap().lines().filter(|l| l.starts_with("part ")).collect();
        if parts.len() == 2 && !parts.iter().any(|l| l.contains(" acyclic") || l.contains(" acceptable") || l.contains(" ib")) {
            let split = parts.join("\n");
            law(
                "weak up with S empty",
                with(&format!("method: weak_up_acceptable\n{split}")),
                with(&format!("method: up_acceptable\n{split}")),
            )?;
        }
    }
    Ok(n)
}

/// Program and annotation of every corpus check expected to pass.
pub fn passing() -> BTreeSet<(&'static str, &'static str)> {
    cases().into_iter().filter(|(_, _, e)| matches!(e, Expect::Pass)).map(|(p, a, _)| (p, a)).collect()
}
/// The annotation text without method, part and weak set lines.
pub fn strip(text: &str) -> String {
    text.lines()
        .filter(|l| !(l.starts_with("method:") || l.starts_with("part ") || l.starts_with("weak_set:")))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn run_text(p: &Program, text: &str) -> CheckReport {
    check(p, &parse_annotation(text).unwrap(), CheckConfig::default())
}

pub fn all_ids(p: &Program) -> String {
    p.clauses.iter().map(|c| c.id.to_string()).collect::<Vec<_>>().join(", ")
}

/// Random queries over the program's relations whose levels are fixed.
pub fn rigid_queries(p: &Program, a: &Annotation, n: usize) -> Vec<Vec<Literal>> {
    let slice = HerbrandSlice::new(p.functors(), 2, 5_000).unwrap();
    let terms = slice.terms().to_vec();
    let rels: Vec<_> = p.defined_relations().into_iter().filter(|r| a.level.get(r).is_ok()).collect();
    let arg = prop_oneof![
        3 => prop::sample::select(terms.clone()),
        1 => Just(Term::var("X")),
        1 => Just(Term::var("Y")),
        2 => prop::collection::vec(
            prop_oneof![prop::sample::select(terms), Just(Term::var("Z")), Just(Term::var("W"))],
            0..4
        )
        .prop_map(Term::list),
    ];
    let query = (prop::sample::select(rels), prop::collection::vec(arg, 8), any::<bool>()).prop_map(|(r, args, neg)| {
        let atom = glpt::term::Atom::new(&r.name, args[..r.arity].to_vec());
        vec![if neg { Literal::Neg(atom) } else { Literal::Pos(atom) }]
    });
    let mut runner = TestRunner::new(Config { rng_seed: RngSeed::Fixed(7), ..Config::default() });
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < n && tries < 100 * n {
        tries += 1;
        let q = query.new_tree(&mut runner).unwrap().current();
        if q.iter().all(|l| is_rigid(&a.level, l).unwrap()) {
            out.push(q);
        }
    }
    out
}

/// Runs queries to completion in order. Returns how many finished before
/// the first one that exceeded the budget, and that query.
pub fn first_budget_hit(p: &Program, qs: &[Vec<Literal>]) -> (usize, Option<String>) {
    for (i, q) in qs.iter().enumerate() {
        let text: Vec<String> = q.iter().map(|l| l.to_string()).collect();
        for o in solve(p, q, Mode::Constructive, DEFAULT_BUDGET) {
            match o {
                Outcome::Answer(_) => {}
                Outcome::BudgetExceeded(_) => return (i, Some(text.join(", "))),
                Outcome::Flounder(x) => panic!("{} floundered on {x}", text.join(", ")),
                Outcome::Error(e) => panic!("{}: {e}", text.join(", ")),
            }
        }
    }
    (qs.len(), None)
}
