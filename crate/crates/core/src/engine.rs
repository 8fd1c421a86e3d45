//! LDCNF interpreter: leftmost selection with delayed primitive
//! disequations, constructive negation over fairly expanded subsidiary
//! trees, and an optional negation-as-failure mode.

use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::constraints::{classify_ineq, negate_answers, Ineq, IneqClass, Signature, Store};
use crate::error::ResourceError;
use crate::term::{Atom, Literal, Program, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Constructive,
    Naf,
}

pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Deepest term a derivation may build before it is treated as diverging.
pub const MAX_TERM_DEPTH: usize = 1024;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Answer(Store),
    Flounder(Atom),
    BudgetExceeded(u64),
    Error(ResourceError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Goal {
    pub literals: Vec<Literal>,
    pub store: Store,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    Index(usize),
    AllPrimitive,
}

/// Leftmost literal that is not a primitive disequation relative to the
/// goal's store.
pub fn select_literal(g: &Goal) -> Selection {
    for (i, l) in g.literals.iter().enumerate() {
        match l {
            Literal::Ineq(univ, s, t) => {
                let q = Ineq::new(univ.clone(), s.clone(), t.clone()).apply(&g.store.eqs);
                if !matches!(classify_ineq(&q), IneqClass::Primitive(_)) {
                    return Selection::Index(i);
                }
            }
            _ => return Selection::Index(i),
        }
    }
    Selection::AllPrimitive
}

/// Why a derivation stopped abnormally.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Halt {
    Budget,
    Flounder(Atom),
    Error(ResourceError),
}

enum Expansion {
    Success(Store),
    Children(Vec<Goal>),
}

struct Machine<'p> {
    program: &'p Program,
    mode: Mode,
    budget: u64,
    steps: u64,
    gen: u32,
    sig: Signature,
}

impl<'p> Machine<'p> {
    fn tick(&mut self) -> Result<(), Halt> {
        if self.steps >= self.budget {
            return Err(Halt::Budget);
        }
        self.steps += 1;
        Ok(())
    }

    fn fresh(&mut self) -> u32 {
        self.gen += 1;
        self.gen
    }

    fn expand(&mut self, g: Goal, keep: &BTreeSet<Var>) -> Result<Expansion, Halt> {
        // Delayed disequations already live in the store.
        let Some((first, rest)) = g.literals.split_first() else {
            return Ok(Expansion::Success(g.store));
        };
        self.tick()?;
        let rest = rest.to_vec();
        let one = |store: Option<Store>, rest: Vec<Literal>| match store {
            Some(store) => Expansion::Children(vec![Goal { literals: rest, store }]),
            None => Expansion::Children(Vec::new()),
        };
        match first {
            Literal::Eq(s, t) => Ok(one(g.store.add_equality(s, t), rest)),
            Literal::Ineq(univ, s, t) => {
                let q = Ineq::new(univ.clone(), s.clone(), t.clone()).rename_univ(self.fresh());
                Ok(one(g.store.add_ineq(&q), rest))
            }
            Literal::Pos(a) => {
                let a = a.apply(&g.store.eqs);
                let mut out = Vec::new();
                for c in &self.program.clauses {
                    if c.head.pred != a.pred || c.head.args.len() != a.args.len() {
                        continue;
                    }
                    if a.args.iter().zip(&c.head.args).any(|(x, y)| clash(x, y)) {
                        continue;
                    }
                    let c = c.rename(self.fresh());
                    if let Some(store) = g.store.add_equality(&a.as_term(), &c.head.as_term()) {
                        if store.eqs.iter().any(|(_, t)| t.depth() > MAX_TERM_DEPTH) {
                            return Err(Halt::Budget);
                        }
                        let mut lits = c.body.clone();
                        lits.extend(rest.iter().cloned());
                        out.push(self.compact(Goal { literals: lits, store }, keep));
                    }
                }
                Ok(Expansion::Children(out))
            }
            Literal::Neg(a) => {
                let a = a.apply(&g.store.eqs);
                match self.mode {
                    Mode::Naf => {
                        if !a.is_ground() {
                            return Err(Halt::Flounder(a));
                        }
                        let answers = self.subsidiary(&a, true)?;
                        Ok(one(answers.is_empty().then(|| g.store.clone()), rest))
                    }
                    Mode::Constructive => {
                        let answers = self.subsidiary(&a, false)?;
                        let vars = a.vars();
                        let mut gen = self.gen;
                        let negs = negate_answers(&vars, &answers, &self.sig, &mut || {
                            gen += 1;
                            gen
                        })
                        .map_err(Halt::Error)?;
                        self.gen = gen;
                        let mut out = Vec::new();
                        for d in negs {
                            if let Some(store) = g.store.conjoin(&d) {
                                if store.satisfiable(&self.sig).map_err(Halt::Error)? {
                                    out.push(self.compact(Goal { literals: rest.clone(), store }, keep));
                                }
                            }
                        }
                        Ok(Expansion::Children(out))
                    }
                }
            }
        }
    }

    /// Drops bindings of variables no longer reachable from the goal.
    fn compact(&self, g: Goal, keep: &BTreeSet<Var>) -> Goal {
        let mut vars = keep.clone();
        for l in &g.literals {
            l.collect_vars(&mut vars);
        }
        Goal { store: g.store.project(&vars), literals: g.literals }
    }

    /// Expands the tree for `a` breadth-first until it is exhausted.
    fn subsidiary(&mut self, a: &Atom, first_only: bool) -> Result<Vec<Store>, Halt> {
        let keep = a.vars();
        let mut queue = VecDeque::from([Goal { literals: vec![Literal::Pos(a.clone())], store: Store::new() }]);
        let mut answers: Vec<Store> = Vec::new();
        let mut seen = HashSet::new();
        while let Some(g) = queue.pop_front() {
            match self.expand(g, &keep)? {
                Expansion::Success(s) => {
                    let s = s.project(&keep);
                    if seen.insert(s.clone()) {
                        answers.push(s);
                    }
                    if first_only {
                        break;
                    }
                }
                Expansion::Children(cs) => queue.extend(cs),
            }
        }
        Ok(answers)
    }
}

/// Lazily enumerates the outcomes of a query, depth first.
pub struct Solver<'p> {
    machine: Machine<'p>,
    stack: Vec<Goal>,
    query_vars: BTreeSet<Var>,
    done: bool,
    max_answers: Option<usize>,
    emitted: usize,
}

impl<'p> Solver<'p> {
    pub fn new(program: &'p Program, query: &[Literal], mode: Mode, budget: u64) -> Self {
        let mut query_vars = BTreeSet::new();
        for l in query {
            l.collect_vars(&mut query_vars);
        }
        let gen = query.iter().flat_map(|l| l.vars()).map(|v| v.gen).max().unwrap_or(0);
        Solver {
            machine: Machine { program, mode, budget, steps: 0, gen, sig: Signature::open() },
            stack: vec![Goal { literals: query.to_vec(), store: Store::new() }],
            query_vars,
            done: false,
            max_answers: None,
            emitted: 0,
        }
    }

    pub fn with_max_answers(mut self, k: usize) -> Self {
        self.max_answers = Some(k);
        self
    }

    pub fn steps(&self) -> u64 {
        self.machine.steps
    }

    pub fn query_vars(&self) -> &BTreeSet<Var> {
        &self.query_vars
    }
}

impl Iterator for Solver<'_> {
    type Item = Outcome;

    fn next(&mut self) -> Option<Outcome> {
        if self.done || self.max_answers.is_some_and(|k| self.emitted >= k) {
            return None;
        }
        while let Some(g) = self.stack.pop() {
            match self.machine.expand(g, &self.query_vars) {
                Ok(Expansion::Success(s)) => {
                    self.emitted += 1;
                    return Some(Outcome::Answer(s.project(&self.query_vars)));
                }
                Ok(Expansion::Children(cs)) => self.stack.extend(cs.into_iter().rev()),
                Err(h) => {
                    self.done = true;
                    return Some(match h {
                        Halt::Budget => Outcome::BudgetExceeded(self.machine.steps),
                        Halt::Flounder(a) => Outcome::Flounder(a),
                        Halt::Error(e) => Outcome::Error(e),
                    });
                }
            }
        }
        self.done = true;
        None
    }
}

/// The terms differ in some functor at the same position, so they cannot
/// unify. Variables are treated as wildcards.
fn clash(s: &Term, t: &Term) -> bool {
    match (s, t) {
        (Term::App(f, xs), Term::App(g, ys)) => f != g || xs.len() != ys.len() || xs.iter().zip(ys).any(|(x, y)| clash(x, y)),
        _ => false,
    }
}

pub fn solve<'p>(program: &'p Program, query: &[Literal], mode: Mode, budget: u64) -> Solver<'p> {
    Solver::new(program, query, mode, budget)
}

/// An abnormal end of a ground proof attempt.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("step budget exceeded after {0} steps")]
    BudgetExceeded(u64),
    #[error("floundered on \\+ {0}")]
    Flounder(Atom),
    #[error(transparent)]
    Resource(#[from] ResourceError),
}

/// Whether the ground atom `a` has a refutation.
pub fn prove_ground(a: &Atom, program: &Program, budget: u64) -> Result<bool, EngineError> {
    match solve(program, &[Literal::Pos(a.clone())], Mode::Constructive, budget).next() {
        None => Ok(false),
        Some(Outcome::Answer(_)) => Ok(true),
        Some(Outcome::BudgetExceeded(n)) => Err(EngineError::BudgetExceeded(n)),
        Some(Outcome::Flounder(a)) => Err(EngineError::Flounder(a)),
        Some(Outcome::Error(e)) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_query};

    fn run(p: &str, q: &str, mode: Mode, budget: u64) -> Vec<Outcome> {
        let p = parse_program(p).unwrap();
        let q = parse_query(q).unwrap();
        solve(&p, &q, mode, budget).collect()
    }

    #[test]
    fn negated_facts_give_disequations() {
        let out = run("p(a). p(b).", "\\+ p(X).", Mode::Constructive, DEFAULT_BUDGET);
        assert_eq!(out.len(), 1);
        match &out[0] {
            Outcome::Answer(s) => assert_eq!(s.to_string(), "X \\= a, X \\= b"),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn naf_flounders_on_nonground() {
        let out = run("p(a). p(b).", "\\+ p(X).", Mode::Naf, DEFAULT_BUDGET);
        assert!(matches!(&out[..], [Outcome::Flounder(_)]));
        let out = run("p(a). p(b).", "\\+ p(c).", Mode::Naf, DEFAULT_BUDGET);
        assert!(matches!(&out[..], [Outcome::Answer(_)]));
    }

    #[test]
    fn infinite_subsidiary_tree_exhausts_budget() {
        let p = "p(X) :- \\+ q(Y). q(s(X)) :- q(X). q(0).";
        let out = run(p, "p(a).", Mode::Constructive, 10_000);
        assert!(matches!(&out[..], [Outcome::BudgetExceeded(_)]));
        let out = run(p, "p(a).", Mode::Naf, 10_000);
        assert!(matches!(&out[..], [Outcome::Flounder(_)]));
    }

    #[test]
    fn selection_skips_primitive_disequations() {
        let q = parse_query("X \\= a, p(X).").unwrap();
        let g = Goal { literals: q, store: Store::new() };
        assert_eq!(select_literal(&g), Selection::Index(1));
        let q = parse_query("a \\= b, p(a).").unwrap();
        assert_eq!(select_literal(&Goal { literals: q, store: Store::new() }), Selection::Index(0));
        let q = parse_query("X \\= a.").unwrap();
        assert_eq!(select_literal(&Goal { literals: q, store: Store::new() }), Selection::AllPrimitive);
    }

    #[test]
    fn ground_proofs() {
        let p = parse_program("nat(0). nat(s(X)) :- nat(X).").unwrap();
        let a = parse_query("nat(s(s(0))).").unwrap();
        assert!(prove_ground(a[0].atom().unwrap(), &p, 100).unwrap());
        let b = parse_query("nat(s(a)).").unwrap();
        assert!(!prove_ground(b[0].atom().unwrap(), &p, 100).unwrap());
    }

    #[test]
    fn double_negation() {
        let out = run("p(a). q(X) :- \\+ p(X).", "\\+ q(X).", Mode::Constructive, DEFAULT_BUDGET);
        match &out[..] {
            [Outcome::Answer(s)] => assert_eq!(s.to_string(), "X = a"),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn answers_are_deterministic() {
        let p = "e(a,b). e(b,c). path(X,Y) :- e(X,Y). path(X,Y) :- e(X,Z), path(Z,Y).";
        let a = run(p, "path(a,Y).", Mode::Constructive, DEFAULT_BUDGET);
        let b = run(p, "path(a,Y).", Mode::Constructive, DEFAULT_BUDGET);
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
    }
}
