//! Bounded search over ground instances by narrowing.
//!
//! Variables are instantiated lazily, only when an evaluation is blocked on
//! them, so a slice of the Herbrand universe is never materialized. Every
//! variable of the searched set ranges over terms of depth at most the
//! universe depth.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::constraints::{classify_ineq, Ineq, IneqClass, DEFAULT_CONSTANT};
use crate::error::ResourceError;
use crate::interp::{Cond, Interpretation};
use crate::levelmap::{LevelMap, NamedSet};
use crate::term::{Atom, Literal, Program, Subst, Term, Var};

/// The function symbols and depth bound of a search.
#[derive(Clone, Debug)]
pub struct Universe {
    pub functors: Vec<(Arc<str>, usize)>,
    pub depth: usize,
    pub cap: u64,
}

impl Universe {
    /// Functors of the program, extra terms and set elements. A default
    /// constant is added when there is none.
    pub fn for_program(p: &Program, extra: &[Term], sets: &[NamedSet], depth: usize, cap: u64) -> Self {
        let mut fs = p.functors();
        for t in extra.iter().chain(sets.iter().flat_map(|s| s.elems.iter())) {
            t.collect_functors(&mut fs);
        }
        if !fs.iter().any(|(_, k)| *k == 0) {
            fs.insert((Arc::from(DEFAULT_CONSTANT), 0));
        }
        Universe { functors: fs.into_iter().collect(), depth, cap }
    }

    pub fn default_constant(&self) -> Term {
        let (f, _) = self.functors.iter().find(|(_, k)| *k == 0).expect("a constant");
        Term::App(f.clone(), Vec::new())
    }

    /// Binds every remaining variable of `vars` to the default constant.
    pub fn ground(&self, s: &Subst, vars: &BTreeSet<Var>) -> Subst {
        let c = self.default_constant();
        let mut rest = BTreeSet::new();
        for v in vars {
            s.apply(&Term::Var(v.clone())).collect_vars(&mut rest);
        }
        let mut out = s.clone();
        for v in rest {
            out.bind(v, c.clone());
        }
        out
    }
}

/// What to do with a partial instance.
pub enum Step<T> {
    /// Every completion is uninteresting.
    Prune,
    /// The instance (and every completion) has the sought property.
    Found(T),
    /// Instantiate this variable with each functor.
    Split(Var),
    /// A complete set of narrowings.
    Alternatives(Vec<Subst>),
}

const GEN: u32 = u32::MAX - 7;

pub struct Search<'a> {
    u: &'a Universe,
    top: BTreeSet<Var>,
    fresh: usize,
    pub visited: u64,
}

impl<'a> Search<'a> {
    pub fn new(u: &'a Universe, top: BTreeSet<Var>) -> Self {
        Search { u, top, fresh: 0, visited: 0 }
    }

    /// Remaining depth allowance of a variable, `None` when some top
    /// variable already exceeds the bound.
    fn budget(&self, s: &Subst, w: &Var) -> Option<usize> {
        let mut best = usize::MAX;
        for v in &self.top {
            let t = s.apply(&Term::Var(v.clone()));
            if t.depth() > self.u.depth {
                return None;
            }
            walk(&t, w, 1, self.u.depth, &mut best);
        }
        Some(best)
    }

    fn within(&self, s: &Subst) -> bool {
        self.top.iter().all(|v| s.apply(&Term::Var(v.clone())).depth() <= self.u.depth)
    }

    fn expand(&mut self, s: &Subst, v: &Var) -> Vec<Subst> {
        let b = self.budget(s, v).unwrap_or(0);
        let mut out = Vec::new();
        for (f, k) in &self.u.functors {
            if *k > 0 && b < 2 {
                continue;
            }
            let args = (0..*k)
                .map(|_| {
                    self.fresh += 1;
                    Term::Var(Var { name: Arc::from(format!("_N{}", self.fresh).as_str()), gen: GEN })
                })
                .collect();
            let mut n = s.clone();
            n.bind(v.clone(), Term::App(f.clone(), args));
            out.push(n);
        }
        out
    }

    /// Depth-first search from `start`; the first `Found` wins.
    pub fn run<T>(&mut self, start: Subst, mut f: impl FnMut(&Subst) -> Step<T>) -> Result<Option<(Subst, T)>, ResourceError> {
        let mut stack = vec![start];
        while let Some(s) = stack.pop() {
            self.visited += 1;
            if self.visited > self.u.cap {
                return Err(ResourceError::TooManyInstances(self.u.cap));
            }
            let next = match f(&s) {
                Step::Prune => continue,
                Step::Found(t) => return Ok(Some((s, t))),
                Step::Split(v) => self.expand(&s, &v),
                Step::Alternatives(alts) => alts.into_iter().filter(|a| self.within(a)).collect(),
            };
            stack.extend(next.into_iter().rev());
        }
        Ok(None)
    }
}

fn walk(t: &Term, w: &Var, at: usize, depth: usize, best: &mut usize) {
    match t {
        Term::Var(v) if v == w => *best = (*best).min(depth + 1 - at),
        Term::Var(_) => {}
        Term::App(_, args) => args.iter().for_each(|a| walk(a, w, at + 1, depth, best)),
    }
}

/// Truth of a literal under `interp`, or a variable blocking it.
/// `None` when the interpretation lacks the relation.
pub fn literal_truth(interp: &Interpretation, l: &Literal, s: &Subst) -> Option<Result<bool, Var>> {
    Some(match l {
        Literal::Pos(a) | Literal::Neg(a) => {
            let cond = interp.cond(&a.rel())?;
            let args: Vec<Term> = a.args.iter().map(|t| s.apply(t)).collect();
            cond.eval_partial(&args).map(|b| b == matches!(l, Literal::Pos(_)))
        }
        Literal::Eq(x, y) => {
            let (x, y) = (s.apply(x), s.apply(y));
            if x == y && x.is_ground() {
                Ok(true)
            } else if crate::term::unify(&x, &y).is_none() {
                Ok(false)
            } else {
                Err(x.vars().into_iter().chain(y.vars()).next().expect("non-ground"))
            }
        }
        Literal::Ineq(univ, x, y) => match classify_ineq(&Ineq::new(univ.clone(), x.clone(), y.clone()).apply(s)) {
            IneqClass::Valid => Ok(true),
            IneqClass::Unsatisfiable => Ok(false),
            IneqClass::Primitive(q) => Err(q.free_vars().into_iter().next().expect("free variable")),
        },
    })
}

/// Level of an atom, or a variable blocking it.
pub fn level_value(level: &LevelMap, a: &Atom, s: &Subst) -> Option<Result<u64, Var>> {
    let e = level.get(&a.rel()).ok()?;
    let args: Vec<Term> = a.args.iter().map(|t| s.apply(t)).collect();
    Some(e.eval_partial(&args))
}

/// Narrowings covering every instance in which `l` is true, when a cheap
/// complete set exists.
pub fn narrow_true(interp: &Interpretation, l: &Literal, s: &Subst) -> Option<Vec<Subst>> {
    match l {
        Literal::Pos(a) => {
            let args: Vec<Term> = a.args.iter().map(|t| s.apply(t)).collect();
            narrow_cond(interp.cond(&a.rel())?, &args, s)
        }
        Literal::Eq(x, y) => Some(s.unify(x, y).into_iter().collect()),
        _ => None,
    }
}

fn narrow_cond(c: &Cond, args: &[Term], s: &Subst) -> Option<Vec<Subst>> {
    match c {
        Cond::Elem(i, j) => {
            let x = &args[*i];
            let (items, tail) = args[*j].spine();
            let mut out: Vec<Subst> = items.iter().filter_map(|e| s.unify(x, e)).collect();
            if let Term::Var(t) = tail {
                let mut n = s.clone();
                let cell = Term::cons(
                    Term::Var(Var { name: Arc::from("_H"), gen: GEN - 1 - s.len() as u32 }),
                    Term::Var(Var { name: Arc::from("_T"), gen: GEN - 1 - s.len() as u32 }),
                );
                n.bind(t.clone(), cell);
                out.push(n);
            }
            Some(out)
        }
        Cond::InSet(i, set) => Some(set.elems.iter().filter_map(|e| s.unify(&args[*i], e)).collect()),
        Cond::ArgEq(i, j) => Some(s.unify(&args[*i], &args[*j]).into_iter().collect()),
        Cond::And(a, b) => match a.eval_partial(args) {
            Ok(false) => Some(Vec::new()),
            Ok(true) => narrow_cond(b, args, s),
            Err(_) => narrow_cond(a, args, s),
        },
        _ => None,
    }
}

/// Split on the blocking variable unless a narrowing is available.
pub fn split_or_narrow<T>(interp: &Interpretation, l: &Literal, s: &Subst, v: Var) -> Step<T> {
    match narrow_true(interp, l, s) {
        Some(alts) => Step::Alternatives(alts),
        None => Step::Split(v),
    }
}
