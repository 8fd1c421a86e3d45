//! Symbolic proof that a head level dominates a body level on every ground
//! instance of a clause, optionally under a guard interpretation.
//!
//! Instances are split into finitely many branches (guard disjunctions,
//! list membership, `cases` discriminators). In each branch the levels
//! become linear forms over measure atoms, and the negated goal is refuted
//! by Fourier-Motzkin elimination over the integers.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::constraints::{classify_ineq, Ineq, IneqClass};
use crate::interp::{CmpOp, Cond, Interpretation};
use crate::levelmap::{pair_key, Expr, LevelMap, NamedSet};
use crate::term::{Clause, Literal, Subst, Term, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Fact {
    Elem(Term, Term),
    NotElem(Term, Term),
    InSet(Term, NamedSet),
    IsList(Term),
    NotList(Term),
    Neq(BTreeSet<Var>, Term, Term),
}

impl Fact {
    fn apply(&self, s: &Subst) -> Fact {
        match self {
            Fact::Elem(x, l) => Fact::Elem(s.apply(x), s.apply(l)),
            Fact::NotElem(x, l) => Fact::NotElem(s.apply(x), s.apply(l)),
            Fact::InSet(x, set) => Fact::InSet(s.apply(x), set.clone()),
            Fact::IsList(l) => Fact::IsList(s.apply(l)),
            Fact::NotList(l) => Fact::NotList(s.apply(l)),
            Fact::Neq(u, a, b) => {
                let q = Ineq::new(u.clone(), a.clone(), b.clone()).apply(s);
                Fact::Neq(q.univ, q.lhs, q.rhs)
            }
        }
    }
}

/// A pending comparison from a guard condition, on the atom's arguments.
#[derive(Clone, Debug)]
struct PendingCmp {
    op: CmpOp,
    lhs: Expr,
    rhs: Expr,
    args: Vec<Term>,
}

#[derive(Clone, Debug)]
struct Branch {
    subst: Subst,
    facts: Vec<Fact>,
    cmps: Vec<PendingCmp>,
}

/// Variable supply for case splits.
struct Fresh {
    gen: u32,
    n: usize,
}

impl Fresh {
    fn var(&mut self) -> Term {
        self.n += 1;
        Term::Var(Var { name: Arc::from(format!("_S{}", self.n).as_str()), gen: self.gen })
    }
}

/// Upper bound on branches before giving up on the symbolic path.
const MAX_BRANCHES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbolic {
    Proved,
    Unknown,
}

/// Function symbols available for case splits.
pub type Functors = [(Arc<str>, usize)];

/// Tries to prove `|H| >= |L_i| + k` (k = 1 when `strict`) for all ground
/// instances of `c` where the literals at `guard` are true in `interp`.
pub fn prove_decrease(
    level: &LevelMap,
    c: &Clause,
    i: usize,
    strict: bool,
    interp: Option<&Interpretation>,
    guard: &[usize],
    functors: &Functors,
) -> Symbolic {
    let (Ok(he), Some(la)) = (level.get(&c.head.rel()), c.body[i].atom()) else {
        return Symbolic::Unknown;
    };
    let Ok(le) = level.get(&la.rel()) else {
        return Symbolic::Unknown;
    };
    let gen = c.vars().iter().map(|v| v.gen).max().unwrap_or(0) + 1_000_000;
    let mut fresh = Fresh { gen, n: 0 };
    let mut branches = vec![Branch { subst: Subst::new(), facts: Vec::new(), cmps: Vec::new() }];
    for &j in guard {
        let mut next = Vec::new();
        for b in branches {
            match assume_literal(&b, &c.body[j], true, interp) {
                Some(bs) => next.extend(bs),
                None => return Symbolic::Unknown,
            }
        }
        branches = next;
        if branches.len() > MAX_BRANCHES {
            return Symbolic::Unknown;
        }
    }
    let k: i128 = if strict { 1 } else { 0 };
    for b in branches {
        let Some(done) = settle(b, &[(he, &c.head.args), (le, &la.args)], functors, &mut fresh) else {
            return Symbolic::Unknown;
        };
        for b in done {
            let hargs: Vec<Term> = c.head.args.iter().map(|t| b.subst.apply(t)).collect();
            let largs: Vec<Term> = la.args.iter().map(|t| b.subst.apply(t)).collect();
            if !refute(&b, he, &hargs, le, &largs, k) {
                return Symbolic::Unknown;
            }
        }
    }
    Symbolic::Proved
}

/// Tries to prove that `interp` makes the head of `c` true whenever it
/// makes the body true.
pub fn prove_model(c: &Clause, interp: &Interpretation, functors: &Functors) -> Symbolic {
    let Some(hc) = interp.cond(&c.head.rel()) else {
        return Symbolic::Unknown;
    };
    let gen = c.vars().iter().map(|v| v.gen).max().unwrap_or(0) + 1_000_000;
    let mut fresh = Fresh { gen, n: 0 };
    let mut branches = vec![Branch { subst: Subst::new(), facts: Vec::new(), cmps: Vec::new() }];
    for lit in &c.body {
        let mut next = Vec::new();
        for b in branches {
            match assume_literal(&b, lit, true, Some(interp)) {
                Some(bs) => next.extend(bs),
                None => return Symbolic::Unknown,
            }
        }
        branches = next;
        if branches.len() > MAX_BRANCHES {
            return Symbolic::Unknown;
        }
    }
    for b in branches {
        let Some(neg) = assume_cond(&b, hc, &c.head.args, false) else {
            return Symbolic::Unknown;
        };
        for n in neg {
            let Some(done) = settle(n, &[], functors, &mut fresh) else {
                return Symbolic::Unknown;
            };
            if !done.iter().all(|d| refute_all(d, Vec::new())) {
                return Symbolic::Unknown;
            }
        }
    }
    Symbolic::Proved
}

/// Branches in which `lit` has truth value `want` under `interp`, or
/// `None` when the literal cannot be translated.
fn assume_literal(b: &Branch, lit: &Literal, want: bool, interp: Option<&Interpretation>) -> Option<Vec<Branch>> {
    match lit {
        Literal::Pos(a) | Literal::Neg(a) => {
            let cond = interp?.cond(&a.rel())?;
            let want = if matches!(lit, Literal::Neg(_)) { !want } else { want };
            let args: Vec<Term> = a.args.iter().map(|t| b.subst.apply(t)).collect();
            assume_cond(b, cond, &args, want)
        }
        Literal::Eq(s, t) => {
            if want {
                Some(unify_branch(b, s, t).into_iter().collect())
            } else {
                Some(with_fact(b, Fact::Neq(BTreeSet::new(), s.clone(), t.clone())))
            }
        }
        Literal::Ineq(univ, s, t) => {
            if want {
                Some(with_fact(b, Fact::Neq(univ.clone(), s.clone(), t.clone())))
            } else if univ.is_empty() {
                Some(unify_branch(b, s, t).into_iter().collect())
            } else {
                // Some instance of the quantified pair is equal: drop.
                Some(vec![b.clone()])
            }
        }
    }
}

fn with_fact(b: &Branch, f: Fact) -> Vec<Branch> {
    let mut n = b.clone();
    n.facts.push(f.apply(&b.subst));
    vec![n]
}

fn unify_branch(b: &Branch, s: &Term, t: &Term) -> Option<Branch> {
    let subst = b.subst.unify(s, t)?;
    Some(Branch { subst, facts: b.facts.clone(), cmps: b.cmps.clone() })
}

fn assume_cond(b: &Branch, c: &Cond, args: &[Term], want: bool) -> Option<Vec<Branch>> {
    let args: Vec<Term> = args.iter().map(|t| b.subst.apply(t)).collect();
    Some(match (c, want) {
        (Cond::True, true) | (Cond::False, false) => vec![b.clone()],
        (Cond::True, false) | (Cond::False, true) => vec![],
        (Cond::Elem(i, j), w) => {
            let f = if w { Fact::Elem(args[*i].clone(), args[*j].clone()) } else { Fact::NotElem(args[*i].clone(), args[*j].clone()) };
            with_fact(b, f)
        }
        (Cond::InSet(i, s), true) => with_fact(b, Fact::InSet(args[*i].clone(), s.clone())),
        (Cond::InSet(i, s), false) => {
            let mut n = b.clone();
            for e in s.elems.iter() {
                n.facts.push(Fact::Neq(BTreeSet::new(), args[*i].clone(), e.clone()));
            }
            vec![n]
        }
        (Cond::IsList(i), true) => with_fact(b, Fact::IsList(args[*i].clone())),
        (Cond::IsList(i), false) => with_fact(b, Fact::NotList(args[*i].clone())),
        (Cond::ArgEq(i, j), true) => unify_branch(b, &args[*i], &args[*j]).into_iter().collect(),
        (Cond::ArgEq(i, j), false) => with_fact(b, Fact::Neq(BTreeSet::new(), args[*i].clone(), args[*j].clone())),
        (Cond::Cmp(op, l, r), w) => {
            let op = if w { *op } else { op.negate() };
            let mut n = b.clone();
            n.cmps.push(PendingCmp { op, lhs: l.clone(), rhs: r.clone(), args: args.clone() });
            vec![n]
        }
        (Cond::And(x, y), true) | (Cond::Or(x, y), false) => {
            let mut out = Vec::new();
            for m in assume_cond(b, x, &args, want)? {
                out.extend(assume_cond(&m, y, &args, want)?);
            }
            out
        }
        (Cond::Or(x, y), true) | (Cond::And(x, y), false) => {
            let mut out = assume_cond(b, x, &args, want)?;
            // Keep the disjuncts exclusive to avoid duplicate work only when cheap.
            out.extend(assume_cond(b, y, &args, want)?);
            out
        }
        (Cond::Not(x), w) => assume_cond(b, x, &args, !w)?,
    })
}

/// Normalizes facts and splits `cases` discriminators until stable.
/// `None` when the branch count explodes.
fn settle(b: Branch, levels: &[(&Expr, &Vec<Term>)], functors: &Functors, fresh: &mut Fresh) -> Option<Vec<Branch>> {
    let mut todo = vec![b];
    let mut done = Vec::new();
    while let Some(b) = todo.pop() {
        if todo.len() + done.len() > MAX_BRANCHES {
            return None;
        }
        match normalize(b) {
            Norm::Infeasible => {}
            Norm::Split(bs) => todo.extend(bs),
            Norm::Stable(b) => {
                let mut target = None;
                for (e, args) in levels {
                    let args: Vec<Term> = args.iter().map(|t| b.subst.apply(t)).collect();
                    if let Some(v) = case_var(e, &args) {
                        target = Some(v);
                        break;
                    }
                }
                if target.is_none() {
                    for p in &b.cmps {
                        let args: Vec<Term> = p.args.iter().map(|t| b.subst.apply(t)).collect();
                        if let Some(v) = case_var(&p.lhs, &args).or_else(|| case_var(&p.rhs, &args)) {
                            target = Some(v);
                            break;
                        }
                    }
                }
                match target {
                    None => done.push(b),
                    Some(v) => {
                        for (f, k) in functors {
                            let t = Term::App(f.clone(), (0..*k).map(|_| fresh.var()).collect());
                            if let Some(n) = unify_branch(&b, &Term::Var(v.clone()), &t) {
                                todo.push(n);
                            }
                        }
                    }
                }
            }
        }
    }
    Some(done)
}

/// A `cases` discriminator that is still a variable.
fn case_var(e: &Expr, args: &[Term]) -> Option<Var> {
    match e {
        Expr::Cases(i, arms, d) => match &args[*i] {
            Term::Var(v) => Some(v.clone()),
            Term::App(f, xs) => {
                let arm = arms.iter().find(|((g, k), _)| g == f && *k == xs.len()).map(|(_, e)| e).unwrap_or(d);
                case_var(arm, args)
            }
        },
        Expr::Add(a, b) | Expr::Monus(a, b) => case_var(a, args).or_else(|| case_var(b, args)),
        Expr::Mul(_, a) => case_var(a, args),
        _ => None,
    }
}

enum Norm {
    Infeasible,
    Split(Vec<Branch>),
    Stable(Branch),
}

fn normalize(b: Branch) -> Norm {
    let mut facts: Vec<Fact> = b.facts.iter().map(|f| f.apply(&b.subst)).collect();
    let mut out: Vec<Fact> = Vec::new();
    while let Some(f) = facts.pop() {
        match f {
            Fact::Elem(x, l) => match &l {
                Term::Var(_) => out.push(Fact::Elem(x, l)),
                _ => match l.as_cons() {
                    None => return Norm::Infeasible,
                    Some((h, _)) if *h == x => {}
                    Some((h, t)) => {
                        let mut rest = facts.clone();
                        rest.extend(out.iter().cloned());
                        let mut alts = Vec::new();
                        if let Some(s) = b.subst.unify(&x, h) {
                            alts.push(Branch { subst: s, facts: rest.clone(), cmps: b.cmps.clone() });
                        }
                        let mut more = rest;
                        more.push(Fact::Elem(x.clone(), t.clone()));
                        alts.push(Branch { subst: b.subst.clone(), facts: more, cmps: b.cmps.clone() });
                        return Norm::Split(alts);
                    }
                },
            },
            Fact::NotElem(x, l) => match &l {
                Term::Var(_) => out.push(Fact::NotElem(x, l)),
                _ => {
                    if let Some((h, t)) = l.as_cons() {
                        facts.push(Fact::Neq(BTreeSet::new(), x.clone(), h.clone()));
                        facts.push(Fact::NotElem(x, t.clone()));
                    }
                }
            },
            Fact::InSet(x, s) => {
                if x.is_ground() {
                    if !s.elems.contains(&x) {
                        return Norm::Infeasible;
                    }
                } else if s.elems.iter().any(|e| crate::term::unify(&x, e).is_some()) {
                    out.push(Fact::InSet(x, s));
                } else {
                    return Norm::Infeasible;
                }
            }
            Fact::IsList(l) => match &l {
                Term::Var(_) => out.push(Fact::IsList(l)),
                _ if l.is_nil() => {}
                _ => match l.as_cons() {
                    Some((_, t)) => facts.push(Fact::IsList(t.clone())),
                    None => return Norm::Infeasible,
                },
            },
            Fact::NotList(l) => match &l {
                Term::Var(_) => out.push(Fact::NotList(l)),
                _ if l.is_nil() => return Norm::Infeasible,
                _ => {
                    if let Some((_, t)) = l.as_cons() {
                        facts.push(Fact::NotList(t.clone()));
                    }
                }
            },
            Fact::Neq(u, x, y) => match classify_ineq(&Ineq::new(u, x, y)) {
                IneqClass::Valid => {}
                IneqClass::Unsatisfiable => return Norm::Infeasible,
                IneqClass::Primitive(q) => out.push(Fact::Neq(q.univ, q.lhs, q.rhs)),
            },
        }
    }
    out.dedup();
    let clash = out.iter().any(|f| match f {
        Fact::Elem(x, l) => out.contains(&Fact::NotElem(x.clone(), l.clone())),
        Fact::IsList(l) => out.contains(&Fact::NotList(l.clone())),
        _ => false,
    });
    if clash {
        return Norm::Infeasible;
    }
    Norm::Stable(Branch { subst: b.subst, facts: out, cmps: b.cmps })
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Measure {
    Len(Term),
    Size(Term),
    Count(Term, Pred),
    Fresh(usize),
}

/// What a counting measure counts: members of a set or keys of a pair list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Pred {
    Set(Arc<str>),
    Keys(Term),
}

/// `sum coef * atom + c`, read as `>= 0` when used as a constraint.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Lin {
    coef: BTreeMap<usize, i128>,
    c: i128,
}

impl Lin {
    fn constant(c: i128) -> Lin {
        Lin { coef: BTreeMap::new(), c }
    }

    fn atom(i: usize) -> Lin {
        Lin { coef: BTreeMap::from([(i, 1)]), c: 0 }
    }

    fn add(&self, o: &Lin) -> Lin {
        let mut r = self.clone();
        for (k, v) in &o.coef {
            *r.coef.entry(*k).or_insert(0) += v;
        }
        r.coef.retain(|_, v| *v != 0);
        r.c += o.c;
        r
    }

    fn scale(&self, n: i128) -> Lin {
        if n == 0 {
            return Lin::default();
        }
        Lin { coef: self.coef.iter().map(|(k, v)| (*k, v * n)).collect(), c: self.c * n }
    }

    fn sub(&self, o: &Lin) -> Lin {
        self.add(&o.scale(-1))
    }

    fn plus(&self, n: i128) -> Lin {
        Lin { coef: self.coef.clone(), c: self.c + n }
    }
}

/// A linear value valid under side constraints.
#[derive(Clone, Debug)]
struct Piece {
    val: Lin,
    side: Vec<Lin>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tri {
    Yes,
    No,
    Unknown,
}

struct Ctx<'a> {
    b: &'a Branch,
    atoms: BTreeMap<Measure, usize>,
    fresh: usize,
    /// Constraints valid in every instance of the branch.
    cons: Vec<Lin>,
    sets: BTreeMap<Arc<str>, NamedSet>,
    counts: BTreeMap<(Term, Pred), Lin>,
}

const MAX_PIECES: usize = 256;

impl<'a> Ctx<'a> {
    fn new(b: &'a Branch) -> Self {
        Ctx { b, atoms: BTreeMap::new(), fresh: 0, cons: Vec::new(), sets: BTreeMap::new(), counts: BTreeMap::new() }
    }

    fn measure(&mut self, m: Measure) -> (Lin, bool) {
        if let Some(&i) = self.atoms.get(&m) {
            return (Lin::atom(i), false);
        }
        let i = self.atoms.len();
        self.atoms.insert(m, i);
        self.cons.push(Lin::atom(i));
        (Lin::atom(i), true)
    }

    fn fresh_atom(&mut self) -> Lin {
        self.fresh += 1;
        self.measure(Measure::Fresh(self.fresh)).0
    }

    fn len(&mut self, t: &Term) -> Lin {
        let (items, tail) = t.spine();
        let n = items.len() as i128;
        match tail {
            Term::Var(_) => {
                let (l, new) = self.measure(Measure::Len(tail.clone()));
                if new && self.nonempty(tail) {
                    self.cons.push(l.plus(-1));
                }
                l.plus(n)
            }
            _ => Lin::constant(n),
        }
    }

    /// Facts force the variable to be a non-empty list.
    fn nonempty(&self, v: &Term) -> bool {
        let facts = &self.b.facts;
        facts.iter().any(|f| matches!(f, Fact::Elem(_, l) if l == v))
            || (facts.contains(&Fact::IsList(v.clone()))
                && facts.iter().any(|f| matches!(f, Fact::Neq(u, x, y) if u.is_empty() && ((x == v && y.is_nil()) || (y == v && x.is_nil())))))
    }

    fn size(&mut self, t: &Term) -> Lin {
        match t {
            Term::Var(_) => {
                let (l, new) = self.measure(Measure::Size(t.clone()));
                if new {
                    self.cons.push(l.plus(-1));
                }
                l
            }
            Term::App(_, args) => args.iter().fold(Lin::constant(1), |acc, a| acc.add(&self.size(a))),
        }
    }

    fn cap(&mut self, p: &Pred) -> Lin {
        match p {
            Pred::Set(name) => Lin::constant(self.sets[name].elems.len() as i128),
            Pred::Keys(g) => {
                let g = g.clone();
                self.len(&g)
            }
        }
    }

    /// Counting measure with the universal bounds `0 <= r <= cap` and
    /// `r <= len(t)` recorded. Memoized so shared suffixes share atoms.
    fn count(&mut self, t: &Term, p: &Pred) -> Lin {
        let key = (t.clone(), p.clone());
        if let Some(r) = self.counts.get(&key) {
            return r.clone();
        }
        let r = match t.as_cons() {
            None if t.is_var() => self.measure(Measure::Count(t.clone(), p.clone())).0,
            None => Lin::constant(0),
            Some((x, rest)) => {
                let r = self.count(rest, p);
                let (items, tail) = rest.spine();
                let items: Vec<Term> = items.into_iter().cloned().collect();
                match (self.in_pred(x, p), self.in_rest(x, &items, tail)) {
                    (Tri::No, _) | (_, Tri::Yes) => r,
                    (Tri::Yes, Tri::No) => r.plus(1),
                    _ => {
                        let a = self.fresh_atom();
                        self.cons.push(a.sub(&r));
                        self.cons.push(r.plus(1).sub(&a));
                        a
                    }
                }
            }
        };
        self.bound_count(&r, t, p);
        self.counts.insert(key, r.clone());
        r
    }

    fn bound_count(&mut self, r: &Lin, t: &Term, p: &Pred) {
        let cap = self.cap(p);
        let len = self.len(t);
        self.cons.push(cap.sub(r));
        self.cons.push(len.sub(r));
        self.cons.push(r.clone());
    }

    fn in_pred(&self, x: &Term, p: &Pred) -> Tri {
        match p {
            Pred::Set(name) => {
                let s = &self.sets[name];
                if x.is_ground() {
                    return if s.elems.contains(x) { Tri::Yes } else { Tri::No };
                }
                if self.b.facts.iter().any(|f| matches!(f, Fact::InSet(y, t) if y == x && t.name == *name)) {
                    return Tri::Yes;
                }
                if s.elems.iter().all(|e| crate::term::unify(x, e).is_none()) {
                    return Tri::No;
                }
                Tri::Unknown
            }
            Pred::Keys(g) => {
                let (items, tail) = g.spine();
                if items.iter().any(|i| pair_key(i) == Some(x)) {
                    return Tri::Yes;
                }
                if self.b.facts.iter().any(|f| matches!(f, Fact::Elem(e, l) if l == g && pair_key(e) == Some(x))) {
                    return Tri::Yes;
                }
                if !tail.is_var() {
                    let could = items.iter().any(|i| {
                        let probe = Term::list(vec![x.clone(), Term::var("_")]);
                        crate::term::unify(&probe.rename(u32::MAX), i).is_some()
                    });
                    if !could {
                        return Tri::No;
                    }
                }
                Tri::Unknown
            }
        }
    }

    fn distinct(&self, x: &Term, y: &Term) -> bool {
        crate::term::unify(x, y).is_none()
            || self.b.facts.iter().any(|f| matches!(f, Fact::Neq(u, a, b) if u.is_empty() && ((a == x && b == y) || (a == y && b == x))))
    }

    /// Whether `x` occurs among `rest` followed by `tail`.
    fn in_rest(&self, x: &Term, rest: &[Term], tail: &Term) -> Tri {
        if rest.iter().any(|y| y == x) {
            return Tri::Yes;
        }
        if tail.is_var() && self.b.facts.iter().any(|f| matches!(f, Fact::Elem(e, l) if e == x && l == tail)) {
            return Tri::Yes;
        }
        let tail_clear = !tail.is_var() || self.b.facts.iter().any(|f| matches!(f, Fact::NotElem(e, l) if e == x && l == tail));
        if tail_clear && rest.iter().all(|y| self.distinct(x, y)) {
            Tri::No
        } else {
            Tri::Unknown
        }
    }

    fn pieces(&mut self, e: &Expr, args: &[Term]) -> Option<Vec<Piece>> {
        let one = |val: Lin| Some(vec![Piece { val, side: Vec::new() }]);
        match e {
            Expr::Nat(n) => one(Lin::constant(*n as i128)),
            Expr::Len(i) => one(self.len(&args[*i])),
            Expr::Size(i) => one(self.size(&args[*i])),
            Expr::Card(s) => one(Lin::constant(s.elems.len() as i128)),
            Expr::SetCount(i, s) => {
                self.sets.insert(s.name.clone(), s.clone());
                let v = self.count(&args[*i], &Pred::Set(s.name.clone()));
                one(v)
            }
            Expr::PairCount(i, j) => one(self.count(&args[*i], &Pred::Keys(args[*j].clone()))),
            Expr::Mul(n, a) => {
                Some(self.pieces(a, args)?.into_iter().map(|p| Piece { val: p.val.scale(*n as i128), side: p.side }).collect())
            }
            Expr::Add(a, b) | Expr::Monus(a, b) => {
                let xs = self.pieces(a, args)?;
                let ys = self.pieces(b, args)?;
                if xs.len() * ys.len() * 2 > MAX_PIECES {
                    return None;
                }
                let mut out = Vec::new();
                for x in &xs {
                    for y in &ys {
                        let side: Vec<Lin> = x.side.iter().chain(&y.side).cloned().collect();
                        if matches!(e, Expr::Add(..)) {
                            out.push(Piece { val: x.val.add(&y.val), side });
                        } else {
                            let d = x.val.sub(&y.val);
                            let mut s1 = side.clone();
                            s1.push(d.clone());
                            out.push(Piece { val: d.clone(), side: s1 });
                            let mut s2 = side;
                            s2.push(d.scale(-1).plus(-1));
                            out.push(Piece { val: Lin::constant(0), side: s2 });
                        }
                    }
                }
                Some(out)
            }
            Expr::Cases(i, arms, d) => match &args[*i] {
                Term::App(f, xs) => {
                    let arm = arms.iter().find(|((g, k), _)| g == f && *k == xs.len()).map(|(_, e)| e).unwrap_or(d);
                    self.pieces(arm, args)
                }
                Term::Var(_) => None,
            },
        }
    }

    /// Alternative constraint sets, one of which holds, for `l op r`.
    fn compare(&mut self, p: &PendingCmp) -> Option<Vec<Vec<Lin>>> {
        let args: Vec<Term> = p.args.iter().map(|t| self.b.subst.apply(t)).collect();
        let ls = self.pieces(&p.lhs, &args)?;
        let rs = self.pieces(&p.rhs, &args)?;
        let mut out = Vec::new();
        for l in &ls {
            for r in &rs {
                let side: Vec<Lin> = l.side.iter().chain(&r.side).cloned().collect();
                let d = l.val.sub(&r.val);
                let alts: Vec<Vec<Lin>> = match p.op {
                    CmpOp::Ge => vec![vec![d]],
                    CmpOp::Le => vec![vec![d.scale(-1)]],
                    CmpOp::Gt => vec![vec![d.plus(-1)]],
                    CmpOp::Lt => vec![vec![d.scale(-1).plus(-1)]],
                    CmpOp::Eq => vec![vec![d.clone(), d.scale(-1)]],
                    CmpOp::Ne => vec![vec![d.plus(-1)], vec![d.scale(-1).plus(-1)]],
                };
                for mut a in alts {
                    a.extend(side.iter().cloned());
                    out.push(a);
                }
            }
        }
        Some(out)
    }
}

/// True when `H < L + k` is impossible in every piece of the branch.
fn refute(b: &Branch, he: &Expr, hargs: &[Term], le: &Expr, largs: &[Term], k: i128) -> bool {
    let mut ctx = Ctx::new(b);
    let (Some(hs), Some(ls)) = (ctx.pieces(he, hargs), ctx.pieces(le, largs)) else {
        return false;
    };
    let mut goals = Vec::new();
    for h in &hs {
        for l in &ls {
            let mut g: Vec<Lin> = h.side.iter().chain(&l.side).cloned().collect();
            g.push(l.val.plus(k - 1).sub(&h.val));
            goals.push(g);
        }
    }
    refute_in(ctx, b, goals)
}

/// True when the pending comparisons of the branch cannot all hold
/// together with one of `goals` (no goals means just the comparisons).
fn refute_all(b: &Branch, goals: Vec<Vec<Lin>>) -> bool {
    refute_in(Ctx::new(b), b, goals)
}

fn refute_in(mut ctx: Ctx, b: &Branch, mut goals: Vec<Vec<Lin>>) -> bool {
    if goals.is_empty() {
        goals.push(Vec::new());
    }
    let mut hyps: Vec<Vec<Lin>> = vec![Vec::new()];
    for p in &b.cmps {
        let Some(alts) = ctx.compare(p) else {
            return false;
        };
        let mut next = Vec::new();
        for h in &hyps {
            for a in &alts {
                next.push(h.iter().chain(a).cloned().collect::<Vec<_>>());
            }
        }
        if next.len() > MAX_PIECES {
            return false;
        }
        hyps = next;
    }
    if hyps.len() * goals.len() > MAX_PIECES * 4 {
        return false;
    }
    for hyp in &hyps {
        for g in &goals {
            let mut cs = ctx.cons.clone();
            cs.extend(hyp.iter().cloned());
            cs.extend(g.iter().cloned());
            if !infeasible(cs) {
                return false;
            }
        }
    }
    true
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

const MAX_CONSTRAINTS: usize = 20_000;

/// Normalizes a constraint. `Err(())` when it is a false constant.
fn tighten(mut l: Lin) -> Result<Option<Lin>, ()> {
    l.coef.retain(|_, v| *v != 0);
    if l.coef.is_empty() {
        return if l.c >= 0 { Ok(None) } else { Err(()) };
    }
    let g = l.coef.values().fold(0, |g, v| gcd(g, *v));
    if g > 1 {
        for v in l.coef.values_mut() {
            *v /= g;
        }
        l.c = l.c.div_euclid(g);
    }
    Ok(Some(l))
}

/// Fourier-Motzkin with integer tightening. `true` means no integer
/// solution exists; `false` may also mean the elimination was abandoned.
fn infeasible(cs: Vec<Lin>) -> bool {
    let mut set: BTreeSet<Lin> = BTreeSet::new();
    for c in cs {
        match tighten(c) {
            Err(()) => return true,
            Ok(Some(l)) => {
                set.insert(l);
            }
            Ok(None) => {}
        }
    }
    loop {
        let vars: BTreeSet<usize> = set.iter().flat_map(|l| l.coef.keys().copied()).collect();
        let Some(&x) = vars.iter().min_by_key(|&&v| {
            let pos = set.iter().filter(|l| l.coef.get(&v).is_some_and(|c| *c > 0)).count();
            let neg = set.iter().filter(|l| l.coef.get(&v).is_some_and(|c| *c < 0)).count();
            pos * neg
        }) else {
            return false;
        };
        let (with, mut rest): (Vec<Lin>, Vec<Lin>) = set.into_iter().partition(|l| l.coef.contains_key(&x));
        let (pos, neg): (Vec<Lin>, Vec<Lin>) = with.into_iter().partition(|l| l.coef[&x] > 0);
        if pos.len() * neg.len() + rest.len() > MAX_CONSTRAINTS {
            return false;
        }
        for p in &pos {
            for n in &neg {
                let a = p.coef[&x];
                let b = -n.coef[&x];
                match tighten(p.scale(b).add(&n.scale(a))) {
                    Err(()) => return true,
                    Ok(Some(l)) => rest.push(l),
                    Ok(None) => {}
                }
            }
        }
        set = rest.into_iter().collect();
    }
}
