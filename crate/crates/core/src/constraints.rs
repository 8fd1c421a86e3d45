//! Equality and disequality constraints over the free equality theory.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::ResourceError;
use crate::term::{fmt_ineq, Literal, Program, Subst, Term, Var};

/// `forall(univ, lhs \= rhs)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ineq {
    pub univ: BTreeSet<Var>,
    pub lhs: Term,
    pub rhs: Term,
}

impl Ineq {
    pub fn new(univ: BTreeSet<Var>, lhs: Term, rhs: Term) -> Self {
        Ineq { univ, lhs, rhs }
    }

    pub fn plain(lhs: Term, rhs: Term) -> Self {
        Ineq { univ: BTreeSet::new(), lhs, rhs }
    }

    /// Free (non-quantified) variables.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut all = self.lhs.vars();
        self.rhs.collect_vars(&mut all);
        all.retain(|v| !self.univ.contains(v));
        all
    }

    pub fn apply(&self, s: &Subst) -> Ineq {
        let s = s.without(&self.univ);
        Ineq { univ: self.univ.clone(), lhs: s.apply(&self.lhs), rhs: s.apply(&self.rhs) }
    }

    pub fn rename_univ(&self, gen: u32) -> Ineq {
        let map: Subst = self.univ.iter().map(|v| (v.clone(), Term::Var(v.renamed(gen)))).collect();
        Ineq {
            univ: self.univ.iter().map(|v| v.renamed(gen)).collect(),
            lhs: map.apply(&self.lhs),
            rhs: map.apply(&self.rhs),
        }
    }

    pub fn to_literal(&self) -> Literal {
        Literal::Ineq(self.univ.clone(), self.lhs.clone(), self.rhs.clone())
    }
}

impl fmt::Display for Ineq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_ineq(f, &self.univ, &self.lhs, &self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IneqClass {
    Valid,
    Unsatisfiable,
    /// Satisfiable but not valid, in normal form.
    Primitive(Ineq),
}

/// Classifies a disequation over an infinite Herbrand universe. The
/// primitive normal form binds free variables only.
pub fn classify_ineq(q: &Ineq) -> IneqClass {
    let Some(mgu) = Subst::new().unify_pref(&q.lhs, &q.rhs, &|v| q.univ.contains(v)) else {
        return IneqClass::Valid;
    };
    let rest: Vec<(Var, Term)> =
        mgu.iter().filter(|(v, _)| !q.univ.contains(*v)).map(|(v, t)| (v.clone(), t.clone())).collect();
    if rest.is_empty() {
        return IneqClass::Unsatisfiable;
    }
    let (lhs, rhs) = if rest.len() == 1 {
        (Term::Var(rest[0].0.clone()), rest[0].1.clone())
    } else {
        let (vs, ts): (Vec<_>, Vec<_>) = rest.into_iter().map(|(v, t)| (Term::Var(v), t)).unzip();
        (Term::list(vs), Term::list(ts))
    };
    let mut univ = lhs.vars();
    rhs.collect_vars(&mut univ);
    univ.retain(|v| q.univ.contains(v));
    IneqClass::Primitive(Ineq { univ, lhs, rhs })
}

/// The function symbols a store is interpreted over. An open signature
/// has an unbounded supply of constants besides the listed ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    functors: Vec<(Arc<str>, usize)>,
    open: bool,
}

pub const DEFAULT_CONSTANT: &str = "$c";

impl Signature {
    pub fn new(functors: impl IntoIterator<Item = (Arc<str>, usize)>, open: bool) -> Self {
        let mut fs: Vec<(Arc<str>, usize)> = functors.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if !fs.iter().any(|(_, a)| *a == 0) {
            fs.push((Arc::from(DEFAULT_CONSTANT), 0));
        }
        fs.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        Signature { functors: fs, open }
    }

    pub fn open() -> Self {
        Signature::new(Vec::new(), true)
    }

    pub fn of_program(p: &Program, open: bool) -> Self {
        Signature::new(p.functors(), open)
    }

    pub fn with_terms<'a>(mut self, terms: impl IntoIterator<Item = &'a Term>) -> Self {
        let mut set: BTreeSet<_> = self.functors.drain(..).collect();
        for t in terms {
            t.collect_functors(&mut set);
        }
        Signature::new(set, self.open)
    }

    pub fn functors(&self) -> &[(Arc<str>, usize)] {
        &self.functors
    }

    pub fn is_open(&self) -> bool {
        self.open
    }

    pub fn is_infinite(&self) -> bool {
        self.open || self.functors.iter().any(|(_, a)| *a > 0)
    }
}

/// Depth cap on case analysis for closed signatures.
pub const NORMALIZATION_DEPTH: usize = 24;

/// A satisfiable conjunction: equalities in solved form plus primitive
/// disequations normalized against them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Store {
    pub eqs: Subst,
    pub ineqs: Vec<Ineq>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn is_empty(&self) -> bool {
        self.eqs.is_empty() && self.ineqs.is_empty()
    }

    pub fn apply(&self, t: &Term) -> Term {
        self.eqs.apply(t)
    }

    /// Conjoins `s = t`. `None` means the result is unsatisfiable.
    pub fn add_equality(&self, s: &Term, t: &Term) -> Option<Store> {
        let eqs = self.eqs.unify(s, t)?;
        if eqs.len() == self.eqs.len() && eqs == self.eqs {
            return Some(self.clone());
        }
        let mut out = Store { eqs, ineqs: Vec::with_capacity(self.ineqs.len()) };
        for q in &self.ineqs {
            match classify_ineq(&q.apply(&out.eqs)) {
                IneqClass::Valid => {}
                IneqClass::Unsatisfiable => return None,
                IneqClass::Primitive(n) => out.push_ineq(n),
            }
        }
        Some(out)
    }

    pub fn add_ineq(&self, q: &Ineq) -> Option<Store> {
        match classify_ineq(&q.apply(&self.eqs)) {
            IneqClass::Valid => Some(self.clone()),
            IneqClass::Unsatisfiable => None,
            IneqClass::Primitive(n) => {
                let mut out = self.clone();
                out.push_ineq(n);
                Some(out)
            }
        }
    }

    fn push_ineq(&mut self, q: Ineq) {
        if !self.ineqs.contains(&q) {
            self.ineqs.push(q);
        }
    }

    /// Store of a conjunction of equalities and disequations. `Ok(None)`
    /// when it is unsatisfiable, `Err` on any other literal.
    pub fn from_literals(lits: &[Literal]) -> Result<Option<Store>, Literal> {
        let mut s = Store::new();
        for l in lits {
            let next = match l {
                Literal::Eq(x, y) => s.add_equality(x, y),
                Literal::Ineq(u, x, y) => s.add_ineq(&Ineq::new(u.clone(), x.clone(), y.clone())),
                other => return Err(other.clone()),
            };
            match next {
                Some(n) => s = n,
                None => return Ok(None),
            }
        }
        Ok(Some(s))
    }

    /// Conjunction of two stores.
    pub fn conjoin(&self, other: &Store) -> Option<Store> {
        let mut out = self.clone();
        for (v, t) in other.eqs.iter() {
            out = out.add_equality(&Term::Var(v.clone()), t)?;
        }
        for q in &other.ineqs {
            out = out.add_ineq(q)?;
        }
        Some(out)
    }

    pub fn satisfiable(&self, sig: &Signature) -> Result<bool, ResourceError> {
        ineqs_satisfiable(self.ineqs.clone(), sig, 0)
    }

    /// True iff every solution of the store satisfies `lit` (an equality or
    /// disequation).
    pub fn entails(&self, lit: &Literal, sig: &Signature) -> Result<bool, ResourceError> {
        let counter = match lit {
            Literal::Eq(s, t) => self.add_ineq(&Ineq::plain(s.clone(), t.clone())),
            Literal::Ineq(univ, s, t) => {
                let gen = max_gen(self) + 1 + max_gen_terms([s, t]);
                let q = Ineq::new(univ.clone(), s.clone(), t.clone()).rename_univ(gen);
                self.add_equality(&q.lhs, &q.rhs)
            }
            _ => return Ok(false),
        };
        match counter {
            None => Ok(true),
            Some(c) => Ok(!c.satisfiable(sig)?),
        }
    }

    /// Free variables of the store: bound variables excluded.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for (v, t) in self.eqs.iter() {
            out.insert(v.clone());
            t.collect_vars(&mut out);
        }
        for q in &self.ineqs {
            out.extend(q.free_vars());
        }
        out
    }

    /// Keeps the bindings of `vars` and the disequations connected to them
    /// through shared variables. Dropped disequations mention only local
    /// variables, so on a satisfiable store they are implied.
    pub fn project(&self, vars: &BTreeSet<Var>) -> Store {
        // Prefer kept variables as representatives: X = _L, _L \= a
        // becomes X \= a.
        let mut ren = Subst::new();
        for v in vars {
            if let Some(Term::Var(w)) = self.eqs.get(v) {
                if !vars.contains(w) && ren.get(w).is_none() {
                    ren.bind(w.clone(), Term::Var(v.clone()));
                }
            }
        }
        if ren.len() > 0 {
            let mut s = Store::new();
            for (v, t) in self.eqs.iter() {
                s = s.add_equality(&ren.apply(&Term::Var(v.clone())), &ren.apply(t)).expect("renaming keeps satisfiability");
            }
            for q in &self.ineqs {
                s = s.add_ineq(&q.apply(&ren)).expect("renaming keeps satisfiability");
            }
            return s.project_oriented(vars);
        }
        self.project_oriented(vars)
    }

    fn project_oriented(&self, vars: &BTreeSet<Var>) -> Store {
        let eqs = self.eqs.restrict(vars);
        let mut reach: BTreeSet<Var> = vars.iter().filter(|v| eqs.get(v).is_none()).cloned().collect();
        for (_, t) in eqs.iter() {
            t.collect_vars(&mut reach);
        }
        let mut keep = vec![false; self.ineqs.len()];
        loop {
            let mut changed = false;
            for (i, q) in self.ineqs.iter().enumerate() {
                if keep[i] {
                    continue;
                }
                let fv = q.free_vars();
                if fv.iter().any(|v| reach.contains(v)) {
                    keep[i] = true;
                    reach.extend(fv);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let ineqs = self.ineqs.iter().zip(keep).filter(|(_, k)| *k).map(|(q, _)| q.clone()).collect();
        Store { eqs, ineqs }
    }

    /// Renames every free variable that is not in `keep` to generation `gen`.
    pub fn rename_locals(&self, keep: &BTreeSet<Var>, gen: u32) -> Store {
        let ren: Subst =
            self.vars().into_iter().filter(|v| !keep.contains(v)).map(|v| (v.clone(), Term::Var(v.renamed(gen)))).collect();
        let eqs = self
            .eqs
            .iter()
            .map(|(v, t)| (ren.get(v).and_then(Term::as_var).cloned().unwrap_or_else(|| v.clone()), ren.apply(t)))
            .collect();
        let ineqs = self.ineqs.iter().map(|q| q.apply(&ren)).collect();
        Store { eqs, ineqs }
    }

    pub fn literals(&self) -> Vec<Literal> {
        let mut out: Vec<Literal> = self.eqs.iter().map(|(v, t)| Literal::Eq(Term::Var(v.clone()), t.clone())).collect();
        out.extend(self.ineqs.iter().map(Ineq::to_literal));
        out
    }
}

impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "true");
        }
        let mut first = true;
        for (v, t) in self.eqs.iter() {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{v} = {t}")?;
        }
        for q in &self.ineqs {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{q}")?;
        }
        Ok(())
    }
}

fn max_gen_terms<'a>(ts: impl IntoIterator<Item = &'a Term>) -> u32 {
    ts.into_iter().flat_map(|t| t.vars()).map(|v| v.gen).max().unwrap_or(0)
}

pub(crate) fn max_gen(s: &Store) -> u32 {
    let mut m = 0;
    for (v, t) in s.eqs.iter() {
        m = m.max(v.gen).max(max_gen_terms([t]));
    }
    for q in &s.ineqs {
        m = m.max(max_gen_terms([&q.lhs, &q.rhs]));
    }
    m
}

/// The disequation has a binding between two distinct free variables.
fn has_var_var(q: &Ineq) -> bool {
    let pairs: Vec<(&Term, &Term)> = match (q.lhs.as_cons(), q.lhs.is_var()) {
        (_, true) => vec![(&q.lhs, &q.rhs)],
        _ => {
            let (ls, _) = q.lhs.spine();
            let (rs, _) = q.rhs.spine();
            ls.into_iter().zip(rs).collect()
        }
    };
    pairs.iter().any(|(l, r)| matches!(r, Term::Var(w) if !q.univ.contains(w)) && l.is_var())
}

fn ineqs_satisfiable(ineqs: Vec<Ineq>, sig: &Signature, depth: usize) -> Result<bool, ResourceError> {
    let mut norm = Vec::with_capacity(ineqs.len());
    for q in ineqs {
        match classify_ineq(&q) {
            IneqClass::Valid => {}
            IneqClass::Unsatisfiable => return Ok(false),
            IneqClass::Primitive(n) => norm.push(n),
        }
    }
    // Distinct fresh constants for all free variables satisfy every
    // primitive disequation.
    if norm.is_empty() || sig.is_open() {
        return Ok(true);
    }
    // With infinitely many ground terms, pairwise distinct values satisfy
    // every var-var disequation.
    if sig.is_infinite() && norm.iter().all(has_var_var) {
        return Ok(true);
    }
    if depth >= NORMALIZATION_DEPTH {
        return Err(ResourceError::NormalizationDepth(NORMALIZATION_DEPTH));
    }
    let target = norm.iter().find(|q| !sig.is_infinite() || !has_var_var(q)).unwrap_or(&norm[0]);
    let x = target.free_vars().into_iter().next().expect("primitive disequation has a free variable");
    let gen = norm.iter().map(|q| max_gen_terms([&q.lhs, &q.rhs])).max().unwrap_or(0) + 1;
    for (f, k) in sig.functors() {
        let args = (0..*k).map(|i| Term::Var(Var { name: Arc::from(format!("_X{i}").as_str()), gen })).collect();
        let s: Subst = std::iter::once((x.clone(), Term::App(f.clone(), args))).collect();
        let next = norm.iter().map(|q| q.apply(&s)).collect();
        if ineqs_satisfiable(next, sig, depth + 1)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Chan's negation of the answers `answers` computed for an atom whose
/// variables are `vars`. The result is a disjunction of stores.
pub fn negate_answers(
    vars: &BTreeSet<Var>,
    answers: &[Store],
    sig: &Signature,
    next_gen: &mut dyn FnMut() -> u32,
) -> Result<Vec<Store>, ResourceError> {
    let mut acc = vec![Store::new()];
    for ans in answers {
        let disjuncts = negate_one(vars, ans, next_gen)?;
        let mut next = Vec::new();
        for s in &acc {
            for d in &disjuncts {
                if let Some(c) = s.conjoin(d) {
                    if c.satisfiable(sig)? && !next.contains(&c) {
                        next.push(c);
                    }
                }
            }
        }
        acc = next;
        if acc.is_empty() {
            break;
        }
    }
    Ok(acc)
}

/// Disjuncts of `not exists W (E and F1 and ... and Fn)`.
fn negate_one(vars: &BTreeSet<Var>, ans: &Store, next_gen: &mut dyn FnMut() -> u32) -> Result<Vec<Store>, ResourceError> {
    let eqs = ans.eqs.restrict(vars);
    let mut in_eqs = BTreeSet::new();
    for (_, t) in eqs.iter() {
        t.collect_vars(&mut in_eqs);
    }
    for q in &ans.ineqs {
        for v in q.free_vars() {
            if !vars.contains(&v) && !in_eqs.contains(&v) {
                return Err(ResourceError::Unsupported(format!("local variable {v} occurs only in {q}")));
            }
        }
    }
    let locals: BTreeSet<Var> = in_eqs.iter().filter(|v| !vars.contains(*v)).cloned().collect();
    let rename = |gen: u32| -> Subst { locals.iter().map(|v| (v.clone(), Term::Var(v.renamed(gen)))).collect() };
    let mut out = Vec::new();
    if !eqs.is_empty() {
        let g = next_gen();
        let ren = rename(g);
        let (ls, rs): (Vec<_>, Vec<_>) = eqs.iter().map(|(v, t)| (Term::Var(v.clone()), ren.apply(t))).unzip();
        let univ = locals.iter().map(|v| v.renamed(g)).collect();
        let q = if ls.len() == 1 {
            Ineq::new(univ, ls[0].clone(), rs[0].clone())
        } else {
            Ineq::new(univ, Term::list(ls), Term::list(rs))
        };
        if let Some(s) = Store::new().add_ineq(&q) {
            out.push(s);
        }
    }
    for q in &ans.ineqs {
        let g = next_gen();
        let ren = rename(g);
        let mut s = Store::new();
        let mut ok = true;
        for (v, t) in eqs.iter() {
            match s.add_equality(&Term::Var(v.clone()), &ren.apply(t)) {
                Some(n) => s = n,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let q = q.apply(&ren).rename_univ(g);
        if let Some(n) = s.add_equality(&q.lhs, &q.rhs) {
            out.push(n);
        }
    }
    Ok(out)
}

/// Answer sets `a` and `b` (disjunctions over `vars`) have the same solutions.
pub fn equivalent_answers(
    vars: &BTreeSet<Var>,
    a: &[Store],
    b: &[Store],
    sig: &Signature,
) -> Result<bool, ResourceError> {
    Ok(entails_answers(vars, a, b, sig)? && entails_answers(vars, b, a, sig)?)
}

/// Every solution of the disjunction `a` is a solution of `b`.
pub fn entails_answers(vars: &BTreeSet<Var>, a: &[Store], b: &[Store], sig: &Signature) -> Result<bool, ResourceError> {
    let mut gen = a.iter().chain(b).map(max_gen).max().unwrap_or(0) + 1;
    let mut next = || {
        gen += 1;
        gen
    };
    let neg_b = negate_answers(vars, b, sig, &mut next)?;
    for s in a {
        let s = s.rename_locals(vars, next());
        for d in &neg_b {
            if let Some(c) = s.conjoin(d) {
                if c.satisfiable(sig)? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
