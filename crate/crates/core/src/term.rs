//! Terms, literals, clauses, programs and syntactic unification.
//!
//! Lists are ordinary compound terms: `[]` is a constant and `[H|T]` is
//! `'.'(H, T)`. The pair `(a, b)` is `','(a, b)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

pub const NIL: &str = "[]";
pub const CONS: &str = ".";
pub const PAIR: &str = ",";

/// A logic variable. `gen` is zero for source variables and a fresh
/// number for variables introduced by renaming apart.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Arc<str>,
    pub gen: u32,
}

impl Var {
    pub fn new(name: &str) -> Self {
        Var { name: Arc::from(name), gen: 0 }
    }

    pub fn renamed(&self, gen: u32) -> Self {
        Var { name: self.name.clone(), gen }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.gen == 0 {
            write!(f, "{}", self.name)
        } else {
            let base = self.name.trim_start_matches('_');
            write!(f, "_{}{}", base, self.gen)
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    App(Arc<str>, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::new(name))
    }

    pub fn constant(name: &str) -> Term {
        Term::App(Arc::from(name), Vec::new())
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(Arc::from(name), args)
    }

    pub fn nil() -> Term {
        Term::constant(NIL)
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::App(Arc::from(CONS), vec![head, tail])
    }

    /// Builds a proper list from `items`.
    pub fn list(items: Vec<Term>) -> Term {
        items.into_iter().rev().fold(Term::nil(), |tail, head| Term::cons(head, tail))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::App(..) => None,
        }
    }

    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::Var(_) => None,
            Term::App(f, args) => Some((f, args.len())),
        }
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Term::App(f, a) if &**f == NIL && a.is_empty())
    }

    pub fn as_cons(&self) -> Option<(&Term, &Term)> {
        match self {
            Term::App(f, a) if &**f == CONS && a.len() == 2 => Some((&a[0], &a[1])),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn occurs(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::App(_, args) => args.iter().any(|a| a.occurs(v)),
        }
    }

    /// Nesting depth; constants and variables have depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    /// Number of `'.'` cells along the right spine.
    pub fn spine_len(&self) -> usize {
        let mut n = 0;
        let mut t = self;
        while let Some((_, tail)) = t.as_cons() {
            n += 1;
            t = tail;
        }
        n
    }

    /// Elements along the right spine, together with the final tail.
    pub fn spine(&self) -> (Vec<&Term>, &Term) {
        let mut items = Vec::new();
        let mut t = self;
        while let Some((h, tail)) = t.as_cons() {
            items.push(h);
            t = tail;
        }
        (items, t)
    }

    /// True for a `[]`-terminated list.
    pub fn is_proper_list(&self) -> bool {
        self.spine().1.is_nil()
    }

    pub fn rename(&self, gen: u32) -> Term {
        match self {
            Term::Var(v) => Term::Var(v.renamed(gen)),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.rename(gen)).collect()),
        }
    }

    pub fn collect_functors(&self, out: &mut BTreeSet<(Arc<str>, usize)>) {
        if let Term::App(f, args) = self {
            out.insert((f.clone(), args.len()));
            args.iter().for_each(|a| a.collect_functors(out));
        }
    }
}

/// A predicate symbol with its arity.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rel {
    pub name: Arc<str>,
    pub arity: usize,
}

impl Rel {
    pub fn new(name: &str, arity: usize) -> Self {
        Rel { name: Arc::from(name), arity }
    }
}

impl fmt::Debug for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: Arc<str>,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Self {
        Atom { pred: Arc::from(pred), args }
    }

    pub fn rel(&self) -> Rel {
        Rel { name: self.pred.clone(), arity: self.args.len() }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        self.args.iter().for_each(|a| a.collect_vars(out));
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// The atom viewed as a term, for unification.
    pub fn as_term(&self) -> Term {
        Term::App(self.pred.clone(), self.args.clone())
    }

    pub fn apply(&self, s: &Subst) -> Atom {
        Atom { pred: self.pred.clone(), args: self.args.iter().map(|a| s.apply(a)).collect() }
    }

    pub fn rename(&self, gen: u32) -> Atom {
        Atom { pred: self.pred.clone(), args: self.args.iter().map(|a| a.rename(gen)).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Eq(Term, Term),
    /// `forall(univ, lhs \= rhs)`.
    Ineq(BTreeSet<Var>, Term, Term),
}

impl Literal {
    pub fn is_constraint(&self) -> bool {
        matches!(self, Literal::Eq(..) | Literal::Ineq(..))
    }

    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            _ => None,
        }
    }

    pub fn rel(&self) -> Option<Rel> {
        self.atom().map(Atom::rel)
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.collect_vars(out),
            Literal::Eq(s, t) => {
                s.collect_vars(out);
                t.collect_vars(out);
            }
            Literal::Ineq(univ, s, t) => {
                let mut inner = BTreeSet::new();
                s.collect_vars(&mut inner);
                t.collect_vars(&mut inner);
                out.extend(inner.into_iter().filter(|v| !univ.contains(v)));
            }
        }
    }

    /// Free variables (universally quantified ones excluded).
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn is_ground(&self) -> bool {
        self.vars().is_empty()
    }

    pub fn apply(&self, s: &Subst) -> Literal {
        match self {
            Literal::Pos(a) => Literal::Pos(a.apply(s)),
            Literal::Neg(a) => Literal::Neg(a.apply(s)),
            Literal::Eq(l, r) => Literal::Eq(s.apply(l), s.apply(r)),
            Literal::Ineq(univ, l, r) => {
                let inner = s.without(univ);
                Literal::Ineq(univ.clone(), inner.apply(l), inner.apply(r))
            }
        }
    }

    pub fn rename(&self, gen: u32) -> Literal {
        match self {
            Literal::Pos(a) => Literal::Pos(a.rename(gen)),
            Literal::Neg(a) => Literal::Neg(a.rename(gen)),
            Literal::Eq(l, r) => Literal::Eq(l.rename(gen), r.rename(gen)),
            Literal::Ineq(univ, l, r) => Literal::Ineq(
                univ.iter().map(|v| v.renamed(gen)).collect(),
                l.rename(gen),
                r.rename(gen),
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    /// 1-based source position.
    pub id: usize,
    pub head: Atom,
    pub body: Vec<Literal>,
}

impl Clause {
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.head.vars();
        for l in &self.body {
            l.collect_vars(&mut out);
        }
        out
    }

    pub fn rename(&self, gen: u32) -> Clause {
        Clause {
            id: self.id,
            head: self.head.rename(gen),
            body: self.body.iter().map(|l| l.rename(gen)).collect(),
        }
    }

    pub fn apply(&self, s: &Subst) -> Clause {
        Clause { id: self.id, head: self.head.apply(s), body: self.body.iter().map(|l| l.apply(s)).collect() }
    }

    /// Relations occurring in head or body, negated atoms included.
    pub fn relations(&self) -> impl Iterator<Item = Rel> + '_ {
        std::iter::once(self.head.rel()).chain(self.body.iter().filter_map(Literal::rel))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub clauses: Vec<Clause>,
}

impl Program {
    pub fn new(clauses: Vec<Clause>) -> Self {
        Program { clauses }
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn clause(&self, id: usize) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id == id)
    }

    pub fn ids(&self) -> BTreeSet<usize> {
        self.clauses.iter().map(|c| c.id).collect()
    }

    /// Relations occurring in a clause head.
    pub fn defined_relations(&self) -> BTreeSet<Rel> {
        self.clauses.iter().map(|c| c.head.rel()).collect()
    }

    /// Every relation occurring anywhere in the program.
    pub fn relations(&self) -> BTreeSet<Rel> {
        self.clauses.iter().flat_map(|c| c.relations().collect::<Vec<_>>()).collect()
    }

    /// Function symbols (constants included) used in the program.
    pub fn functors(&self) -> BTreeSet<(Arc<str>, usize)> {
        let mut out = BTreeSet::new();
        for c in &self.clauses {
            c.head.args.iter().for_each(|a| a.collect_functors(&mut out));
            for l in &c.body {
                match l {
                    Literal::Pos(a) | Literal::Neg(a) => a.args.iter().for_each(|t| t.collect_functors(&mut out)),
                    Literal::Eq(s, t) | Literal::Ineq(_, s, t) => {
                        s.collect_functors(&mut out);
                        t.collect_functors(&mut out);
                    }
                }
            }
        }
        out
    }

    pub fn select(&self, ids: &BTreeSet<usize>) -> Program {
        Program { clauses: self.clauses.iter().filter(|c| ids.contains(&c.id)).cloned().collect() }
    }

    pub fn union(&self, other: &Program) -> Program {
        let mut clauses = self.clauses.clone();
        let have = self.ids();
        clauses.extend(other.clauses.iter().filter(|c| !have.contains(&c.id)).cloned());
        clauses.sort_by_key(|c| c.id);
        Program { clauses }
    }
}

/// An idempotent substitution.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subst {
    map: BTreeMap<Var, Term>,
}

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.map.keys()
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.map.is_empty() {
            return t.clone();
        }
        match t {
            Term::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| self.apply(a)).collect()),
        }
    }

    /// Binds `v` to `t`, keeping the substitution idempotent. `v` must be
    /// unbound and must not occur in `t`.
    pub fn bind(&mut self, v: Var, t: Term) {
        let single = Subst { map: BTreeMap::from([(v.clone(), t.clone())]) };
        for val in self.map.values_mut() {
            if val.occurs(&v) {
                *val = single.apply(val);
            }
        }
        self.map.insert(v, t);
    }

    pub fn without(&self, vars: &BTreeSet<Var>) -> Subst {
        if vars.is_empty() {
            return self.clone();
        }
        Subst { map: self.map.iter().filter(|(k, _)| !vars.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect() }
    }

    pub fn restrict(&self, vars: &BTreeSet<Var>) -> Subst {
        Subst { map: self.map.iter().filter(|(k, _)| vars.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect() }
    }

    /// Extends this substitution with a most general unifier of `s` and `t`.
    pub fn unify(&self, s: &Term, t: &Term) -> Option<Subst> {
        self.unify_pref(s, t, &|_| false)
    }

    /// As [`Subst::unify`]; when two unbound variables meet, one satisfying
    /// `prefer` is the one that gets bound.
    pub fn unify_pref(&self, s: &Term, t: &Term, prefer: &dyn Fn(&Var) -> bool) -> Option<Subst> {
        let mut out = self.clone();
        let mut stack = vec![(out.apply(s), out.apply(t))];
        while let Some((a, b)) = stack.pop() {
            let a = out.apply(&a);
            let b = out.apply(&b);
            match (a, b) {
                (Term::Var(x), Term::Var(y)) if x == y => {}
                (Term::Var(x), Term::Var(y)) => {
                    if prefer(&y) && !prefer(&x) {
                        out.bind(y, Term::Var(x));
                    } else {
                        out.bind(x, Term::Var(y));
                    }
                }
                (Term::Var(x), other) | (other, Term::Var(x)) => {
                    if other.occurs(&x) {
                        return None;
                    }
                    out.bind(x, other);
                }
                (Term::App(f, fa), Term::App(g, ga)) => {
                    if f != g || fa.len() != ga.len() {
                        return None;
                    }
                    stack.extend(fa.into_iter().zip(ga));
                }
            }
        }
        Some(out)
    }

    pub fn unify_atoms(&self, a: &Atom, b: &Atom) -> Option<Subst> {
        if a.pred != b.pred || a.args.len() != b.args.len() {
            return None;
        }
        self.unify(&a.as_term(), &b.as_term())
    }
}

impl FromIterator<(Var, Term)> for Subst {
    fn from_iter<I: IntoIterator<Item = (Var, Term)>>(iter: I) -> Self {
        let mut s = Subst::new();
        for (v, t) in iter {
            let t = s.apply(&t);
            s.bind(v, t);
        }
        s
    }
}

/// Most general unifier of two terms, or `None`.
pub fn unify(s: &Term, t: &Term) -> Option<Subst> {
    Subst::new().unify(s, t)
}

pub fn defined_relations(p: &Program) -> BTreeSet<Rel> {
    p.defined_relations()
}

fn needs_quotes(name: &str) -> bool {
    if name == NIL || (!name.is_empty() && name.chars().all(|c| c.is_ascii_digit())) {
        return false;
    }
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => true,
    }
}

pub(crate) fn fmt_name(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if needs_quotes(name) {
        write!(f, "'{}'", name.replace('\\', "\\\\").replace('\'', "\\'"))
    } else {
        write!(f, "{name}")
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(name, args) if &**name == CONS && args.len() == 2 => {
                write!(f, "[{}", args[0])?;
                let mut tail = &args[1];
                while let Some((h, t)) = tail.as_cons() {
                    write!(f, ",{h}")?;
                    tail = t;
                }
                if !tail.is_nil() {
                    write!(f, "|{tail}")?;
                }
                write!(f, "]")
            }
            Term::App(name, args) if &**name == PAIR && args.len() == 2 => {
                write!(f, "({},{})", args[0], args[1])
            }
            Term::App(name, args) => {
                fmt_name(f, name)?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_name(f, &self.pred)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

pub(crate) fn fmt_ineq(f: &mut fmt::Formatter<'_>, univ: &BTreeSet<Var>, l: &Term, r: &Term) -> fmt::Result {
    if univ.is_empty() {
        write!(f, "{l} \\= {r}")
    } else {
        write!(f, "forall([")?;
        for (i, v) in univ.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "], {l} \\= {r})")
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "\\+ {a}"),
            Literal::Eq(l, r) => write!(f, "{l} = {r}"),
            Literal::Ineq(u, l, r) => fmt_ineq(f, u, l, r),
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            write!(f, " :- ")?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{l}")?;
            }
        }
        write!(f, ".")
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(args: Vec<Term>) -> Term {
        Term::app("f", args)
    }

    #[test]
    fn unify_binds_both_sides() {
        let s = f(vec![Term::var("X"), Term::constant("a")]);
        let t = f(vec![Term::constant("b"), Term::var("Y")]);
        let mgu = unify(&s, &t).unwrap();
        assert_eq!(mgu.get(&Var::new("X")), Some(&Term::constant("b")));
        assert_eq!(mgu.get(&Var::new("Y")), Some(&Term::constant("a")));
        assert_eq!(mgu.apply(&s), mgu.apply(&t));
    }

    #[test]
    fn occur_check_rejects_cyclic_binding() {
        let x = Term::var("X");
        assert!(unify(&x, &Term::app("s", vec![x.clone()])).is_none());
    }

    #[test]
    fn distinct_functors_clash() {
        let a = Term::constant("a");
        assert!(unify(&Term::app("g", vec![a.clone()]), &Term::app("f", vec![a])).is_none());
    }

    #[test]
    fn chained_bindings_stay_idempotent() {
        let s = f(vec![Term::var("X"), Term::var("Y"), Term::var("Z")]);
        let t = f(vec![Term::var("Y"), Term::var("Z"), Term::constant("c")]);
        let mgu = unify(&s, &t).unwrap();
        for (_, v) in mgu.iter() {
            assert_eq!(mgu.apply(v), *v);
        }
        assert_eq!(mgu.apply(&Term::var("X")), Term::constant("c"));
    }

    #[test]
    fn list_printing() {
        let l = Term::list(vec![Term::constant("a"), Term::constant("b")]);
        assert_eq!(l.to_string(), "[a,b]");
        let partial = Term::cons(Term::constant("a"), Term::var("T"));
        assert_eq!(partial.to_string(), "[a|T]");
        assert_eq!(partial.spine_len(), 1);
        assert!(!partial.is_proper_list());
    }
}
