//! Level mappings: a small expression language over atom arguments.
//!
//! ```text
//! expr ::= sum
//! sum  ::= prod { ("+" | "-") prod }        "-" is truncated subtraction
//! prod ::= nat "*" prod | atom
//! atom ::= nat | len(argI) | size(argI) | set_count(argI, SET)
//!        | pair_count(argI, argJ) | card(SET) | "(" expr ")"
//!        | cases(argI) "{" f/k "->" expr ";" ... ";" default "->" expr "}"
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::ParseError;
use crate::lexer::{describe, Cursor, Tok};
use crate::term::{fmt_name, Atom, Literal, Rel, Term, Var};

/// A finite set of ground terms declared in an annotation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedSet {
    pub name: Arc<str>,
    pub elems: Arc<BTreeSet<Term>>,
}

pub type Sets = BTreeMap<String, NamedSet>;

/// Argument positions are 0-based here and 1-based (`arg1`) in syntax.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Nat(u64),
    /// Number of cells along the list spine.
    Len(usize),
    /// Number of symbol occurrences.
    Size(usize),
    /// Distinct spine elements that belong to the set.
    SetCount(usize, NamedSet),
    /// Distinct spine elements x of the first argument such that some
    /// `[x,_]` is a spine element of the second.
    PairCount(usize, usize),
    Card(NamedSet),
    Add(Box<Expr>, Box<Expr>),
    Mul(u64, Box<Expr>),
    Monus(Box<Expr>, Box<Expr>),
    Cases(usize, Vec<((Arc<str>, usize), Expr)>, Box<Expr>),
}

/// Spine elements and final tail of a list term.
fn elems(t: &Term) -> (Vec<&Term>, &Term) {
    t.spine()
}

/// The `[x,_]` shape: returns x.
pub fn pair_key(t: &Term) -> Option<&Term> {
    let (h, rest) = t.as_cons()?;
    let (_, nil) = rest.as_cons()?;
    nil.is_nil().then_some(h)
}

fn size(t: &Term) -> u64 {
    match t {
        Term::Var(_) => 0,
        Term::App(_, args) => 1 + args.iter().map(size).sum::<u64>(),
    }
}

fn first_var(t: &Term) -> Option<Var> {
    match t {
        Term::Var(v) => Some(v.clone()),
        Term::App(_, args) => args.iter().find_map(first_var),
    }
}

impl Expr {
    /// Value on ground arguments.
    pub fn eval(&self, args: &[Term]) -> u64 {
        self.eval_partial(args).unwrap_or_else(|_| panic!("level of non-ground arguments"))
    }

    /// `self - other` when the measures that are not yet determined cancel
    /// out. Only sums of scaled measures are considered.
    pub fn difference(&self, other: &Expr, args: &[Term]) -> Option<i128> {
        let mut terms = BTreeMap::new();
        let mut c = 0;
        self.linear(args, 1, &mut terms, &mut c)?;
        other.linear(args, -1, &mut terms, &mut c)?;
        terms.values().all(|k| *k == 0).then_some(c)
    }

    fn linear(&self, args: &[Term], k: i128, terms: &mut BTreeMap<(String, Vec<Term>), i128>, c: &mut i128) -> Option<()> {
        if let Ok(v) = self.eval_partial(args) {
            *c += k * v as i128;
            return Some(());
        }
        let key = match self {
            Expr::Len(i) => ("len".to_string(), vec![args[*i].clone()]),
            Expr::Size(i) => ("size".to_string(), vec![args[*i].clone()]),
            Expr::SetCount(i, s) => (format!("set_count {}", s.name), vec![args[*i].clone()]),
            Expr::PairCount(i, j) => ("pair_count".to_string(), vec![args[*i].clone(), args[*j].clone()]),
            Expr::Add(a, b) => {
                a.linear(args, k, terms, c)?;
                return b.linear(args, k, terms, c);
            }
            Expr::Mul(n, e) => return e.linear(args, k * *n as i128, terms, c),
            _ => return None,
        };
        *terms.entry(key).or_insert(0) += k;
        Some(())
    }

    /// Value on possibly non-ground arguments, or a variable whose binding
    /// could change it.
    pub fn eval_partial(&self, args: &[Term]) -> Result<u64, Var> {
        Ok(match self {
            Expr::Nat(n) => *n,
            Expr::Len(i) => {
                let (items, tail) = elems(&args[*i]);
                if let Term::Var(v) = tail {
                    return Err(v.clone());
                }
                items.len() as u64
            }
            Expr::Size(i) => match first_var(&args[*i]) {
                Some(v) => return Err(v),
                None => size(&args[*i]),
            },
            Expr::SetCount(i, s) => {
                let (items, tail) = elems(&args[*i]);
                if let Term::Var(v) = tail {
                    return Err(v.clone());
                }
                let mut seen = BTreeSet::new();
                for x in items {
                    if x.is_ground() {
                        if s.elems.contains(x) {
                            seen.insert(x.clone());
                        }
                    } else if s.elems.iter().any(|e| crate::term::unify(x, e).is_some()) {
                        return Err(first_var(x).expect("non-ground"));
                    }
                }
                seen.len() as u64
            }
            Expr::PairCount(i, j) => {
                if let Some(v) = first_var(&args[*i]).or_else(|| first_var(&args[*j])) {
                    return Err(v);
                }
                let keys: BTreeSet<&Term> = elems(&args[*j]).0.into_iter().filter_map(pair_key).collect();
                let xs: BTreeSet<&Term> = elems(&args[*i]).0.into_iter().filter(|x| keys.contains(x)).collect();
                xs.len() as u64
            }
            Expr::Card(s) => s.elems.len() as u64,
            Expr::Add(a, b) => a.eval_partial(args)? + b.eval_partial(args)?,
            Expr::Mul(n, e) => n * e.eval_partial(args)?,
            Expr::Monus(a, b) => a.eval_partial(args)?.saturating_sub(b.eval_partial(args)?),
            Expr::Cases(i, arms, default) => match &args[*i] {
                Term::Var(v) => return Err(v.clone()),
                Term::App(f, xs) => arms
                    .iter()
                    .find(|((g, k), _)| g == f && *k == xs.len())
                    .map(|(_, e)| e)
                    .unwrap_or(default)
                    .eval_partial(args)?,
            },
        })
    }

    /// Largest argument index mentioned.
    pub fn max_arg(&self) -> Option<usize> {
        match self {
            Expr::Nat(_) | Expr::Card(_) => None,
            Expr::Len(i) | Expr::Size(i) | Expr::SetCount(i, _) => Some(*i),
            Expr::PairCount(i, j) => Some(*i.max(j)),
            Expr::Add(a, b) | Expr::Monus(a, b) => a.max_arg().max(b.max_arg()),
            Expr::Mul(_, e) => e.max_arg(),
            Expr::Cases(i, arms, d) => {
                arms.iter().map(|(_, e)| e.max_arg()).fold(Some(*i).max(d.max_arg()), |a, b| a.max(b))
            }
        }
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Monus(..) => 0,
        Expr::Mul(..) => 1,
        _ => 2,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Nat(n) => write!(f, "{n}"),
            Expr::Len(i) => write!(f, "len(arg{})", i + 1),
            Expr::Size(i) => write!(f, "size(arg{})", i + 1),
            Expr::SetCount(i, s) => write!(f, "set_count(arg{}, {})", i + 1, s.name),
            Expr::PairCount(i, j) => write!(f, "pair_count(arg{}, arg{})", i + 1, j + 1),
            Expr::Card(s) => write!(f, "card({})", s.name),
            Expr::Add(a, b) | Expr::Monus(a, b) => {
                let op = if matches!(self, Expr::Add(..)) { "+" } else { "-" };
                write!(f, "{a} {op} ")?;
                if prec(b) == 0 {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::Mul(n, e) => {
                if prec(e) == 0 {
                    write!(f, "{n}*({e})")
                } else {
                    write!(f, "{n}*{e}")
                }
            }
            Expr::Cases(i, arms, d) => {
                write!(f, "cases(arg{}){{ ", i + 1)?;
                for ((g, k), e) in arms {
                    fmt_name(f, g)?;
                    write!(f, "/{k} -> {e}; ")?;
                }
                write!(f, "default -> {d} }}")
            }
        }
    }
}

/// Level expressions per relation; `|¬A| = |A|`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LevelMap {
    pub exprs: BTreeMap<Rel, Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no level given for {0}")]
pub struct MissingLevel(pub Rel);

impl LevelMap {
    pub fn get(&self, r: &Rel) -> Result<&Expr, MissingLevel> {
        self.exprs.get(r).ok_or_else(|| MissingLevel(r.clone()))
    }

    pub fn eval(&self, a: &Atom) -> Result<u64, MissingLevel> {
        Ok(self.get(&a.rel())?.eval(&a.args))
    }
}

/// Level of a ground non-constraint literal.
pub fn eval_level(map: &LevelMap, l: &Literal) -> Result<u64, MissingLevel> {
    match l {
        Literal::Pos(a) | Literal::Neg(a) => map.eval(a),
        _ => panic!("constraints have no level"),
    }
}

/// The level of `l` is the same for every grounding of its variables.
/// Decided conservatively: the expression never inspects an unbound part.
pub fn is_rigid(map: &LevelMap, l: &Literal) -> Result<bool, MissingLevel> {
    match l {
        Literal::Pos(a) | Literal::Neg(a) => Ok(map.get(&a.rel())?.eval_partial(&a.args).is_ok()),
        _ => Ok(true),
    }
}

pub(crate) fn parse_arg(cur: &mut Cursor) -> Result<usize, ParseError> {
    let (line, col) = cur.here();
    let name = cur.expect_name()?;
    match name.strip_prefix("arg").and_then(|n| n.parse::<usize>().ok()) {
        Some(n) if n >= 1 => Ok(n - 1),
        _ => Err(ParseError::new(line, col, format!("expected argN, found '{name}'"))),
    }
}

pub(crate) fn parse_set_ref(cur: &mut Cursor, sets: &Sets) -> Result<NamedSet, ParseError> {
    let (line, col) = cur.here();
    let name = match cur.next() {
        Tok::Name(n) | Tok::Var(n) => n,
        other => return Err(ParseError::new(line, col, format!("expected a set name, found {}", describe(&other)))),
    };
    sets.get(&name).cloned().ok_or_else(|| ParseError::new(line, col, format!("unknown set {name}")))
}

/// Parses a functor as written in a `cases` arm or set template: a name,
/// or `[]`.
pub(crate) fn parse_functor_name(cur: &mut Cursor) -> Result<Arc<str>, ParseError> {
    if cur.eat("[") {
        cur.expect("]")?;
        return Ok(Arc::from(crate::term::NIL));
    }
    Ok(Arc::from(cur.expect_name()?.as_str()))
}

pub fn parse_expr(cur: &mut Cursor, sets: &Sets) -> Result<Expr, ParseError> {
    let mut e = parse_prod(cur, sets)?;
    loop {
        if cur.eat("+") {
            e = Expr::Add(Box::new(e), Box::new(parse_prod(cur, sets)?));
        } else if cur.eat("-") {
            e = Expr::Monus(Box::new(e), Box::new(parse_prod(cur, sets)?));
        } else {
            return Ok(e);
        }
    }
}

fn parse_prod(cur: &mut Cursor, sets: &Sets) -> Result<Expr, ParseError> {
    if let Tok::Num(n) = *cur.peek() {
        if matches!(cur.peek_at(1), Tok::Punct("*")) {
            cur.next();
            cur.next();
            return Ok(Expr::Mul(n, Box::new(parse_prod(cur, sets)?)));
        }
    }
    parse_atom(cur, sets)
}

fn parse_atom(cur: &mut Cursor, sets: &Sets) -> Result<Expr, ParseError> {
    let (line, col) = cur.here();
    match cur.next() {
        Tok::Num(n) => Ok(Expr::Nat(n)),
        Tok::Punct("(") => {
            let e = parse_expr(cur, sets)?;
            cur.expect(")")?;
            Ok(e)
        }
        Tok::Name(n) => {
            cur.expect("(")?;
            let e = match n.as_str() {
                "len" => Expr::Len(parse_arg(cur)?),
                "size" => Expr::Size(parse_arg(cur)?),
                "set_count" => {
                    let i = parse_arg(cur)?;
                    cur.expect(",")?;
                    Expr::SetCount(i, parse_set_ref(cur, sets)?)
                }
                "pair_count" => {
                    let i = parse_arg(cur)?;
                    cur.expect(",")?;
                    Expr::PairCount(i, parse_arg(cur)?)
                }
                "card" => Expr::Card(parse_set_ref(cur, sets)?),
                "cases" => {
                    let i = parse_arg(cur)?;
                    cur.expect(")")?;
                    return parse_cases(cur, sets, i);
                }
                _ => return Err(ParseError::new(line, col, format!("unknown level function {n}"))),
            };
            cur.expect(")")?;
            Ok(e)
        }
        other => Err(ParseError::new(line, col, format!("expected a level expression, found {}", describe(&other)))),
    }
}

fn parse_cases(cur: &mut Cursor, sets: &Sets, i: usize) -> Result<Expr, ParseError> {
    cur.expect("{")?;
    let mut arms = Vec::new();
    let mut default = None;
    loop {
        if cur.is_name("default") {
            cur.next();
            cur.expect("->")?;
            default = Some(parse_expr(cur, sets)?);
        } else {
            let f = parse_functor_name(cur)?;
            cur.expect("/")?;
            let k = cur.expect_num()? as usize;
            cur.expect("->")?;
            arms.push(((f, k), parse_expr(cur, sets)?));
        }
        if !cur.eat(";") {
            break;
        }
        if cur.is("}") {
            break;
        }
    }
    cur.expect("}")?;
    Ok(Expr::Cases(i, arms, Box::new(default.unwrap_or(Expr::Nat(0)))))
}

/// Parses a standalone level expression.
pub fn parse_level_expr(text: &str, sets: &Sets) -> Result<Expr, ParseError> {
    let mut cur = Cursor::new(crate::lexer::tokenize(text)?);
    let e = parse_expr(&mut cur, sets)?;
    if *cur.peek() != Tok::Eof {
        return Err(cur.err(format!("unexpected {} after level expression", describe(cur.peek()))));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_query, parse_term};

    const HOLDS: &str =
        "cases(arg1){ loc/2 -> 3*len(arg2)+1; clear/1 -> 3*len(arg2)+3; above/2 -> 3*len(arg2)+4; default -> 0 }";

    fn map(entries: &[(&str, usize, &str)]) -> LevelMap {
        let sets = Sets::new();
        LevelMap {
            exprs: entries.iter().map(|(r, n, e)| (Rel::new(r, *n), parse_level_expr(e, &sets).unwrap())).collect(),
        }
    }

    fn lit(s: &str) -> Literal {
        parse_query(s).unwrap().remove(0)
    }

    #[test]
    fn holds_level() {
        let m = map(&[("holds", 2, HOLDS)]);
        assert_eq!(eval_level(&m, &lit("holds(loc(a,p), [move(a,q)])")).unwrap(), 4);
        assert_eq!(eval_level(&m, &lit("holds(clear(p), [])")).unwrap(), 3);
        assert_eq!(eval_level(&m, &lit("holds(foo, [x,y])")).unwrap(), 0);
    }

    #[test]
    fn negation_shares_level() {
        let m = map(&[("member", 2, "len(arg2)")]);
        assert_eq!(eval_level(&m, &lit("member(a, [b,a])")).unwrap(), 2);
        assert_eq!(eval_level(&m, &lit("\\+ member(a, [b])")).unwrap(), 1);
        assert_eq!(eval_level(&m, &lit("member(a, b)")).unwrap(), 0);
    }

    #[test]
    fn measures() {
        let s = NamedSet {
            name: Arc::from("S"),
            elems: Arc::new([parse_term("a").unwrap(), parse_term("b").unwrap()].into_iter().collect()),
        };
        let sets = Sets::from([("S".to_string(), s)]);
        let e = parse_level_expr("card(S) - set_count(arg1, S)", &sets).unwrap();
        assert_eq!(e.eval(&[parse_term("[a,c,a]").unwrap()]), 1);
        let pc = parse_level_expr("pair_count(arg1, arg2)", &sets).unwrap();
        let g = parse_term("[[a,b],[b,c],[a,a]]").unwrap();
        assert_eq!(pc.eval(&[parse_term("[a,a,c]").unwrap(), g]), 1);
        let sz = parse_level_expr("size(arg1)", &sets).unwrap();
        assert_eq!(sz.eval(&[parse_term("f(g(a),b)").unwrap()]), 4);
        assert_eq!(parse_level_expr("2 - 5", &sets).unwrap().eval(&[]), 0);
    }

    #[test]
    fn rigidity() {
        let m = map(&[("holds", 2, HOLDS), ("member", 2, "len(arg2)")]);
        assert!(is_rigid(&m, &lit("holds(loc(a,p), [A])")).unwrap());
        assert!(!is_rigid(&m, &lit("member(X, Ys)")).unwrap());
        assert!(is_rigid(&m, &lit("member(a, [b])")).unwrap());
        assert!(!is_rigid(&m, &lit("holds(X, [])")).unwrap());
    }

    #[test]
    fn print_parse_round_trip() {
        let sets = Sets::new();
        for src in [HOLDS, "2*(len(arg1) + 1) - len(arg2)", "5*(3 - len(arg1)) + 7", "cases(arg1){ []/0 -> 1; default -> 2 }"] {
            let e = parse_level_expr(src, &sets).unwrap();
            assert_eq!(parse_level_expr(&e.to_string(), &sets).unwrap(), e, "{src}");
        }
    }

    #[test]
    fn malformed() {
        let sets = Sets::new();
        assert!(parse_level_expr("len(x1)", &sets).is_err());
        assert!(parse_level_expr("card(T)", &sets).is_err());
        assert!(parse_level_expr("3 +", &sets).is_err());
    }
}
