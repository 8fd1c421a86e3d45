//! Interpretations given by per-relation membership conditions.
//!
//! ```text
//! cond ::= conj { "or" conj }
//! conj ::= unit { "and" unit }
//! unit ::= "not" unit | "(" cond ")" | expr cmp expr
//!        | all | none | true | false
//!        | elem(argI, argJ) | in_set(argI, SET) | list(argI) | eq(argI, argJ)
//! cmp  ::= ">=" | "<=" | ">" | "<" | "=" | "!="
//! ```

use std::collections::BTreeMap;
use std::fmt;

use crate::error::ParseError;
use crate::levelmap::{parse_arg, parse_expr, parse_set_ref, Expr, NamedSet, Sets};
use crate::lexer::{describe, tokenize, Cursor, Tok};
use crate::term::{unify, Atom, Literal, Rel, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Ge,
    Le,
    Gt,
    Lt,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn holds(self, a: i128, b: i128) -> bool {
        match self {
            CmpOp::Ge => a >= b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Lt => a < b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    True,
    False,
    /// argI is an element of the list spine of argJ.
    Elem(usize, usize),
    InSet(usize, NamedSet),
    /// argI is a `[]`-terminated list.
    IsList(usize),
    ArgEq(usize, usize),
    Cmp(CmpOp, Expr, Expr),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

fn first_var(t: &Term) -> Option<Var> {
    t.vars().into_iter().next()
}

impl Cond {
    pub fn eval(&self, args: &[Term]) -> bool {
        self.eval_partial(args).unwrap_or_else(|v| panic!("condition blocked on {v}"))
    }

    /// Truth value on possibly non-ground arguments, or a variable whose
    /// binding could change it.
    pub fn eval_partial(&self, args: &[Term]) -> Result<bool, Var> {
        match self {
            Cond::True => Ok(true),
            Cond::False => Ok(false),
            Cond::Elem(i, j) => {
                let x = &args[*i];
                let (items, tail) = args[*j].spine();
                let mut blocked = None;
                for e in items {
                    if e == x {
                        return Ok(true);
                    }
                    if blocked.is_none() && unify(e, x).is_some() {
                        blocked = first_var(e).or_else(|| first_var(x));
                    }
                }
                if let Term::Var(v) = tail {
                    blocked.get_or_insert(v.clone());
                }
                blocked.map_or(Ok(false), Err)
            }
            Cond::InSet(i, s) => {
                let x = &args[*i];
                if x.is_ground() {
                    return Ok(s.elems.contains(x));
                }
                if s.elems.iter().any(|e| unify(e, x).is_some()) {
                    Err(first_var(x).expect("non-ground"))
                } else {
                    Ok(false)
                }
            }
            Cond::IsList(i) => match args[*i].spine().1 {
                Term::Var(v) => Err(v.clone()),
                t => Ok(t.is_nil()),
            },
            Cond::ArgEq(i, j) => {
                let (a, b) = (&args[*i], &args[*j]);
                if a == b {
                    Ok(true)
                } else if unify(a, b).is_none() {
                    Ok(false)
                } else {
                    Err(first_var(a).or_else(|| first_var(b)).expect("distinct unifiable terms have a variable"))
                }
            }
            Cond::Cmp(op, l, r) => match (l.eval_partial(args), r.eval_partial(args)) {
                (Ok(a), Ok(b)) => Ok(op.holds(a as i128, b as i128)),
                (Err(v), _) | (_, Err(v)) => match l.difference(r, args) {
                    Some(d) => Ok(op.holds(d, 0)),
                    None => Err(v),
                },
            },
            Cond::And(a, b) => match (a.eval_partial(args), b.eval_partial(args)) {
                (Ok(false), _) | (_, Ok(false)) => Ok(false),
                (Ok(true), Ok(true)) => Ok(true),
                (Err(v), _) | (_, Err(v)) => Err(v),
            },
            Cond::Or(a, b) => match (a.eval_partial(args), b.eval_partial(args)) {
                (Ok(true), _) | (_, Ok(true)) => Ok(true),
                (Ok(false), Ok(false)) => Ok(false),
                (Err(v), _) | (_, Err(v)) => Err(v),
            },
            Cond::Not(c) => c.eval_partial(args).map(|b| !b),
        }
    }

    pub fn negated(&self) -> Cond {
        match self {
            Cond::True => Cond::False,
            Cond::False => Cond::True,
            Cond::Not(c) => (**c).clone(),
            c => Cond::Not(Box::new(c.clone())),
        }
    }
}

fn unit_prec(c: &Cond) -> u8 {
    match c {
        Cond::Or(..) => 0,
        Cond::And(..) => 1,
        _ => 2,
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, c: &Cond, min: u8| {
            if unit_prec(c) < min {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        };
        match self {
            Cond::True => write!(f, "true"),
            Cond::False => write!(f, "false"),
            Cond::Elem(i, j) => write!(f, "elem(arg{}, arg{})", i + 1, j + 1),
            Cond::InSet(i, s) => write!(f, "in_set(arg{}, {})", i + 1, s.name),
            Cond::IsList(i) => write!(f, "list(arg{})", i + 1),
            Cond::ArgEq(i, j) => write!(f, "eq(arg{}, arg{})", i + 1, j + 1),
            Cond::Cmp(op, l, r) => write!(f, "{l} {} {r}", op.symbol()),
            Cond::And(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " and ")?;
                wrap(f, b, 2)
            }
            Cond::Or(a, b) => {
                wrap(f, a, 0)?;
                write!(f, " or ")?;
                wrap(f, b, 1)
            }
            Cond::Not(c) => {
                write!(f, "not ")?;
                wrap(f, c, 2)
            }
        }
    }
}

/// An interpretation: an atom is true iff its relation's condition holds.
/// Relations without a condition make the interpretation undefined there.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Interpretation {
    pub conds: BTreeMap<Rel, Cond>,
}

impl Interpretation {
    pub fn cond(&self, r: &Rel) -> Option<&Cond> {
        self.conds.get(r)
    }

    /// Truth of a ground atom; `None` when the relation has no condition.
    pub fn holds(&self, a: &Atom) -> Option<bool> {
        Some(self.cond(&a.rel())?.eval(&a.args))
    }

    /// Truth of a ground literal. Constraints are decided syntactically.
    pub fn satisfies(&self, l: &Literal) -> Option<bool> {
        match l {
            Literal::Pos(a) => self.holds(a),
            Literal::Neg(a) => self.holds(a).map(|b| !b),
            Literal::Eq(s, t) => Some(s == t),
            Literal::Ineq(_, s, t) => Some(unify(s, t).is_none()),
        }
    }

    /// Same relations, with `r`'s condition replaced.
    pub fn with(&self, r: Rel, c: Cond) -> Interpretation {
        let mut out = self.clone();
        out.conds.insert(r, c);
        out
    }
}

pub fn parse_cond(cur: &mut Cursor, sets: &Sets) -> Result<Cond, ParseError> {
    let mut c = parse_conj(cur, sets)?;
    while cur.is_name("or") {
        cur.next();
        c = Cond::Or(Box::new(c), Box::new(parse_conj(cur, sets)?));
    }
    Ok(c)
}

fn parse_conj(cur: &mut Cursor, sets: &Sets) -> Result<Cond, ParseError> {
    let mut c = parse_unit(cur, sets)?;
    while cur.is_name("and") {
        cur.next();
        c = Cond::And(Box::new(c), Box::new(parse_unit(cur, sets)?));
    }
    Ok(c)
}

fn cmp_op(cur: &mut Cursor) -> Option<CmpOp> {
    let op = match cur.peek() {
        Tok::Punct(">=") => CmpOp::Ge,
        Tok::Punct("<=") => CmpOp::Le,
        Tok::Punct(">") => CmpOp::Gt,
        Tok::Punct("<") => CmpOp::Lt,
        Tok::Punct("=") => CmpOp::Eq,
        Tok::Punct("!=") => CmpOp::Ne,
        _ => return None,
    };
    cur.next();
    Some(op)
}

fn parse_unit(cur: &mut Cursor, sets: &Sets) -> Result<Cond, ParseError> {
    if cur.is_name("not") {
        cur.next();
        return Ok(Cond::Not(Box::new(parse_unit(cur, sets)?)));
    }
    // A comparison may start with "(", so try it first.
    let start = cur.pos();
    if let Ok(l) = parse_expr(cur, sets) {
        if let Some(op) = cmp_op(cur) {
            let r = parse_expr(cur, sets)?;
            return Ok(Cond::Cmp(op, l, r));
        }
    }
    cur.reset(start);
    let (line, col) = cur.here();
    match cur.next() {
        Tok::Punct("(") => {
            let c = parse_cond(cur, sets)?;
            cur.expect(")")?;
            Ok(c)
        }
        Tok::Name(n) => {
            let c = match n.as_str() {
                "all" | "true" => return Ok(Cond::True),
                "none" | "false" => return Ok(Cond::False),
                "elem" | "eq" => {
                    cur.expect("(")?;
                    let i = parse_arg(cur)?;
                    cur.expect(",")?;
                    let j = parse_arg(cur)?;
                    if n == "elem" {
                        Cond::Elem(i, j)
                    } else {
                        Cond::ArgEq(i, j)
                    }
                }
                "in_set" => {
                    cur.expect("(")?;
                    let i = parse_arg(cur)?;
                    cur.expect(",")?;
                    Cond::InSet(i, parse_set_ref(cur, sets)?)
                }
                "list" => {
                    cur.expect("(")?;
                    Cond::IsList(parse_arg(cur)?)
                }
                _ => return Err(ParseError::new(line, col, format!("unknown condition {n}"))),
            };
            cur.expect(")")?;
            Ok(c)
        }
        other => Err(ParseError::new(line, col, format!("expected a condition, found {}", describe(&other)))),
    }
}

pub fn parse_cond_text(text: &str, sets: &Sets) -> Result<Cond, ParseError> {
    let mut cur = Cursor::new(tokenize(text)?);
    let c = parse_cond(&mut cur, sets)?;
    if *cur.peek() != Tok::Eof {
        return Err(cur.err(format!("unexpected {} after condition", describe(cur.peek()))));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_term;

    fn c(s: &str) -> Cond {
        parse_cond_text(s, &Sets::new()).unwrap()
    }

    fn args(ts: &[&str]) -> Vec<Term> {
        ts.iter().map(|t| parse_term(t).unwrap()).collect()
    }

    #[test]
    fn member_model() {
        let m = c("elem(arg1, arg2)");
        assert!(m.eval(&args(&["a", "[b,a]"])));
        assert!(!m.eval(&args(&["a", "[]"])));
        assert!(m.eval(&args(&["a", "[a|b]"])));
        assert_eq!(m.eval_partial(&args(&["a", "[b|T]"])), Err(Var::new("T")));
        assert_eq!(m.eval_partial(&args(&["a", "[a|T]"])), Ok(true));
    }

    #[test]
    fn comparisons_and_connectives() {
        let p = c("len(arg3) + 1 >= len(arg4) and not eq(arg1, arg2)");
        assert!(p.eval(&args(&["a", "b", "[x]", "[y,z]"])));
        assert!(!p.eval(&args(&["a", "a", "[x]", "[y,z]"])));
        assert!(!p.eval(&args(&["a", "b", "[]", "[y,z]"])));
        assert!(c("(len(arg1) + 1) > 1 or false").eval(&args(&["[a]"])));
        assert!(c("(list(arg1) or none)").eval(&args(&["[a]"])));
        assert!(!c("list(arg1)").eval(&args(&["[a|b]"])));
    }

    #[test]
    fn round_trip() {
        for s in ["elem(arg1, arg2) and (list(arg2) or not eq(arg1, arg2))", "not (true and false)", "len(arg1) != 2"] {
            let x = c(s);
            assert_eq!(c(&x.to_string()), x, "{s}");
        }
    }

    #[test]
    fn ground_constraints() {
        let i = Interpretation::default();
        let l = crate::parser::parse_query("forall([Y], f(a) \\= f(g(Y))).").unwrap();
        assert_eq!(i.satisfies(&l[0]), Some(true));
    }
}
