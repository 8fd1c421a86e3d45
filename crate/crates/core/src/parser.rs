//! Programs and queries in Prolog-like surface syntax.
//!
//! ```text
//! clause  ::= atom [":-" literal {"," literal}] "."
//! literal ::= atom | "\+" atom | term "=" term | term "\=" term
//!           | "forall" "(" "[" Var {"," Var} "]" "," term "\=" term ")"
//! ```

use std::collections::{BTreeMap, BTreeSet};

use crate::error::ParseError;
use crate::lexer::{describe, tokenize, Cursor, Tok};
use crate::term::{Atom, Clause, Literal, Program, Term, Var};

/// A parsed program together with where each clause starts.
#[derive(Clone, Debug)]
pub struct SourceProgram {
    pub path: String,
    pub text: String,
    pub parsed: Program,
    /// (line, column) of each clause head, by position.
    pub spans: Vec<(usize, usize)>,
}

pub fn parse_source(path: &str, text: &str) -> Result<SourceProgram, ParseError> {
    let mut cur = Cursor::new(tokenize(text)?);
    let mut clauses = Vec::new();
    let mut spans = Vec::new();
    let mut anon = 0u32;
    while *cur.peek() != Tok::Eof {
        spans.push(cur.here());
        let id = clauses.len() + 1;
        clauses.push(clause(&mut cur, id, &mut anon)?);
    }
    check_arities(&clauses, &spans)?;
    Ok(SourceProgram { path: path.to_string(), text: text.to_string(), parsed: Program::new(clauses), spans })
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    parse_source("<input>", text).map(|s| s.parsed)
}

/// Parses `?- L1, ..., Ln.`; the `?-` and the final `.` are optional.
pub fn parse_query(text: &str) -> Result<Vec<Literal>, ParseError> {
    let mut cur = Cursor::new(tokenize(text)?);
    let mut anon = 0u32;
    cur.eat("?-");
    let mut lits = Vec::new();
    if !matches!(cur.peek(), Tok::End | Tok::Eof) {
        lits.push(literal(&mut cur, &mut anon)?);
        while cur.eat(",") {
            lits.push(literal(&mut cur, &mut anon)?);
        }
    }
    if *cur.peek() == Tok::End {
        cur.next();
    }
    if *cur.peek() != Tok::Eof {
        return Err(cur.err(format!("unexpected {} after query", describe(cur.peek()))));
    }
    Ok(lits)
}

/// Parses a single term, e.g. a ground set element in an annotation.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut cur = Cursor::new(tokenize(text)?);
    let mut anon = 0u32;
    let t = term(&mut cur, &mut anon)?;
    if *cur.peek() != Tok::Eof {
        return Err(cur.err("trailing input after term"));
    }
    Ok(t)
}

fn check_arities(clauses: &[Clause], spans: &[(usize, usize)]) -> Result<(), ParseError> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (c, &(line, col)) in clauses.iter().zip(spans) {
        for r in c.relations() {
            match seen.get(&*r.name) {
                Some(&a) if a != r.arity => {
                    return Err(ParseError::new(
                        line,
                        col,
                        format!("relation {} used with arities {} and {}", r.name, a, r.arity),
                    ))
                }
                _ => {
                    seen.insert(r.name.to_string(), r.arity);
                }
            }
        }
    }
    Ok(())
}

fn clause(cur: &mut Cursor, id: usize, anon: &mut u32) -> Result<Clause, ParseError> {
    let head = atom(cur, anon)?;
    let mut body = Vec::new();
    if cur.eat(":-") {
        body.push(literal(cur, anon)?);
        while cur.eat(",") {
            body.push(literal(cur, anon)?);
        }
    }
    match cur.next() {
        Tok::End => Ok(Clause { id, head, body }),
        other => Err(cur.err(format!("expected end of clause, found {}", describe(&other)))),
    }
}

pub(crate) fn literal(cur: &mut Cursor, anon: &mut u32) -> Result<Literal, ParseError> {
    if cur.eat("\\+") {
        return Ok(Literal::Neg(atom(cur, anon)?));
    }
    if cur.is_name("forall") && matches!(cur.peek_at(1), Tok::Punct("(")) && matches!(cur.peek_at(2), Tok::Punct("[")) {
        cur.next();
        cur.expect("(")?;
        cur.expect("[")?;
        let mut univ = BTreeSet::new();
        if !cur.is("]") {
            loop {
                match cur.next() {
                    Tok::Var(v) if v != "_" => {
                        univ.insert(Var::new(&v));
                    }
                    other => return Err(cur.err(format!("expected a variable, found {}", describe(&other)))),
                }
                if !cur.eat(",") {
                    break;
                }
            }
        }
        cur.expect("]")?;
        cur.expect(",")?;
        let l = term(cur, anon)?;
        cur.expect("\\=")?;
        let r = term(cur, anon)?;
        cur.expect(")")?;
        return Ok(Literal::Ineq(univ, l, r));
    }
    let (line, col) = cur.here();
    let lhs = term(cur, anon)?;
    if cur.eat("=") {
        return Ok(Literal::Eq(lhs, term(cur, anon)?));
    }
    if cur.eat("\\=") {
        return Ok(Literal::Ineq(BTreeSet::new(), lhs, term(cur, anon)?));
    }
    match lhs {
        Term::App(name, args) => Ok(Literal::Pos(Atom { pred: name, args })),
        Term::Var(_) => Err(ParseError::new(line, col, "a variable cannot be used as a literal")),
    }
}

fn atom(cur: &mut Cursor, anon: &mut u32) -> Result<Atom, ParseError> {
    let name = cur.expect_name()?;
    let args = if cur.eat("(") { args(cur, anon, ")")? } else { Vec::new() };
    Ok(Atom::new(&name, args))
}

fn args(cur: &mut Cursor, anon: &mut u32, close: &str) -> Result<Vec<Term>, ParseError> {
    let mut out = vec![term(cur, anon)?];
    while cur.eat(",") {
        out.push(term(cur, anon)?);
    }
    cur.expect(close)?;
    Ok(out)
}

pub(crate) fn term(cur: &mut Cursor, anon: &mut u32) -> Result<Term, ParseError> {
    let (line, col) = cur.here();
    match cur.next() {
        Tok::Var(v) if v == "_" => {
            *anon += 1;
            Ok(Term::var(&format!("_G{anon}")))
        }
        Tok::Var(v) => Ok(Term::var(&v)),
        Tok::Num(n) => Ok(Term::constant(&n.to_string())),
        Tok::Name(n) => {
            if cur.eat("(") {
                Ok(Term::app(&n, args(cur, anon, ")")?))
            } else {
                Ok(Term::constant(&n))
            }
        }
        Tok::Punct("[") => {
            if cur.eat("]") {
                return Ok(Term::nil());
            }
            let mut items = vec![term(cur, anon)?];
            while cur.eat(",") {
                items.push(term(cur, anon)?);
            }
            let tail = if cur.eat("|") { term(cur, anon)? } else { Term::nil() };
            cur.expect("]")?;
            Ok(items.into_iter().rev().fold(tail, |t, h| Term::cons(h, t)))
        }
        Tok::Punct("(") => {
            let mut items = vec![term(cur, anon)?];
            while cur.eat(",") {
                items.push(term(cur, anon)?);
            }
            cur.expect(")")?;
            let last = items.pop().expect("nonempty");
            Ok(items.into_iter().rev().fold(last, |t, h| Term::app(crate::term::PAIR, vec![h, t])))
        }
        other => Err(ParseError::new(line, col, format!("expected a term, found {}", describe(&other)))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_unit_clauses() {
        let p = parse_program("p(a). p(b).").unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.clauses.iter().all(|c| c.body.is_empty()));
        assert_eq!(p.clauses[1].id, 2);
    }

    #[test]
    fn propositional_clause() {
        let p = parse_program("p :- q, p.").unwrap();
        let c = &p.clauses[0];
        assert_eq!(c.head, Atom::new("p", vec![]));
        assert_eq!(c.body, vec![Literal::Pos(Atom::new("q", vec![])), Literal::Pos(Atom::new("p", vec![]))]);
    }

    #[test]
    fn negation_and_quantified_inequality() {
        let p = parse_program("h :- \\+ m(X,P), forall([L], A \\= move(a,L)).").unwrap();
        let body = &p.clauses[0].body;
        assert!(matches!(&body[0], Literal::Neg(a) if &*a.pred == "m"));
        match &body[1] {
            Literal::Ineq(univ, _, r) => {
                assert_eq!(univ.iter().map(|v| v.name.to_string()).collect::<Vec<_>>(), vec!["L"]);
                assert_eq!(r.to_string(), "move(a,L)");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn queries() {
        let q = parse_query("?- holds(loc(a,p), [A]).").unwrap();
        assert_eq!(q.len(), 1);
        assert!(matches!(&q[0], Literal::Pos(_)));
        let q = parse_query("?- \\+ p(X).").unwrap();
        assert!(matches!(&q[0], Literal::Neg(_)));
        assert!(parse_query("?- .").unwrap().is_empty());
    }

    #[test]
    fn arity_clash_is_reported() {
        let e = parse_program("p(a).\np(a,b).").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse_program("p(a) :- q(.").unwrap_err();
        assert_eq!((e.line, e.col), (1, 11));
    }

    #[test]
    fn print_parse_round_trip() {
        let src = "legals([(a,L1),(b,L2),(c,L3)],Xs) :- holds(loc(a,L1),Xs), X \\= top(Y), Z = [a|T].\n\
                   q('Weird atom', [], '0', 0) :- \\+ r([a,b|c]), forall([L,M], f(L) \\= g(M)).";
        let p = parse_program(src).unwrap();
        let again = parse_program(&p.to_string()).unwrap();
        assert_eq!(p, again);
    }
}
