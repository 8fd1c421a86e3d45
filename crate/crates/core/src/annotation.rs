//! Annotation files: the claimed proof method with its level mapping,
//! interpretation, partition and universe slice.
//!
//! ```text
//! method: up_acceptable
//! universe_depth: 3
//! universe_extra: a, b
//! set B = { a, b, c }
//! set L = { loc(X, top(Y)) | X in B, Y in B }
//! part upper: clauses 19-24
//! part lower acyclic: relations holds/2
//! weak_set: member/2
//! level holds/2 = cases(arg1){ loc/2 -> 3*len(arg2)+1; default -> 0 }
//! model member/2 = elem(arg1, arg2)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::decompose::format_ids;
use crate::error::ParseError;
use crate::interp::{parse_cond, Interpretation};
use crate::levelmap::{parse_expr, parse_set_ref, LevelMap, NamedSet, Sets};
use crate::lexer::{describe, tokenize, Cursor, Tok};
use crate::term::{Program, Rel, Subst, Term, Var};
use crate::universe::{DEFAULT_DEPTH, DEFAULT_SLICE_CAP};

pub const DEFAULT_INSTANCE_CAP: u64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Acyclic,
    Acceptable,
    UpAcceptable,
    WeakUpAcceptable,
    LowAcceptable,
    NewUpAcceptable,
    Incremental,
}

impl Method {
    pub const ALL: [(&'static str, Method); 7] = [
        ("acyclic", Method::Acyclic),
        ("acceptable", Method::Acceptable),
        ("up_acceptable", Method::UpAcceptable),
        ("weak_up_acceptable", Method::WeakUpAcceptable),
        ("low_acceptable", Method::LowAcceptable),
        ("new_up_acceptable", Method::NewUpAcceptable),
        ("incremental", Method::Incremental),
    ];

    pub fn name(self) -> &'static str {
        Method::ALL.iter().find(|(_, m)| *m == self).expect("listed").0
    }
}

/// How a part of an incremental proof is discharged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartMode {
    Acyclic,
    Acceptable,
    /// Acceptable with the interpretation of the part below taken as all atoms.
    IA,
    /// Guarded through the specialized models of both neighbours.
    IB,
}

impl PartMode {
    fn name(self) -> &'static str {
        match self {
            PartMode::Acyclic => "acyclic",
            PartMode::Acceptable => "acceptable",
            PartMode::IA => "ia",
            PartMode::IB => "ib",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartSpec {
    Clauses(BTreeSet<usize>),
    Relations(BTreeSet<Rel>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartDecl {
    pub name: String,
    pub mode: Option<PartMode>,
    pub weak: BTreeSet<Rel>,
    pub spec: PartSpec,
}

/// A part with its clause ids resolved against a program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Part {
    pub name: String,
    pub mode: Option<PartMode>,
    pub weak: BTreeSet<Rel>,
    pub clauses: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Annotation {
    pub method: Method,
    pub universe_depth: usize,
    pub universe_extra: Vec<Term>,
    pub universe_cap: usize,
    pub instance_cap: u64,
    pub sets: Vec<NamedSet>,
    pub parts: Vec<PartDecl>,
    pub weak_set: BTreeSet<Rel>,
    pub level: LevelMap,
    pub model: Interpretation,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("annotation mentions {0}, which does not occur in the program")]
    UnknownRelation(Rel),
    #[error("clause {0} named in part {1} does not exist")]
    UnknownClause(usize, String),
    #[error("clause {0} belongs to more than one part")]
    Overlap(usize),
    #[error("clause {0} belongs to no part")]
    Uncovered(usize),
    #[error("{0}")]
    Method(String),
}

fn parse_rel(cur: &mut Cursor) -> Result<Rel, ParseError> {
    let name = crate::levelmap::parse_functor_name(cur)?;
    cur.expect("/")?;
    let n = cur.expect_num()? as usize;
    Ok(Rel { name, arity: n })
}

fn parse_rels(cur: &mut Cursor) -> Result<BTreeSet<Rel>, ParseError> {
    let mut out = BTreeSet::from([parse_rel(cur)?]);
    while cur.eat(",") {
        out.insert(parse_rel(cur)?);
    }
    Ok(out)
}

fn parse_ids(cur: &mut Cursor) -> Result<BTreeSet<usize>, ParseError> {
    let mut out = BTreeSet::new();
    loop {
        let a = cur.expect_num()? as usize;
        let b = if cur.eat("-") { cur.expect_num()? as usize } else { a };
        if b < a {
            return Err(cur.err(format!("empty clause range {a}-{b}")));
        }
        out.extend(a..=b);
        if !cur.eat(",") {
            return Ok(out);
        }
    }
}

fn parse_set(cur: &mut Cursor, sets: &Sets, anon: &mut u32) -> Result<BTreeSet<Term>, ParseError> {
    cur.expect("{")?;
    let mut out = BTreeSet::new();
    if cur.eat("}") {
        return Ok(out);
    }
    let first = crate::parser::term(cur, anon)?;
    if cur.eat("|") {
        let mut binds: Vec<(Var, NamedSet)> = Vec::new();
        loop {
            let (line, col) = cur.here();
            let v = match cur.next() {
                Tok::Var(v) => Var::new(&v),
                other => return Err(ParseError::new(line, col, format!("expected a variable, found {}", describe(&other)))),
            };
            if !cur.is_name("in") {
                return Err(cur.err("expected 'in'"));
            }
            cur.next();
            binds.push((v, parse_set_ref(cur, sets)?));
            if !cur.eat(",") {
                break;
            }
        }
        cur.expect("}")?;
        let mut substs = vec![Subst::new()];
        for (v, s) in &binds {
            substs = substs
                .iter()
                .flat_map(|sub| {
                    s.elems.iter().map(move |e| {
                        let mut n = sub.clone();
                        n.bind(v.clone(), e.clone());
                        n
                    })
                })
                .collect();
        }
        for s in substs {
            out.insert(s.apply(&first));
        }
    } else {
        out.insert(first);
        while cur.eat(",") {
            out.insert(crate::parser::term(cur, anon)?);
        }
        cur.expect("}")?;
    }
    if let Some(t) = out.iter().find(|t| !t.is_ground()) {
        return Err(cur.err(format!("set element {t} is not ground")));
    }
    Ok(out)
}

pub fn parse_annotation(text: &str) -> Result<Annotation, ParseError> {
    let mut cur = Cursor::new(tokenize(text)?);
    let mut ann = Annotation {
        method: Method::Acyclic,
        universe_depth: DEFAULT_DEPTH,
        universe_extra: Vec::new(),
        universe_cap: DEFAULT_SLICE_CAP,
        instance_cap: DEFAULT_INSTANCE_CAP,
        sets: Vec::new(),
        parts: Vec::new(),
        weak_set: BTreeSet::new(),
        level: LevelMap::default(),
        model: Interpretation::default(),
    };
    let mut sets = Sets::new();
    let mut method_seen = false;
    let mut anon = 0u32;
    while *cur.peek() != Tok::Eof {
        let (line, col) = cur.here();
        let key = cur.expect_name()?;
        match key.as_str() {
            "method" => {
                cur.expect(":")?;
                let (l, c) = cur.here();
                let m = cur.expect_name()?;
                ann.method = Method::ALL
                    .iter()
                    .find(|(n, _)| *n == m)
                    .ok_or_else(|| ParseError::new(l, c, format!("unknown method {m}")))?
                    .1;
                method_seen = true;
            }
            "universe_depth" => {
                cur.expect(":")?;
                ann.universe_depth = cur.expect_num()? as usize;
            }
            "universe_cap" => {
                cur.expect(":")?;
                ann.universe_cap = cur.expect_num()? as usize;
            }
            "instance_cap" => {
                cur.expect(":")?;
                ann.instance_cap = cur.expect_num()?;
            }
            "universe_extra" => {
                cur.expect(":")?;
                ann.universe_extra.push(crate::parser::term(&mut cur, &mut anon)?);
                while cur.eat(",") {
                    ann.universe_extra.push(crate::parser::term(&mut cur, &mut anon)?);
                }
            }
            "set" => {
                let name = match cur.next() {
                    Tok::Name(n) | Tok::Var(n) => n,
                    other => return Err(cur.err(format!("expected a set name, found {}", describe(&other)))),
                };
                cur.expect("=")?;
                let elems = parse_set(&mut cur, &sets, &mut anon)?;
                let s = NamedSet { name: Arc::from(name.as_str()), elems: Arc::new(elems) };
                sets.insert(name, s.clone());
                ann.sets.push(s);
            }
            "part" => {
                let name = cur.expect_name()?;
                let mut mode = None;
                let mut weak = BTreeSet::new();
                loop {
                    if cur.is_name("weak") {
                        cur.next();
                        cur.expect("(")?;
                        weak = parse_rels(&mut cur)?;
                        cur.expect(")")?;
                    } else if let Tok::Name(m) = cur.peek().clone() {
                        mode = Some(match m.as_str() {
                            "acyclic" => PartMode::Acyclic,
                            "acceptable" => PartMode::Acceptable,
                            "ia" => PartMode::IA,
                            "ib" => PartMode::IB,
                            _ => return Err(cur.err(format!("unknown part mode {m}"))),
                        });
                        cur.next();
                    } else {
                        break;
                    }
                }
                cur.expect(":")?;
                let spec = if cur.is_name("clauses") {
                    cur.next();
                    PartSpec::Clauses(parse_ids(&mut cur)?)
                } else if cur.is_name("relations") {
                    cur.next();
                    PartSpec::Relations(parse_rels(&mut cur)?)
                } else {
                    return Err(cur.err("expected 'clauses' or 'relations'"));
                };
                ann.parts.push(PartDecl { name, mode, weak, spec });
            }
            "weak_set" => {
                cur.expect(":")?;
                ann.weak_set = parse_rels(&mut cur)?;
            }
            "level" => {
                let r = parse_rel(&mut cur)?;
                cur.expect("=")?;
                let e = parse_expr(&mut cur, &sets)?;
                if e.max_arg().is_some_and(|i| i >= r.arity) {
                    return Err(ParseError::new(line, col, format!("level of {r} mentions an argument beyond its arity")));
                }
                ann.level.exprs.insert(r, e);
            }
            "model" => {
                let r = parse_rel(&mut cur)?;
                cur.expect("=")?;
                let c = parse_cond(&mut cur, &sets)?;
                ann.model.conds.insert(r, c);
            }
            _ => return Err(ParseError::new(line, col, format!("unknown annotation record '{key}'"))),
        }
    }
    if !method_seen {
        return Err(ParseError::new(1, 1, "annotation has no method"));
    }
    Ok(ann)
}

impl Annotation {
    /// Checks every named relation and clause against `p` and resolves the
    /// parts to disjoint clause sets covering the program.
    pub fn resolve(&self, p: &Program) -> Result<Vec<Part>, AnnotationError> {
        let rels = p.relations();
        let named = self
            .level
            .exprs
            .keys()
            .chain(self.model.conds.keys())
            .chain(self.weak_set.iter())
            .chain(self.parts.iter().flat_map(|d| d.weak.iter()));
        for r in named {
            if !rels.contains(r) {
                return Err(AnnotationError::UnknownRelation(r.clone()));
            }
        }
        let ids = p.ids();
        let mut parts = Vec::new();
        let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
        for (k, d) in self.parts.iter().enumerate() {
            let clauses: BTreeSet<usize> = match &d.spec {
                PartSpec::Clauses(cs) => {
                    if let Some(c) = cs.iter().find(|c| !ids.contains(c)) {
                        return Err(AnnotationError::UnknownClause(*c, d.name.clone()));
                    }
                    cs.clone()
                }
                PartSpec::Relations(rs) => {
                    if let Some(r) = rs.iter().find(|r| !rels.contains(r)) {
                        return Err(AnnotationError::UnknownRelation(r.clone()));
                    }
                    p.clauses.iter().filter(|c| rs.contains(&c.head.rel())).map(|c| c.id).collect()
                }
            };
            for c in &clauses {
                if owner.insert(*c, k).is_some() {
                    return Err(AnnotationError::Overlap(*c));
                }
            }
            parts.push(Part { name: d.name.clone(), mode: d.mode, weak: d.weak.clone(), clauses });
        }
        if !parts.is_empty() {
            if let Some(c) = ids.iter().find(|c| !owner.contains_key(c)) {
                return Err(AnnotationError::Uncovered(*c));
            }
        }
        Ok(parts)
    }

    pub fn sets(&self) -> Sets {
        self.sets.iter().map(|s| (s.name.to_string(), s.clone())).collect()
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method: {}", self.method.name())?;
        writeln!(f, "universe_depth: {}", self.universe_depth)?;
        if self.universe_cap != DEFAULT_SLICE_CAP {
            writeln!(f, "universe_cap: {}", self.universe_cap)?;
        }
        if self.instance_cap != DEFAULT_INSTANCE_CAP {
            writeln!(f, "instance_cap: {}", self.instance_cap)?;
        }
        if !self.universe_extra.is_empty() {
            let xs: Vec<String> = self.universe_extra.iter().map(Term::to_string).collect();
            writeln!(f, "universe_extra: {}", xs.join(", "))?;
        }
        for s in &self.sets {
            let xs: Vec<String> = s.elems.iter().map(Term::to_string).collect();
            writeln!(f, "set {} = {{ {} }}", s.name, xs.join(", "))?;
        }
        let rels = |rs: &BTreeSet<Rel>| rs.iter().map(Rel::to_string).collect::<Vec<_>>().join(", ");
        for d in &self.parts {
            write!(f, "part {}", d.name)?;
            if let Some(m) = d.mode {
                write!(f, " {}", m.name())?;
            }
            if !d.weak.is_empty() {
                write!(f, " weak({})", rels(&d.weak))?;
            }
            match &d.spec {
                PartSpec::Clauses(cs) => writeln!(f, ": clauses {}", format_ids(cs))?,
                PartSpec::Relations(rs) => writeln!(f, ": relations {}", rels(rs))?,
            }
        }
        if !self.weak_set.is_empty() {
            writeln!(f, "weak_set: {}", rels(&self.weak_set))?;
        }
        for (r, e) in &self.level.exprs {
            writeln!(f, "level {r} = {e}")?;
        }
        for (r, c) in &self.model.conds {
            writeln!(f, "model {r} = {c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    const ANN: &str = "\
% sample
method: weak_up_acceptable
universe_depth: 2
universe_extra: a, b
set B = { a, b }
set L = { loc(X, top(Y)) | X in B, Y in B }
part upper: clauses 1
part lower acyclic: relations q/1
weak_set: r/1
level p/1 = len(arg1) + card(L)
level q/1 = cases(arg1){ []/0 -> 1; default -> 2 }
model q/1 = in_set(arg1, B) or list(arg1)
";

    #[test]
    fn parses_all_records() {
        let a = parse_annotation(ANN).unwrap();
        assert_eq!(a.method, Method::WeakUpAcceptable);
        assert_eq!(a.universe_depth, 2);
        assert_eq!(a.universe_extra.len(), 2);
        assert_eq!(a.sets[1].elems.len(), 4);
        assert_eq!(a.parts.len(), 2);
        assert_eq!(a.parts[1].mode, Some(PartMode::Acyclic));
        assert_eq!(a.weak_set, BTreeSet::from([Rel::new("r", 1)]));
        assert_eq!(a.level.exprs[&Rel::new("p", 1)].eval(&[Term::nil()]), 4);
    }

    #[test]
    fn print_parse_round_trip() {
        let a = parse_annotation(ANN).unwrap();
        assert_eq!(parse_annotation(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn resolution() {
        let p = parse_program("p(X) :- q(X), r(X). q(a). r(f(X)) :- r(X).").unwrap();
        let a = parse_annotation(ANN).unwrap();
        assert_eq!(a.resolve(&p), Err(AnnotationError::Uncovered(3)));
        let mut b = a.clone();
        b.parts[0].spec = PartSpec::Clauses(BTreeSet::from([1, 3]));
        let parts = b.resolve(&p).unwrap();
        assert_eq!(parts[1].clauses, BTreeSet::from([2]));
        b.parts[0].spec = PartSpec::Clauses(BTreeSet::from([1, 2, 3]));
        assert_eq!(b.resolve(&p), Err(AnnotationError::Overlap(2)));
        let c = parse_annotation("method: acyclic\nlevel z/0 = 1").unwrap();
        assert_eq!(c.resolve(&p), Err(AnnotationError::UnknownRelation(Rel::new("z", 0))));
    }

    #[test]
    fn errors() {
        assert!(parse_annotation("level p/1 = 1").is_err());
        assert!(parse_annotation("method: sideways").is_err());
        assert!(parse_annotation("method: acyclic\nlevel p/1 = len(arg2)").is_err());
        assert!(parse_annotation("method: acyclic\nlevel p/1 = (").is_err());
    }
}
