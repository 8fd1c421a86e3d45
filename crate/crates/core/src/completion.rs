//! Clark completion: negation-reachable relations, `P⁻`, and completed
//! definitions.

use std::collections::BTreeSet;

use crate::term::{Literal, Program, Rel, Term, Var};

pub use crate::decompose::restrict;

/// Least set of relations containing every negated relation and closed
/// under "head in the set implies body relations in the set".
pub fn neg_set(p: &Program) -> BTreeSet<Rel> {
    let mut s: BTreeSet<Rel> = p
        .clauses
        .iter()
        .flat_map(|c| c.body.iter())
        .filter_map(|l| match l {
            Literal::Neg(a) => Some(a.rel()),
            _ => None,
        })
        .collect();
    loop {
        let before = s.len();
        for c in &p.clauses {
            if s.contains(&c.head.rel()) {
                s.extend(c.body.iter().filter_map(Literal::rel));
            }
        }
        if s.len() == before {
            return s;
        }
    }
}

/// Clauses defining a relation of `neg_set(p)`.
pub fn minus_program(p: &Program) -> Program {
    restrict(p, &neg_set(p))
}

/// One disjunct of a completed definition: `exists locals (head args =
/// args and body)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disjunct {
    pub clause: usize,
    pub args: Vec<Term>,
    pub body: Vec<Literal>,
    pub locals: BTreeSet<Var>,
}

/// `r(X1..Xk) <-> disjunct_1 or ...`; no disjuncts means `<-> false`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletedDefinition {
    pub rel: Rel,
    pub disjuncts: Vec<Disjunct>,
}

pub fn completed_definition(p: &Program, rel: &Rel) -> CompletedDefinition {
    let disjuncts = p
        .clauses
        .iter()
        .filter(|c| &c.head.rel() == rel)
        .map(|c| {
            let mut head_vars = BTreeSet::new();
            c.head.collect_vars(&mut head_vars);
            let locals = c.vars().difference(&head_vars).cloned().collect();
            Disjunct { clause: c.id, args: c.head.args.clone(), body: c.body.clone(), locals }
        })
        .collect();
    CompletedDefinition { rel: rel.clone(), disjuncts }
}
