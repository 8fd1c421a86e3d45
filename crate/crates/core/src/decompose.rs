//! Program extension, difference, and partition suggestions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use petgraph::algo::condensation;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::Dfs;

use crate::term::{Clause, Literal, Program, Rel, Subst, Term, Var};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DecomposeError {
    #[error("clause {0} of the subtracted program is not in the program")]
    NotSubset(usize),
}

/// No relation defined in `p` occurs in `r`.
pub fn extends(p: &Program, r: &Program) -> bool {
    p.defined_relations().is_disjoint(&r.relations())
}

/// `p` minus the clauses of `r` (by id) and minus every body literal whose
/// relation `r` defines.
pub fn diff(p: &Program, r: &Program) -> Result<Program, DecomposeError> {
    let ids = p.ids();
    if let Some(c) = r.clauses.iter().find(|c| !ids.contains(&c.id)) {
        return Err(DecomposeError::NotSubset(c.id));
    }
    Ok(diff_lenient(p, r))
}

/// As [`diff`] without requiring `r`'s clauses to be among `p`'s.
pub fn diff_lenient(p: &Program, r: &Program) -> Program {
    let gone = r.ids();
    let defined = r.defined_relations();
    let clauses = p
        .clauses
        .iter()
        .filter(|c| !gone.contains(&c.id))
        .map(|c| Clause {
            id: c.id,
            head: c.head.clone(),
            body: c.body.iter().filter(|l| l.rel().is_none_or(|r| !defined.contains(&r))).cloned().collect(),
        })
        .collect();
    Program::new(clauses)
}

/// Clauses of `p` whose head relation is in `s`.
pub fn restrict(p: &Program, s: &BTreeSet<Rel>) -> Program {
    Program::new(p.clauses.iter().filter(|c| s.contains(&c.head.rel())).cloned().collect())
}

/// `p` weakly extends `r` through the shared layer `p|s`. Relations of `s`
/// must not be defined in `r`.
pub fn weakly_extends(p: &Program, r: &Program, s: &BTreeSet<Rel>) -> bool {
    if !r.defined_relations().is_disjoint(s) {
        return false;
    }
    let shared = restrict(p, s);
    let shared_ids = shared.ids();
    let p1 = Program::new(p.clauses.iter().filter(|c| !shared_ids.contains(&c.id)).cloned().collect());
    extends(&p1, &shared) && extends(r, &shared) && extends(&diff_lenient(p, &shared), &diff_lenient(r, &shared))
}

/// A two-way split: `upper` extends `lower`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub upper: BTreeSet<usize>,
    pub lower: BTreeSet<usize>,
}

impl Partition {
    pub fn programs(&self, p: &Program) -> (Program, Program) {
        (p.select(&self.upper), p.select(&self.lower))
    }

    pub fn is_valid(&self, p: &Program) -> bool {
        let (u, l) = self.programs(p);
        self.upper.is_disjoint(&self.lower)
            && self.upper.union(&self.lower).cloned().collect::<BTreeSet<_>>() == p.ids()
            && extends(&u, &l)
    }
}

/// Candidate splits from the relation dependency graph, largest lower part
/// first, ending with the trivial split.
pub fn suggest_partition(p: &Program) -> Vec<Partition> {
    let mut g: DiGraph<Rel, ()> = DiGraph::new();
    let mut idx: BTreeMap<Rel, NodeIndex> = BTreeMap::new();
    for r in p.relations() {
        idx.insert(r.clone(), g.add_node(r));
    }
    for c in &p.clauses {
        let h = idx[&c.head.rel()];
        for r in c.body.iter().filter_map(Literal::rel) {
            g.update_edge(h, idx[&r], ());
        }
    }
    let dag = condensation(g, true);
    let mut out: Vec<Partition> = Vec::new();
    for n in dag.node_indices() {
        let mut below: BTreeSet<Rel> = BTreeSet::new();
        let mut dfs = Dfs::new(&dag, n);
        while let Some(m) = dfs.next(&dag) {
            below.extend(dag[m].iter().cloned());
        }
        let lower: BTreeSet<usize> = p.clauses.iter().filter(|c| below.contains(&c.head.rel())).map(|c| c.id).collect();
        let upper: BTreeSet<usize> = p.ids().difference(&lower).cloned().collect();
        if lower.is_empty() || upper.is_empty() {
            continue;
        }
        let cand = Partition { upper, lower };
        if cand.is_valid(p) && !out.contains(&cand) {
            out.push(cand);
        }
    }
    out.sort_by(|a, b| b.lower.len().cmp(&a.lower.len()).then_with(|| a.lower.cmp(&b.lower)));
    out.push(Partition { upper: p.ids(), lower: BTreeSet::new() });
    out
}

/// `1-3,7` style rendering of a clause id set.
pub fn format_ids(ids: &BTreeSet<usize>) -> String {
    let mut parts = Vec::new();
    let mut it = ids.iter().copied().peekable();
    while let Some(start) = it.next() {
        let mut end = start;
        while it.peek() == Some(&(end + 1)) {
            end = it.next().expect("peeked");
        }
        parts.push(if start == end { start.to_string() } else { format!("{start}-{end}") });
    }
    parts.join(",")
}

/// An annotation file skeleton for a suggested split.
pub fn skeleton(p: &Program, part: &Partition) -> String {
    let mut s = String::new();
    if part.lower.is_empty() {
        s.push_str("method: acceptable\n");
    } else {
        s.push_str("method: up_acceptable\n");
        let _ = writeln!(s, "part upper: clauses {}", format_ids(&part.upper));
        let _ = writeln!(s, "part lower: clauses {}", format_ids(&part.lower));
    }
    for r in p.relations() {
        let _ = writeln!(s, "level {r} = 0");
    }
    for r in p.relations() {
        let _ = writeln!(s, "model {r} = all");
    }
    s
}

fn canonical(c: &Clause) -> Clause {
    let mut order: Vec<Var> = Vec::new();
    let push = |t: &Term, order: &mut Vec<Var>| {
        fn walk(t: &Term, order: &mut Vec<Var>) {
            match t {
                Term::Var(v) => {
                    if !order.contains(v) {
                        order.push(v.clone());
                    }
                }
                Term::App(_, args) => args.iter().for_each(|a| walk(a, order)),
            }
        }
        walk(t, order)
    };
    push(&c.head.as_term(), &mut order);
    for l in &c.body {
        match l {
            Literal::Pos(a) | Literal::Neg(a) => push(&a.as_term(), &mut order),
            Literal::Eq(s, t) | Literal::Ineq(_, s, t) => {
                push(s, &mut order);
                push(t, &mut order);
            }
        }
    }
    let ren: Subst = order.iter().enumerate().map(|(i, v)| (v.clone(), Term::var(&format!("V{i}")))).collect();
    let body = c
        .body
        .iter()
        .map(|l| match l {
            Literal::Ineq(univ, s, t) => Literal::Ineq(
                univ.iter().map(|v| ren.apply(&Term::Var(v.clone())).as_var().cloned().unwrap_or_else(|| v.clone())).collect(),
                ren.apply(s),
                ren.apply(t),
            ),
            l => l.apply(&ren),
        })
        .collect();
    Clause { id: 0, head: c.head.apply(&ren), body }
}

/// Same clauses in the same order, up to ids and variable names.
pub fn structurally_equal(a: &Program, b: &Program) -> bool {
    a.len() == b.len() && a.clauses.iter().zip(&b.clauses).all(|(x, y)| canonical(x) == canonical(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn prog(s: &str) -> Program {
        parse_program(s).unwrap()
    }

    fn with_ids(s: &str, first: usize) -> Program {
        let mut p = prog(s);
        for c in &mut p.clauses {
            c.id += first - 1;
        }
        p
    }

    #[test]
    fn extension() {
        assert!(extends(&prog("p :- q, r."), &prog("q :- s. s.")));
        assert!(!extends(&prog("p :- p."), &prog("q :- p.")));
        assert!(extends(&prog("p :- \\+ q."), &Program::default()));
    }

    #[test]
    fn difference() {
        let p = prog("p :- q, r. q :- s. s.");
        let r = with_ids("q :- s. s.", 2);
        assert!(structurally_equal(&diff(&p, &r).unwrap(), &prog("p :- r.")));
        assert_eq!(diff(&p, &Program::default()).unwrap(), p);
        assert_eq!(diff(&p, &with_ids("z.", 9)), Err(DecomposeError::NotSubset(9)));
    }

    #[test]
    fn weak_extension() {
        let p = prog("p(X) :- q(X), r(X). r(f(X)) :- r(X).");
        let r = with_ids("q(X) :- s(X), r(X). s(X).", 3);
        let s = BTreeSet::from([Rel::new("r", 1)]);
        assert!(weakly_extends(&p, &r, &s));
        assert!(!extends(&p, &r));
        assert!(!weakly_extends(&p, &r, &BTreeSet::new()));
    }

    #[test]
    fn suggestions() {
        let p = prog("p :- q, r. q :- s. s.");
        let cands = suggest_partition(&p);
        assert_eq!(cands[0].lower, BTreeSet::from([2, 3]));
        assert_eq!(cands.last().unwrap().lower, BTreeSet::new());
        assert!(cands.iter().all(|c| c.is_valid(&p)));
        let loop_only = suggest_partition(&prog("p :- p."));
        assert_eq!(loop_only.len(), 1);
        assert!(loop_only[0].lower.is_empty());
    }

    #[test]
    fn id_ranges() {
        assert_eq!(format_ids(&BTreeSet::from([1, 2, 3, 5, 7, 8])), "1-3,5,7-8");
    }

    #[test]
    fn renaming_is_ignored() {
        assert!(structurally_equal(&prog("p(X,Y) :- q(Y)."), &prog("p(A,B) :- q(B).")));
        assert!(!structurally_equal(&prog("p(X,Y) :- q(Y)."), &prog("p(A,B) :- q(A).")));
    }
}
