//! Finite, depth-bounded slices of the Herbrand universe.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::ResourceError;
use crate::term::{Clause, Program, Subst, Term, Var};

pub const DEFAULT_DEPTH: usize = 3;
pub const DEFAULT_SLICE_CAP: usize = 20_000;

/// All ground terms up to a nesting depth over a fixed set of functors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HerbrandSlice {
    pub depth: usize,
    functors: Vec<(Arc<str>, usize)>,
    terms: Vec<Term>,
}

impl HerbrandSlice {
    /// Builds the slice, refusing if it would hold more than `cap` terms.
    /// A signature without constants gets the default constant.
    pub fn new(
        functors: impl IntoIterator<Item = (Arc<str>, usize)>,
        depth: usize,
        cap: usize,
    ) -> Result<HerbrandSlice, ResourceError> {
        let mut fs: Vec<(Arc<str>, usize)> = functors.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if !fs.iter().any(|(_, a)| *a == 0) {
            fs.push((Arc::from(crate::constraints::DEFAULT_CONSTANT), 0));
        }
        fs.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        let consts: Vec<Term> = fs.iter().filter(|(_, a)| *a == 0).map(|(f, _)| Term::App(f.clone(), vec![])).collect();
        let mut terms = consts.clone();
        if terms.len() > cap {
            return Err(ResourceError::SliceTooLarge(cap));
        }
        let mut prev_len = terms.len();
        for _ in 1..depth.max(1) {
            let mut count = consts.len();
            for (_, a) in fs.iter().filter(|(_, a)| *a > 0) {
                let n = prev_len.checked_pow(*a as u32).ok_or(ResourceError::SliceTooLarge(cap))?;
                count = count.checked_add(n).ok_or(ResourceError::SliceTooLarge(cap))?;
            }
            if count > cap {
                return Err(ResourceError::SliceTooLarge(cap));
            }
            let base = terms[..prev_len].to_vec();
            let mut next = consts.clone();
            for (f, a) in fs.iter().filter(|(_, a)| *a > 0) {
                for args in Tuples::new(base.len(), *a) {
                    next.push(Term::App(f.clone(), args.iter().map(|&i| base[i].clone()).collect()));
                }
            }
            prev_len = next.len();
            terms = next;
        }
        // Shallow terms first, in generation order within each depth.
        terms.sort_by_key(Term::depth);
        Ok(HerbrandSlice { depth, functors: fs, terms })
    }

    pub fn for_program(p: &Program, extra: &[Term], depth: usize, cap: usize) -> Result<HerbrandSlice, ResourceError> {
        let mut fs = p.functors();
        for t in extra {
            t.collect_functors(&mut fs);
        }
        HerbrandSlice::new(fs, depth, cap)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn functors(&self) -> &[(Arc<str>, usize)] {
        &self.functors
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, t: &Term) -> bool {
        t.is_ground() && t.depth() <= self.depth && {
            let mut fs = BTreeSet::new();
            t.collect_functors(&mut fs);
            fs.iter().all(|f| self.functors.contains(f))
        }
    }
}

/// Odometer over `arity`-tuples of indices below `n`.
pub struct Tuples {
    n: usize,
    cur: Option<Vec<usize>>,
}

impl Tuples {
    pub fn new(n: usize, arity: usize) -> Self {
        let cur = if n == 0 && arity > 0 { None } else { Some(vec![0; arity]) };
        Tuples { n, cur }
    }
}

impl Iterator for Tuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.cur.clone()?;
        let cur = self.cur.as_mut().expect("checked above");
        let mut i = cur.len();
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < self.n {
                break;
            }
            cur[i] = 0;
        }
        Some(out)
    }
}

/// Every ground instance of `c` whose substituted terms come from the
/// slice, in odometer order over the clause's sorted variables.
pub fn ground_instances<'a>(
    c: &'a Clause,
    universe: &'a HerbrandSlice,
    cap: u64,
) -> Result<impl Iterator<Item = Clause> + 'a, ResourceError> {
    let vars: Vec<Var> = c.vars().into_iter().collect();
    let total = (universe.len() as u64).checked_pow(vars.len() as u32).unwrap_or(u64::MAX);
    if total > cap {
        return Err(ResourceError::TooManyInstances(cap));
    }
    Ok(Tuples::new(universe.len(), vars.len()).map(move |idx| {
        let s: Subst = vars.iter().cloned().zip(idx.iter().map(|&i| universe.terms()[i].clone())).collect();
        c.apply(&s)
    }))
}
