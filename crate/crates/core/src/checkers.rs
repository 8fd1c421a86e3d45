//! Termination-proof obligations and the methods built from them.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::annotation::{Annotation, Method, Part, PartMode};
use crate::bounded::{level_value, literal_truth, split_or_narrow, Search, Step, Universe};
use crate::completion::{minus_program, neg_set};
use crate::decompose::{diff_lenient, weakly_extends};
use crate::error::ResourceError;
use crate::interp::Interpretation;
use crate::levelmap::{is_rigid, LevelMap};
use crate::symbolic::{prove_decrease, prove_model, Symbolic};
use crate::term::{Atom, Clause, Literal, Program, Rel, Subst, Term, Var};

fn display<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// A ground counterexample to one obligation.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `|H| >= |L_i| + k` fails on a ground instance whose guard holds.
    Decrease {
        clause: usize,
        literal: usize,
        strict: bool,
        guard: Vec<usize>,
        #[serde(serialize_with = "display")]
        instance: Clause,
        head_level: u64,
        body_level: u64,
    },
    /// The body is true and the head false in the interpretation.
    Model {
        clause: usize,
        #[serde(serialize_with = "display")]
        instance: Clause,
    },
    /// An atom of the interpretation that no clause body supports within
    /// the search depth.
    Unsupported {
        #[serde(serialize_with = "display")]
        atom: Atom,
    },
    /// A relation defined in one part occurs in the other.
    Extension { rel: String, reason: String },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Decrease { clause, literal, strict, instance, head_level, body_level, .. } => {
                let op = if *strict { ">" } else { ">=" };
                write!(f, "clause {clause}, literal {}: {instance}  |H| = {head_level}, |L| = {body_level}, need {op}", literal + 1)
            }
            Witness::Model { clause, instance } => write!(f, "clause {clause}: {instance}  body true, head false"),
            Witness::Unsupported { atom } => write!(f, "{atom} is in the model but no clause body holds"),
            Witness::Extension { rel, reason } => write!(f, "{rel}: {reason}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    ProvedSymbolic,
    VerifiedToBound { depth: usize },
    Refuted { witness: Witness },
    Invalid { reason: String },
    ResourceExceeded { reason: String },
}

impl Verdict {
    fn rank(&self) -> u8 {
        match self {
            Verdict::ProvedSymbolic => 0,
            Verdict::VerifiedToBound { .. } => 1,
            Verdict::ResourceExceeded { .. } => 2,
            Verdict::Refuted { .. } => 3,
            Verdict::Invalid { .. } => 4,
        }
    }

    /// Pessimistic combination; the smaller depth wins among bounded ones.
    pub fn merge(self, o: Verdict) -> Verdict {
        match (&self, &o) {
            (Verdict::VerifiedToBound { depth: a }, Verdict::VerifiedToBound { depth: b }) => {
                Verdict::VerifiedToBound { depth: (*a).min(*b) }
            }
            _ if o.rank() > self.rank() => o,
            _ => self,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::ProvedSymbolic => write!(f, "proved symbolically"),
            Verdict::VerifiedToBound { depth } => write!(f, "verified to depth {depth}"),
            Verdict::Refuted { witness } => write!(f, "refuted: {witness}"),
            Verdict::Invalid { reason } => write!(f, "invalid: {reason}"),
            Verdict::ResourceExceeded { reason } => write!(f, "resource limit: {reason}"),
        }
    }
}

/// One line of the obligation log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Obligation {
    /// Which definition the condition belongs to, e.g. `up_acceptable`.
    pub definition: String,
    /// Condition id within the definition, e.g. `4`.
    pub condition: String,
    pub clause: Option<usize>,
    pub literal: Option<usize>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub method: String,
    pub depth: usize,
    pub status: Verdict,
    /// The obligation whose verdict decided a failing status.
    pub failed: Option<Obligation>,
    pub obligations: Vec<Obligation>,
    pub notes: Vec<String>,
}

impl CheckReport {
    fn new(method: &str, depth: usize) -> Self {
        CheckReport {
            method: method.to_string(),
            depth,
            status: Verdict::ProvedSymbolic,
            failed: None,
            obligations: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn invalid(method: &str, depth: usize, reason: String) -> Self {
        let mut r = CheckReport::new(method, depth);
        r.push("annotation", "0", None, None, Verdict::Invalid { reason });
        r
    }

    fn push(&mut self, def: &str, cond: &str, clause: Option<usize>, literal: Option<usize>, v: Verdict) {
        let ob = Obligation { definition: def.to_string(), condition: cond.to_string(), clause, literal, verdict: v.clone() };
        if v.rank() > self.status.rank() && v.rank() >= 2 {
            self.failed = Some(ob.clone());
        }
        self.status = self.status.clone().merge(v);
        self.obligations.push(ob);
    }

    /// Stop after the first failing obligation.
    pub fn failing(&self) -> bool {
        self.status.rank() >= 2
    }

    fn absorb(&mut self, def: &str, sub: CheckReport) {
        for ob in sub.obligations {
            let def = if ob.definition == sub.method { def.to_string() } else { format!("{def}/{}", ob.definition) };
            self.push(&def, &ob.condition, ob.clause, ob.literal, ob.verdict);
        }
        for n in sub.notes {
            if !self.notes.contains(&n) {
                self.notes.push(n);
            }
        }
    }

    /// Exit status for the command line.
    pub fn exit_code(&self, require_proof: bool) -> i32 {
        match self.status {
            Verdict::ProvedSymbolic => 0,
            Verdict::VerifiedToBound { .. } => {
                if require_proof {
                    4
                } else {
                    0
                }
            }
            Verdict::Refuted { .. } => 1,
            Verdict::Invalid { .. } => 2,
            Verdict::ResourceExceeded { .. } => 5,
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method: {}", self.method)?;
        writeln!(f, "status: {}", self.status)?;
        if let Some(ob) = &self.failed {
            write!(f, "failed: {} condition {}", ob.definition, ob.condition)?;
            if let Some(c) = ob.clause {
                write!(f, ", clause {c}")?;
            }
            writeln!(f)?;
        }
        for ob in &self.obligations {
            write!(f, "  [{} {}]", ob.definition, ob.condition)?;
            if let Some(c) = ob.clause {
                write!(f, " clause {c}")?;
            }
            if let Some(l) = ob.literal {
                write!(f, " literal {}", l + 1)?;
            }
            writeln!(f, ": {}", ob.verdict)?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Run-time knobs that do not belong to the annotation.
#[derive(Clone, Debug, Default)]
pub struct CheckConfig {
    /// Overrides the annotation's universe depth.
    pub depth: Option<usize>,
    /// Re-run bounded search after a symbolic proof and fail loudly on
    /// disagreement.
    pub cross_check: bool,
}

/// Everything an obligation needs besides the clauses it ranges over.
pub struct Checker<'a> {
    pub level: &'a LevelMap,
    pub model: &'a Interpretation,
    pub universe: Universe,
    pub cfg: CheckConfig,
}

const OUTER_GEN: u32 = u32::MAX - 100;
const INNER_GEN: u32 = u32::MAX - 101;

fn resource(e: ResourceError) -> Verdict {
    Verdict::ResourceExceeded { reason: e.to_string() }
}

impl<'a> Checker<'a> {
    pub fn new(p: &Program, ann: &'a Annotation, cfg: CheckConfig) -> Self {
        let depth = cfg.depth.unwrap_or(ann.universe_depth);
        let universe = Universe::for_program(p, &ann.universe_extra, &ann.sets, depth, ann.instance_cap);
        Checker { level: &ann.level, model: &ann.model, universe, cfg }
    }

    pub fn depth(&self) -> usize {
        self.universe.depth
    }

    fn bounded(&self) -> Verdict {
        Verdict::VerifiedToBound { depth: self.universe.depth }
    }

    fn missing_level(&self, c: &Clause, i: usize) -> Option<Verdict> {
        for r in [Some(c.head.rel()), c.body[i].rel()].into_iter().flatten() {
            if self.level.get(&r).is_err() {
                return Some(Verdict::Invalid { reason: format!("no level for {r}") });
            }
        }
        None
    }

    fn missing_model(&self, interp: &Interpretation, lits: impl IntoIterator<Item = Option<Rel>>) -> Option<Verdict> {
        lits.into_iter()
            .flatten()
            .find(|r| interp.cond(r).is_none())
            .map(|r| Verdict::Invalid { reason: format!("no model for {r}") })
    }

    /// `|H| > |L_i|` (or `>=`) on every ground instance of `c` whose
    /// literals at `guard` are true in `interp`.
    pub fn compare_levels(&self, c: &Clause, i: usize, strict: bool, guard: &[usize], interp: &Interpretation) -> Verdict {
        if let Some(v) = self.missing_level(c, i) {
            return v;
        }
        if let Some(v) = self.missing_model(interp, guard.iter().map(|&j| c.body[j].rel())) {
            return v;
        }
        let proved = prove_decrease(self.level, c, i, strict, Some(interp), guard, &self.universe.functors) == Symbolic::Proved;
        if proved && !self.cfg.cross_check {
            return Verdict::ProvedSymbolic;
        }
        match self.bounded_decrease(c, i, strict, guard, interp) {
            Err(e) => resource(e),
            Ok(None) if proved => Verdict::ProvedSymbolic,
            Ok(None) => self.bounded(),
            Ok(Some(w)) => {
                assert!(!proved, "internal inconsistency: symbolic proof contradicted by {w}");
                Verdict::Refuted { witness: w }
            }
        }
    }

    fn bounded_decrease(
        &self,
        c: &Clause,
        i: usize,
        strict: bool,
        guard: &[usize],
        interp: &Interpretation,
    ) -> Result<Option<Witness>, ResourceError> {
        let k = u64::from(strict);
        let lit = c.body[i].atom().expect("not a constraint");
        let top = c.vars();
        let mut search = Search::new(&self.universe, top.clone());
        let found = search.run(Subst::new(), |s| {
            let mut blocked = None;
            for &j in guard {
                match literal_truth(interp, &c.body[j], s) {
                    Some(Ok(true)) => {}
                    Some(Ok(false)) | None => return Step::Prune,
                    Some(Err(v)) => {
                        blocked.get_or_insert((j, v));
                    }
                }
            }
            if let Some((j, v)) = blocked {
                return split_or_narrow(interp, &c.body[j], s, v);
            }
            let h = match level_value(self.level, &c.head, s).expect("level checked") {
                Ok(h) => h,
                Err(v) => return Step::Split(v),
            };
            let l = match level_value(self.level, lit, s).expect("level checked") {
                Ok(l) => l,
                Err(v) => return Step::Split(v),
            };
            if h >= l + k {
                Step::Prune
            } else {
                Step::Found((h, l))
            }
        })?;
        Ok(found.map(|(s, (h, l))| {
            let g = self.universe.ground(&s, &top);
            Witness::Decrease {
                clause: c.id,
                literal: i,
                strict,
                guard: guard.to_vec(),
                instance: c.apply(&g),
                head_level: h,
                body_level: l,
            }
        }))
    }

    /// `interp` is a model of `c`, up to the search depth.
    pub fn model_of_clause(&self, c: &Clause, interp: &Interpretation) -> Verdict {
        if let Some(v) = self.missing_model(interp, std::iter::once(Some(c.head.rel())).chain(c.body.iter().map(Literal::rel))) {
            return v;
        }
        // A symbolic proof only saves the enumeration; the verdict stays bounded.
        let proved = prove_model(c, interp, &self.universe.functors) == Symbolic::Proved;
        if proved && !self.cfg.cross_check {
            return self.bounded();
        }
        let top = c.vars();
        let head = Literal::Pos(c.head.clone());
        let mut search = Search::new(&self.universe, top.clone());
        let found = search.run(Subst::new(), |s| {
            let h = literal_truth(interp, &head, s).expect("model checked");
            if h == Ok(true) {
                return Step::Prune;
            }
            let mut blocked = None;
            for l in &c.body {
                match literal_truth(interp, l, s).expect("model checked") {
                    Ok(true) => {}
                    Ok(false) => return Step::Prune,
                    Err(v) => {
                        blocked.get_or_insert((l, v));
                    }
                }
            }
            match (blocked, h) {
                (Some((l, v)), _) => split_or_narrow(interp, l, s, v),
                (None, Err(v)) => Step::Split(v),
                (None, _) => Step::Found(()),
            }
        });
        match found {
            Err(e) => resource(e),
            Ok(None) => self.bounded(),
            Ok(Some((s, ()))) => {
                let g = self.universe.ground(&s, &top);
                assert!(!proved, "internal inconsistency: symbolic model proof contradicted on clause {}", c.id);
                Verdict::Refuted { witness: Witness::Model { clause: c.id, instance: c.apply(&g) } }
            }
        }
    }

    /// Every atom of `rel` true in `interp` has a clause of `p` whose body
    /// holds for some instance within the search depth.
    pub fn supported(&self, p: &Program, rel: &Rel, interp: &Interpretation) -> Verdict {
        let Some(cond) = interp.cond(rel) else {
            return Verdict::Invalid { reason: format!("no model for {rel}") };
        };
        let outer: Vec<Term> = (0..rel.arity).map(|i| Term::Var(Var::new(&format!("_A{i}")).renamed(OUTER_GEN))).collect();
        let atom = Atom { pred: rel.name.clone(), args: outer.clone() };
        let top: BTreeSet<Var> = outer.iter().filter_map(|t| t.as_var().cloned()).collect();
        let clauses: Vec<Clause> = p.clauses.iter().filter(|c| c.head.rel() == *rel).map(|c| c.rename(INNER_GEN)).collect();
        let lit = Literal::Pos(atom.clone());
        let mut search = Search::new(&self.universe, top.clone());
        let found = search.run(Subst::new(), |s| {
            let args: Vec<Term> = atom.args.iter().map(|t| s.apply(t)).collect();
            match cond.eval_partial(&args) {
                Ok(false) => return Step::Prune,
                Err(v) => return split_or_narrow(interp, &lit, s, v),
                Ok(true) => {}
            }
            let a = Atom { pred: rel.name.clone(), args };
            match self.support(&a, &clauses, interp) {
                Ok(Support::Yes) => Step::Prune,
                Ok(Support::Split(v)) => Step::Split(v),
                Ok(Support::No) => Step::Found(None),
                Err(e) => Step::Found(Some(e)),
            }
        });
        match found {
            Err(e) | Ok(Some((_, Some(e)))) => resource(e),
            Ok(None) => self.bounded(),
            Ok(Some((s, None))) => {
                let g = self.universe.ground(&s, &top);
                Verdict::Refuted { witness: Witness::Unsupported { atom: atom.apply(&g) } }
            }
        }
    }

    /// Whether some clause body holds for every grounding of the free
    /// variables of `a`.
    fn support(&self, a: &Atom, clauses: &[Clause], interp: &Interpretation) -> Result<Support, ResourceError> {
        let frozen = a.vars();
        let mut need: Option<Var> = None;
        for c in clauses {
            let Some(m) = Subst::new().unify_atoms(&c.head, a) else {
                continue;
            };
            if let Some(v) = frozen.iter().find(|v| m.get(v).is_some()) {
                need.get_or_insert(v.clone());
                continue;
            }
            let mut search = Search::new(&self.universe, c.vars());
            let hit = search.run(m, |s| {
                let mut blocked = None;
                for l in &c.body {
                    match literal_truth(interp, l, s) {
                        None => return Step::Prune,
                        Some(Ok(true)) => {}
                        Some(Ok(false)) => return Step::Prune,
                        Some(Err(v)) => {
                            blocked.get_or_insert((l, v));
                        }
                    }
                }
                let Some((l, v)) = blocked else {
                    return Step::Found(());
                };
                if frozen.contains(&v) {
                    need.get_or_insert(v);
                    return Step::Prune;
                }
                match split_or_narrow::<()>(interp, l, s, v) {
                    Step::Alternatives(alts) => {
                        let (ok, bad): (Vec<Subst>, Vec<Subst>) =
                            alts.into_iter().partition(|t| frozen.iter().all(|f| t.get(f).is_none()));
                        if let Some(f) = bad.iter().find_map(|t| frozen.iter().find(|f| t.get(f).is_some())) {
                            need.get_or_insert(f.clone());
                        }
                        Step::Alternatives(ok)
                    }
                    other => other,
                }
            })?;
            if hit.is_some() {
                return Ok(Support::Yes);
            }
        }
        Ok(match need {
            Some(v) => Support::Split(v),
            None => Support::No,
        })
    }
}

enum Support {
    Yes,
    No,
    Split(Var),
}

/// The relation that breaks `upper extends lower`, if any.
fn extension_breach(upper: &Program, lower: &Program) -> Option<Witness> {
    let used = lower.relations();
    upper.defined_relations().into_iter().find(|r| used.contains(r)).map(|r| Witness::Extension {
        rel: r.to_string(),
        reason: "defined in the upper part and used in the lower part".into(),
    })
}

impl<'a> Checker<'a> {
    pub fn check_acyclic(&self, p: &Program) -> CheckReport {
        let mut r = CheckReport::new("acyclic", self.depth());
        for c in &p.clauses {
            for (i, l) in c.body.iter().enumerate() {
                if l.is_constraint() {
                    continue;
                }
                r.push("acyclic", "decrease", Some(c.id), Some(i), self.compare_levels(c, i, true, &[], self.model));
                if r.failing() {
                    return r;
                }
            }
        }
        r
    }

    /// `interp` is a model of `p` and of the completion of `p⁻`. The
    /// completion takes its definitions from `p` plus `shared`, which holds
    /// clauses for relations `p` uses but another part defines.
    pub fn check_specialized_model(&self, p: &Program, shared: &Program, interp: &Interpretation) -> CheckReport {
        let mut r = CheckReport::new("specialized_model", self.depth());
        let whole = p.union(shared);
        for c in &whole.clauses {
            r.push("specialized_model", "model", Some(c.id), None, self.model_of_clause(c, interp));
            if r.failing() {
                return r;
            }
        }
        let minus = minus_program(&whole);
        for rel in neg_set(&whole) {
            r.push("specialized_model", &format!("comp {rel}"), None, None, self.supported(&minus, &rel, interp));
            if r.failing() {
                return r;
            }
        }
        r.notes.push("specialized-model obligations are bounded; the best status is verified-to-depth".into());
        r
    }

    /// Guarded decrease for literal `i`: the whole prefix must hold in `interp`.
    fn guarded(&self, c: &Clause, i: usize, strict: bool, interp: &Interpretation) -> Verdict {
        let guard: Vec<usize> = (0..i).collect();
        self.compare_levels(c, i, strict, &guard, interp)
    }

    pub fn check_acceptable(&self, p: &Program, shared: &Program, interp: &Interpretation) -> CheckReport {
        let mut r = CheckReport::new("acceptable", self.depth());
        r.absorb("acceptable", self.check_specialized_model(p, shared, interp));
        if r.failing() {
            return r;
        }
        for c in &p.clauses {
            for (i, l) in c.body.iter().enumerate() {
                if l.is_constraint() {
                    continue;
                }
                r.push("acceptable", "decrease", Some(c.id), Some(i), self.guarded(c, i, true, interp));
                if r.failing() {
                    return r;
                }
            }
        }
        r
    }

    /// Up-, weak up- and low-acceptability share their shape.
    pub fn check_split(&self, method: Method, p: &Program, upper: &Program, lower: &Program, weak: &BTreeSet<Rel>) -> CheckReport {
        let name = method.name();
        let mut r = CheckReport::new(name, self.depth());
        let defined = p.defined_relations();
        if let Some(s) = weak.iter().find(|s| !defined.contains(s)) {
            return CheckReport::invalid(name, self.depth(), format!("weak relation {s} is not defined in the program"));
        }
        let c1 = if method == Method::WeakUpAcceptable {
            if weakly_extends(upper, lower, weak) {
                Verdict::ProvedSymbolic
            } else {
                let rels: Vec<String> = weak.iter().map(|r| r.to_string()).collect();
                Verdict::Refuted {
                    witness: Witness::Extension {
                        rel: format!("{{{}}}", rels.join(", ")),
                        reason: "the upper part does not weakly extend the lower part through this set".into(),
                    },
                }
            }
        } else {
            match extension_breach(upper, lower) {
                None => Verdict::ProvedSymbolic,
                Some(w) => Verdict::Refuted { witness: w },
            }
        };
        r.push(name, "1", None, None, c1);
        if r.failing() {
            return r;
        }
        let top = diff_lenient(p, lower);
        if method == Method::LowAcceptable {
            r.absorb(&format!("{name}/2"), self.check_acyclic(&top));
            if r.failing() {
                return r;
            }
            r.absorb(&format!("{name}/3"), self.check_acceptable(lower, &Program::default(), self.model));
        } else {
            r.absorb(&format!("{name}/2"), self.check_acceptable(&top, &Program::default(), self.model));
            if r.failing() {
                return r;
            }
            r.absorb(&format!("{name}/3"), self.check_acyclic(lower));
        }
        if r.failing() {
            return r;
        }
        let in_lower = lower.defined_relations();
        let in_top = top.relations();
        for c in &upper.clauses {
            for (i, l) in c.body.iter().enumerate() {
                if l.is_constraint() || !l.rel().is_some_and(|x| in_lower.contains(&x)) {
                    continue;
                }
                let guard: Vec<usize> = if method == Method::LowAcceptable {
                    Vec::new()
                } else {
                    (0..i).filter(|&j| c.body[j].rel().is_some_and(|x| in_top.contains(&x))).collect()
                };
                r.push(name, "4", Some(c.id), Some(i), self.compare_levels(c, i, false, &guard, self.model));
                if r.failing() {
                    return r;
                }
            }
        }
        r
    }

    pub fn check_new_up_acceptable(&self, p: &Program, upper: &Program, lower: &Program) -> CheckReport {
        let name = Method::NewUpAcceptable.name();
        let mut r = CheckReport::new(name, self.depth());
        let top = diff_lenient(p, lower);
        r.absorb(&format!("{name}/lower model"), self.check_specialized_model(lower, &Program::default(), self.model));
        if r.failing() {
            return r;
        }
        r.absorb(&format!("{name}/upper model"), self.check_specialized_model(&top, &Program::default(), self.model));
        if r.failing() {
            return r;
        }
        let c1 = match extension_breach(upper, lower) {
            None => Verdict::ProvedSymbolic,
            Some(w) => Verdict::Refuted { witness: w },
        };
        r.push(name, "1", None, None, c1);
        if r.failing() {
            return r;
        }
        let in_top = top.defined_relations();
        let in_lower = lower.defined_relations();
        for c in &upper.clauses {
            for (i, l) in c.body.iter().enumerate() {
                let Some(rel) = l.rel() else { continue };
                let strict = if in_top.contains(&rel) {
                    true
                } else if in_lower.contains(&rel) {
                    false
                } else {
                    continue;
                };
                r.push(name, "2", Some(c.id), Some(i), self.guarded(c, i, strict, self.model));
                if r.failing() {
                    return r;
                }
            }
        }
        r.absorb(&format!("{name}/3"), self.check_acyclic(lower));
        r
    }
}

/// Clauses of `p` defining weak-shared relations that `part` uses without
/// defining.
fn shared_for(p: &Program, part: &Program, weak: &BTreeSet<Rel>) -> Program {
    let own = part.defined_relations();
    let used: BTreeSet<Rel> = part.relations().into_iter().filter(|r| weak.contains(r) && !own.contains(r)).collect();
    crate::completion::restrict(p, &used)
}

impl<'a> Checker<'a> {
    pub fn check_incremental(&self, p: &Program, parts: &[Part], weak_set: &BTreeSet<Rel>) -> CheckReport {
        let name = Method::Incremental.name();
        let depth = self.depth();
        if parts.is_empty() {
            return CheckReport::invalid(name, depth, "the incremental method needs at least one part".into());
        }
        let acyclic = |k: usize| parts[k].mode == Some(PartMode::Acyclic);
        for (k, part) in parts.iter().enumerate() {
            let ok = match (k, part.mode) {
                (_, None) => false,
                (0, Some(m)) => matches!(m, PartMode::Acyclic | PartMode::Acceptable),
                (_, Some(m)) => m == PartMode::Acyclic || (matches!(m, PartMode::IA | PartMode::IB) && acyclic(k - 1)),
            };
            if !ok {
                return CheckReport::invalid(
                    name,
                    depth,
                    format!("part {} has a mode that breaks the alternation of acyclic parts", part.name),
                );
            }
        }
        let weak: BTreeSet<Rel> = weak_set.iter().chain(parts.iter().flat_map(|x| x.weak.iter())).cloned().collect();
        let progs: Vec<Program> = parts.iter().map(|x| p.select(&x.clauses)).collect();
        let mut r = CheckReport::new(name, depth);
        let mut interp = self.model.clone();

        let base = &progs[0];
        let sub = if acyclic(0) {
            self.check_acyclic(base)
        } else {
            self.check_acceptable(base, &shared_for(p, base, &weak), &interp)
        };
        r.absorb(&format!("{name}/base"), sub);
        for k in 0..parts.len() - 1 {
            if r.failing() {
                return r;
            }
            let (prev, next) = (&progs[k], &progs[k + 1]);
            let step = format!("{name}/{}", parts[k + 1].name);
            let s = &parts[k + 1].weak;
            let boundary = if s.is_empty() {
                extension_breach(next, prev).map_or(Verdict::ProvedSymbolic, |w| Verdict::Refuted { witness: w })
            } else if weakly_extends(next, prev, s) {
                Verdict::ProvedSymbolic
            } else {
                Verdict::Refuted {
                    witness: Witness::Extension {
                        rel: parts[k + 1].name.clone(),
                        reason: "does not weakly extend the previous part".into(),
                    },
                }
            };
            r.push(&step, "boundary", None, None, boundary);
            if r.failing() {
                return r;
            }
            let top = diff_lenient(next, prev);
            let own = next.defined_relations();
            let below = prev.defined_relations();
            match parts[k + 1].mode.expect("validated") {
                PartMode::Acyclic => {
                    r.absorb(&format!("{step}/a"), self.check_acyclic(&top));
                    for c in &next.clauses {
                        for (i, l) in c.body.iter().enumerate() {
                            if l.rel().is_some_and(|x| below.contains(&x)) {
                                r.push(&step, "a", Some(c.id), Some(i), self.compare_levels(c, i, false, &[], &interp));
                                if r.failing() {
                                    return r;
                                }
                            }
                        }
                    }
                    continue;
                }
                PartMode::IA => {
                    r.absorb(&format!("{step}/i.A"), self.check_acceptable(&top, &shared_for(p, &top, &weak), &interp));
                    for rel in &below {
                        interp = interp.with(rel.clone(), crate::interp::Cond::True);
                    }
                }
                _ => {
                    let lower = if k == 0 { prev.clone() } else { diff_lenient(prev, &progs[k - 1]) };
                    r.absorb(&format!("{step}/i.B"), self.check_specialized_model(&lower, &shared_for(p, &lower, &weak), &interp));
                    if r.failing() {
                        return r;
                    }
                    r.absorb(&format!("{step}/i.B"), self.check_specialized_model(&top, &shared_for(p, &top, &weak), &interp));
                    for c in &next.clauses {
                        for (i, l) in c.body.iter().enumerate() {
                            if r.failing() {
                                return r;
                            }
                            if l.rel().is_some_and(|x| own.contains(&x)) {
                                r.push(&step, "i.B", Some(c.id), Some(i), self.guarded(c, i, true, &interp));
                            }
                        }
                    }
                }
            }
            for c in &next.clauses {
                for (i, l) in c.body.iter().enumerate() {
                    if r.failing() {
                        return r;
                    }
                    if l.rel().is_some_and(|x| below.contains(&x)) {
                        r.push(&step, "ii", Some(c.id), Some(i), self.guarded(c, i, false, &interp));
                    }
                }
            }
        }
        r
    }
}

/// Runs the method named by the annotation.
pub fn check(p: &Program, ann: &Annotation, cfg: CheckConfig) -> CheckReport {
    let ck = Checker::new(p, ann, cfg);
    let name = ann.method.name();
    let parts = match ann.resolve(p) {
        Ok(parts) => parts,
        Err(e) => return CheckReport::invalid(name, ck.depth(), e.to_string()),
    };
    let weak: BTreeSet<Rel> = ann.weak_set.iter().chain(parts.iter().flat_map(|x| x.weak.iter())).cloned().collect();
    let (upper, lower) = match parts.as_slice() {
        [] => (p.clone(), Program::default()),
        [one] => (p.select(&one.clauses), Program::default()),
        [u, l] => (p.select(&u.clauses), p.select(&l.clauses)),
        _ if ann.method == Method::Incremental => (p.clone(), Program::default()),
        _ => return CheckReport::invalid(name, ck.depth(), format!("{name} takes at most two parts, upper then lower")),
    };
    let mut report = match ann.method {
        Method::Acyclic => ck.check_acyclic(p),
        Method::Acceptable => ck.check_acceptable(p, &Program::default(), &ann.model),
        Method::UpAcceptable | Method::WeakUpAcceptable | Method::LowAcceptable => {
            ck.check_split(ann.method, p, &upper, &lower, &weak)
        }
        Method::NewUpAcceptable => ck.check_new_up_acceptable(p, &upper, &lower),
        Method::Incremental => ck.check_incremental(p, &parts, &ann.weak_set),
    };
    report.method = name.to_string();
    report
}

/// Rigidity of each literal of a query.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryBounds {
    pub bounded: bool,
    pub literals: Vec<(String, bool)>,
}

/// Conservative boundedness: every literal's level is fixed by the
/// query's own instantiation. Guards are ignored.
pub fn check_bounded_query(q: &[Literal], level: &LevelMap) -> Result<QueryBounds, crate::levelmap::MissingLevel> {
    let mut literals = Vec::new();
    for l in q {
        let rigid = l.is_constraint() || is_rigid(level, l)?;
        literals.push((l.to_string(), rigid));
    }
    Ok(QueryBounds { bounded: literals.iter().all(|(_, b)| *b), literals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::parse_annotation;
    use crate::parser::parse_program;

    fn run(prog: &str, ann: &str) -> CheckReport {
        let p = parse_program(prog).unwrap();
        let a = parse_annotation(ann).unwrap();
        check(&p, &a, CheckConfig { depth: None, cross_check: true })
    }

    fn refuted(r: &CheckReport) -> &Witness {
        match &r.status {
            Verdict::Refuted { witness } => witness,
            other => panic!("expected a refutation, got {other}\n{r}"),
        }
    }

    #[test]
    fn floundering_program_is_not_acyclic() {
        let r = run(
            "q(s(X)) :- q(X). q(0). p(X) :- \\+ q(Y).",
            "method: acyclic\nlevel q/1 = size(arg1)\nlevel p/1 = size(arg1)",
        );
        let w = refuted(&r);
        assert!(matches!(w, Witness::Decrease { clause: 3, .. }), "{w}");
        assert_eq!(r.exit_code(false), 1);
    }

    #[test]
    fn empty_program_is_acyclic() {
        let r = run("", "method: acyclic");
        assert_eq!(r.status, Verdict::ProvedSymbolic);
    }

    #[test]
    fn self_loop_is_not_acceptable() {
        let r = run("p :- p.", "method: acceptable\nlevel p/0 = 0\nmodel p/0 = all");
        assert!(matches!(refuted(&r), Witness::Decrease { head_level: 0, body_level: 0, .. }));
    }

    const SEC5: &str = "q(f(X)) :- p(Y), q(X). p(f(X)) :- p(X).";

    #[test]
    fn up_acceptability_fails_at_condition_four() {
        let r = run(
            SEC5,
            "method: up_acceptable\npart upper: clauses 1\npart lower: clauses 2\n\
             level q/1 = size(arg1)\nlevel p/1 = size(arg1)\nmodel q/1 = all\nmodel p/1 = all",
        );
        refuted(&r);
        let f = r.failed.as_ref().unwrap();
        assert_eq!((f.condition.as_str(), f.clause, f.literal), ("4", Some(1), Some(0)));
        if let Witness::Decrease { head_level, body_level, .. } = refuted(&r) {
            assert!(head_level < body_level);
        }
    }

    const EX83: &str = "p :- q, p. q :- s.";

    fn ex83(q_level: u32, prog: &str) -> CheckReport {
        run(
            prog,
            &format!(
                "method: new_up_acceptable\npart upper: clauses 1\npart lower: clauses 2\n\
                 level p/0 = 1\nlevel q/0 = {q_level}\nlevel s/0 = 0\nmodel p/0 = all\nmodel q/0 = none\nmodel s/0 = none"
            ),
        )
    }

    #[test]
    fn new_up_acceptability() {
        let ok = ex83(1, EX83);
        assert!(!ok.failing(), "{ok}");
        assert_eq!(ok.status, Verdict::VerifiedToBound { depth: 3 });
        let low = ex83(2, EX83);
        assert!(matches!(refuted(&low), Witness::Decrease { clause: 1, literal: 0, .. }));
        let neg = ex83(1, "p :- q, \\+ p. q :- s.");
        let f = neg.failed.as_ref().unwrap();
        assert!(f.definition.contains("model"), "{neg}");
    }

    const MEMBER: &str = "q(X,Y) :- \\+ member(X,Y). member(X,[X|Y]). member(X,[Y|Z]) :- member(X,Z).";

    #[test]
    fn completion_models() {
        let p = parse_program(MEMBER).unwrap();
        let good = parse_annotation("method: acceptable\nmodel member/2 = elem(arg1, arg2)\nmodel q/2 = all").unwrap();
        let ck = Checker::new(&p, &good, CheckConfig::default());
        let r = ck.check_specialized_model(&p, &Program::default(), &good.model);
        assert_eq!(r.status, Verdict::VerifiedToBound { depth: 3 }, "{r}");
        let all = parse_annotation("method: acceptable\nmodel member/2 = all\nmodel q/2 = all").unwrap();
        let ck = Checker::new(&p, &all, CheckConfig::default());
        let r = ck.check_specialized_model(&p, &Program::default(), &all.model);
        assert!(matches!(refuted(&r), Witness::Unsupported { .. }), "{r}");
    }

    #[test]
    fn missing_level_is_invalid() {
        let r = run("p :- q.", "method: acyclic\nlevel p/0 = 1");
        assert!(matches!(r.status, Verdict::Invalid { .. }));
        assert_eq!(r.exit_code(false), 2);
    }

    #[test]
    fn rigid_queries() {
        let a = parse_annotation("method: acyclic\nlevel member/2 = len(arg2)").unwrap();
        let q = crate::parser::parse_query("member(X, [a, Y])").unwrap();
        assert!(check_bounded_query(&q, &a.level).unwrap().bounded);
        let q = crate::parser::parse_query("member(X, Ys)").unwrap();
        assert!(!check_bounded_query(&q, &a.level).unwrap().bounded);
    }
}
