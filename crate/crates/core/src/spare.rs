//! Spareness: a sound taint check and a bounded breadth-first falsifier.
//!
//! A step is spare when every variable that occurs more than once in some
//! right-hand side of the applied rule is instantiated by a normal form.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::redexes;
use crate::model::Ptrs;
use crate::term::{Position, Symbol, Term, Var};

pub const DEFAULT_FALSIFY_DEPTH: usize = 6;
pub const DEFAULT_ARG_DEPTH: usize = 3;
const MAX_STARTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpareError {
    #[error("not a constructor system: rule {0} has a defined symbol below its lhs root")]
    NotApplicable(usize),
    #[error("start term {0} is not basic")]
    NonBasicStart(Term),
    #[error("depth must be at least 1")]
    ZeroDepth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Taint {
    Clean,
    MayContainDefined,
}

/// Taint status of every argument position `(f, i)` of every defined `f`; `i` is 1-based.
pub type TaintMap = BTreeMap<(Symbol, usize), Taint>;

fn first_non_constructor_rule(s: &Ptrs) -> Option<usize> {
    s.rules()
        .iter()
        .position(|r| !r.lhs().args().iter().all(|a| s.is_constructor_term(a)))
}

/// Variables occurring in `lhs` below a tainted argument position of its root.
fn may_defined_vars(lhs: &Term, taint: &TaintMap) -> BTreeSet<Var> {
    let f = lhs.root().expect("validated lhs");
    lhs.args()
        .iter()
        .enumerate()
        .filter(|(i, _)| taint.get(&(f.clone(), i + 1)) == Some(&Taint::MayContainDefined))
        .flat_map(|(_, a)| a.vars())
        .collect()
}

fn mark_calls(s: &Ptrs, r: &Term, dirty: &BTreeSet<Var>, out: &mut BTreeSet<(Symbol, usize)>) {
    if let Some(g) = r.root() {
        if s.is_defined(g) {
            for (k, a) in r.args().iter().enumerate() {
                let tainted = a.any_symbol(&mut |h| s.is_defined(h))
                    || a.vars().iter().any(|v| dirty.contains(v));
                if tainted {
                    out.insert((g.clone(), k + 1));
                }
            }
        }
        for a in r.args() {
            mark_calls(s, a, dirty, out);
        }
    }
}

/// Least fixpoint of the taint propagation over all right-hand sides.
///
/// Invariant established for every reachable term from a basic start: below a
/// `Clean` argument of a defined symbol there is only a constructor term.
pub fn taint_analysis(s: &Ptrs) -> Result<TaintMap, SpareError> {
    if let Some(i) = first_non_constructor_rule(s) {
        return Err(SpareError::NotApplicable(i));
    }
    let mut taint: TaintMap = s
        .defined_symbols()
        .iter()
        .flat_map(|f| (1..=f.arity()).map(move |i| ((f.clone(), i), Taint::Clean)))
        .collect();
    loop {
        let mut hits = BTreeSet::new();
        for rule in s.rules() {
            let dirty = may_defined_vars(rule.lhs(), &taint);
            for r in rule.rhs_terms() {
                mark_calls(s, r, &dirty, &mut hits);
            }
        }
        let mut changed = false;
        for key in hits {
            let entry = taint.entry(key).or_insert(Taint::Clean);
            if *entry == Taint::Clean {
                *entry = Taint::MayContainDefined;
                changed = true;
            }
        }
        if !changed {
            return Ok(taint);
        }
    }
}

/// Variables occurring more than once in some right-hand side of rule `i`.
pub fn duplicated_vars(s: &Ptrs, i: usize) -> BTreeSet<Var> {
    s.rules()[i]
        .rhs_terms()
        .flat_map(|r| r.var_occurrences().into_iter().filter(|&(_, n)| n > 1).map(|(v, _)| v))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpareVerdict {
    Spare,
    Unknown,
}

impl fmt::Display for SpareVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpareVerdict::Spare => "Spare",
            SpareVerdict::Unknown => "Unknown",
        })
    }
}

/// Why the taint check could not prove spareness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpareBlocker {
    NotConstructorSystem { rule: usize },
    DuplicatedMayBeDefined { rule: usize, var: Var },
}

impl fmt::Display for SpareBlocker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpareBlocker::NotConstructorSystem { rule } => {
                write!(f, "rule {rule} is not a constructor rule")
            }
            SpareBlocker::DuplicatedMayBeDefined { rule, var } => write!(
                f,
                "rule {rule} duplicates {var}, which may be bound to a term with defined symbols"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpareProof {
    pub verdict: SpareVerdict,
    pub blocker: Option<SpareBlocker>,
}

pub fn prove_spare(s: &Ptrs) -> SpareProof {
    let unknown = |b| SpareProof {
        verdict: SpareVerdict::Unknown,
        blocker: Some(b),
    };
    let taint = match taint_analysis(s) {
        Ok(t) => t,
        Err(SpareError::NotApplicable(rule)) => {
            return unknown(SpareBlocker::NotConstructorSystem { rule })
        }
        Err(_) => unreachable!("taint analysis only fails on non-constructor systems"),
    };
    for (i, rule) in s.rules().iter().enumerate() {
        let dirty = may_defined_vars(rule.lhs(), &taint);
        if let Some(var) = duplicated_vars(s, i).into_iter().find(|v| dirty.contains(v)) {
            return unknown(SpareBlocker::DuplicatedMayBeDefined { rule: i, var });
        }
    }
    SpareProof {
        verdict: SpareVerdict::Spare,
        blocker: None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub term: Term,
    pub position: Position,
    pub rule_index: usize,
    /// `None` for the violating step, whose branch does not matter.
    pub branch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparenessCounterexample {
    pub start_term: Term,
    pub step_trace: Vec<TraceStep>,
    /// Index into `step_trace`; always the last step.
    pub violating_step: usize,
    pub duplicated_variable: Var,
}

impl SparenessCounterexample {
    pub fn violating(&self) -> &TraceStep {
        &self.step_trace[self.violating_step]
    }
}

fn falsify_from(s: &Ptrs, start: &Term, depth: usize) -> Option<SparenessCounterexample> {
    let dup: Vec<BTreeSet<Var>> = (0..s.rules().len()).map(|i| duplicated_vars(s, i)).collect();
    let mut seen: HashSet<Term> = HashSet::from([start.clone()]);
    let mut frontier: Vec<(Term, Vec<TraceStep>)> = vec![(start.clone(), Vec::new())];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (t, trace) in frontier {
            for r in redexes(s, &t) {
                let bad = dup[r.rule_index].iter().find(|v| {
                    r.substitution
                        .get(v)
                        .is_some_and(|u| !s.is_normal_form(u))
                });
                if let Some(v) = bad {
                    let mut step_trace = trace.clone();
                    step_trace.push(TraceStep {
                        term: t.clone(),
                        position: r.position.clone(),
                        rule_index: r.rule_index,
                        branch: None,
                    });
                    return Some(SparenessCounterexample {
                        start_term: start.clone(),
                        violating_step: step_trace.len() - 1,
                        step_trace,
                        duplicated_variable: v.clone(),
                    });
                }
                let rule = &s.rules()[r.rule_index];
                for (j, rhs) in rule.rhs_terms().enumerate() {
                    let u = t
                        .replace_at(&r.position, rhs.apply_subst(&r.substitution))
                        .expect("enumerated position");
                    if seen.insert(u.clone()) {
                        let mut tr = trace.clone();
                        tr.push(TraceStep {
                            term: t.clone(),
                            position: r.position.clone(),
                            rule_index: r.rule_index,
                            branch: Some(j),
                        });
                        next.push((u, tr));
                    }
                }
            }
        }
        frontier = next;
    }
    None
}

/// Searches all rewrite branches up to `depth` steps from each start for a
/// non-spare step. The earliest start with a witness wins.
pub fn falsify_spare(
    s: &Ptrs,
    depth: usize,
    starts: &[Term],
) -> Result<Option<SparenessCounterexample>, SpareError> {
    if depth == 0 {
        return Err(SpareError::ZeroDepth);
    }
    if let Some(t) = starts.iter().find(|t| !s.is_basic(t)) {
        return Err(SpareError::NonBasicStart(t.clone()));
    }
    let found: Vec<Option<SparenessCounterexample>> = starts
        .par_iter()
        .map(|t| falsify_from(s, t, depth))
        .collect();
    Ok(found.into_iter().flatten().next())
}

/// Ground constructor terms of depth at most `depth` (constants have depth 1),
/// shallowest first.
pub fn ground_constructor_terms(s: &Ptrs, depth: usize) -> Vec<Term> {
    let cons: Vec<&Symbol> = s.constructor_symbols().iter().collect();
    let mut all: Vec<Term> = Vec::new();
    let mut seen: HashSet<Term> = HashSet::new();
    for _ in 0..depth {
        let mut level: Vec<Term> = Vec::new();
        for f in &cons {
            for args in tuples(&all, f.arity()) {
                let t = Term::app((*f).clone(), args).expect("arity from symbol");
                if !seen.contains(&t) {
                    level.push(t);
                }
                if all.len() + level.len() >= MAX_STARTS {
                    break;
                }
            }
        }
        if level.is_empty() {
            break;
        }
        seen.extend(level.iter().cloned());
        all.extend(level);
    }
    all
}

fn tuples(pool: &[Term], n: usize) -> Vec<Vec<Term>> {
    let mut out: Vec<Vec<Term>> = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                pool.iter().map(move |t| {
                    let mut p = prefix.clone();
                    p.push(t.clone());
                    p
                })
            })
            .take(MAX_STARTS)
            .collect();
    }
    out
}

/// Every basic term `f(t₁..t_n)` with ground constructor arguments of depth ≤ `arg_depth`.
pub fn default_basic_starts(s: &Ptrs, arg_depth: usize) -> Vec<Term> {
    let pool = ground_constructor_terms(s, arg_depth);
    let mut out = Vec::new();
    for f in s.defined_symbols() {
        for args in tuples(&pool, f.arity()) {
            out.push(Term::app(f.clone(), args).expect("arity from symbol"));
            if out.len() >= MAX_STARTS {
                return out;
            }
        }
    }
    out
}
