//! Syntactic properties: linearity, erasure, duplication, overlaps and bounded local confluence.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::engine::{redexes, step};
use crate::model::Ptrs;
use crate::term::{unify, Position, Substitution, Term, Var};

pub const DEFAULT_JOIN_DEPTH: usize = 10;
const JOIN_SET_CAP: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropsError {
    #[error("rule {0} is probabilistic; only systems with rhs {{1:r}} are supported")]
    Probabilistic(usize),
}

/// `ℓ_outer|_position` unifies with the renamed `ℓ_inner`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub outer_rule_index: usize,
    pub inner_rule_index: usize,
    pub position: Position,
    pub mgu: Substitution,
}

impl fmt::Display for Overlap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rule {} at {} with rule {}",
            self.outer_rule_index, self.position, self.inner_rule_index
        )
    }
}

pub const OUTER_SUFFIX: &str = "%1";
pub const INNER_SUFFIX: &str = "%2";

/// Every overlap between every ordered rule pair, ordered by
/// (outer rule, inner rule, position).
pub fn critical_overlaps(s: &Ptrs) -> Vec<Overlap> {
    let rules = s.rules();
    let mut out = Vec::new();
    for (i, outer) in rules.iter().enumerate() {
        let l1 = outer.lhs().rename_vars(OUTER_SUFFIX);
        let positions: Vec<Position> = l1
            .positions()
            .into_iter()
            .filter(|p| !l1.subterm_at(p).expect("own position").is_var())
            .collect();
        for (j, inner) in rules.iter().enumerate() {
            let l2 = inner.lhs().rename_vars(INNER_SUFFIX);
            for p in &positions {
                if i == j && p.is_root() {
                    continue;
                }
                let sub = l1.subterm_at(p).expect("own position");
                if let Some(mgu) = unify(sub, &l2) {
                    out.push(Overlap {
                        outer_rule_index: i,
                        inner_rule_index: j,
                        position: p.clone(),
                        mgu,
                    });
                }
            }
        }
    }
    out
}

/// A variable occurring twice in a left-hand side.
pub fn left_linearity_witness(s: &Ptrs) -> Option<(usize, Var)> {
    s.rules().iter().enumerate().find_map(|(i, r)| {
        r.lhs()
            .var_occurrences()
            .into_iter()
            .find(|&(_, n)| n > 1)
            .map(|(v, _)| (i, v))
    })
}

/// Offending `(rule, branch, variable)`.
pub type BranchWitness = (usize, usize, Var);

fn branch_witness(s: &Ptrs, bad: impl Fn(&Term, &Term) -> Option<Var>) -> Option<BranchWitness> {
    s.rules().iter().enumerate().find_map(|(i, r)| {
        r.rhs_terms()
            .enumerate()
            .find_map(|(j, rhs)| bad(r.lhs(), rhs).map(|v| (i, j, v)))
    })
}

pub fn right_linearity_witness(s: &Ptrs) -> Option<BranchWitness> {
    branch_witness(s, |_, r| {
        r.var_occurrences().into_iter().find(|&(_, n)| n > 1).map(|(v, _)| v)
    })
}

/// A left-hand side variable missing from some right-hand side.
pub fn erasing_witness(s: &Ptrs) -> Option<BranchWitness> {
    branch_witness(s, |l, r| {
        let rv = r.vars();
        l.vars().into_iter().find(|v| !rv.contains(v))
    })
}

/// A variable occurring more often in some right-hand side than in its lhs.
pub fn duplicating_witness(s: &Ptrs) -> Option<BranchWitness> {
    branch_witness(s, |l, r| {
        let lo = l.var_occurrences();
        r.var_occurrences()
            .into_iter()
            .find(|(v, n)| *n > lo.get(v).copied().unwrap_or(0))
            .map(|(v, _)| v)
    })
}

pub fn is_left_linear(s: &Ptrs) -> bool {
    left_linearity_witness(s).is_none()
}

pub fn is_right_linear(s: &Ptrs) -> bool {
    right_linearity_witness(s).is_none()
}

pub fn is_non_erasing(s: &Ptrs) -> bool {
    erasing_witness(s).is_none()
}

pub fn is_non_duplicating(s: &Ptrs) -> bool {
    duplicating_witness(s).is_none()
}

pub fn is_non_overlapping(s: &Ptrs) -> bool {
    critical_overlaps(s).is_empty()
}

pub fn is_overlay(s: &Ptrs) -> bool {
    critical_overlaps(s).iter().all(|o| o.position.is_root())
}

pub fn is_orthogonal(s: &Ptrs) -> bool {
    is_non_overlapping(s) && is_left_linear(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wcr {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Wcr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Wcr::Yes => "Yes",
            Wcr::No => "No",
            Wcr::Unknown => "Unknown",
        })
    }
}

/// `(ℓ₁σ[r₂σ]_π, r₁σ)` for a deterministic system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalPair {
    pub overlap: Overlap,
    pub left: Term,
    pub right: Term,
}

fn require_nonprob(s: &Ptrs) -> Result<(), PropsError> {
    match s.rules().iter().position(|r| !r.is_deterministic()) {
        Some(i) => Err(PropsError::Probabilistic(i)),
        None => Ok(()),
    }
}

pub fn critical_pairs(s: &Ptrs) -> Result<Vec<CriticalPair>, PropsError> {
    require_nonprob(s)?;
    Ok(critical_overlaps(s)
        .into_iter()
        .map(|o| {
            let outer = &s.rules()[o.outer_rule_index];
            let inner = &s.rules()[o.inner_rule_index];
            let l1 = outer.lhs().rename_vars(OUTER_SUFFIX).apply_subst(&o.mgu);
            let r1 = outer.rhs()[0].1.rename_vars(OUTER_SUFFIX).apply_subst(&o.mgu);
            let r2 = inner.rhs()[0].1.rename_vars(INNER_SUFFIX).apply_subst(&o.mgu);
            let left = l1.replace_at(&o.position, r2).expect("overlap position");
            CriticalPair {
                overlap: o,
                left,
                right: r1,
            }
        })
        .collect())
}

/// Terms reachable in at most `depth` steps; `None` if the set grew past the cap.
fn reachable(s: &Ptrs, t: &Term, depth: usize) -> Option<HashSet<Term>> {
    let mut seen: HashSet<Term> = HashSet::from([t.clone()]);
    let mut frontier = vec![t.clone()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for u in &frontier {
            for r in redexes(s, u) {
                let v = step(s, u, &r).expect("enumerated redex").into_entries().remove(0).1;
                if seen.insert(v.clone()) {
                    next.push(v);
                }
            }
        }
        if seen.len() > JOIN_SET_CAP {
            return None;
        }
        frontier = next;
    }
    Some(seen)
}

fn joinable(s: &Ptrs, a: &Term, b: &Term, depth: usize) -> bool {
    if a == b {
        return true;
    }
    match (reachable(s, a, depth), reachable(s, b, depth)) {
        (Some(ra), Some(rb)) => !ra.is_disjoint(&rb),
        _ => false,
    }
}

/// Local confluence bounded by `join_depth` steps on each side of every critical pair.
pub fn bounded_wcr(s: &Ptrs, join_depth: usize) -> Result<Wcr, PropsError> {
    let pairs = critical_pairs(s)?;
    let mut all_join = true;
    for cp in &pairs {
        if !joinable(s, &cp.left, &cp.right, join_depth) {
            all_join = false;
            if cp.left != cp.right && s.is_normal_form(&cp.left) && s.is_normal_form(&cp.right) {
                return Ok(Wcr::No);
            }
        }
    }
    Ok(if all_join { Wcr::Yes } else { Wcr::Unknown })
}

/// Offending rule and variable for each property that fails.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Witnesses {
    pub non_left_linear: Option<(usize, Var)>,
    pub non_right_linear: Option<BranchWitness>,
    pub erasing: Option<BranchWitness>,
    pub duplicating: Option<BranchWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyReport {
    pub left_linear: bool,
    pub right_linear: bool,
    pub non_erasing: bool,
    pub non_overlapping: bool,
    pub overlay: bool,
    pub orthogonal: bool,
    pub non_duplicating: bool,
    /// `None` for probabilistic systems.
    pub wcr: Option<Wcr>,
    pub overlaps: Vec<Overlap>,
    pub witnesses: Witnesses,
}

impl PropertyReport {
    pub fn linear(&self) -> bool {
        self.left_linear && self.right_linear
    }
}

pub fn check(s: &Ptrs) -> PropertyReport {
    check_with(s, DEFAULT_JOIN_DEPTH)
}

pub fn check_with(s: &Ptrs, join_depth: usize) -> PropertyReport {
    let overlaps = critical_overlaps(s);
    let witnesses = Witnesses {
        non_left_linear: left_linearity_witness(s),
        non_right_linear: right_linearity_witness(s),
        erasing: erasing_witness(s),
        duplicating: duplicating_witness(s),
    };
    let left_linear = witnesses.non_left_linear.is_none();
    let non_overlapping = overlaps.is_empty();
    PropertyReport {
        left_linear,
        right_linear: witnesses.non_right_linear.is_none(),
        non_erasing: witnesses.erasing.is_none(),
        non_overlapping,
        overlay: overlaps.iter().all(|o| o.position.is_root()),
        orthogonal: non_overlapping && left_linear,
        non_duplicating: witnesses.duplicating.is_none(),
        wcr: bounded_wcr(s, join_depth).ok(),
        overlaps,
        witnesses,
    }
}
