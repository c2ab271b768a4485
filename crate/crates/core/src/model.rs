//! Probabilistic rules, multi-distributions and whole-system checks.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::term::{Symbol, Term, TermKind, Var};

/// Exact probability.
pub type Prob = BigRational;

pub fn ratio(num: i64, den: i64) -> Prob {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// A weighted term list that need not sum to one (output of [`scale`]).
pub type Weighted = Vec<(Prob, Term)>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistributionError {
    #[error("a multi-distribution needs at least one entry")]
    Empty,
    #[error("probability {0} is outside (0,1]")]
    OutOfRange(Prob),
    #[error("probabilities sum to {0}")]
    BadSum(Prob),
}

/// A finite multiset of `(p : t)` pairs with `Σp = 1`.
///
/// Entry order is preserved and duplicates are kept; equality compares the
/// underlying multisets.
#[derive(Debug, Clone)]
pub struct MultiDistribution {
    entries: Vec<(Prob, Term)>,
}

impl MultiDistribution {
    pub fn new(entries: Vec<(Prob, Term)>) -> Result<Self, DistributionError> {
        if entries.is_empty() {
            return Err(DistributionError::Empty);
        }
        let mut sum = Prob::zero();
        for (p, _) in &entries {
            if !p.is_positive() || *p > Prob::one() {
                return Err(DistributionError::OutOfRange(p.clone()));
            }
            sum += p;
        }
        if !sum.is_one() {
            return Err(DistributionError::BadSum(sum));
        }
        Ok(MultiDistribution { entries })
    }

    /// Construction that skips the sum check; callers must already know it holds.
    pub(crate) fn from_trusted(entries: Vec<(Prob, Term)>) -> Self {
        debug_assert!(
            entries.iter().map(|(p, _)| p).sum::<Prob>().is_one(),
            "distribution sum drifted"
        );
        MultiDistribution { entries }
    }

    pub fn dirac(t: Term) -> Self {
        MultiDistribution {
            entries: vec![(Prob::one(), t)],
        }
    }

    pub fn entries(&self) -> &[(Prob, Term)] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<(Prob, Term)> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Prob, Term)> {
        self.entries.iter()
    }

    pub fn total(&self) -> Prob {
        self.entries.iter().map(|(p, _)| p).sum()
    }

    /// Merges equal terms, summing their probabilities, keeping first-occurrence order.
    pub fn coalesced(&self) -> Self {
        let mut index: HashMap<&Term, usize> = HashMap::new();
        let mut out: Vec<(Prob, Term)> = Vec::new();
        for (p, t) in &self.entries {
            match index.get(t) {
                Some(&i) => out[i].0 += p,
                None => {
                    index.insert(t, out.len());
                    out.push((p.clone(), t.clone()));
                }
            }
        }
        MultiDistribution { entries: out }
    }

    fn sorted(&self) -> Vec<(&Term, &Prob)> {
        let mut v: Vec<_> = self.entries.iter().map(|(p, t)| (t, p)).collect();
        v.sort();
        v
    }
}

impl PartialEq for MultiDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len() && self.sorted() == other.sorted()
    }
}

impl Eq for MultiDistribution {}

impl fmt::Display for MultiDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (p, t)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}:{t}")?;
        }
        f.write_str("}")
    }
}

/// `p·μ`.
pub fn scale(p: &Prob, mu: &MultiDistribution) -> Weighted {
    mu.entries
        .iter()
        .map(|(q, t)| (p * q, t.clone()))
        .collect()
}

/// Concatenates weighted parts into one distribution; the weights must sum to one.
pub fn merge(parts: Vec<Weighted>) -> Result<MultiDistribution, DistributionError> {
    MultiDistribution::new(parts.into_iter().flatten().collect())
}

/// `ℓ → {p₁:r₁, …, p_k:r_k}`. Construction is unchecked so that malformed
/// rules can be reported by [`Ptrs::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbRule {
    lhs: Term,
    rhs: Vec<(Prob, Term)>,
}

impl ProbRule {
    pub fn new(lhs: Term, rhs: Vec<(Prob, Term)>) -> Self {
        ProbRule { lhs, rhs }
    }

    /// A rule with the single branch `{1:r}`.
    pub fn deterministic(lhs: Term, rhs: Term) -> Self {
        ProbRule::new(lhs, vec![(Prob::one(), rhs)])
    }

    pub fn lhs(&self) -> &Term {
        &self.lhs
    }

    pub fn rhs(&self) -> &[(Prob, Term)] {
        &self.rhs
    }

    pub fn rhs_terms(&self) -> impl Iterator<Item = &Term> {
        self.rhs.iter().map(|(_, r)| r)
    }

    pub fn is_deterministic(&self) -> bool {
        self.rhs.len() == 1 && self.rhs[0].0.is_one()
    }
}

impl fmt::Display for ProbRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {{", self.lhs)?;
        for (i, (p, r)) in self.rhs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}: {r}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("rule {rule}: lhs is a variable")]
    LhsIsVariable { rule: usize },
    #[error("rule {rule}: rhs variable {var} does not occur in the lhs")]
    UnboundRhsVariable { rule: usize, var: Var },
    #[error("rule {rule}: probabilities sum to {sum}")]
    ProbabilitySum { rule: usize, sum: Prob },
    #[error("rule {rule}: probability {p} is outside (0,1]")]
    ProbabilityOutOfRange { rule: usize, p: Prob },
    #[error("rule {rule}: empty right-hand side")]
    EmptyRhs { rule: usize },
    #[error("symbol {name} is used with arities {arities:?}")]
    ArityConflict { name: String, arities: Vec<usize> },
    #[error("declared constructor {0} is the root of a left-hand side")]
    ConstructorIsDefined(Symbol),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid system: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct InvalidSystem(pub Vec<Violation>);

static NEXT_SYSTEM_ID: AtomicU64 = AtomicU64::new(1);

/// Integer sampling table for one rule: branch `j` is taken when a uniform
/// draw from `0..denominator` falls below `cumulative[j]`.
#[derive(Debug, Clone)]
pub(crate) struct BranchSampler {
    pub denominator: u64,
    pub cumulative: Vec<u64>,
}

#[derive(Debug)]
struct Inner {
    id: u64,
    rules: Vec<ProbRule>,
    declared_constructors: BTreeSet<Symbol>,
    defined: BTreeSet<Symbol>,
    constructors: BTreeSet<Symbol>,
    by_root: HashMap<Symbol, Vec<usize>>,
    samplers: Vec<Option<BranchSampler>>,
}

/// An ordered rule set with its signature split `Σ_D ⊎ Σ_C`.
///
/// Cloning is cheap and keeps the system identity used by the normal-form cache.
#[derive(Debug, Clone)]
pub struct Ptrs(Arc<Inner>);

impl PartialEq for Ptrs {
    fn eq(&self, other: &Self) -> bool {
        self.0.rules == other.0.rules
            && self.0.declared_constructors == other.0.declared_constructors
    }
}

impl Eq for Ptrs {}

impl Ptrs {
    /// Builds a system without validating it. Use [`Ptrs::validate`] or [`Ptrs::new`].
    pub fn from_rules_unchecked(
        rules: Vec<ProbRule>,
        declared_constructors: impl IntoIterator<Item = Symbol>,
    ) -> Self {
        let declared_constructors: BTreeSet<Symbol> = declared_constructors.into_iter().collect();
        let defined: BTreeSet<Symbol> = rules.iter().filter_map(|r| r.lhs.root().cloned()).collect();
        let mut all = declared_constructors.clone();
        for r in &rules {
            r.lhs.collect_symbols(&mut all);
            for t in r.rhs_terms() {
                t.collect_symbols(&mut all);
            }
        }
        let constructors = all.difference(&defined).cloned().collect();
        let mut by_root: HashMap<Symbol, Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            if let Some(f) = r.lhs.root() {
                by_root.entry(f.clone()).or_default().push(i);
            }
        }
        let samplers = rules.iter().map(|r| branch_sampler(&r.rhs)).collect();
        Ptrs(Arc::new(Inner {
            id: NEXT_SYSTEM_ID.fetch_add(1, Ordering::Relaxed),
            rules,
            declared_constructors,
            defined,
            constructors,
            by_root,
            samplers,
        }))
    }

    /// Builds and validates a system.
    pub fn new(
        rules: Vec<ProbRule>,
        declared_constructors: impl IntoIterator<Item = Symbol>,
    ) -> Result<Self, InvalidSystem> {
        let s = Ptrs::from_rules_unchecked(rules, declared_constructors);
        let violations = s.validate();
        if violations.is_empty() {
            Ok(s)
        } else {
            Err(InvalidSystem(violations))
        }
    }

    pub fn empty() -> Self {
        Ptrs::from_rules_unchecked(Vec::new(), Vec::new())
    }

    pub(crate) fn id(&self) -> u64 {
        self.0.id
    }

    pub fn rules(&self) -> &[ProbRule] {
        &self.0.rules
    }

    pub fn rule(&self, i: usize) -> Option<&ProbRule> {
        self.0.rules.get(i)
    }

    pub fn declared_constructors(&self) -> &BTreeSet<Symbol> {
        &self.0.declared_constructors
    }

    pub fn defined_symbols(&self) -> &BTreeSet<Symbol> {
        &self.0.defined
    }

    pub fn constructor_symbols(&self) -> &BTreeSet<Symbol> {
        &self.0.constructors
    }

    /// `(Σ_D, Σ_C)`.
    pub fn signature_split(&self) -> (&BTreeSet<Symbol>, &BTreeSet<Symbol>) {
        (&self.0.defined, &self.0.constructors)
    }

    pub fn signature(&self) -> BTreeSet<Symbol> {
        self.0.defined.union(&self.0.constructors).cloned().collect()
    }

    pub fn is_defined(&self, f: &Symbol) -> bool {
        self.0.defined.contains(f)
    }

    pub(crate) fn sampler(&self, rule: usize) -> Option<&BranchSampler> {
        self.0.samplers[rule].as_ref()
    }

    /// Rules whose lhs root is `f`, in rule order.
    pub fn rules_for(&self, f: &Symbol) -> &[usize] {
        self.0.by_root.get(f).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every rule has a single branch `{1:r}`.
    pub fn is_nonprobabilistic(&self) -> bool {
        self.0.rules.iter().all(ProbRule::is_deterministic)
    }

    /// Adds rules and declared constructors of `other` after those of `self`.
    pub fn union(&self, other: &Ptrs) -> Ptrs {
        let rules = self.rules().iter().chain(other.rules()).cloned().collect();
        let defined: BTreeSet<Symbol> = self
            .defined_symbols()
            .union(other.defined_symbols())
            .cloned()
            .collect();
        let declared = self
            .declared_constructors()
            .union(other.declared_constructors())
            .filter(|c| !defined.contains(*c))
            .cloned()
            .collect::<Vec<_>>();
        Ptrs::from_rules_unchecked(rules, declared)
    }

    /// All violations of the well-formedness conditions, in rule order.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut arities: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        let mut note = |t: &Term| {
            for s in t.symbols() {
                arities.entry(s.name().to_string()).or_default().insert(s.arity());
            }
        };
        for (i, r) in self.rules().iter().enumerate() {
            note(&r.lhs);
            r.rhs_terms().for_each(&mut note);
            if r.lhs.is_var() {
                out.push(Violation::LhsIsVariable { rule: i });
            }
            if r.rhs.is_empty() {
                out.push(Violation::EmptyRhs { rule: i });
            }
            let lhs_vars = r.lhs.vars();
            let mut unbound = BTreeSet::new();
            for t in r.rhs_terms() {
                unbound.extend(t.vars().into_iter().filter(|v| !lhs_vars.contains(v)));
            }
            out.extend(
                unbound
                    .into_iter()
                    .map(|var| Violation::UnboundRhsVariable { rule: i, var }),
            );
            for (p, _) in &r.rhs {
                if !p.is_positive() || *p > Prob::one() {
                    out.push(Violation::ProbabilityOutOfRange { rule: i, p: p.clone() });
                }
            }
            let sum: Prob = r.rhs.iter().map(|(p, _)| p).sum();
            if !r.rhs.is_empty() && !sum.is_one() {
                out.push(Violation::ProbabilitySum { rule: i, sum });
            }
        }
        for c in &self.0.declared_constructors {
            arities.entry(c.name().to_string()).or_default().insert(c.arity());
            if self.0.defined.contains(c) {
                out.push(Violation::ConstructorIsDefined(c.clone()));
            }
        }
        out.extend(arities.into_iter().filter(|(_, a)| a.len() > 1).map(|(name, a)| {
            Violation::ArityConflict {
                name,
                arities: a.into_iter().collect(),
            }
        }));
        out
    }

    /// Rule indices whose lhs matches `t` at the root, with the matcher.
    pub fn root_matches<'a>(
        &'a self,
        t: &'a Term,
    ) -> impl Iterator<Item = (usize, crate::term::Substitution)> + 'a {
        let candidates = t.root().map(|f| self.rules_for(f)).unwrap_or(&[]);
        candidates
            .iter()
            .filter_map(move |&i| self.0.rules[i].lhs.matches(t).map(|s| (i, s)))
    }

    pub fn is_root_redex(&self, t: &Term) -> bool {
        self.root_matches(t).next().is_some()
    }

    /// No subterm of `t` is an instance of a left-hand side.
    pub fn is_normal_form(&self, t: &Term) -> bool {
        let id = self.id();
        if let Some(nf) = t.nf_cached(id) {
            return nf;
        }
        let nf = match t.kind() {
            TermKind::Var(_) => true,
            TermKind::App(_, args) => {
                !self.is_root_redex(t) && args.iter().all(|a| self.is_normal_form(a))
            }
        };
        t.set_nf_cached(id, nf);
        nf
    }

    /// Ground or open term built from constructors and variables only.
    pub fn is_constructor_term(&self, t: &Term) -> bool {
        !t.any_symbol(&mut |f| self.is_defined(f))
    }

    /// Defined root over constructor-only arguments.
    pub fn is_basic(&self, t: &Term) -> bool {
        match t.root() {
            Some(f) => self.is_defined(f) && t.args().iter().all(|a| self.is_constructor_term(a)),
            None => false,
        }
    }

    /// Every lhs argument is a constructor term.
    pub fn is_constructor_system(&self) -> bool {
        self.rules()
            .iter()
            .all(|r| r.lhs.args().iter().all(|a| self.is_constructor_term(a)))
    }

    /// `|μ|_S`.
    pub fn nf_mass(&self, mu: &MultiDistribution) -> Prob {
        mu.iter()
            .filter(|(_, t)| self.is_normal_form(t))
            .map(|(p, _)| p)
            .sum()
    }
}

fn branch_sampler(rhs: &[(Prob, Term)]) -> Option<BranchSampler> {
    let mut den = BigInt::one();
    for (p, _) in rhs {
        let d = p.denom();
        den = num_integer_lcm(&den, d);
    }
    let denominator = den.to_u64()?;
    let mut acc = 0u64;
    let mut cumulative = Vec::with_capacity(rhs.len());
    for (p, _) in rhs {
        let scaled = p * BigRational::from_integer(den.clone());
        acc = acc.checked_add(scaled.to_integer().to_u64()?)?;
        cumulative.push(acc);
    }
    (acc == denominator).then_some(BranchSampler {
        denominator,
        cumulative,
    })
}

fn num_integer_lcm(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    a.lcm(b)
}
