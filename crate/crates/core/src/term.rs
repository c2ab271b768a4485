//! First-order terms, positions, substitutions, matching and unification.
//!
//! Terms are immutable and reference counted. Subterms are shared freely, so a
//! term produced by a duplicating rule (`d(x) -> c(x,x)`) costs one node per
//! step rather than doubling in memory. Every node caches its structural hash
//! and tree size, which keeps equality checks between large shared terms cheap
//! in the common case.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("position {position} does not address a node of the term")]
    InvalidPosition { position: Position },
    #[error("symbol {name} has arity {arity} but was applied to {given} arguments")]
    ArityMismatch {
        name: String,
        arity: usize,
        given: usize,
    },
}

/// A function symbol. Two symbols are equal iff name and arity agree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    name: Arc<str>,
    arity: usize,
}

impl Symbol {
    pub fn new(name: impl Into<Arc<str>>, arity: usize) -> Self {
        Symbol {
            name: name.into(),
            arity,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: impl Into<Arc<str>>) -> Self {
        Var(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug)]
pub enum TermKind {
    Var(Var),
    App(Symbol, Vec<Term>),
}

struct Node {
    kind: TermKind,
    hash: u64,
    size: u64,
    depth: usize,
    ground: bool,
    // (system id << 2) | state, where state 1 = normal form, 2 = reducible.
    nf_stamp: AtomicU64,
}

/// A first-order term over a finite signature.
#[derive(Clone)]
pub struct Term(Arc<Node>);

fn mix(mut h: u64, v: u64) -> u64 {
    // FNV-style combine followed by a murmur finalizer step.
    h ^= v;
    h = h.wrapping_mul(0x100_0000_01b3);
    h ^= h >> 29;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^ (h >> 32)
}

fn str_hash(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| mix(h, u64::from(b)))
}

impl Term {
    fn from_kind(kind: TermKind) -> Self {
        let (hash, size, depth, ground) = match &kind {
            TermKind::Var(v) => (mix(1, str_hash(v.name())), 1, 1, false),
            TermKind::App(sym, args) => {
                let mut h = mix(2, str_hash(sym.name()));
                h = mix(h, sym.arity() as u64);
                let mut size: u64 = 1;
                let mut depth = 0;
                let mut ground = true;
                for a in args {
                    h = mix(h, a.0.hash);
                    size = size.saturating_add(a.0.size);
                    depth = depth.max(a.0.depth);
                    ground &= a.0.ground;
                }
                (h, size, depth + 1, ground)
            }
        };
        Term(Arc::new(Node {
            kind,
            hash,
            size,
            depth,
            ground,
            nf_stamp: AtomicU64::new(0),
        }))
    }

    pub fn var(name: impl Into<Arc<str>>) -> Self {
        Term::from_kind(TermKind::Var(Var::new(name)))
    }

    pub fn from_var(v: Var) -> Self {
        Term::from_kind(TermKind::Var(v))
    }

    /// Applies `symbol` to `args`, checking the arity.
    pub fn app(symbol: Symbol, args: Vec<Term>) -> Result<Self, TermError> {
        if symbol.arity() != args.len() {
            return Err(TermError::ArityMismatch {
                name: symbol.name().to_string(),
                arity: symbol.arity(),
                given: args.len(),
            });
        }
        Ok(Term::from_kind(TermKind::App(symbol, args)))
    }

    /// Builds `name(args..)` with the arity taken from `args`.
    pub fn apply(name: impl Into<Arc<str>>, args: Vec<Term>) -> Self {
        let symbol = Symbol::new(name, args.len());
        Term::from_kind(TermKind::App(symbol, args))
    }

    pub fn constant(name: impl Into<Arc<str>>) -> Self {
        Term::apply(name, Vec::new())
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    pub fn is_var(&self) -> bool {
        matches!(self.0.kind, TermKind::Var(_))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match &self.0.kind {
            TermKind::Var(v) => Some(v),
            TermKind::App(..) => None,
        }
    }

    pub fn root(&self) -> Option<&Symbol> {
        match &self.0.kind {
            TermKind::Var(_) => None,
            TermKind::App(s, _) => Some(s),
        }
    }

    pub fn args(&self) -> &[Term] {
        match &self.0.kind {
            TermKind::Var(_) => &[],
            TermKind::App(_, args) => args,
        }
    }

    /// Number of nodes of the term read as a tree (saturating).
    pub fn size(&self) -> u64 {
        self.0.size
    }

    pub fn is_ground(&self) -> bool {
        self.0.ground
    }

    pub fn depth(&self) -> usize {
        self.0.depth
    }

    pub fn ptr_eq(a: &Term, b: &Term) -> bool {
        Arc::ptr_eq(&a.0, &b.0)
    }

    /// All positions in length-lexicographic order, `ε` first.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = vec![Position::root()];
        let mut frontier: Vec<(Position, &Term)> = vec![(Position::root(), self)];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (pos, t) in frontier {
                for (i, a) in t.args().iter().enumerate() {
                    let p = pos.child(i + 1);
                    out.push(p.clone());
                    next.push((p, a));
                }
            }
            frontier = next;
        }
        out
    }

    pub fn subterm_at(&self, pos: &Position) -> Result<&Term, TermError> {
        let mut cur = self;
        for &i in pos.indices() {
            cur = cur
                .args()
                .get(i.wrapping_sub(1))
                .ok_or_else(|| TermError::InvalidPosition {
                    position: pos.clone(),
                })?;
        }
        Ok(cur)
    }

    pub fn replace_at(&self, pos: &Position, replacement: Term) -> Result<Term, TermError> {
        fn go(t: &Term, idx: &[usize], r: Term) -> Option<Term> {
            match idx.split_first() {
                None => Some(r),
                Some((&i, rest)) => {
                    let (sym, args) = match &t.0.kind {
                        TermKind::App(s, a) => (s, a),
                        TermKind::Var(_) => return None,
                    };
                    let child = args.get(i.checked_sub(1)?)?;
                    let new_child = go(child, rest, r)?;
                    let mut new_args = args.clone();
                    new_args[i - 1] = new_child;
                    Some(Term::from_kind(TermKind::App(sym.clone(), new_args)))
                }
            }
        }
        go(self, pos.indices(), replacement).ok_or_else(|| TermError::InvalidPosition {
            position: pos.clone(),
        })
    }

    /// Replaces every listed position at once. Positions must be pairwise parallel.
    pub fn replace_all(&self, positions: &[Position], replacement: &Term) -> Result<Term, TermError> {
        let mut out = self.clone();
        for p in positions {
            out = out.replace_at(p, replacement.clone())?;
        }
        Ok(out)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.var_occurrences().into_keys().collect()
    }

    /// Number of occurrences of each variable.
    pub fn var_occurrences(&self) -> BTreeMap<Var, usize> {
        fn go(t: &Term, acc: &mut BTreeMap<Var, usize>) {
            if t.is_ground() {
                return;
            }
            match t.kind() {
                TermKind::Var(v) => *acc.entry(v.clone()).or_insert(0) += 1,
                TermKind::App(_, args) => args.iter().for_each(|a| go(a, acc)),
            }
        }
        let mut acc = BTreeMap::new();
        go(self, &mut acc);
        acc
    }

    pub fn is_linear(&self) -> bool {
        self.var_occurrences().values().all(|&n| n <= 1)
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        if self.is_ground() {
            return false;
        }
        match self.kind() {
            TermKind::Var(w) => w == v,
            TermKind::App(_, args) => args.iter().any(|a| a.contains_var(v)),
        }
    }

    /// Every function symbol occurring in the term.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut acc = BTreeSet::new();
        self.collect_symbols(&mut acc);
        acc
    }

    pub(crate) fn collect_symbols(&self, acc: &mut BTreeSet<Symbol>) {
        if let TermKind::App(s, args) = self.kind() {
            acc.insert(s.clone());
            for a in args {
                a.collect_symbols(acc);
            }
        }
    }

    /// True iff some node satisfies `pred`.
    pub fn any_symbol(&self, pred: &mut impl FnMut(&Symbol) -> bool) -> bool {
        match self.kind() {
            TermKind::Var(_) => false,
            TermKind::App(s, args) => pred(s) || args.iter().any(|a| a.any_symbol(pred)),
        }
    }

    pub fn apply_subst(&self, sigma: &Substitution) -> Term {
        if self.is_ground() || sigma.is_empty() {
            return self.clone();
        }
        match self.kind() {
            TermKind::Var(v) => sigma.get(v).cloned().unwrap_or_else(|| self.clone()),
            TermKind::App(s, args) => Term::from_kind(TermKind::App(
                s.clone(),
                args.iter().map(|a| a.apply_subst(sigma)).collect(),
            )),
        }
    }

    /// Renames every variable `x` to `x` followed by `suffix`.
    pub fn rename_vars(&self, suffix: &str) -> Term {
        if self.is_ground() {
            return self.clone();
        }
        match self.kind() {
            TermKind::Var(v) => Term::var(format!("{}{}", v.name(), suffix)),
            TermKind::App(s, args) => Term::from_kind(TermKind::App(
                s.clone(),
                args.iter().map(|a| a.rename_vars(suffix)).collect(),
            )),
        }
    }

    /// Syntactic matching: finds σ with `self·σ = subject`.
    pub fn matches(&self, subject: &Term) -> Option<Substitution> {
        let mut sigma = Substitution::new();
        if match_into(self, subject, &mut sigma) {
            Some(sigma)
        } else {
            None
        }
    }

    pub(crate) fn nf_cached(&self, system_id: u64) -> Option<bool> {
        let stamp = self.0.nf_stamp.load(AtomicOrdering::Relaxed);
        if stamp >> 2 == system_id {
            match stamp & 3 {
                1 => Some(true),
                2 => Some(false),
                _ => None,
            }
        } else {
            None
        }
    }

    pub(crate) fn set_nf_cached(&self, system_id: u64, nf: bool) {
        let state = if nf { 1 } else { 2 };
        self.0
            .nf_stamp
            .store((system_id << 2) | state, AtomicOrdering::Relaxed);
    }
}

fn match_into(pattern: &Term, subject: &Term, sigma: &mut Substitution) -> bool {
    match (pattern.kind(), subject.kind()) {
        (TermKind::Var(v), _) => match sigma.get(v) {
            Some(bound) => bound == subject,
            None => {
                sigma.insert(v.clone(), subject.clone());
                true
            }
        },
        (TermKind::App(f, fa), TermKind::App(g, ga)) => {
            f == g && fa.iter().zip(ga).all(|(p, s)| match_into(p, s, sigma))
        }
        (TermKind::App(..), TermKind::Var(_)) => false,
    }
}

/// Most general unifier with occurs check. The result is idempotent.
pub fn unify(s: &Term, t: &Term) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    let mut work = vec![(s.clone(), t.clone())];
    while let Some((a, b)) = work.pop() {
        let a = a.apply_subst(&sigma);
        let b = b.apply_subst(&sigma);
        if a == b {
            continue;
        }
        match (a.kind(), b.kind()) {
            (TermKind::Var(x), _) => bind(&mut sigma, x, &b)?,
            (_, TermKind::Var(y)) => bind(&mut sigma, y, &a)?,
            (TermKind::App(f, fa), TermKind::App(g, ga)) => {
                if f != g {
                    return None;
                }
                work.extend(fa.iter().cloned().zip(ga.iter().cloned()));
            }
        }
    }
    Some(sigma)
}

fn bind(sigma: &mut Substitution, x: &Var, t: &Term) -> Option<()> {
    if t.contains_var(x) {
        return None;
    }
    let single = Substitution::singleton(x.clone(), t.clone());
    for image in sigma.0.values_mut() {
        *image = image.apply_subst(&single);
    }
    sigma.insert(x.clone(), t.clone());
    Some(())
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        if Term::ptr_eq(self, other) {
            return true;
        }
        if self.0.hash != other.0.hash || self.0.size != other.0.size {
            return false;
        }
        match (self.kind(), other.kind()) {
            (TermKind::Var(a), TermKind::Var(b)) => a == b,
            (TermKind::App(f, fa), TermKind::App(g, ga)) => f == g && fa == ga,
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        if Term::ptr_eq(self, other) {
            return Ordering::Equal;
        }
        match (self.kind(), other.kind()) {
            (TermKind::Var(a), TermKind::Var(b)) => a.cmp(b),
            (TermKind::Var(_), TermKind::App(..)) => Ordering::Less,
            (TermKind::App(..), TermKind::Var(_)) => Ordering::Greater,
            (TermKind::App(f, fa), TermKind::App(g, ga)) => f.cmp(g).then_with(|| fa.cmp(ga)),
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            TermKind::Var(v) => write!(f, "{v}"),
            TermKind::App(s, args) => {
                f.write_str(s.name())?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Relative placement of two positions under the left-to-right order on
/// parallel positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParallelOrder {
    Before,
    After,
    NotParallel,
}

/// A node address: a sequence of 1-based argument indices. `ε` is empty.
///
/// The `Ord` instance is length-lexicographic, so sorted position lists put
/// shallower nodes first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Position(Vec<usize>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn new(indices: Vec<usize>) -> Self {
        Position(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, i: usize) -> Position {
        let mut v = self.0.clone();
        v.push(i);
        Position(v)
    }

    pub fn concat(&self, other: &Position) -> Position {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Position(v)
    }

    /// Non-strict prefix test.
    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn is_parallel_to(&self, other: &Position) -> bool {
        !self.is_prefix_of(other) && !other.is_prefix_of(self)
    }

    /// `Before` iff `self ≺ other`: at the first index where the two differ,
    /// `self` goes to a smaller argument.
    pub fn compare_parallel(&self, other: &Position) -> ParallelOrder {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.cmp(b) {
                Ordering::Less => return ParallelOrder::Before,
                Ordering::Greater => return ParallelOrder::After,
                Ordering::Equal => {}
            }
        }
        ParallelOrder::NotParallel
    }

    /// Plain lexicographic order (prefixes first), the pre-order traversal order.
    pub fn cmp_lexicographic(&self, other: &Position) -> Ordering {
        self.0.cmp(&other.0)
    }

    /// Parses `eps`, `ε`, or dot-separated indices such as `1.2.1`.
    pub fn parse(s: &str) -> Option<Position> {
        let s = s.trim();
        if s == "eps" || s == "ε" || s.is_empty() {
            return Some(Position::root());
        }
        let indices = s
            .split('.')
            .map(|p| p.trim().parse::<usize>().ok().filter(|&i| i > 0))
            .collect::<Option<Vec<_>>>()?;
        Some(Position(indices))
    }
}

impl Ord for Position {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Position {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{idx}")?;
        }
        Ok(())
    }
}

/// A finite map from variables to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Substitution(BTreeMap<Var, Term>);

impl Substitution {
    pub fn new() -> Self {
        Substitution(BTreeMap::new())
    }

    pub fn singleton(v: Var, t: Term) -> Self {
        let mut s = Substitution::new();
        s.insert(v, t);
        s
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.0.get(v)
    }

    pub fn insert(&mut self, v: Var, t: Term) -> Option<Term> {
        self.0.insert(v, t)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.0.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.0.keys()
    }

    /// Applying twice equals applying once.
    pub fn is_idempotent(&self) -> bool {
        self.0
            .values()
            .all(|t| self.0.keys().all(|v| !t.contains_var(v)))
    }
}

impl FromIterator<(Var, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Var, Term)>>(iter: I) -> Self {
        Substitution(iter.into_iter().collect())
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} ↦ {t}")?;
        }
        f.write_str("}")
    }
}
