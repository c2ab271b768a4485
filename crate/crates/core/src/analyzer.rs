//! Theorem engine: combines property checks into licensed implications between
//! termination claims and closes them transitively.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::Ptrs;
use crate::props::{self, PropertyReport, Wcr, DEFAULT_JOIN_DEPTH};
use crate::spare::{
    default_basic_starts, falsify_spare, prove_spare, SpareProof, SpareVerdict,
    SparenessCounterexample, DEFAULT_ARG_DEPTH, DEFAULT_FALSIFY_DEPTH,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyzerError {
    #[error("rule {0} is probabilistic; expected rhs {{1:r}} everywhere")]
    Probabilistic(usize),
    #[error("unknown claim {0:?}")]
    BadClaim(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Termination of a non-probabilistic system.
    Sn,
    Ast,
    Past,
    Sast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strat {
    Full,
    Innermost,
    LeftmostInnermost,
    /// Some sequence per start term terminates (WN / wAST / wPAST).
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scope {
    AllTerms,
    BasicTerms,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::AllTerms => "all",
            Scope::BasicTerms => "basic",
        })
    }
}

/// A termination property such as `iAST`, `fPAST w.r.t. ∥` or `SN@basic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Claim {
    pub mode: Mode,
    pub strat: Strat,
    /// With respect to simultaneous rewriting.
    pub par: bool,
    /// Restricted to basic start terms.
    pub basic: bool,
}

impl Claim {
    pub const fn new(mode: Mode, strat: Strat) -> Self {
        Claim {
            mode,
            strat,
            par: false,
            basic: false,
        }
    }

    pub const fn par(self) -> Self {
        Claim { par: true, ..self }
    }

    pub const fn basic(self) -> Self {
        Claim {
            basic: true,
            ..self
        }
    }

    fn with_mode(self, mode: Mode) -> Self {
        Claim { mode, ..self }
    }

    fn with_strat(self, strat: Strat) -> Self {
        Claim { strat, ..self }
    }

    pub fn is_valid(&self) -> bool {
        match (self.mode, self.strat) {
            (Mode::Sn, _) => !self.par,
            (Mode::Sast, Strat::Weak) => false,
            (_, Strat::LeftmostInnermost) => !self.par,
            _ => true,
        }
    }

    pub fn all() -> Vec<Claim> {
        let mut out = Vec::new();
        for mode in [Mode::Sn, Mode::Ast, Mode::Past, Mode::Sast] {
            for strat in [Strat::Full, Strat::Innermost, Strat::LeftmostInnermost, Strat::Weak] {
                for par in [false, true] {
                    for basic in [false, true] {
                        let c = Claim {
                            mode,
                            strat,
                            par,
                            basic,
                        };
                        if c.is_valid() {
                            out.push(c);
                        }
                    }
                }
            }
        }
        out
    }

    /// ASCII identifier, e.g. `iAST-par@basic`.
    pub fn id(&self) -> String {
        let mut s = self.core_name();
        if self.par {
            s.push_str("-par");
        }
        if self.basic {
            s.push_str("@basic");
        }
        s
    }

    fn core_name(&self) -> String {
        let prefix = match self.strat {
            Strat::Full => "f",
            Strat::Innermost => "i",
            Strat::LeftmostInnermost => "li",
            Strat::Weak => "w",
        };
        match self.mode {
            Mode::Sn => match self.strat {
                Strat::Full => "SN".into(),
                Strat::Weak => "WN".into(),
                _ => format!("{prefix}SN"),
            },
            Mode::Ast => format!("{prefix}AST"),
            Mode::Past => format!("{prefix}PAST"),
            Mode::Sast => format!("{prefix}SAST"),
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.core_name())?;
        if self.basic {
            f.write_str("@basic")?;
        }
        if self.par {
            f.write_str(" w.r.t. ∥")?;
        }
        Ok(())
    }
}

impl FromStr for Claim {
    type Err = AnalyzerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Claim::all()
            .into_iter()
            .find(|c| c.id() == s.trim())
            .ok_or_else(|| AnalyzerError::BadClaim(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    NonOverlapping,
    LeftLinear,
    RightLinear,
    NonErasing,
    Orthogonal,
    Overlay,
    Wcr,
    Spare,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::NonOverlapping => "NO",
            Property::LeftLinear => "LL",
            Property::RightLinear => "RL",
            Property::NonErasing => "NE",
            Property::Orthogonal => "orthogonal",
            Property::Overlay => "OS",
            Property::Wcr => "WCR",
            Property::Spare => "spare",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth::True => "true",
            Truth::False => "false",
            Truth::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    pub property: Property,
    pub truth: Truth,
    /// Why the property fails or could not be established.
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Applicability {
    Applies,
    Blocked,
    UnknownPrecondition,
}

impl fmt::Display for Applicability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Applicability::Applies => "Applies",
            Applicability::Blocked => "Blocked",
            Applicability::UnknownPrecondition => "UnknownPrecondition",
        })
    }
}

/// `Applies` iff every precondition is true; any false one blocks.
pub fn applicability(preconditions: &[Evidence]) -> Applicability {
    if preconditions.iter().any(|e| e.truth == Truth::False) {
        Applicability::Blocked
    } else if preconditions.iter().all(|e| e.truth == Truth::True) {
        Applicability::Applies
    } else {
        Applicability::UnknownPrecondition
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Implication {
    pub from: Claim,
    pub to: Claim,
}

impl Implication {
    pub fn scope(&self) -> Scope {
        if self.from.basic && self.to.basic {
            Scope::BasicTerms
        } else {
            Scope::AllTerms
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoremId {
    /// Orthogonal TRSs: SN iff iSN.
    OrthogonalSn,
    /// Non-overlapping TRSs: SN iff iSN.
    NonOverlappingSn,
    /// Locally confluent overlay TRSs: SN iff iSN.
    OverlayWcrSn,
    /// Non-overlapping, non-erasing TRSs: SN iff WN.
    NonErasingWn,
    /// iSN iff liSN for every TRS.
    LeftmostSn,
    /// Orthogonal, right-linear PTRSs: full iff innermost.
    OrthogonalRightLinear,
    /// Non-overlapping, linear, non-erasing PTRSs: full iff weak.
    LinearNonErasing,
    /// Non-overlapping PTRSs: innermost iff leftmost-innermost.
    NonOverlappingLeftmost,
    /// Simultaneous to ordinary rewriting.
    SimultaneousToOrdinary,
    /// Non-overlapping, right-linear PTRSs: innermost simultaneous implies full.
    SimultaneousInnermostToFull,
    /// Weak termination carries over to simultaneous rewriting.
    WeakToSimultaneous,
    /// Orthogonal, spare PTRSs on basic terms: full iff innermost.
    SpareOrthogonal,
    /// Non-overlapping, spare PTRSs on basic terms: innermost simultaneous implies full.
    SpareNonOverlapping,
    /// S is fAST iff S ∪ G(S) is fAST on basic terms.
    GeneratorReduction,
}

impl TheoremId {
    /// The catalogue label used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            TheoremId::OrthogonalSn => "Thm 1",
            TheoremId::NonOverlappingSn => "Thm 2",
            TheoremId::OverlayWcrSn => "Thm 3",
            TheoremId::NonErasingWn => "Thm 4",
            TheoremId::LeftmostSn => "Thm 5",
            TheoremId::OrthogonalRightLinear => "Thm 6",
            TheoremId::LinearNonErasing => "Thm 8",
            TheoremId::NonOverlappingLeftmost => "Thm 9",
            TheoremId::SimultaneousToOrdinary => "Cor 11",
            TheoremId::SimultaneousInnermostToFull => "Thm 14",
            TheoremId::WeakToSimultaneous => "Cor 15",
            TheoremId::SpareOrthogonal => "Thm 20",
            TheoremId::SpareNonOverlapping => "Thm 24",
            TheoremId::GeneratorReduction => "Lemma 22",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub theorem: TheoremId,
    pub preconditions: Vec<Evidence>,
    pub implications: Vec<Implication>,
    pub applicability: Applicability,
    /// Free-form statement for results that relate different systems.
    pub note: Option<String>,
}

impl Verdict {
    fn new(theorem: TheoremId, preconditions: Vec<Evidence>, implications: Vec<Implication>) -> Self {
        Verdict {
            theorem,
            applicability: applicability(&preconditions),
            preconditions,
            implications,
            note: None,
        }
    }

    pub fn applies(&self) -> bool {
        self.applicability == Applicability::Applies
    }

    /// Implications grouped so that `a ⇒ b` with `b ⇒ a` prints as `a ⇔ b`.
    pub fn implication_summary(&self) -> String {
        let set: BTreeSet<(Claim, Claim)> = self.implications.iter().map(|i| (i.from, i.to)).collect();
        let mut parts = Vec::new();
        let mut done = BTreeSet::new();
        for i in &self.implications {
            if done.contains(&(i.from, i.to)) {
                continue;
            }
            if set.contains(&(i.to, i.from)) {
                done.insert((i.to, i.from));
                parts.push(format!("{} ⇔ {}", i.from, i.to));
            } else {
                parts.push(format!("{} ⇒ {}", i.from, i.to));
            }
            done.insert((i.from, i.to));
        }
        parts.join(", ")
    }
}

/// One edge of a proof chain: `by` is a theorem label or `Def` for arrows
/// that hold by definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStep {
    pub from: Claim,
    pub to: Claim,
    pub by: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derived {
    pub from: Claim,
    pub to: Claim,
    pub chain: Vec<ChainStep>,
}

impl Derived {
    /// Theorem labels along the chain, definitional steps omitted.
    pub fn theorems(&self) -> Vec<&str> {
        self.chain
            .iter()
            .filter(|s| s.by != DEF)
            .map(|s| s.by.as_str())
            .collect()
    }
}

/// A claim that follows from the user's assertions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conclusion {
    pub claim: Claim,
    pub chain: Vec<ChainStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FalsifierOutcome {
    Counterexample(Box<SparenessCounterexample>),
    NotFound { depth: usize, arg_depth: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisReport {
    pub scope: Scope,
    pub properties: PropertyReport,
    pub spareness: SpareProof,
    /// Advisory search run when spareness could not be proved on basic scope.
    pub falsifier: Option<FalsifierOutcome>,
    pub verdicts: Vec<Verdict>,
    pub closure: Vec<Derived>,
    pub assertions: Vec<Claim>,
    pub conclusions: Vec<Conclusion>,
    pub notes: Vec<String>,
}

impl AnalysisReport {
    pub fn verdict(&self, id: TheoremId) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.theorem == id)
    }

    pub fn derives(&self, from: Claim, to: Claim) -> bool {
        from == to
            || self.closure.iter().any(|d| d.from == from && d.to == to)
            || reach(&self.edges(), from, to).is_some()
    }

    fn edges(&self) -> Vec<(Claim, Claim, String)> {
        all_edges(&self.verdicts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalyzeOptions {
    pub join_depth: usize,
    pub falsify_depth: usize,
    pub arg_depth: usize,
    pub run_falsifier: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            join_depth: DEFAULT_JOIN_DEPTH,
            falsify_depth: DEFAULT_FALSIFY_DEPTH,
            arg_depth: DEFAULT_ARG_DEPTH,
            run_falsifier: true,
        }
    }
}

const DEF: &str = "Def";

fn ev(property: Property, holds: bool, witness: impl FnOnce() -> String) -> Evidence {
    Evidence {
        property,
        truth: if holds { Truth::True } else { Truth::False },
        witness: (!holds).then(witness),
    }
}

struct Facts<'a> {
    s: &'a Ptrs,
    p: &'a PropertyReport,
    spare: &'a SpareProof,
}

impl Facts<'_> {
    fn get(&self, prop: Property) -> Evidence {
        let s = self.s;
        let p = self.p;
        match prop {
            Property::NonOverlapping => ev(prop, p.non_overlapping, || {
                format!("overlap: {}", p.overlaps[0])
            }),
            Property::LeftLinear => ev(prop, p.left_linear, || {
                let (i, v) = p.witnesses.non_left_linear.clone().expect("witness");
                format!("rule {i}: lhs {} repeats {v}", s.rules()[i].lhs())
            }),
            Property::RightLinear => ev(prop, p.right_linear, || {
                let (i, j, v) = p.witnesses.non_right_linear.clone().expect("witness");
                format!("rule {i}: rhs {} repeats {v}", s.rules()[i].rhs()[j].1)
            }),
            Property::NonErasing => ev(prop, p.non_erasing, || {
                let (i, j, v) = p.witnesses.erasing.clone().expect("witness");
                let r = &s.rules()[i];
                format!("rule {i}: {} -> {} erases {v}", r.lhs(), r.rhs()[j].1)
            }),
            Property::Orthogonal => {
                let mut e = ev(prop, p.orthogonal, String::new);
                if !p.orthogonal {
                    let cause = if p.non_overlapping {
                        self.get(Property::LeftLinear)
                    } else {
                        self.get(Property::NonOverlapping)
                    };
                    e.witness = cause.witness;
                }
                e
            }
            Property::Overlay => ev(prop, p.overlay, || {
                let o = p.overlaps.iter().find(|o| !o.position.is_root()).expect("witness");
                format!("non-root overlap: {o}")
            }),
            Property::Wcr => match p.wcr {
                Some(Wcr::Yes) => ev(prop, true, String::new),
                Some(Wcr::No) => Evidence {
                    property: prop,
                    truth: Truth::False,
                    witness: Some("a critical pair consists of two distinct normal forms".into()),
                },
                Some(Wcr::Unknown) => Evidence {
                    property: prop,
                    truth: Truth::Unknown,
                    witness: Some("some critical pair did not join within the bound".into()),
                },
                None => Evidence {
                    property: prop,
                    truth: Truth::Unknown,
                    witness: Some("only decided for non-probabilistic systems".into()),
                },
            },
            Property::Spare => match self.spare.verdict {
                SpareVerdict::Spare => ev(prop, true, String::new),
                SpareVerdict::Unknown => Evidence {
                    property: prop,
                    truth: Truth::Unknown,
                    witness: self.spare.blocker.as_ref().map(|b| b.to_string()),
                },
            },
        }
    }

    fn all(&self, props: &[Property]) -> Vec<Evidence> {
        props.iter().map(|&p| self.get(p)).collect()
    }
}

const PROB_MODES: [Mode; 3] = [Mode::Ast, Mode::Past, Mode::Sast];
const AP_MODES: [Mode; 2] = [Mode::Ast, Mode::Past];

fn both(a: Claim, b: Claim) -> [Implication; 2] {
    [Implication { from: a, to: b }, Implication { from: b, to: a }]
}

fn one(from: Claim, to: Claim) -> Implication {
    Implication { from, to }
}

fn nonprob_verdicts(f: &Facts) -> Vec<Verdict> {
    use Property::*;
    let sn = Claim::new(Mode::Sn, Strat::Full);
    let isn = Claim::new(Mode::Sn, Strat::Innermost);
    let lisn = Claim::new(Mode::Sn, Strat::LeftmostInnermost);
    let wn = Claim::new(Mode::Sn, Strat::Weak);
    vec![
        Verdict::new(TheoremId::OrthogonalSn, f.all(&[Orthogonal]), both(isn, sn).to_vec()),
        Verdict::new(TheoremId::NonOverlappingSn, f.all(&[NonOverlapping]), both(isn, sn).to_vec()),
        Verdict::new(TheoremId::OverlayWcrSn, f.all(&[Overlay, Wcr]), both(isn, sn).to_vec()),
        Verdict::new(TheoremId::NonErasingWn, f.all(&[NonOverlapping, NonErasing]), both(wn, sn).to_vec()),
        Verdict::new(TheoremId::LeftmostSn, Vec::new(), both(lisn, isn).to_vec()),
    ]
}

fn prob_verdicts(f: &Facts, scope: Scope) -> Vec<Verdict> {
    use Property::*;
    let c = Claim::new;
    let per_mode = |modes: &[Mode], mk: &dyn Fn(Mode) -> Vec<Implication>| -> Vec<Implication> {
        modes.iter().flat_map(|&m| mk(m)).collect()
    };
    let mut out = vec![
        Verdict::new(
            TheoremId::OrthogonalRightLinear,
            f.all(&[NonOverlapping, LeftLinear, RightLinear]),
            per_mode(&PROB_MODES, &|m| both(c(m, Strat::Innermost), c(m, Strat::Full)).to_vec()),
        ),
        Verdict::new(
            TheoremId::LinearNonErasing,
            f.all(&[NonOverlapping, LeftLinear, RightLinear, NonErasing]),
            per_mode(&AP_MODES, &|m| both(c(m, Strat::Weak), c(m, Strat::Full)).to_vec()),
        ),
        Verdict::new(
            TheoremId::NonOverlappingLeftmost,
            f.all(&[NonOverlapping]),
            per_mode(&PROB_MODES, &|m| {
                both(c(m, Strat::LeftmostInnermost), c(m, Strat::Innermost)).to_vec()
            }),
        ),
        Verdict::new(
            TheoremId::SimultaneousToOrdinary,
            Vec::new(),
            per_mode(&AP_MODES, &|m| {
                vec![
                    one(c(m, Strat::Full).par(), c(m, Strat::Full)),
                    one(c(m, Strat::Innermost).par(), c(m, Strat::Innermost)),
                ]
            }),
        ),
        Verdict::new(
            TheoremId::SimultaneousInnermostToFull,
            f.all(&[NonOverlapping, RightLinear]),
            per_mode(&PROB_MODES, &|m| vec![one(c(m, Strat::Innermost).par(), c(m, Strat::Full))]),
        ),
        Verdict::new(
            TheoremId::WeakToSimultaneous,
            Vec::new(),
            per_mode(&AP_MODES, &|m| vec![one(c(m, Strat::Weak), c(m, Strat::Weak).par())]),
        ),
    ];
    if scope == Scope::BasicTerms {
        out.push(Verdict::new(
            TheoremId::SpareOrthogonal,
            f.all(&[Orthogonal, Spare]),
            per_mode(&PROB_MODES, &|m| {
                both(c(m, Strat::Innermost).basic(), c(m, Strat::Full).basic()).to_vec()
            }),
        ));
        out.push(Verdict::new(
            TheoremId::SpareNonOverlapping,
            f.all(&[NonOverlapping, Spare]),
            per_mode(&PROB_MODES, &|m| {
                vec![one(c(m, Strat::Innermost).par().basic(), c(m, Strat::Full).basic())]
            }),
        ));
    }
    let mut lemma = Verdict::new(TheoremId::GeneratorReduction, Vec::new(), Vec::new());
    lemma.note = Some("S is fAST iff S ∪ G(S) is fAST on basic terms (see `transform --generators`)".into());
    out.push(lemma);
    out
}

/// Arrows that hold by the definitions alone.
pub fn definitional_edges() -> Vec<(Claim, Claim, String)> {
    let mut out = Vec::new();
    let mut add = |a: Claim, b: Claim| {
        if a.is_valid() && b.is_valid() && a != b {
            out.push((a, b, DEF.to_string()));
        }
    };
    for c in Claim::all() {
        add(c, c.basic());
        match c.strat {
            Strat::Full => add(c, c.with_strat(Strat::Innermost)),
            Strat::Innermost => add(c, c.with_strat(Strat::LeftmostInnermost)),
            _ => {}
        }
        if c.strat != Strat::Weak && c.mode != Mode::Sast {
            add(c, c.with_strat(Strat::Weak));
        }
        match c.mode {
            Mode::Past => add(c, c.with_mode(Mode::Ast)),
            Mode::Sast => add(c, c.with_mode(Mode::Past)),
            _ => {}
        }
    }
    out
}

fn licensed_edges(verdicts: &[Verdict]) -> Vec<(Claim, Claim, String)> {
    verdicts
        .iter()
        .filter(|v| v.applies())
        .flat_map(|v| {
            v.implications
                .iter()
                .map(move |i| (i.from, i.to, v.theorem.label().to_string()))
        })
        .collect()
}

/// Licensed edges come first so that shortest chains prefer theorem steps.
fn all_edges(verdicts: &[Verdict]) -> Vec<(Claim, Claim, String)> {
    let mut e = licensed_edges(verdicts);
    e.extend(definitional_edges());
    e
}

/// Shortest chain from `from` to `to`, if any.
fn reach(edges: &[(Claim, Claim, String)], from: Claim, to: Claim) -> Option<Vec<ChainStep>> {
    let mut pred: BTreeMap<Claim, Option<(Claim, String)>> = BTreeMap::from([(from, None)]);
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        if c == to {
            let mut chain = Vec::new();
            let mut cur = c;
            while let Some(Some((p, by))) = pred.get(&cur).cloned() {
                chain.push(ChainStep { from: p, to: cur, by });
                cur = p;
            }
            chain.reverse();
            return Some(chain);
        }
        for (a, b, by) in edges {
            if *a == c && !pred.contains_key(b) {
                pred.insert(*b, Some((c, by.clone())));
                queue.push_back(*b);
            }
        }
    }
    None
}

fn reachable_set(edges: &[(Claim, Claim, String)], from: Claim) -> BTreeSet<Claim> {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        for (a, b, _) in edges {
            if *a == c && seen.insert(*b) {
                queue.push_back(*b);
            }
        }
    }
    seen
}

/// Implications that need at least one licensed theorem, each with a shortest
/// proof chain. Of the conclusions reachable from one hypothesis only the
/// strongest are kept: `a ⇒ b` is dropped when `a` also reaches a claim that
/// implies `b` by definition.
pub fn implication_closure(verdicts: &[Verdict]) -> Vec<Derived> {
    let def = definitional_edges();
    let all = all_edges(verdicts);
    let claims = Claim::all();
    let full: BTreeMap<Claim, BTreeSet<Claim>> =
        claims.iter().map(|&c| (c, reachable_set(&all, c))).collect();
    let trivial: BTreeMap<Claim, BTreeSet<Claim>> =
        claims.iter().map(|&c| (c, reachable_set(&def, c))).collect();
    let derived = |a: &Claim, b: &Claim| full[a].contains(b) && !trivial[a].contains(b);
    let mut out = Vec::new();
    for a in &claims {
        for b in &full[a] {
            if !derived(a, b) {
                continue;
            }
            if def.iter().any(|(x, y, _)| y == b && x != b && full[a].contains(x)) {
                continue;
            }
            let chain = reach(&all, *a, *b).expect("reachable");
            out.push(Derived {
                from: *a,
                to: *b,
                chain,
            });
        }
    }
    out
}

fn conclusions(verdicts: &[Verdict], assertions: &[Claim]) -> Vec<Conclusion> {
    let edges = all_edges(verdicts);
    let mut best: BTreeMap<Claim, Vec<ChainStep>> = BTreeMap::new();
    for &a in assertions {
        for c in reachable_set(&edges, a) {
            let chain = reach(&edges, a, c).expect("reachable");
            let better = best.get(&c).map_or(true, |old| chain.len() < old.len());
            if better {
                best.insert(c, chain);
            }
        }
    }
    best.into_iter()
        .filter(|(c, _)| !assertions.contains(c))
        .map(|(claim, chain)| Conclusion { claim, chain })
        .collect()
}

fn notes(p: &PropertyReport, verdicts: &[Verdict]) -> Vec<String> {
    let mut out = vec![
        "wAST and wPAST are not decided here; they enter only through assertions".to_string(),
    ];
    let prob_fired = verdicts.iter().any(|v| {
        v.applies()
            && matches!(
                v.theorem,
                TheoremId::OrthogonalRightLinear
                    | TheoremId::LinearNonErasing
                    | TheoremId::NonOverlappingLeftmost
                    | TheoremId::SimultaneousInnermostToFull
            )
    });
    if p.overlay && p.wcr == Some(Wcr::Yes) && !prob_fired {
        out.push(
            "OS and WCR hold; whether this criterion carries over to probabilistic rewriting is open, \
             so no probabilistic implication is drawn from it"
                .to_string(),
        );
    }
    out
}

/// Runs every applicable theorem for `s`. Non-probabilistic systems also get
/// the TRS theorems.
pub fn analyze(s: &Ptrs, scope: Scope) -> AnalysisReport {
    analyze_with(s, scope, &[], AnalyzeOptions::default())
}

pub fn analyze_with(
    s: &Ptrs,
    scope: Scope,
    assertions: &[Claim],
    options: AnalyzeOptions,
) -> AnalysisReport {
    let properties = props::check_with(s, options.join_depth);
    let spareness = prove_spare(s);
    let facts = Facts {
        s,
        p: &properties,
        spare: &spareness,
    };
    let mut verdicts = Vec::new();
    if s.is_nonprobabilistic() {
        verdicts.extend(nonprob_verdicts(&facts));
    }
    verdicts.extend(prob_verdicts(&facts, scope));
    let falsifier = (scope == Scope::BasicTerms
        && options.run_falsifier
        && spareness.verdict == SpareVerdict::Unknown)
        .then(|| run_falsifier(s, options));
    build_report(scope, properties, spareness, falsifier, verdicts, assertions)
}

fn run_falsifier(s: &Ptrs, options: AnalyzeOptions) -> FalsifierOutcome {
    let starts = default_basic_starts(s, options.arg_depth);
    match falsify_spare(s, options.falsify_depth.max(1), &starts) {
        Ok(Some(cex)) => FalsifierOutcome::Counterexample(Box::new(cex)),
        _ => FalsifierOutcome::NotFound {
            depth: options.falsify_depth,
            arg_depth: options.arg_depth,
        },
    }
}

fn build_report(
    scope: Scope,
    properties: PropertyReport,
    spareness: SpareProof,
    falsifier: Option<FalsifierOutcome>,
    verdicts: Vec<Verdict>,
    assertions: &[Claim],
) -> AnalysisReport {
    let closure = implication_closure(&verdicts);
    let conclusions = conclusions(&verdicts, assertions);
    let notes = notes(&properties, &verdicts);
    AnalysisReport {
        scope,
        properties,
        spareness,
        falsifier,
        verdicts,
        closure,
        assertions: assertions.to_vec(),
        conclusions,
        notes,
    }
}

/// The TRS theorems only.
pub fn analyze_nonprob(r: &Ptrs) -> Result<AnalysisReport, AnalyzerError> {
    if let Some(i) = r.rules().iter().position(|rule| !rule.is_deterministic()) {
        return Err(AnalyzerError::Probabilistic(i));
    }
    let properties = props::check(r);
    let spareness = prove_spare(r);
    let facts = Facts {
        s: r,
        p: &properties,
        spare: &spareness,
    };
    let verdicts = nonprob_verdicts(&facts);
    Ok(build_report(Scope::AllTerms, properties, spareness, None, verdicts, &[]))
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.theorem, self.applicability)?;
        if !self.implications.is_empty() {
            write!(f, ": {}", self.implication_summary())?;
        }
        if let Some(n) = &self.note {
            write!(f, ": {n}")?;
        }
        for e in &self.preconditions {
            write!(f, "\n    {} = {}", e.property, e.truth)?;
            if let Some(w) = &e.witness {
                write!(f, " ({w})")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scope: {}", self.scope)?;
        write!(f, "spareness: {}", self.spareness.verdict)?;
        if let Some(b) = &self.spareness.blocker {
            write!(f, " ({b})")?;
        }
        writeln!(f)?;
        match &self.falsifier {
            Some(FalsifierOutcome::Counterexample(c)) => writeln!(
                f,
                "  falsifier: non-spare step from {} at step {} ({} bound to a non-normal form)",
                c.start_term,
                c.violating_step + 1,
                c.duplicated_variable
            )?,
            Some(FalsifierOutcome::NotFound { depth, arg_depth }) => writeln!(
                f,
                "  falsifier: no non-spare step within depth {depth} (argument depth {arg_depth})"
            )?,
            None => {}
        }
        writeln!(f, "verdicts:")?;
        for v in &self.verdicts {
            writeln!(f, "  {v}")?;
        }
        writeln!(f, "derived implications:")?;
        if self.closure.is_empty() {
            writeln!(f, "  (none)")?;
        }
        for d in &self.closure {
            writeln!(f, "  {} ⇒ {}   via {}", d.from, d.to, d.theorems().join(", "))?;
        }
        if !self.assertions.is_empty() {
            let a: Vec<String> = self.assertions.iter().map(|c| c.to_string()).collect();
            writeln!(f, "assertions: {}", a.join(", "))?;
            for c in &self.conclusions {
                let by: Vec<&str> = c.chain.iter().map(|s| s.by.as_str()).collect();
                writeln!(f, "  concludes {}   via {}", c.claim, by.join(", "))?;
            }
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}
