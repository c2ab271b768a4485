//! Exact unfolding, rewrite sequence trees, adversarial bounds and sampling.

use std::collections::HashMap;

use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{
    admissible_moves, apply_move, first_move, lift_step, policy_step, EngineError, Move, Policy,
    PolicySpec, SimGroup, Strategy,
};
use crate::model::{MultiDistribution, Prob, Ptrs};
use crate::term::{Symbol, Term, TermKind};

pub const DEFAULT_SUPPORT_CAP: usize = 200_000;
pub const DEFAULT_MEMO_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum SemanticsError {
    #[error("support of μ_{step} has {size} entries, above the cap of {cap}")]
    CapExceeded {
        step: usize,
        size: usize,
        cap: usize,
        trace: Box<SemanticsTrace>,
    },
    #[error("tree has more than {cap} nodes")]
    TreeCapExceeded { cap: usize },
    #[error("memo table exceeded {cap} entries")]
    MemoCapExceeded { cap: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnfoldOptions {
    pub support_cap: usize,
    /// Merge equal terms after every step. Only sound for term-deterministic policies.
    pub coalesce: bool,
}

impl Default for UnfoldOptions {
    fn default() -> Self {
        UnfoldOptions {
            support_cap: DEFAULT_SUPPORT_CAP,
            coalesce: false,
        }
    }
}

/// `μ₀ ⇒ μ₁ ⇒ … ⇒ μ_N` with normal-form masses.
#[derive(Debug, Clone)]
pub struct SemanticsTrace {
    pub states: Vec<MultiDistribution>,
    pub nf_masses: Vec<Prob>,
    /// `Σ_{n<N} (1 − |μ_n|)`.
    pub partial_edl: Prob,
}

impl SemanticsTrace {
    fn start(s: &Ptrs, t: Term) -> Self {
        let mu = MultiDistribution::dirac(t);
        let m = s.nf_mass(&mu);
        SemanticsTrace {
            states: vec![mu],
            nf_masses: vec![m],
            partial_edl: Prob::zero(),
        }
    }

    pub fn depth(&self) -> usize {
        self.states.len() - 1
    }

    pub fn last(&self) -> &MultiDistribution {
        self.states.last().expect("trace is never empty")
    }

    /// Lower end of the convergence interval, `|μ_N|`.
    pub fn lower(&self) -> &Prob {
        self.nf_masses.last().expect("trace is never empty")
    }

    pub fn upper(&self) -> Prob {
        Prob::one()
    }
}

pub fn unfold_exact(
    s: &Ptrs,
    start: &Term,
    strategy: &Strategy,
    policy: &mut dyn Policy,
    depth: usize,
    options: UnfoldOptions,
) -> Result<SemanticsTrace, SemanticsError> {
    let mut trace = SemanticsTrace::start(s, start.clone());
    for n in 0..depth {
        let mut next = lift_step(s, trace.last(), strategy, policy)?;
        if options.coalesce {
            next = next.coalesced();
        }
        if next.len() > options.support_cap {
            return Err(SemanticsError::CapExceeded {
                step: n + 1,
                size: next.len(),
                cap: options.support_cap,
                trace: Box::new(trace),
            });
        }
        let mass = s.nf_mass(&next);
        trace.partial_edl += Prob::one() - trace.nf_masses.last().expect("non-empty");
        trace.states.push(next);
        trace.nf_masses.push(mass);
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    /// A normal form; contributes to `|T|_Leaf`.
    NormalLeaf,
    /// Not a normal form but at the truncation depth.
    Pending,
    Internal,
}

#[derive(Debug, Clone)]
pub struct RstNode {
    pub prob: Prob,
    pub term: Term,
    pub depth: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub status: NodeStatus,
}

/// A depth-truncated rewrite sequence tree. Node 0 is the root.
#[derive(Debug, Clone)]
pub struct Rst {
    pub nodes: Vec<RstNode>,
    pub depth: usize,
}

impl Rst {
    fn mass_where(&self, pred: impl Fn(&RstNode) -> bool) -> Prob {
        self.nodes.iter().filter(|n| pred(n)).map(|n| &n.prob).sum()
    }

    /// `|T|_Leaf`: mass of normal-form leaves.
    pub fn leaf_mass(&self) -> Prob {
        self.mass_where(|n| n.status == NodeStatus::NormalLeaf)
    }

    /// Mass of truncated non-normal-form leaves.
    pub fn pending_mass(&self) -> Prob {
        self.mass_where(|n| n.status == NodeStatus::Pending)
    }

    /// Sum of probabilities of inner nodes.
    pub fn edl_partial(&self) -> Prob {
        self.mass_where(|n| n.status == NodeStatus::Internal)
    }

    /// Mass of normal-form leaves at depth ≤ `n`.
    pub fn leaf_mass_up_to(&self, n: usize) -> Prob {
        self.mass_where(|v| v.status == NodeStatus::NormalLeaf && v.depth <= n)
    }

    pub fn at_depth(&self, n: usize) -> impl Iterator<Item = &RstNode> {
        self.nodes.iter().filter(move |v| v.depth == n)
    }
}

/// Builds the tree level by level. The policy is consulted on non-normal-form
/// nodes in the same order as [`unfold_exact`] visits entries.
pub fn build_rst(
    s: &Ptrs,
    start: &Term,
    strategy: &Strategy,
    policy: &mut dyn Policy,
    depth: usize,
    node_cap: usize,
) -> Result<Rst, SemanticsError> {
    let status = |t: &Term, d: usize| {
        if s.is_normal_form(t) {
            NodeStatus::NormalLeaf
        } else if d == depth {
            NodeStatus::Pending
        } else {
            NodeStatus::Internal
        }
    };
    let mut nodes = vec![RstNode {
        prob: Prob::one(),
        term: start.clone(),
        depth: 0,
        parent: None,
        children: Vec::new(),
        status: status(start, 0),
    }];
    let mut level = vec![0usize];
    for d in 0..depth {
        let mut next = Vec::new();
        for v in level {
            if nodes[v].status != NodeStatus::Internal {
                continue;
            }
            let branches = policy_step(s, &nodes[v].term, strategy, policy)?;
            for (q, u) in branches.into_entries() {
                let id = nodes.len();
                if id >= node_cap {
                    return Err(SemanticsError::TreeCapExceeded { cap: node_cap });
                }
                let st = status(&u, d + 1);
                nodes.push(RstNode {
                    prob: &nodes[v].prob * q,
                    term: u,
                    depth: d + 1,
                    parent: Some(v),
                    children: Vec::new(),
                    status: st,
                });
                nodes[v].children.push(id);
                next.push(id);
            }
        }
        level = next;
    }
    Ok(Rst { nodes, depth })
}

/// The rewrite options an adversary may pick for `t`, as branch distributions.
fn adversary_options(s: &Ptrs, t: &Term, strategy: &Strategy) -> Result<Vec<MultiDistribution>, EngineError> {
    let moves = admissible_moves(s, t, strategy);
    let mut out = Vec::new();
    for m in &moves {
        match m {
            Move::Single(_) => out.push(apply_move(s, t, &moves, m)?),
            Move::Simultaneous(g) => {
                for sub in g.subsets() {
                    let chosen = Move::Simultaneous(SimGroup {
                        positions: sub,
                        ..g.clone()
                    });
                    out.push(apply_move(s, t, &moves, &chosen)?);
                }
            }
        }
    }
    Ok(out)
}

/// `T_N(start)` with `T₀(t) = [t ∈ NF]` and `T_{n+1}(t) = 1` on normal forms,
/// else the minimum over admissible moves of `Σ_j p_j·T_n(t_j)`.
///
/// This is the least termination probability within `depth` steps that any
/// policy can force.
pub fn adversarial_lower_bound(
    s: &Ptrs,
    start: &Term,
    strategy: &Strategy,
    depth: usize,
    memo_cap: usize,
) -> Result<Prob, SemanticsError> {
    struct Search<'a> {
        s: &'a Ptrs,
        strategy: &'a Strategy,
        memo: HashMap<(Term, usize), Prob>,
        options: HashMap<Term, Vec<MultiDistribution>>,
        cap: usize,
    }

    impl Search<'_> {
        fn value(&mut self, t: &Term, n: usize) -> Result<Prob, SemanticsError> {
            if self.s.is_normal_form(t) {
                return Ok(Prob::one());
            }
            if n == 0 {
                return Ok(Prob::zero());
            }
            if let Some(v) = self.memo.get(&(t.clone(), n)) {
                return Ok(v.clone());
            }
            if !self.options.contains_key(t) {
                let opts = adversary_options(self.s, t, self.strategy)?;
                self.options.insert(t.clone(), opts);
            }
            let opts = self.options[t].clone();
            let mut best: Option<Prob> = None;
            for mu in &opts {
                let mut v = Prob::zero();
                for (p, u) in mu.iter() {
                    v += p * self.value(u, n - 1)?;
                }
                if best.as_ref().map_or(true, |b| v < *b) {
                    best = Some(v);
                }
                if best.as_ref().is_some_and(Zero::is_zero) {
                    break;
                }
            }
            let v = best.unwrap_or_else(Prob::zero);
            if self.memo.len() + self.options.len() >= self.cap {
                return Err(SemanticsError::MemoCapExceeded { cap: self.cap });
            }
            self.memo.insert((t.clone(), n), v.clone());
            Ok(v)
        }
    }

    let mut search = Search {
        s,
        strategy,
        memo: HashMap::new(),
        options: HashMap::new(),
        cap: memo_cap,
    };
    search.value(start, depth)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub samples: u64,
    pub terminated: u64,
    pub censored: u64,
    pub estimate: f64,
    pub censored_fraction: f64,
    /// Mean number of steps over terminated runs (0 if none terminated).
    pub mean_steps_terminated: f64,
}

#[derive(Default)]
struct McTotals {
    terminated: u64,
    censored: u64,
    steps_terminated: u128,
}

fn sample_branch(s: &Ptrs, rule: usize, rng: &mut ChaCha8Rng) -> usize {
    match s.sampler(rule) {
        Some(smp) => {
            let draw = rng.gen_range(0..smp.denominator);
            smp.cumulative
                .iter()
                .position(|&c| draw < c)
                .expect("cumulative ends at the denominator")
        }
        None => {
            let rhs = s.rule(rule).expect("valid rule").rhs();
            let mut u: f64 = rng.gen();
            for (j, (p, _)) in rhs.iter().enumerate() {
                u -= p.to_f64().unwrap_or(0.0);
                if u < 0.0 {
                    return j;
                }
            }
            rhs.len() - 1
        }
    }
}

/// `Some(steps)` if the run reaches a normal form within `step_cap` steps.
/// With a `stationary` policy a deterministic step that reproduces its input
/// repeats forever, so the run is censored at once.
fn run_once(
    s: &Ptrs,
    start: &Term,
    strategy: &Strategy,
    policy: &mut dyn Policy,
    stationary: bool,
    step_cap: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Option<u64>, EngineError> {
    let innermost = matches!(strategy, Strategy::Innermost | Strategy::LeftmostInnermost);
    if policy.always_first() && innermost {
        return run_leftmost_innermost(s, start, stationary, step_cap, rng);
    }
    run_generic(s, start, strategy, policy, stationary, step_cap, rng)
}

fn run_generic(
    s: &Ptrs,
    start: &Term,
    strategy: &Strategy,
    policy: &mut dyn Policy,
    stationary: bool,
    step_cap: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Option<u64>, EngineError> {
    let mut t = start.clone();
    for n in 0..step_cap {
        if s.is_normal_form(&t) {
            return Ok(Some(n));
        }
        let mv = if policy.always_first() {
            first_move(s, &t, strategy)
        } else {
            let moves = admissible_moves(s, &t, strategy);
            (!moves.is_empty()).then(|| policy.choose(&t, &moves))
        };
        let mv = mv.ok_or_else(|| EngineError::InadmissibleMove(t.clone()))?;
        let j = sample_branch(s, mv.rule_index(), rng);
        let next = apply_branch(s, &t, &mv, j)?;
        if stationary && next == t && s.rule(mv.rule_index()).is_some_and(|r| r.is_deterministic()) {
            return Ok(None);
        }
        t = next;
    }
    Ok(s.is_normal_form(&t).then_some(step_cap))
}

/// `f(args)` with the focus at `args[hole]`.
struct Frame {
    symbol: Symbol,
    args: Vec<Term>,
    hole: usize,
}

/// `run_generic` specialised to `FirstMove` under an innermost strategy, whose
/// choice is always the leftmost innermost redex. A zipper stays at the last
/// redex, so a step costs time in the rewritten subterm instead of the depth
/// of the whole term. Arguments left of every hole are normal forms.
fn run_leftmost_innermost(
    s: &Ptrs,
    start: &Term,
    stationary: bool,
    step_cap: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Option<u64>, EngineError> {
    let mut path: Vec<Frame> = Vec::new();
    let mut focus = start.clone();
    let mut steps = 0;
    loop {
        loop {
            if !s.is_normal_form(&focus) {
                let TermKind::App(symbol, args) = focus.kind() else {
                    unreachable!("variables are normal forms")
                };
                match args.iter().position(|a| !s.is_normal_form(a)) {
                    Some(hole) => {
                        let next = args[hole].clone();
                        path.push(Frame { symbol: symbol.clone(), args: args.clone(), hole });
                        focus = next;
                        continue;
                    }
                    None => break,
                }
            }
            let Some(mut frame) = path.pop() else {
                return Ok(Some(steps));
            };
            frame.args[frame.hole] = focus;
            match frame.args[frame.hole + 1..].iter().position(|a| !s.is_normal_form(a)) {
                Some(k) => {
                    frame.hole += 1 + k;
                    focus = frame.args[frame.hole].clone();
                    path.push(frame);
                }
                None => focus = Term::app(frame.symbol, frame.args).expect("arity is unchanged"),
            }
        }
        if steps == step_cap {
            return Ok(None);
        }
        let (rule_index, sigma) = s
            .root_matches(&focus)
            .next()
            .ok_or_else(|| EngineError::InadmissibleMove(focus.clone()))?;
        let j = sample_branch(s, rule_index, rng);
        let rule = s.rule(rule_index).expect("matched rules exist");
        let next = rule.rhs()[j].1.apply_subst(&sigma);
        if stationary && rule.is_deterministic() && next == focus {
            return Ok(None);
        }
        focus = next;
        steps += 1;
    }
}

/// Applies branch `j` of the move's rule at all of its positions.
fn apply_branch(s: &Ptrs, t: &Term, mv: &Move, j: usize) -> Result<Term, EngineError> {
    let (rule_index, sigma, positions) = match mv {
        Move::Single(r) => (r.rule_index, &r.substitution, std::slice::from_ref(&r.position)),
        Move::Simultaneous(g) => (g.rule_index, &g.substitution, g.positions.as_slice()),
    };
    let rule = s
        .rule(rule_index)
        .ok_or_else(|| EngineError::InadmissibleMove(t.clone()))?;
    let instance = rule.lhs().apply_subst(sigma);
    if positions.iter().any(|p| t.subterm_at(p).ok() != Some(&instance)) {
        return Err(EngineError::InadmissibleMove(t.clone()));
    }
    let rhs = rule.rhs()[j].1.apply_subst(sigma);
    t.replace_all(positions, &rhs)
        .map_err(|_| EngineError::InadmissibleMove(t.clone()))
}

/// Simulates `samples` independent runs. Run `i` uses a generator seeded by
/// `(seed, i)`, so the result does not depend on scheduling.
pub fn mc_estimate(
    s: &Ptrs,
    start: &Term,
    strategy: &Strategy,
    policy: &PolicySpec,
    samples: u64,
    step_cap: u64,
    seed: u64,
) -> Result<McEstimate, EngineError> {
    let stationary = policy.is_term_deterministic();
    let totals = (0..samples)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(run);
            let mut pol = policy.instantiate_for_run(run);
            run_once(s, start, strategy, pol.as_mut(), stationary, step_cap, &mut rng).map(|r| match r {
                Some(n) => McTotals {
                    terminated: 1,
                    censored: 0,
                    steps_terminated: u128::from(n),
                },
                None => McTotals {
                    terminated: 0,
                    censored: 1,
                    steps_terminated: 0,
                },
            })
        })
        .try_reduce(McTotals::default, |a, b| {
            Ok(McTotals {
                terminated: a.terminated + b.terminated,
                censored: a.censored + b.censored,
                steps_terminated: a.steps_terminated + b.steps_terminated,
            })
        })?;
    let n = samples.max(1) as f64;
    Ok(McEstimate {
        samples,
        terminated: totals.terminated,
        censored: totals.censored,
        estimate: totals.terminated as f64 / n,
        censored_fraction: totals.censored as f64 / n,
        mean_steps_terminated: if totals.terminated == 0 {
            0.0
        } else {
            totals.steps_terminated as f64 / totals.terminated as f64
        },
    })
}
