//! Redex enumeration, single and simultaneous steps, and lifting under a policy.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{MultiDistribution, Prob, Ptrs};
use crate::term::{ParallelOrder, Position, Substitution, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Full,
    Innermost,
    LeftmostInnermost,
    Simultaneous,
    InnermostSimultaneous,
}

impl Strategy {
    pub fn is_simultaneous(&self) -> bool {
        matches!(self, Strategy::Simultaneous | Strategy::InnermostSimultaneous)
    }

    pub fn all() -> [Strategy; 5] {
        [
            Strategy::Full,
            Strategy::Innermost,
            Strategy::LeftmostInnermost,
            Strategy::Simultaneous,
            Strategy::InnermostSimultaneous,
        ]
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Full => "full",
            Strategy::Innermost => "innermost",
            Strategy::LeftmostInnermost => "leftmost-innermost",
            Strategy::Simultaneous => "simultaneous",
            Strategy::InnermostSimultaneous => "innermost-simultaneous",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("rule {rule_index} does not match at position {position}")]
    InvalidRedex { position: Position, rule_index: usize },
    #[error("invalid simultaneous group: {0}")]
    InvalidGroup(String),
    #[error("policy chose a move that is not admissible for {0}")]
    InadmissibleMove(Term),
}

/// A rule instance inside a subject term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Redex {
    pub position: Position,
    pub rule_index: usize,
    pub substitution: Substitution,
}

/// Equal redexes `ℓσ` of one rule at pairwise parallel positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SimGroup {
    pub rule_index: usize,
    pub substitution: Substitution,
    pub positions: Vec<Position>,
}

impl SimGroup {
    /// Every non-empty subset of the positions, smallest first.
    pub fn subsets(&self) -> impl Iterator<Item = Vec<Position>> + '_ {
        let n = self.positions.len();
        let mut subsets: Vec<Vec<usize>> = (1..(1u64 << n.min(63)))
            .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
            .collect();
        subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        subsets
            .into_iter()
            .map(move |idx| idx.into_iter().map(|i| self.positions[i].clone()).collect())
    }
}

/// One admissible choice for rewriting a single term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Move {
    Single(Redex),
    Simultaneous(SimGroup),
}

impl Move {
    pub fn rule_index(&self) -> usize {
        match self {
            Move::Single(r) => r.rule_index,
            Move::Simultaneous(g) => g.rule_index,
        }
    }

    /// The first (length-lexicographically least) rewritten position.
    pub fn position(&self) -> &Position {
        match self {
            Move::Single(r) => &r.position,
            Move::Simultaneous(g) => &g.positions[0],
        }
    }

    pub fn positions(&self) -> Vec<Position> {
        match self {
            Move::Single(r) => vec![r.position.clone()],
            Move::Simultaneous(g) => g.positions.clone(),
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Single(r) => write!(f, "rule {} @ {}", r.rule_index, r.position),
            Move::Simultaneous(g) => {
                let ps: Vec<String> = g.positions.iter().map(|p| p.to_string()).collect();
                write!(f, "rule {} @ {{{}}}", g.rule_index, ps.join(","))
            }
        }
    }
}

/// Visits non-normal-form nodes breadth first (length-lexicographic order).
fn visit_reducible(s: &Ptrs, t: &Term, mut visit: impl FnMut(&Position, &Term) -> bool) {
    if s.is_normal_form(t) {
        return;
    }
    let mut frontier: Vec<(Position, &Term)> = vec![(Position::root(), t)];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (pos, u) in frontier {
            if !visit(&pos, u) {
                return;
            }
            for (i, a) in u.args().iter().enumerate() {
                if !s.is_normal_form(a) {
                    next.push((pos.child(i + 1), a));
                }
            }
        }
        frontier = next;
    }
}

fn root_redexes(s: &Ptrs, pos: &Position, u: &Term) -> Vec<Redex> {
    s.root_matches(u)
        .map(|(rule_index, substitution)| Redex {
            position: pos.clone(),
            rule_index,
            substitution,
        })
        .collect()
}

fn all_args_nf(s: &Ptrs, u: &Term) -> bool {
    u.args().iter().all(|a| s.is_normal_form(a))
}

/// All redexes, ordered by position (length-lexicographic) then rule index.
pub fn redexes(s: &Ptrs, t: &Term) -> Vec<Redex> {
    let mut out = Vec::new();
    visit_reducible(s, t, |pos, u| {
        out.extend(root_redexes(s, pos, u));
        true
    });
    out
}

/// Redexes whose proper subterms are all normal forms.
pub fn innermost_redexes(s: &Ptrs, t: &Term) -> Vec<Redex> {
    let mut out = Vec::new();
    visit_reducible(s, t, |pos, u| {
        if all_args_nf(s, u) {
            out.extend(root_redexes(s, pos, u));
        }
        true
    });
    out
}

/// The innermost redexes at the `≺`-least innermost position (one per matching rule).
pub fn leftmost_innermost_moves(s: &Ptrs, t: &Term) -> Vec<Redex> {
    match descend(s, t, |_| false) {
        Some((pos, u)) => root_redexes(s, &pos, u),
        None => Vec::new(),
    }
}

/// Follows the first reducible argument from the root until `stop` holds or
/// every argument is a normal form. `None` for normal forms.
fn descend<'a>(s: &Ptrs, t: &'a Term, stop: impl Fn(&Term) -> bool) -> Option<(Position, &'a Term)> {
    if s.is_normal_form(t) {
        return None;
    }
    let mut idx = Vec::new();
    let mut cur = t;
    while !stop(cur) {
        match cur.args().iter().enumerate().find(|(_, a)| !s.is_normal_form(a)) {
            Some((i, a)) => {
                idx.push(i + 1);
                cur = a;
            }
            None => break,
        }
    }
    Some((Position::new(idx), cur))
}

/// The redex set each single-step strategy may use.
pub fn strategy_redexes(s: &Ptrs, t: &Term, strategy: &Strategy) -> Vec<Redex> {
    match strategy {
        Strategy::Full | Strategy::Simultaneous => redexes(s, t),
        Strategy::Innermost | Strategy::InnermostSimultaneous => innermost_redexes(s, t),
        Strategy::LeftmostInnermost => leftmost_innermost_moves(s, t),
    }
}

/// Groups equal redexes of the same rule; each group is maximal.
pub fn simultaneous_groups(s: &Ptrs, t: &Term, innermost_only: bool) -> Vec<SimGroup> {
    let rs = if innermost_only {
        innermost_redexes(s, t)
    } else {
        redexes(s, t)
    };
    group_redexes(t, rs)
}

fn group_redexes(t: &Term, rs: Vec<Redex>) -> Vec<SimGroup> {
    let mut index: HashMap<(usize, Term), usize> = HashMap::new();
    let mut groups: Vec<SimGroup> = Vec::new();
    for r in rs {
        let instance = t
            .subterm_at(&r.position)
            .expect("enumerated positions exist")
            .clone();
        match index.get(&(r.rule_index, instance.clone())) {
            Some(&g) => groups[g].positions.push(r.position),
            None => {
                index.insert((r.rule_index, instance), groups.len());
                groups.push(SimGroup {
                    rule_index: r.rule_index,
                    substitution: r.substitution,
                    positions: vec![r.position],
                });
            }
        }
    }
    groups
}

/// The moves a policy may pick from. For simultaneous strategies these are the
/// maximal groups; a policy may also return any non-empty subset of one.
pub fn admissible_moves(s: &Ptrs, t: &Term, strategy: &Strategy) -> Vec<Move> {
    match strategy {
        Strategy::Simultaneous => simultaneous_groups(s, t, false)
            .into_iter()
            .map(Move::Simultaneous)
            .collect(),
        Strategy::InnermostSimultaneous => simultaneous_groups(s, t, true)
            .into_iter()
            .map(Move::Simultaneous)
            .collect(),
        _ => strategy_redexes(s, t, strategy)
            .into_iter()
            .map(Move::Single)
            .collect(),
    }
}

/// The move `FirstMove` picks, found without enumerating the rest where possible.
/// The lexicographically least redex is the first one in preorder, and the
/// lexicographically least innermost redex is the leftmost innermost one.
pub fn first_move(s: &Ptrs, t: &Term, strategy: &Strategy) -> Option<Move> {
    let single = |found: Option<(Position, &Term)>| {
        found.and_then(|(pos, u)| root_redexes(s, &pos, u).into_iter().next().map(Move::Single))
    };
    match strategy {
        Strategy::Full => single(descend(s, t, |u| s.is_root_redex(u))),
        Strategy::Innermost | Strategy::LeftmostInnermost => single(descend(s, t, |_| false)),
        _ => admissible_moves(s, t, strategy).into_iter().min_by(first_order),
    }
}

/// Lexicographic position, then rule index. A group is keyed by its leftmost position.
fn first_order(a: &Move, b: &Move) -> std::cmp::Ordering {
    fn lead(m: &Move) -> &Position {
        match m {
            Move::Single(r) => &r.position,
            Move::Simultaneous(g) => g
                .positions
                .iter()
                .min_by(|p, q| p.cmp_lexicographic(q))
                .expect("groups are non-empty"),
        }
    }
    lead(a)
        .cmp_lexicographic(lead(b))
        .then(a.rule_index().cmp(&b.rule_index()))
}

fn check_redex(s: &Ptrs, t: &Term, r: &Redex) -> Result<(), EngineError> {
    let bad = || EngineError::InvalidRedex {
        position: r.position.clone(),
        rule_index: r.rule_index,
    };
    let rule = s.rule(r.rule_index).ok_or_else(bad)?;
    let u = t.subterm_at(&r.position).map_err(|_| bad())?;
    if rule.lhs().apply_subst(&r.substitution) == *u {
        Ok(())
    } else {
        Err(bad())
    }
}

/// `t → {p_j : t[r_jσ]_π}`.
pub fn step(s: &Ptrs, t: &Term, r: &Redex) -> Result<MultiDistribution, EngineError> {
    check_redex(s, t, r)?;
    let rule = s.rule(r.rule_index).expect("checked");
    let entries = rule
        .rhs()
        .iter()
        .map(|(p, rhs)| {
            let new = t
                .replace_at(&r.position, rhs.apply_subst(&r.substitution))
                .expect("checked position");
            (p.clone(), new)
        })
        .collect();
    Ok(MultiDistribution::from_trusted(entries))
}

/// Rewrites every chosen position of `group` by the same branch at once.
pub fn sim_step(
    s: &Ptrs,
    t: &Term,
    group: &SimGroup,
    chosen: &[Position],
) -> Result<MultiDistribution, EngineError> {
    if chosen.is_empty() {
        return Err(EngineError::InvalidGroup("no positions chosen".into()));
    }
    let rule = s
        .rule(group.rule_index)
        .ok_or_else(|| EngineError::InvalidGroup(format!("no rule {}", group.rule_index)))?;
    let instance = rule.lhs().apply_subst(&group.substitution);
    for (i, p) in chosen.iter().enumerate() {
        if !group.positions.contains(p) {
            return Err(EngineError::InvalidGroup(format!("{p} is not in the group")));
        }
        if t.subterm_at(p).ok() != Some(&instance) {
            return Err(EngineError::InvalidGroup(format!("no redex {instance} at {p}")));
        }
        if chosen[..i]
            .iter()
            .any(|q| q == p || p.compare_parallel(q) == ParallelOrder::NotParallel)
        {
            return Err(EngineError::InvalidGroup("positions are not pairwise parallel".into()));
        }
    }
    let entries = rule
        .rhs()
        .iter()
        .map(|(p, rhs)| {
            let r = rhs.apply_subst(&group.substitution);
            (p.clone(), t.replace_all(chosen, &r).expect("checked positions"))
        })
        .collect();
    Ok(MultiDistribution::from_trusted(entries))
}

/// Applies a chosen move, checking that it is admissible among `moves`.
pub fn apply_move(
    s: &Ptrs,
    t: &Term,
    moves: &[Move],
    chosen: &Move,
) -> Result<MultiDistribution, EngineError> {
    match chosen {
        Move::Single(r) => {
            if !moves.contains(chosen) {
                return Err(EngineError::InadmissibleMove(t.clone()));
            }
            step(s, t, r)
        }
        Move::Simultaneous(g) => {
            let parent = moves.iter().find_map(|m| match m {
                Move::Simultaneous(h)
                    if h.rule_index == g.rule_index
                        && h.substitution == g.substitution
                        && g.positions.iter().all(|p| h.positions.contains(p)) =>
                {
                    Some(h)
                }
                _ => None,
            });
            let parent = parent.ok_or_else(|| EngineError::InadmissibleMove(t.clone()))?;
            sim_step(s, t, parent, &g.positions)
        }
    }
}

/// Resolves the nondeterminism of a strategy: given a non-normal-form term and
/// its admissible moves (never empty), pick one.
pub trait Policy {
    fn choose(&mut self, term: &Term, moves: &[Move]) -> Move;

    /// True if the policy always takes what `first_move` returns; lets the engine skip full enumeration.
    fn always_first(&self) -> bool {
        false
    }
}

/// Leftmost (lexicographically least) position, then lowest rule index.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstMove;

impl Policy for FirstMove {
    fn choose(&mut self, _term: &Term, moves: &[Move]) -> Move {
        moves.iter().min_by(|a, b| first_order(a, b)).expect("moves are non-empty").clone()
    }

    fn always_first(&self) -> bool {
        true
    }
}

/// Lexicographically greatest position, then lowest rule index.
#[derive(Debug, Clone, Copy, Default)]
pub struct RightmostFirst;

impl Policy for RightmostFirst {
    fn choose(&mut self, _term: &Term, moves: &[Move]) -> Move {
        let mut best = &moves[0];
        for m in &moves[1..] {
            if m.position().cmp_lexicographic(best.position()).is_gt() {
                best = m;
            }
        }
        best.clone()
    }
}

/// Uniform choice driven by a seeded generator.
#[derive(Debug, Clone)]
pub struct RandomSeeded {
    rng: ChaCha8Rng,
}

impl RandomSeeded {
    pub fn new(seed: u64) -> Self {
        RandomSeeded {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomSeeded {
    fn choose(&mut self, _term: &Term, moves: &[Move]) -> Move {
        moves[self.rng.gen_range(0..moves.len())].clone()
    }
}

/// One line of a scripted schedule: when the whole term matches `pattern`,
/// rewrite `positions` with rule `rule_index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptEntry {
    pub pattern: Term,
    pub positions: Vec<Position>,
    pub rule_index: usize,
}

/// A pattern-to-move table. The first entry whose pattern matches and whose
/// move is admissible wins; otherwise `FirstMove` decides.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scripted {
    pub entries: Vec<ScriptEntry>,
}

impl Scripted {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        Scripted { entries }
    }

    fn lookup(&self, term: &Term, moves: &[Move]) -> Option<Move> {
        self.entries.iter().find_map(|e| {
            e.pattern.matches(term)?;
            moves.iter().find_map(|m| match m {
                Move::Single(r) => (e.positions.len() == 1
                    && e.positions[0] == r.position
                    && e.rule_index == r.rule_index)
                    .then(|| m.clone()),
                Move::Simultaneous(g) => (g.rule_index == e.rule_index
                    && !e.positions.is_empty()
                    && e.positions.iter().all(|p| g.positions.contains(p)))
                .then(|| {
                    Move::Simultaneous(SimGroup {
                        positions: e.positions.clone(),
                        ..g.clone()
                    })
                }),
            })
        })
    }
}

impl Policy for Scripted {
    fn choose(&mut self, term: &Term, moves: &[Move]) -> Move {
        self.lookup(term, moves).unwrap_or_else(|| FirstMove.choose(term, moves))
    }
}

/// A policy description from which fresh, independently seeded instances are made.
#[derive(Debug, Clone)]
pub enum PolicySpec {
    First,
    Rightmost,
    Random(u64),
    Script(Arc<Scripted>),
}

impl PolicySpec {
    pub fn instantiate(&self) -> Box<dyn Policy + Send> {
        self.instantiate_for_run(0)
    }

    /// Instance for the `run`-th independent execution; random seeds are mixed with `run`.
    pub fn instantiate_for_run(&self, run: u64) -> Box<dyn Policy + Send> {
        match self {
            PolicySpec::First => Box::new(FirstMove),
            PolicySpec::Rightmost => Box::new(RightmostFirst),
            PolicySpec::Random(seed) => {
                Box::new(RandomSeeded::new(seed ^ run.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
            }
            PolicySpec::Script(s) => Box::new(s.as_ref().clone()),
        }
    }

    /// The policy's choice depends on the term alone.
    pub fn is_term_deterministic(&self) -> bool {
        !matches!(self, PolicySpec::Random(_))
    }
}

/// Chooses and applies one move for a non-normal-form term.
pub fn policy_step(
    s: &Ptrs,
    t: &Term,
    strategy: &Strategy,
    policy: &mut dyn Policy,
) -> Result<MultiDistribution, EngineError> {
    if policy.always_first() {
        if let Some(m) = first_move(s, t, strategy) {
            return match &m {
                Move::Single(r) => step(s, t, r),
                Move::Simultaneous(g) => sim_step(s, t, g, &g.positions),
            };
        }
    }
    let moves = admissible_moves(s, t, strategy);
    if moves.is_empty() {
        return Err(EngineError::InadmissibleMove(t.clone()));
    }
    let chosen = policy.choose(t, &moves);
    apply_move(s, t, &moves, &chosen)
}

/// One lifting step `μ ⇒ μ'`: normal forms stay, every other entry is replaced
/// by its scaled branch distribution. Entry order follows `μ`.
pub fn lift_step(
    s: &Ptrs,
    mu: &MultiDistribution,
    strategy: &Strategy,
    policy: &mut dyn Policy,
) -> Result<MultiDistribution, EngineError> {
    let mut out: Vec<(Prob, Term)> = Vec::with_capacity(mu.len());
    for (p, t) in mu.iter() {
        if s.is_normal_form(t) {
            out.push((p.clone(), t.clone()));
        } else {
            let branches = policy_step(s, t, strategy, policy)?;
            out.extend(branches.into_entries().into_iter().map(|(q, u)| (p * q, u)));
        }
    }
    Ok(MultiDistribution::from_trusted(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ratio, ProbRule};

    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    fn ap(n: &str, a: Vec<Term>) -> Term {
        Term::apply(n, a)
    }

    fn pos(s: &str) -> Position {
        Position::parse(s).unwrap()
    }

    fn srw() -> Ptrs {
        Ptrs::new(
            vec![ProbRule::new(
                c("g"),
                vec![(ratio(1, 2), ap("c", vec![c("g"), c("g")])), (ratio(1, 2), c("bot"))],
            )],
            [],
        )
        .unwrap()
    }

    fn s2() -> Ptrs {
        let x = Term::var("x");
        Ptrs::new(
            vec![
                ProbRule::deterministic(ap("f", vec![x.clone(), x]), ap("f", vec![c("a"), c("a")])),
                ProbRule::new(c("a"), vec![(ratio(1, 2), c("b")), (ratio(1, 2), c("c"))]),
            ],
            [],
        )
        .unwrap()
    }

    fn s4() -> Ptrs {
        Ptrs::new(
            vec![
                ProbRule::deterministic(c("a"), c("c1")),
                ProbRule::deterministic(c("a"), c("c2")),
                ProbRule::new(c("b"), vec![(ratio(1, 2), c("d1")), (ratio(1, 2), c("d2"))]),
                ProbRule::deterministic(ap("f", vec![c("c1"), c("d1")]), ap("f", vec![c("a"), c("b")])),
                ProbRule::deterministic(ap("f", vec![c("c2"), c("d2")]), ap("f", vec![c("a"), c("b")])),
            ],
            [],
        )
        .unwrap()
    }

    fn at(rs: &[Redex]) -> Vec<(String, usize)> {
        rs.iter().map(|r| (r.position.to_string(), r.rule_index)).collect()
    }

    #[test]
    fn redex_enumeration() {
        let s = srw();
        assert_eq!(
            at(&redexes(&s, &ap("c", vec![c("g"), c("g")]))),
            vec![("1".into(), 0), ("2".into(), 0)]
        );
        let fab = ap("f", vec![c("a"), c("b")]);
        assert_eq!(
            at(&redexes(&s4(), &fab)),
            vec![("1".into(), 0), ("1".into(), 1), ("2".into(), 2)]
        );
        assert_eq!(
            at(&leftmost_innermost_moves(&s4(), &fab)),
            vec![("1".into(), 0), ("1".into(), 1)]
        );
        assert!(redexes(&s2(), &ap("f", vec![c("b"), c("c")])).is_empty());
        assert!(innermost_redexes(&s, &c("bot")).is_empty());
    }

    #[test]
    fn single_steps() {
        let s = srw();
        let r = redexes(&s, &c("g")).remove(0);
        let mu = step(&s, &c("g"), &r).unwrap();
        assert_eq!(
            mu,
            MultiDistribution::new(vec![
                (ratio(1, 2), ap("c", vec![c("g"), c("g")])),
                (ratio(1, 2), c("bot"))
            ])
            .unwrap()
        );
        let faa = ap("f", vec![c("a"), c("a")]);
        let r = Redex { position: pos("1"), rule_index: 1, substitution: Substitution::new() };
        assert_eq!(
            step(&s2(), &faa, &r).unwrap().entries(),
            &[
                (ratio(1, 2), ap("f", vec![c("b"), c("a")])),
                (ratio(1, 2), ap("f", vec![c("c"), c("a")]))
            ]
        );
        let bad = Redex { position: pos("1"), rule_index: 0, substitution: Substitution::new() };
        assert!(matches!(step(&s2(), &faa, &bad), Err(EngineError::InvalidRedex { .. })));
    }

    #[test]
    fn simultaneous_groups_and_steps() {
        let faa = ap("f", vec![c("a"), c("a")]);
        let gs = simultaneous_groups(&s2(), &faa, true);
        assert_eq!(gs.len(), 1);
        assert_eq!(gs[0].positions, vec![pos("1"), pos("2")]);
        let both = sim_step(&s2(), &faa, &gs[0], &gs[0].positions).unwrap();
        assert_eq!(
            both.entries(),
            &[
                (ratio(1, 2), ap("f", vec![c("b"), c("b")])),
                (ratio(1, 2), ap("f", vec![c("c"), c("c")]))
            ]
        );
        let one = sim_step(&s2(), &faa, &gs[0], &[pos("1")]).unwrap();
        assert_eq!(one.entries()[1].1, ap("f", vec![c("c"), c("a")]));
        let fba = ap("f", vec![c("b"), c("a")]);
        let gs = simultaneous_groups(&s2(), &fba, true);
        assert_eq!(gs[0].positions, vec![pos("2")]);
        assert!(sim_step(&s2(), &faa, &gs[0], &[]).is_err());
    }

    #[test]
    fn lifting_follows_first_move() {
        let s = srw();
        let mut pol = FirstMove;
        let mu1 = lift_step(&s, &MultiDistribution::dirac(c("g")), &Strategy::Full, &mut pol).unwrap();
        let mu2 = lift_step(&s, &mu1, &Strategy::Full, &mut pol).unwrap();
        let g = c("g");
        let cgg = ap("c", vec![g.clone(), g.clone()]);
        assert_eq!(
            mu2.entries(),
            &[
                (ratio(1, 4), ap("c", vec![cgg, g.clone()])),
                (ratio(1, 4), ap("c", vec![c("bot"), g])),
                (ratio(1, 2), c("bot"))
            ]
        );
        let bot = MultiDistribution::dirac(c("bot"));
        for st in Strategy::all() {
            assert_eq!(lift_step(&s, &bot, &st, &mut pol).unwrap(), bot);
        }
    }

    #[test]
    fn first_move_agrees_with_enumeration() {
        let s = s4();
        let t = ap("f", vec![ap("f", vec![c("c1"), c("b")]), c("a")]);
        for st in Strategy::all() {
            let moves = admissible_moves(&s, &t, &st);
            assert_eq!(first_move(&s, &t, &st), Some(FirstMove.choose(&t, &moves)), "{st}");
        }
        // Length-lex would pick `a` at 2; the leftmost redex is `b` at 1.2.
        let m = first_move(&s, &t, &Strategy::Full).unwrap();
        assert_eq!(m.position(), &Position::new(vec![1, 2]));
    }

    #[test]
    fn scripted_policy_picks_listed_move() {
        let s = s2();
        let faa = ap("f", vec![c("a"), c("a")]);
        let mut pol = Scripted::new(vec![ScriptEntry {
            pattern: faa.clone(),
            positions: vec![Position::root()],
            rule_index: 0,
        }]);
        let mu = lift_step(&s, &MultiDistribution::dirac(faa.clone()), &Strategy::Full, &mut pol).unwrap();
        assert_eq!(mu, MultiDistribution::dirac(faa));
        let mut right = RightmostFirst;
        let moves = admissible_moves(&s4(), &ap("f", vec![c("a"), c("b")]), &Strategy::Full);
        assert_eq!(right.choose(&c("x"), &moves).position(), &pos("2"));
    }

    #[test]
    fn subsets_are_nonempty_and_complete() {
        let g = SimGroup { rule_index: 0, substitution: Substitution::new(), positions: vec![pos("1"), pos("2"), pos("3")] };
        let subs: Vec<_> = g.subsets().collect();
        assert_eq!(subs.len(), 7);
        assert_eq!(subs[0], vec![pos("1")]);
        assert_eq!(subs[6].len(), 3);
    }
}
