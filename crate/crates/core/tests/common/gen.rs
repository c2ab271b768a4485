//! Random terms and systems over a small fixed signature.

use past_lift::{Prob, ProbRule, Ptrs, Term};
use proptest::prelude::*;

pub const CONSTRUCTORS: [(&str, usize); 3] = [("z", 0), ("s", 1), ("c", 2)];
pub const DEFINED: [(&str, usize); 3] = [("g", 0), ("f", 1), ("h", 2)];
pub const VARS: [&str; 3] = ["x", "y", "w"];

fn leaf(vars: bool) -> BoxedStrategy<Term> {
    let mut leaves: Vec<BoxedStrategy<Term>> = vec![
        Just(Term::constant("z")).boxed(),
        Just(Term::constant("g")).boxed(),
    ];
    if vars {
        leaves.push(prop::sample::select(VARS.to_vec()).prop_map(Term::var).boxed());
    }
    prop::strategy::Union::new(leaves).boxed()
}

/// Terms over constructors and defined symbols, size bounded by `depth`.
pub fn term(depth: u32, vars: bool) -> BoxedStrategy<Term> {
    leaf(vars)
        .prop_recursive(depth, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|t| Term::apply("s", vec![t])),
                inner.clone().prop_map(|t| Term::apply("f", vec![t])),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::apply("c", vec![a, b])),
                (inner.clone(), inner).prop_map(|(a, b)| Term::apply("h", vec![a, b])),
            ]
        })
        .boxed()
}

pub fn ground_term() -> BoxedStrategy<Term> {
    term(4, false)
}

pub fn open_term() -> BoxedStrategy<Term> {
    term(4, true)
}

/// Constructor terms with variables, as used below a lhs root.
fn pattern(depth: u32) -> BoxedStrategy<Term> {
    let leaves = prop_oneof![
        Just(Term::constant("z")),
        prop::sample::select(VARS.to_vec()).prop_map(Term::var),
    ];
    leaves
        .prop_recursive(depth, 8, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|t| Term::apply("s", vec![t])),
                (inner.clone(), inner).prop_map(|(a, b)| Term::apply("c", vec![a, b])),
            ]
        })
        .boxed()
}

fn lhs() -> BoxedStrategy<Term> {
    prop_oneof![
        Just(Term::constant("g")),
        pattern(2).prop_map(|a| Term::apply("f", vec![a])),
        (pattern(2), pattern(2)).prop_map(|(a, b)| Term::apply("h", vec![a, b])),
    ]
    .boxed()
}

/// Replaces variables not bound by `lhs` with `z`.
fn bind(t: &Term, lhs: &Term) -> Term {
    let free: past_lift::Substitution = t
        .vars()
        .into_iter()
        .filter(|v| !lhs.contains_var(v))
        .map(|v| (v, Term::constant("z")))
        .collect();
    t.apply_subst(&free)
}

/// Split of 1 into `n` positive parts over a common denominator.
fn weights(n: usize) -> BoxedStrategy<Vec<Prob>> {
    prop::collection::vec(1i64..4, n)
        .prop_map(|ws| {
            let total: i64 = ws.iter().sum();
            ws.into_iter().map(|w| past_lift::ratio(w, total)).collect()
        })
        .boxed()
}

pub fn rule() -> BoxedStrategy<ProbRule> {
    (lhs(), prop::collection::vec(term(3, true), 1..4))
        .prop_flat_map(|(l, rs)| {
            let n = rs.len();
            (Just(l), Just(rs), weights(n))
        })
        .prop_map(|(l, rs, ps)| {
            let rhs = ps.into_iter().zip(rs.iter().map(|r| bind(r, &l))).collect();
            ProbRule::new(l, rhs)
        })
        .boxed()
}

pub fn system() -> BoxedStrategy<Ptrs> {
    prop::collection::vec(rule(), 1..4)
        .prop_map(|rules| Ptrs::new(rules, []).expect("generated rules are valid"))
        .boxed()
}

/// A system whose signature is the whole generator signature.
pub fn covering_system() -> Ptrs {
    let (x, y) = (Term::var("x"), Term::var("y"));
    Ptrs::new(
        vec![
            ProbRule::deterministic(Term::constant("g"), Term::constant("z")),
            ProbRule::deterministic(Term::apply("f", vec![x.clone()]), Term::apply("s", vec![x.clone()])),
            ProbRule::deterministic(Term::apply("h", vec![x.clone(), y.clone()]), Term::apply("c", vec![x, y])),
        ],
        [],
    )
    .expect("valid")
}
