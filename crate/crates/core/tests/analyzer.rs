mod common;

use common::{load, CORPUS};
use past_lift::analyzer::{
    analyze, analyze_nonprob, analyze_with, AnalysisReport, AnalyzeOptions, Applicability, Claim,
    Mode, Property, Scope, Strat, TheoremId, Truth,
};
use past_lift::{ProbRule, Ptrs, Term};

fn ast(strat: Strat) -> Claim {
    Claim::new(Mode::Ast, strat)
}

fn status(r: &AnalysisReport, id: TheoremId) -> Applicability {
    r.verdict(id).unwrap_or_else(|| panic!("{id} missing")).applicability
}

fn truth(r: &AnalysisReport, id: TheoremId, p: Property) -> Truth {
    r.verdict(id)
        .unwrap()
        .preconditions
        .iter()
        .find(|e| e.property == p)
        .unwrap()
        .truth
}

#[test]
fn random_walk_gets_the_linear_theorems() {
    let r = analyze(&load("srw"), Scope::AllTerms);
    for id in [TheoremId::OrthogonalRightLinear, TheoremId::LinearNonErasing, TheoremId::NonOverlappingLeftmost] {
        assert_eq!(status(&r, id), Applicability::Applies, "{id}");
    }
    let v = r.verdict(TheoremId::OrthogonalRightLinear).unwrap();
    assert!(v.implication_summary().contains("iAST ⇔ fAST"));
    assert!(v.implication_summary().contains("iPAST ⇔ fPAST"));
    let d = r
        .closure
        .iter()
        .find(|d| d.from == ast(Strat::LeftmostInnermost) && d.to == ast(Strat::Full))
        .expect("liAST ⇒ fAST");
    assert_eq!(d.theorems(), vec!["Thm 9", "Thm 6"]);
}

#[test]
fn s2_blocks_full_innermost_but_allows_simultaneous() {
    let r = analyze(&load("s2"), Scope::AllTerms);
    assert_eq!(status(&r, TheoremId::OrthogonalRightLinear), Applicability::Blocked);
    let ll = r
        .verdict(TheoremId::OrthogonalRightLinear)
        .unwrap()
        .preconditions
        .iter()
        .find(|e| e.property == Property::LeftLinear)
        .unwrap();
    assert_eq!(ll.truth, Truth::False);
    assert!(ll.witness.as_deref().unwrap().contains("f(x,x)"));
    assert_eq!(status(&r, TheoremId::SimultaneousInnermostToFull), Applicability::Applies);
    assert!(r.to_string().contains("Thm 14 Applies: iAST w.r.t. ∥ ⇒ fAST"));
}

#[test]
fn s6_is_blocked_by_left_linearity_alone() {
    let r = analyze(&load("s6"), Scope::AllTerms);
    assert_eq!(status(&r, TheoremId::LinearNonErasing), Applicability::Blocked);
    assert_eq!(truth(&r, TheoremId::LinearNonErasing, Property::LeftLinear), Truth::False);
    for p in [Property::NonOverlapping, Property::RightLinear, Property::NonErasing] {
        assert_eq!(truth(&r, TheoremId::LinearNonErasing, p), Truth::True, "{p}");
    }
}

#[test]
fn s7_on_basic_terms() {
    let r = analyze(&load("s7"), Scope::BasicTerms);
    assert_eq!(status(&r, TheoremId::SpareOrthogonal), Applicability::Applies);
    assert_eq!(status(&r, TheoremId::SpareNonOverlapping), Applicability::Applies);
    assert!(r.derives(ast(Strat::Innermost).basic(), ast(Strat::Full).basic()));
    assert!(!r.derives(ast(Strat::Innermost), ast(Strat::Full)));
    assert!(r.falsifier.is_none());
}

#[test]
fn s1_on_basic_terms_runs_the_falsifier() {
    let r = analyze(&load("s1"), Scope::BasicTerms);
    assert_eq!(status(&r, TheoremId::SpareOrthogonal), Applicability::UnknownPrecondition);
    assert!(matches!(r.falsifier, Some(past_lift::analyzer::FalsifierOutcome::Counterexample(_))));
}

#[test]
fn doubling_trs() {
    let r = analyze_nonprob(&load("rd")).unwrap();
    assert_eq!(status(&r, TheoremId::NonOverlappingSn), Applicability::Applies);
    assert_eq!(status(&r, TheoremId::OrthogonalSn), Applicability::Applies);
    assert!(analyze_nonprob(&load("srw")).is_err());
    let full = analyze(&load("rd"), Scope::AllTerms);
    assert_eq!(status(&full, TheoremId::NonOverlappingSn), Applicability::Applies);
}

#[test]
fn r1_and_r2_verdicts() {
    let r = analyze_nonprob(&load("r1")).unwrap();
    assert_eq!(status(&r, TheoremId::NonOverlappingSn), Applicability::Blocked);
    assert_eq!(status(&r, TheoremId::OverlayWcrSn), Applicability::Blocked);
    assert_eq!(truth(&r, TheoremId::OverlayWcrSn, Property::Wcr), Truth::False);
    let r2 = analyze_nonprob(&load("r2")).unwrap();
    assert_eq!(status(&r2, TheoremId::NonErasingWn), Applicability::Blocked);
    assert_eq!(status(&r2, TheoremId::LeftmostSn), Applicability::Applies);
}

#[test]
fn counterexamples_never_derive_innermost_to_full() {
    for name in ["s1", "s2", "s3", "s5", "s6", "s8"] {
        let r = analyze(&load(name), Scope::AllTerms);
        assert!(!r.derives(ast(Strat::Innermost), ast(Strat::Full)), "{name}");
        assert!(!r.derives(Claim::new(Mode::Past, Strat::Innermost), Claim::new(Mode::Past, Strat::Full)), "{name}");
    }
    let r = analyze(&load("s4"), Scope::AllTerms);
    assert!(!r.derives(ast(Strat::LeftmostInnermost), ast(Strat::Innermost)));
}

#[test]
fn closure_is_empty_without_licensed_theorems() {
    let r = analyze(&load("s4"), Scope::AllTerms);
    let licensed: Vec<_> = r
        .verdicts
        .iter()
        .filter(|v| v.applies() && !v.implications.is_empty())
        .map(|v| v.theorem)
        .collect();
    assert_eq!(licensed, vec![TheoremId::SimultaneousToOrdinary, TheoremId::WeakToSimultaneous]);
    for d in &r.closure {
        for step in &d.chain {
            assert!(["Def", "Cor 11", "Cor 15"].contains(&step.by.as_str()), "{}", step.by);
        }
    }
}

#[test]
fn assertions_propagate() {
    let opts = AnalyzeOptions::default();
    let r = analyze_with(&load("s2"), Scope::AllTerms, &[ast(Strat::Innermost).par()], opts);
    let claims: Vec<Claim> = r.conclusions.iter().map(|c| c.claim).collect();
    assert!(claims.contains(&ast(Strat::Full)));
    assert!(claims.contains(&ast(Strat::Weak)));
    let r = analyze_with(&load("s6"), Scope::AllTerms, &[ast(Strat::Weak)], opts);
    assert!(r.conclusions.iter().any(|c| c.claim == ast(Strat::Weak).par()));
    assert!(!r.conclusions.iter().any(|c| c.claim == ast(Strat::Full)));
}

#[test]
fn open_question_is_flagged_for_overlay_wcr_systems() {
    let a = Term::constant("a");
    let s = Ptrs::new(
        vec![
            ProbRule::deterministic(Term::apply("f", vec![a.clone()]), Term::constant("b")),
            ProbRule::deterministic(Term::apply("f", vec![Term::var("x")]), Term::constant("b")),
            ProbRule::deterministic(Term::apply("h", vec![Term::var("x"), Term::var("x")]), Term::constant("b")),
        ],
        [],
    )
    .unwrap();
    let r = analyze(&s, Scope::AllTerms);
    assert!(r.properties.overlay && !r.properties.non_overlapping);
    assert!(r.notes.iter().any(|n| n.contains("open")));
    let quiet = analyze(&load("srw"), Scope::AllTerms);
    assert!(!quiet.notes.iter().any(|n| n.contains("open")));
}

/// Adding a rule that breaks exactly one precondition flips a verdict to Blocked.
#[test]
fn breaking_a_precondition_blocks() {
    let base = load("srw");
    let x = Term::var("x");
    let with = |r: ProbRule| {
        let mut rules = base.rules().to_vec();
        rules.push(r);
        Ptrs::new(rules, []).unwrap()
    };
    let cases = [
        (with(ProbRule::deterministic(Term::apply("k", vec![x.clone(), x.clone()]), Term::apply("c", vec![x.clone(), Term::constant("bot")]))), Property::LeftLinear),
        (with(ProbRule::deterministic(Term::apply("k", vec![x.clone()]), Term::apply("c", vec![x.clone(), x.clone()]))), Property::RightLinear),
        (with(ProbRule::deterministic(Term::apply("k", vec![x.clone()]), Term::constant("bot"))), Property::NonErasing),
        (with(ProbRule::deterministic(Term::constant("g"), Term::constant("bot"))), Property::NonOverlapping),
    ];
    for (s, broken) in cases {
        let before = analyze(&base, Scope::AllTerms);
        let after = analyze(&s, Scope::AllTerms);
        for v in &before.verdicts {
            let needs = v.preconditions.iter().any(|e| e.property == broken);
            let now = after.verdict(v.theorem).unwrap();
            if needs {
                assert_eq!(now.applicability, Applicability::Blocked, "{broken} {}", v.theorem);
            } else {
                assert_eq!(now.applicability, v.applicability, "{broken} {}", v.theorem);
            }
        }
    }
}

#[test]
fn every_verdict_lists_its_evidence() {
    for name in CORPUS {
        let s = load(name);
        for scope in [Scope::AllTerms, Scope::BasicTerms] {
            let r = analyze_with(&s, scope, &[], AnalyzeOptions { run_falsifier: false, ..AnalyzeOptions::default() });
            for v in &r.verdicts {
                for e in &v.preconditions {
                    if e.truth != Truth::True {
                        assert!(e.witness.is_some(), "{name} {} {}", v.theorem, e.property);
                    }
                }
            }
        }
    }
}
