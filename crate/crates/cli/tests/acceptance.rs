//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#[allow(dead_code)]
#[path = "../../core/tests/common/gen.rs"]
mod gen;

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_traits::Signed;
use past_lift::analyzer::{analyze, AnalysisReport, Applicability, Property, Scope, TheoremId, Truth};
use past_lift::engine::{
    innermost_redexes, leftmost_innermost_moves, lift_step, redexes, sim_step, simultaneous_groups, step,
    FirstMove, PolicySpec, RandomSeeded, Strategy,
};
use past_lift::props::{self, Wcr};
use past_lift::semantics::{adversarial_lower_bound, mc_estimate, unfold_exact, UnfoldOptions, DEFAULT_MEMO_CAP};
use past_lift::spare::{default_basic_starts, falsify_spare, prove_spare, SpareVerdict};
use past_lift::syntax::{parse, parse_script, serialize, SourceFile};
use past_lift::transform::{union_with_generators, ExtendedSignature};
use past_lift::{ratio, unify, MultiDistribution, Position, ProbRule, Ptrs, Symbol, Term};
use proptest::prelude::{any, prop_assert, prop_assert_eq, TestCaseError};
use proptest::strategy::Strategy as Gen;
use proptest::test_runner::{Config, TestRunner};

const BIN: &str = env!("CARGO_BIN_EXE_past-lift");
const CASES: u32 = 10_000;

type Outcome = Result<String, String>;

fn corpus(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "core", "corpus", name].iter().collect()
}

fn source(name: &str) -> SourceFile {
    let text = std::fs::read_to_string(corpus(&format!("{name}.ptrs"))).unwrap();
    parse(&text).unwrap_or_else(|d| panic!("{name}: {d}"))
}

fn load(name: &str) -> Ptrs {
    source(name).system
}

fn c(n: &str) -> Term {
    Term::constant(n)
}

fn ap(n: &str, a: Vec<Term>) -> Term {
    Term::apply(n, a)
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn exact_mass() -> Outcome {
    let start = Instant::now();
    let out = Command::new(BIN)
        .args(["simulate", &corpus("srw.ptrs").to_string_lossy(), "--term", "g", "--strategy", "full"])
        .args(["--policy", "first", "--depth", "3", "--mode", "exact", "--json"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(out.status.success(), String::from_utf8_lossy(&out.stderr).into_owned())?;
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let last = v["nf_mass"].as_array().and_then(|a| a.last()).and_then(|m| m.as_str()).unwrap_or("");
    ensure(last == "5/8", format!("cli nf_mass = {last}"))?;
    let t = unfold_exact(&load("srw"), &c("g"), &Strategy::Full, &mut FirstMove, 3, UnfoldOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(*t.lower() == ratio(5, 8), format!("library nf_mass = {}", t.lower()))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("nf_mass = 5/8 in {elapsed:.2?}"))
}

fn exact_edl() -> Outcome {
    let start = Instant::now();
    let t = unfold_exact(&load("s1"), &c("g"), &Strategy::Innermost, &mut FirstMove, 200, UnfoldOptions::default())
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let gap = (t.partial_edl.clone() - ratio(7, 1)).abs();
    ensure(gap < ratio(1, 1_000_000), format!("|edl - 7| = {gap}"))?;
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("|edl - 7| < 1/10^6 in {elapsed:.2?}"))
}

fn property_matrix() -> Outcome {
    let mut checks: Vec<(&str, &str, bool, bool)> = Vec::new();
    let mut expect = |sys: &'static str, what: &'static str, expected: bool, actual: bool| {
        checks.push((sys, what, expected, actual));
    };
    let p = |n| props::check(&load(n));
    expect("rd", "NO", true, p("rd").non_overlapping);
    let r1 = p("r1");
    expect("r1", "OS", false, r1.overlay);
    expect("r1", "WCR=No", true, r1.wcr == Some(Wcr::No));
    expect("r2", "NE", false, p("r2").non_erasing);
    expect("r3", "NO", false, p("r3").non_overlapping);
    let srw = p("srw");
    expect("srw", "NO", true, srw.non_overlapping);
    expect("srw", "LL", true, srw.left_linear);
    expect("srw", "RL", true, srw.right_linear);
    expect("srw", "NE", true, srw.non_erasing);
    let s1 = p("s1");
    expect("s1", "orthogonal", true, s1.orthogonal);
    expect("s1", "RL", false, s1.right_linear);
    let s2 = p("s2");
    expect("s2", "LL", false, s2.left_linear);
    expect("s2", "RL", true, s2.right_linear);
    expect("s2", "NO", true, s2.non_overlapping);
    let s3 = p("s3");
    expect("s3", "LL", false, s3.left_linear);
    expect("s3", "NE", true, s3.non_erasing);
    expect("s4", "NO", false, p("s4").non_overlapping);
    let s5 = p("s5");
    expect("s5", "ND", true, s5.non_duplicating);
    expect("s5", "RL", false, s5.right_linear);
    let s6 = p("s6");
    expect("s6", "LL", false, s6.left_linear);
    expect("s6", "NO", true, s6.non_overlapping);
    expect("s6", "RL", true, s6.right_linear);
    expect("s6", "NE", true, s6.non_erasing);
    let s7 = p("s7");
    expect("s7", "orthogonal", true, s7.orthogonal);
    expect("s7", "ND", false, s7.non_duplicating);
    let s2bar = p("s2bar");
    expect("s2bar", "NO", true, s2bar.non_overlapping);
    expect("s2bar", "LL", true, s2bar.left_linear);
    expect("s2bar", "RL", true, s2bar.right_linear);
    expect("s2prime", "NO", true, p("s2prime").non_overlapping);

    let total = checks.len();
    let mismatches: Vec<String> = checks
        .into_iter()
        .filter(|(_, _, e, a)| e != a)
        .map(|(s, w, e, a)| format!("{s} {w}: expected {e}, got {a}"))
        .collect();
    if mismatches.is_empty() {
        Ok(format!("{total} stated properties reproduced"))
    } else {
        Err(format!("{} of {total} mismatch: {}", mismatches.len(), mismatches.join("; ")))
    }
}

fn spareness() -> Outcome {
    for (name, want) in [("s7", SpareVerdict::Spare), ("s8", SpareVerdict::Spare), ("s1", SpareVerdict::Unknown)] {
        let got = prove_spare(&load(name)).verdict;
        ensure(got == want, format!("prove_spare({name}) = {got}"))?;
    }
    let (u, sig) = union_with_generators(&load("s8"));
    let cons_g = Term::app(sig.cons[&Symbol::new("g", 0)].clone(), vec![]).map_err(|e| e.to_string())?;
    let enc_f = sig.enc[&Symbol::new("f", 1)].clone();
    let start = Term::app(enc_f, vec![ap("s", vec![cons_g])]).map_err(|e| e.to_string())?;
    let cex = falsify_spare(&u, 3, &[start.clone()]).map_err(|e| e.to_string())?;
    ensure(cex.is_some(), format!("no counterexample for S8 ∪ G(S8) from {start}"))?;
    let s1 = load("s1");
    let cex1 = falsify_spare(&s1, 3, &default_basic_starts(&s1, 3)).map_err(|e| e.to_string())?;
    ensure(cex1.is_some(), "no non-spare step for s1 within depth 3")?;
    let s7 = load("s7");
    let none = falsify_spare(&s7, 6, &default_basic_starts(&s7, 3)).map_err(|e| e.to_string())?;
    ensure(none.is_none(), "counterexample reported for s7")?;
    Ok(format!("S7, S8 spare; S1 unknown; witness from {start}; S7 clean at depth 6"))
}

const G_S8: &str = "(VAR x1 x2)
(RULES
  enc%g -> g
  enc%f(x1) -> f(argenc%(x1))
  enc%c(x1,x2) -> c(argenc%(x1),argenc%(x2))
  enc%s(x1) -> s(argenc%(x1))
  enc%bot -> bot
  argenc%(cons%g) -> g
  argenc%(cons%f(x1)) -> f(argenc%(x1))
  argenc%(c(x1,x2)) -> c(argenc%(x1),argenc%(x2))
  argenc%(s(x1)) -> s(argenc%(x1))
  argenc%(bot) -> bot
)";

fn generator_rules() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("s8g.ptrs");
    let run = Command::new(BIN)
        .args(["transform", &corpus("s8.ptrs").to_string_lossy(), "--generators", "-o"])
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(run.status.success(), String::from_utf8_lossy(&run.stderr).into_owned())?;
    let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    let u = parse(&text).map_err(|d| d.to_string())?.system;
    let original = load("s8");
    let generated: Vec<&ProbRule> = u.rules().iter().filter(|r| !original.rules().contains(r)).collect();
    let expected = parse(G_S8).map_err(|d| d.to_string())?.system;
    ensure(generated.len() == 10, format!("{} generator rules", generated.len()))?;
    for r in expected.rules() {
        ensure(generated.contains(&r), format!("missing {}", serialize(&Ptrs::new(vec![r.clone()], []).unwrap())))?;
    }
    ensure(u.rules().len() == original.rules().len() + 10, "original rules not preserved")?;
    let back = parse(&serialize(&u)).map_err(|d| d.to_string())?.system;
    ensure(back == u, "parse ∘ serialize is not the identity")?;
    Ok("10 generator rules match; round trip holds".into())
}

fn status(r: &AnalysisReport, id: TheoremId) -> Result<Applicability, String> {
    r.verdict(id).map(|v| v.applicability).ok_or_else(|| format!("{id} missing"))
}

fn evidence_complete(r: &AnalysisReport) -> Result<(), String> {
    for v in &r.verdicts {
        for e in &v.preconditions {
            ensure(e.truth == Truth::True || e.witness.is_some(), format!("{} {} lacks a witness", v.theorem, e.property))?;
        }
    }
    Ok(())
}

fn theorem_engine() -> Outcome {
    let srw = analyze(&load("srw"), Scope::AllTerms);
    for id in [TheoremId::OrthogonalRightLinear, TheoremId::LinearNonErasing, TheoremId::NonOverlappingLeftmost] {
        ensure(status(&srw, id)? == Applicability::Applies, format!("srw: {id} does not apply"))?;
    }
    let s2 = analyze(&load("s2"), Scope::AllTerms);
    ensure(status(&s2, TheoremId::OrthogonalRightLinear)? == Applicability::Blocked, "s2: Thm 6 not blocked")?;
    let ll = s2
        .verdict(TheoremId::OrthogonalRightLinear)
        .and_then(|v| v.preconditions.iter().find(|e| e.property == Property::LeftLinear))
        .and_then(|e| e.witness.clone())
        .unwrap_or_default();
    ensure(ll.contains("f(x,x)"), format!("s2: LL witness {ll:?}"))?;
    ensure(status(&s2, TheoremId::SimultaneousInnermostToFull)? == Applicability::Applies, "s2: Thm 14 does not apply")?;
    let s7 = analyze(&load("s7"), Scope::BasicTerms);
    ensure(status(&s7, TheoremId::SpareOrthogonal)? == Applicability::Applies, "s7: Thm 20 does not apply")?;
    let s6 = analyze(&load("s6"), Scope::AllTerms);
    let v8 = s6.verdict(TheoremId::LinearNonErasing).ok_or("s6: Thm 8 missing")?;
    ensure(v8.applicability == Applicability::Blocked, "s6: Thm 8 not blocked")?;
    let false_props: Vec<Property> = v8.preconditions.iter().filter(|e| e.truth != Truth::True).map(|e| e.property).collect();
    ensure(false_props == [Property::LeftLinear], format!("s6: Thm 8 non-true preconditions {false_props:?}"))?;
    let rd = analyze(&load("rd"), Scope::AllTerms);
    ensure(status(&rd, TheoremId::NonOverlappingSn)? == Applicability::Applies, "rd: Thm 2 does not apply")?;
    for r in [&srw, &s2, &s7, &s6, &rd] {
        evidence_complete(r)?;
    }
    Ok("srw, s2, s7, s6, rd verdicts as expected, evidence listed".into())
}

fn strategy_gap() -> Outcome {
    let s = load("s4");
    let t = ap("f", vec![c("a"), c("b")]);
    let start = Instant::now();
    let i = adversarial_lower_bound(&s, &t, &Strategy::Innermost, 40, DEFAULT_MEMO_CAP).map_err(|e| e.to_string())?;
    let li = adversarial_lower_bound(&s, &t, &Strategy::LeftmostInnermost, 40, DEFAULT_MEMO_CAP).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(i == ratio(0, 1), format!("innermost bound {i}"))?;
    ensure(li >= ratio(99, 100), format!("leftmost-innermost bound {li}"))?;
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("innermost 0, leftmost-innermost {li} in {elapsed:.2?}"))
}

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() })
}

fn suite<T: std::fmt::Debug>(
    name: &str,
    strategy: impl Gen<Value = T>,
    test: impl Fn(T) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner().run(&strategy, test).map_err(|e| format!("({name}) {e}"))
}

fn property_suites() -> Outcome {
    let start = Instant::now();
    suite("a: mass conservation", (gen::system(), gen::ground_term(), any::<u64>()), |(s, t, seed)| {
        for strategy in Strategy::all() {
            let mut mu = MultiDistribution::dirac(t.clone());
            let mut policy = RandomSeeded::new(seed);
            for _ in 0..3 {
                mu = lift_step(&s, &mu, &strategy, &mut policy).unwrap();
                prop_assert_eq!(mu.total(), ratio(1, 1));
            }
        }
        Ok(())
    })?;
    suite("b: nf_mass monotone", (gen::system(), gen::ground_term()), |(s, t)| {
        let opts = UnfoldOptions { support_cap: 5_000, ..UnfoldOptions::default() };
        if let Ok(trace) = unfold_exact(&s, &t, &Strategy::Full, &mut FirstMove, 4, opts) {
            prop_assert!(trace.nf_masses.windows(2).all(|w| w[0] <= w[1]));
        }
        Ok(())
    })?;
    suite("c: li ⊆ i ⊆ full", (gen::system(), gen::ground_term()), |(s, t)| {
        let key = |rs: Vec<past_lift::engine::Redex>| -> std::collections::BTreeSet<(Position, usize)> {
            rs.into_iter().map(|r| (r.position, r.rule_index)).collect()
        };
        let full = key(redexes(&s, &t));
        let inner = key(innermost_redexes(&s, &t));
        let li = key(leftmost_innermost_moves(&s, &t));
        prop_assert!(li.is_subset(&inner) && inner.is_subset(&full));
        prop_assert_eq!(li.is_empty(), full.is_empty());
        Ok(())
    })?;
    suite("d: singleton sim_step", (gen::system(), gen::ground_term()), |(s, t)| {
        for r in redexes(&s, &t) {
            let g = simultaneous_groups(&s, &t, false)
                .into_iter()
                .find(|g| g.rule_index == r.rule_index && g.positions.contains(&r.position))
                .expect("every redex is in a group");
            prop_assert_eq!(sim_step(&s, &t, &g, &[r.position.clone()]).unwrap(), step(&s, &t, &r).unwrap());
        }
        Ok(())
    })?;
    let sig = Arc::new(ExtendedSignature::of(&gen::covering_system()));
    suite("e: dv ∘ bv, dv ∘ cv", (gen::ground_term(), gen::open_term()), |(t, u)| {
        prop_assert_eq!(sig.dv(&sig.bv(&t).unwrap()).unwrap(), t);
        prop_assert_eq!(sig.dv(&sig.cv(&u)).unwrap(), u);
        Ok(())
    })?;
    suite("f: match and unify", (gen::open_term(), gen::open_term(), gen::ground_term()), |(a, b, g)| {
        if let Some(sigma) = a.matches(&g) {
            prop_assert_eq!(a.apply_subst(&sigma), g.clone());
        }
        if let Some(sigma) = unify(&a, &b) {
            prop_assert_eq!(a.apply_subst(&sigma), b.apply_subst(&sigma));
            prop_assert!(sigma.is_idempotent());
        }
        Ok(())
    })?;
    Ok(format!("6 × {CASES} cases in {:.2?}", start.elapsed()))
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let srw = mc_estimate(&load("srw"), &c("g"), &Strategy::Innermost, &PolicySpec::First, 1000, 100_000, 1)
        .map_err(|e| e.to_string())?;
    ensure(srw.terminated * 100 >= 95 * srw.samples, format!("srw estimate {}", srw.estimate))?;
    let f = source("s2");
    let script = std::fs::read_to_string(corpus("s2-root-loop.script")).map_err(|e| e.to_string())?;
    let policy = PolicySpec::Script(Arc::new(parse_script(&script, &f.variables).map_err(|d| d.to_string())?));
    let s2 = mc_estimate(&f.system, &ap("f", vec![c("a"), c("a")]), &Strategy::Full, &policy, 1000, 100_000, 1)
        .map_err(|e| e.to_string())?;
    ensure(s2.terminated == 0 && s2.censored == s2.samples, format!("s2 estimate {}, censored {}", s2.estimate, s2.censored_fraction))?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!("srw estimate {:.4}; s2 estimate 0, censored 1.0; {elapsed:.2?}", srw.estimate))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact mass", exact_mass),
        ("exact edl", exact_edl),
        ("property matrix", property_matrix),
        ("spareness", spareness),
        ("generator rules", generator_rules),
        ("theorem engine", theorem_engine),
        ("strategy gap", strategy_gap),
        ("property suites", property_suites),
        ("monte carlo", monte_carlo),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(msg) => println!("PASS {} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name}: {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
