//! Text and JSON renderings of command results. JSON values follow
//! `schema/past-lift-1.schema.json`; probabilities are always `"num/den"`.

use std::fmt::Write as _;
use std::path::Path;

use past_lift::analyzer::{AnalysisReport, ChainStep, Claim, FalsifierOutcome};
use past_lift::engine::Strategy;
use past_lift::props::{Overlap, PropertyReport, Wcr};
use past_lift::semantics::{McEstimate, SemanticsTrace};
use past_lift::spare::{SparenessCounterexample, SpareProof};
use past_lift::syntax::render_bounded;
use past_lift::{Prob, Ptrs, Symbol, Term};
use serde_json::{json, Value};

pub const FORMAT: &str = "past-lift/1";

/// Characters of a term shown before eliding the rest.
const TERM_BUDGET: usize = 160;
/// Entries of the final distribution listed by `simulate`.
const SHOWN_ENTRIES: usize = 20;

pub struct Search {
    pub depth: usize,
    pub arg_depth: usize,
    pub starts: usize,
    pub found: Option<SparenessCounterexample>,
}

fn q(p: &Prob) -> String {
    format!("{}/{}", p.numer(), p.denom())
}

fn term(t: &Term) -> String {
    render_bounded(t, TERM_BUDGET)
}

fn envelope(command: &str, body: Value) -> Value {
    let mut v = json!({ "format": FORMAT, "command": command });
    if let (Some(dst), Value::Object(src)) = (v.as_object_mut(), body) {
        dst.extend(src);
    }
    v
}

fn wcr_name(w: Option<Wcr>) -> Value {
    match w {
        None => Value::Null,
        Some(Wcr::Yes) => "yes".into(),
        Some(Wcr::No) => "no".into(),
        Some(Wcr::Unknown) => "unknown".into(),
    }
}

fn symbols<'a>(it: impl Iterator<Item = &'a Symbol>) -> Vec<String> {
    it.map(|f| format!("{}/{}", f.name(), f.arity())).collect()
}

fn overlap_json(o: &Overlap) -> Value {
    json!({
        "outer_rule": o.outer_rule_index,
        "inner_rule": o.inner_rule_index,
        "position": o.position.to_string(),
        "mgu": o.mgu.to_string(),
    })
}

fn properties_json(r: &PropertyReport) -> Value {
    json!({
        "left_linear": r.left_linear,
        "right_linear": r.right_linear,
        "non_erasing": r.non_erasing,
        "non_duplicating": r.non_duplicating,
        "non_overlapping": r.non_overlapping,
        "overlay": r.overlay,
        "orthogonal": r.orthogonal,
        "wcr": wcr_name(r.wcr),
    })
}

fn branch_witness(w: &Option<(usize, usize, past_lift::Var)>) -> Value {
    match w {
        Some((rule, branch, var)) => json!({ "rule": rule, "branch": branch, "var": var.to_string() }),
        None => Value::Null,
    }
}

pub fn check_json(s: &Ptrs, r: &PropertyReport) -> Value {
    let w = &r.witnesses;
    envelope(
        "check",
        json!({
            "rules": s.rules().len(),
            "probabilistic": !s.is_nonprobabilistic(),
            "defined": symbols(s.defined_symbols().iter()),
            "constructors": symbols(s.constructor_symbols().iter()),
            "properties": properties_json(r),
            "overlaps": r.overlaps.iter().map(overlap_json).collect::<Vec<_>>(),
            "witnesses": {
                "non_left_linear": w.non_left_linear.as_ref().map(|(rule, var)| json!({ "rule": rule, "var": var.to_string() })),
                "non_right_linear": branch_witness(&w.non_right_linear),
                "erasing": branch_witness(&w.erasing),
                "duplicating": branch_witness(&w.duplicating),
            },
        }),
    )
}

pub fn check_text(s: &Ptrs, r: &PropertyReport) -> String {
    let mut out = String::new();
    let yn = |b: bool| if b { "yes" } else { "no" };
    let kind = if s.is_nonprobabilistic() { "TRS" } else { "PTRS" };
    writeln!(out, "{kind} with {} rules", s.rules().len()).unwrap();
    writeln!(out, "defined: {}", symbols(s.defined_symbols().iter()).join(" ")).unwrap();
    writeln!(out, "constructors: {}", symbols(s.constructor_symbols().iter()).join(" ")).unwrap();
    let w = &r.witnesses;
    let row = |out: &mut String, name: &str, ok: bool, why: Option<String>| {
        match why.filter(|_| !ok) {
            Some(why) => writeln!(out, "{name:<16} {} ({why})", yn(ok)),
            None => writeln!(out, "{name:<16} {}", yn(ok)),
        }
        .unwrap()
    };
    row(&mut out, "left-linear", r.left_linear, w.non_left_linear.as_ref().map(|(i, v)| format!("rule {i} repeats {v}")));
    row(&mut out, "right-linear", r.right_linear, w.non_right_linear.as_ref().map(|(i, b, v)| format!("rule {i} branch {b} repeats {v}")));
    row(&mut out, "non-erasing", r.non_erasing, w.erasing.as_ref().map(|(i, b, v)| format!("rule {i} branch {b} drops {v}")));
    row(&mut out, "non-duplicating", r.non_duplicating, None);
    row(&mut out, "non-overlapping", r.non_overlapping, None);
    row(&mut out, "overlay", r.overlay, None);
    row(&mut out, "orthogonal", r.orthogonal, None);
    match r.wcr {
        Some(w) => writeln!(out, "{:<16} {w}", "WCR").unwrap(),
        None => writeln!(out, "{:<16} n/a (probabilistic)", "WCR").unwrap(),
    }
    for o in &r.overlaps {
        writeln!(out, "overlap: rule {} into rule {} at {} with {}", o.inner_rule_index, o.outer_rule_index, o.position, o.mgu).unwrap();
    }
    out
}

fn claim_json(c: &Claim) -> Value {
    json!({ "id": c.id(), "text": c.to_string() })
}

fn chain_json(chain: &[ChainStep]) -> Vec<Value> {
    chain
        .iter()
        .map(|s| json!({ "from": s.from.id(), "to": s.to.id(), "by": s.by }))
        .collect()
}

fn counterexample_json(c: &SparenessCounterexample) -> Value {
    json!({
        "start_term": term(&c.start_term),
        "duplicated_variable": c.duplicated_variable.to_string(),
        "violating_step": c.violating_step,
        "trace": c.step_trace.iter().map(|s| json!({
            "term": term(&s.term),
            "position": s.position.to_string(),
            "rule": s.rule_index,
            "branch": s.branch,
        })).collect::<Vec<_>>(),
    })
}

fn counterexample_text(out: &mut String, c: &SparenessCounterexample) {
    writeln!(out, "not spare: from {}, step {} duplicates {} bound to a term with defined symbols", term(&c.start_term), c.violating_step, c.duplicated_variable).unwrap();
    for (i, s) in c.step_trace.iter().enumerate() {
        let branch = s.branch.map(|b| format!(" branch {b}")).unwrap_or_default();
        writeln!(out, "  {i}: {} @ {} rule {}{branch}", term(&s.term), s.position, s.rule_index).unwrap();
    }
}

pub fn analyze_json(r: &AnalysisReport) -> Value {
    let falsifier = match &r.falsifier {
        None => Value::Null,
        Some(FalsifierOutcome::Counterexample(c)) => json!({ "found": true, "counterexample": counterexample_json(c) }),
        Some(FalsifierOutcome::NotFound { depth, arg_depth }) => {
            json!({ "found": false, "depth": depth, "arg_depth": arg_depth })
        }
    };
    envelope(
        "analyze",
        json!({
            "scope": r.scope.to_string(),
            "properties": properties_json(&r.properties),
            "spareness": {
                "verdict": r.spareness.verdict.to_string(),
                "blocker": r.spareness.blocker.as_ref().map(|b| b.to_string()),
            },
            "falsifier": falsifier,
            "verdicts": r.verdicts.iter().map(|v| json!({
                "theorem": v.theorem.label(),
                "applicability": v.applicability.to_string(),
                "preconditions": v.preconditions.iter().map(|e| json!({
                    "property": e.property.to_string(),
                    "truth": e.truth.to_string(),
                    "witness": e.witness,
                })).collect::<Vec<_>>(),
                "implications": v.implications.iter().map(|i| json!({
                    "from": i.from.id(),
                    "to": i.to.id(),
                    "scope": i.scope().to_string(),
                })).collect::<Vec<_>>(),
                "note": v.note,
            })).collect::<Vec<_>>(),
            "closure": r.closure.iter().map(|d| json!({
                "from": d.from.id(),
                "to": d.to.id(),
                "theorems": d.theorems(),
                "chain": chain_json(&d.chain),
            })).collect::<Vec<_>>(),
            "assertions": r.assertions.iter().map(claim_json).collect::<Vec<_>>(),
            "conclusions": r.conclusions.iter().map(|c| json!({
                "claim": claim_json(&c.claim),
                "chain": chain_json(&c.chain),
            })).collect::<Vec<_>>(),
            "notes": r.notes,
        }),
    )
}

pub fn trace_json(start: &Term, strategy: &Strategy, policy: &str, t: &SemanticsTrace, complete: bool) -> Value {
    let last = t.last();
    envelope(
        "simulate",
        json!({
            "mode": "exact",
            "term": term(start),
            "strategy": strategy.to_string(),
            "policy": policy,
            "complete": complete,
            "steps": t.depth(),
            "nf_mass": t.nf_masses.iter().map(q).collect::<Vec<_>>(),
            "lower": q(t.lower()),
            "upper": q(&t.upper()),
            "partial_edl": q(&t.partial_edl),
            "support": last.len(),
            "distribution": last.iter().take(SHOWN_ENTRIES).map(|(p, u)| json!({ "p": q(p), "term": term(u) })).collect::<Vec<_>>(),
            "truncated": last.len() > SHOWN_ENTRIES,
        }),
    )
}

pub fn trace_text(t: &SemanticsTrace, complete: bool) -> String {
    let mut out = String::new();
    for (n, (m, mu)) in t.nf_masses.iter().zip(&t.states).enumerate() {
        writeln!(out, "step {n:>4}  support {:>7}  nf_mass {}", mu.len(), m).unwrap();
    }
    let last = t.last();
    for (p, u) in last.iter().take(SHOWN_ENTRIES) {
        writeln!(out, "  {p}: {}", term(u)).unwrap();
    }
    if last.len() > SHOWN_ENTRIES {
        writeln!(out, "  … {} more", last.len() - SHOWN_ENTRIES).unwrap();
    }
    if !complete {
        writeln!(out, "stopped early: support cap reached").unwrap();
    }
    writeln!(out, "nf_mass {}", t.lower()).unwrap();
    writeln!(out, "partial_edl {}", t.partial_edl).unwrap();
    out
}

pub fn mc_json(start: &Term, strategy: &Strategy, policy: &str, step_cap: u64, seed: u64, e: &McEstimate) -> Value {
    envelope(
        "simulate",
        json!({
            "mode": "mc",
            "term": term(start),
            "strategy": strategy.to_string(),
            "policy": policy,
            "seed": seed,
            "step_cap": step_cap,
            "samples": e.samples,
            "terminated": e.terminated,
            "censored": e.censored,
            "estimate": e.estimate,
            "censored_fraction": e.censored_fraction,
            "mean_steps_terminated": e.mean_steps_terminated,
        }),
    )
}

pub fn mc_text(step_cap: u64, e: &McEstimate) -> String {
    format!(
        "samples {}\nterminated {}\ncensored {} (step cap {step_cap})\nestimate {:.6}\ncensored_fraction {:.6}\nmean_steps_terminated {:.3}\n",
        e.samples, e.terminated, e.censored, e.estimate, e.censored_fraction, e.mean_steps_terminated
    )
}

pub fn adversary_json(start: &Term, strategy: &Strategy, depth: usize, bound: &Prob) -> Value {
    envelope(
        "adversary",
        json!({
            "term": term(start),
            "strategy": strategy.to_string(),
            "depth": depth,
            "lower_bound": q(bound),
        }),
    )
}

pub fn adversary_text(start: &Term, strategy: &Strategy, depth: usize, bound: &Prob) -> String {
    format!("min over {strategy} policies of P(nf within {depth} steps from {}) = {bound}\n", term(start))
}

pub fn spare_json(proof: &SpareProof, search: Option<&Search>) -> Value {
    let search = search.map(|s| {
        json!({
            "depth": s.depth,
            "arg_depth": s.arg_depth,
            "starts": s.starts,
            "counterexample": s.found.as_ref().map(counterexample_json),
        })
    });
    envelope(
        "spare",
        json!({
            "verdict": proof.verdict.to_string(),
            "blocker": proof.blocker.as_ref().map(|b| b.to_string()),
            "search": search,
        }),
    )
}

pub fn spare_text(proof: &SpareProof, search: Option<&Search>) -> String {
    let mut out = format!("spareness: {}\n", proof.verdict);
    if let Some(b) = &proof.blocker {
        writeln!(out, "  {b}").unwrap();
    }
    if let Some(s) = search {
        match &s.found {
            Some(c) => counterexample_text(&mut out, c),
            None => writeln!(
                out,
                "no counterexample within {} steps from {} basic starts (argument depth {})",
                s.depth, s.starts, s.arg_depth
            )
            .unwrap(),
        }
    }
    out
}

pub fn transform_json(output: Option<&Path>, u: &Ptrs, added: usize, text: &str) -> Value {
    envelope(
        "transform",
        json!({
            "output": output.map(|p| p.display().to_string()),
            "rules": u.rules().len(),
            "generator_rules": added,
            "system": text,
        }),
    )
}
