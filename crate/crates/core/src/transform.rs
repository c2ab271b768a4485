//! Generator rules `G(S)` and the constructor, basic and decoded variants of terms.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{ProbRule, Ptrs};
use crate::term::{Symbol, Term, TermKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("the basic variant is undefined for variables")]
    VariableInput,
    #[error("symbol {0} is outside the extended signature")]
    UnknownSymbol(Symbol),
}

/// The original signature plus the fresh `enc_f`, `cons_f` and `argenc` symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedSignature {
    pub defined: BTreeSet<Symbol>,
    pub constructors: BTreeSet<Symbol>,
    /// `f ↦ enc_f` for every `f ∈ Σ`.
    pub enc: BTreeMap<Symbol, Symbol>,
    /// `f ↦ cons_f` for every `f ∈ Σ_D`.
    pub cons: BTreeMap<Symbol, Symbol>,
    pub argenc: Symbol,
}

/// `base`, extended by `%` until it clashes with no name in `taken`.
fn fresh(base: String, taken: &BTreeSet<String>) -> String {
    let mut name = base;
    while taken.contains(&name) {
        name.push('%');
    }
    name
}

impl ExtendedSignature {
    pub fn of(s: &Ptrs) -> Self {
        let defined = s.defined_symbols().clone();
        let constructors = s.constructor_symbols().clone();
        let mut taken: BTreeSet<String> = defined
            .iter()
            .chain(&constructors)
            .map(|f| f.name().to_string())
            .collect();
        let mut mk = |base: String, arity: usize| {
            let name = fresh(base, &taken);
            taken.insert(name.clone());
            Symbol::new(name, arity)
        };
        let enc = defined
            .iter()
            .chain(&constructors)
            .map(|f| (f.clone(), mk(format!("enc%{}", f.name()), f.arity())))
            .collect();
        let cons = defined
            .iter()
            .map(|f| (f.clone(), mk(format!("cons%{}", f.name()), f.arity())))
            .collect();
        let argenc = mk("argenc%".to_string(), 1);
        ExtendedSignature {
            defined,
            constructors,
            enc,
            cons,
            argenc,
        }
    }

    fn argenc_of(&self, t: Term) -> Term {
        Term::app(self.argenc.clone(), vec![t]).expect("argenc is unary")
    }

    /// `cv(t)`: defined symbols become `cons_f`, constructors and variables stay.
    pub fn cv(&self, t: &Term) -> Term {
        match t.kind() {
            TermKind::Var(_) => t.clone(),
            TermKind::App(f, args) => {
                let args = args.iter().map(|a| self.cv(a)).collect();
                let head = self.cons.get(f).cloned().unwrap_or_else(|| f.clone());
                Term::app(head, args).expect("arity preserved")
            }
        }
    }

    /// `bv(f(t₁..t_n)) = enc_f(cv(t₁), …, cv(t_n))`.
    pub fn bv(&self, t: &Term) -> Result<Term, TransformError> {
        match t.kind() {
            TermKind::Var(_) => Err(TransformError::VariableInput),
            TermKind::App(f, args) => {
                let enc = self
                    .enc
                    .get(f)
                    .ok_or_else(|| TransformError::UnknownSymbol(f.clone()))?;
                Ok(Term::app(enc.clone(), args.iter().map(|a| self.cv(a)).collect())
                    .expect("arity preserved"))
            }
        }
    }

    /// `dv(t)`: erases `argenc` and maps `enc_f` and `cons_f` back to `f`.
    pub fn dv(&self, t: &Term) -> Result<Term, TransformError> {
        match t.kind() {
            TermKind::Var(_) => Ok(t.clone()),
            TermKind::App(f, args) if *f == self.argenc => self.dv(&args[0]),
            TermKind::App(f, args) => {
                let head = self
                    .decode(f)
                    .ok_or_else(|| TransformError::UnknownSymbol(f.clone()))?;
                let args = args.iter().map(|a| self.dv(a)).collect::<Result<_, _>>()?;
                Ok(Term::app(head, args).expect("arity preserved"))
            }
        }
    }

    fn decode(&self, f: &Symbol) -> Option<Symbol> {
        if self.defined.contains(f) || self.constructors.contains(f) {
            return Some(f.clone());
        }
        self.enc
            .iter()
            .chain(&self.cons)
            .find(|(_, g)| *g == f)
            .map(|(orig, _)| orig.clone())
    }
}

fn vars(n: usize) -> Vec<Term> {
    (1..=n).map(|i| Term::var(format!("x{i}"))).collect()
}

/// The rules of `G(S)` with a signature describing the fresh symbols.
#[derive(Debug, Clone)]
pub struct Generators {
    pub signature: ExtendedSignature,
    pub rules: Vec<ProbRule>,
}

impl Generators {
    /// `G(S)` as a standalone system.
    pub fn system(&self) -> Ptrs {
        Ptrs::from_rules_unchecked(self.rules.clone(), [])
    }
}

/// `enc_f(x⃗) → f(argenc(x⃗))` for `f ∈ Σ` (by symbol name), then
/// `argenc(cons_f(x⃗)) → f(argenc(x⃗))` for `f ∈ Σ_D`, then
/// `argenc(f(x⃗)) → f(argenc(x⃗))` for `f ∈ Σ_C`.
pub fn generator_rules(s: &Ptrs) -> Generators {
    let sig = ExtendedSignature::of(s);
    let rebuild = |f: &Symbol, xs: &[Term]| {
        Term::app(f.clone(), xs.iter().map(|x| sig.argenc_of(x.clone())).collect())
            .expect("arity preserved")
    };
    let mut rules = Vec::new();
    for (f, enc) in &sig.enc {
        let xs = vars(f.arity());
        rules.push(ProbRule::deterministic(
            Term::app(enc.clone(), xs.clone()).expect("arity preserved"),
            rebuild(f, &xs),
        ));
    }
    for (f, cons) in &sig.cons {
        let xs = vars(f.arity());
        let lhs = sig.argenc_of(Term::app(cons.clone(), xs.clone()).expect("arity preserved"));
        rules.push(ProbRule::deterministic(lhs, rebuild(f, &xs)));
    }
    for f in &sig.constructors {
        let xs = vars(f.arity());
        let lhs = sig.argenc_of(Term::app(f.clone(), xs.clone()).expect("arity preserved"));
        rules.push(ProbRule::deterministic(lhs, rebuild(f, &xs)));
    }
    Generators {
        signature: sig,
        rules,
    }
}

/// `S ∪ G(S)`, with the rules of `S` first.
pub fn union_with_generators(s: &Ptrs) -> (Ptrs, ExtendedSignature) {
    let g = generator_rules(s);
    let rules = s.rules().iter().cloned().chain(g.rules).collect();
    let declared = s.declared_constructors().iter().cloned().collect::<Vec<_>>();
    (Ptrs::from_rules_unchecked(rules, declared), g.signature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio;

    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    fn ap(n: &str, a: Vec<Term>) -> Term {
        Term::apply(n, a)
    }

    fn s8() -> Ptrs {
        let x = Term::var("x");
        Ptrs::new(
            vec![
                ProbRule::new(c("g"), vec![(ratio(3, 4), ap("s", vec![c("g")])), (ratio(1, 4), c("bot"))]),
                ProbRule::deterministic(
                    ap("f", vec![ap("s", vec![x.clone()])]),
                    ap("c", vec![ap("f", vec![x.clone()]), ap("f", vec![x])]),
                ),
            ],
            [],
        )
        .unwrap()
    }

    #[test]
    fn encodings_of_s8_terms() {
        let sig = ExtendedSignature::of(&s8());
        let t = ap("c", vec![c("g"), ap("f", vec![c("g")])]);
        let bv = sig.bv(&t).unwrap();
        assert_eq!(bv.to_string(), "enc%c(cons%g,cons%f(cons%g))");
        assert_eq!(sig.cv(&ap("f", vec![c("g")])).to_string(), "cons%f(cons%g)");
        assert_eq!(sig.dv(&bv).unwrap(), t);
        let fsb = ap("f", vec![ap("s", vec![c("bot")])]);
        assert_eq!(sig.dv(&sig.bv(&fsb).unwrap()).unwrap(), fsb);
        assert_eq!(sig.bv(&Term::var("x")), Err(TransformError::VariableInput));
    }

    #[test]
    fn g_of_s8_has_ten_rules() {
        let g = generator_rules(&s8());
        let shown: Vec<String> = g.rules.iter().map(|r| r.to_string()).collect();
        assert_eq!(
            shown,
            [
                "enc%bot -> {1: bot}",
                "enc%c(x1,x2) -> {1: c(argenc%(x1),argenc%(x2))}",
                "enc%f(x1) -> {1: f(argenc%(x1))}",
                "enc%g -> {1: g}",
                "enc%s(x1) -> {1: s(argenc%(x1))}",
                "argenc%(cons%f(x1)) -> {1: f(argenc%(x1))}",
                "argenc%(cons%g) -> {1: g}",
                "argenc%(bot) -> {1: bot}",
                "argenc%(c(x1,x2)) -> {1: c(argenc%(x1),argenc%(x2))}",
                "argenc%(s(x1)) -> {1: s(argenc%(x1))}",
            ]
        );
        assert!(g.system().validate().is_empty());
        assert!(generator_rules(&Ptrs::empty()).rules.is_empty());
    }

    #[test]
    fn fresh_names_avoid_clashes() {
        let s = Ptrs::new(vec![ProbRule::deterministic(c("argenc%"), c("enc%argenc%"))], []).unwrap();
        let sig = ExtendedSignature::of(&s);
        assert_eq!(sig.argenc.name(), "argenc%%");
        assert_eq!(sig.enc[&Symbol::new("argenc%", 0)].name(), "enc%argenc%%");
        assert_eq!(sig.enc[&Symbol::new("enc%argenc%", 0)].name(), "enc%enc%argenc%");
    }

    #[test]
    fn union_is_valid_and_basic_on_encodings() {
        let (u, sig) = union_with_generators(&s8());
        assert!(u.validate().is_empty());
        let start = Term::app(
            sig.enc[&Symbol::new("f", 1)].clone(),
            vec![ap("s", vec![Term::app(sig.cons[&Symbol::new("g", 0)].clone(), vec![]).unwrap()])],
        )
        .unwrap();
        assert!(u.is_basic(&start));
        assert!(u.is_defined(&sig.argenc));
    }
}
