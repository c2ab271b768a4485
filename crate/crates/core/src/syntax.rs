//! The `.ptrs` file format: parser with positioned diagnostics, serializer,
//! policy script files and a size-bounded term renderer.
//!
//! ```text
//! (VAR x y)
//! (CONSTRUCTORS bot/0 s/1)
//! (RULES
//!   g -> {3/4: d(g), 1/4: bot}
//!   d(x) -> {1: c(x,x)}
//! )
//! ```
//!
//! A deterministic rule may be written `l -> r`. `⊥` is read as `bot`, and
//! `(COMMENT ...)` blocks are skipped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::engine::{ScriptEntry, Scripted};
use crate::model::{Prob, ProbRule, Ptrs};
use crate::term::{Position, Symbol, Term, TermKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagnosticKind {
    #[error("unexpected {found}, expected {expected}")]
    Unexpected { found: String, expected: &'static str },
    #[error("unexpected end of input, expected {0}")]
    UnexpectedEof(&'static str),
    #[error("unknown block {0}")]
    UnknownBlock(String),
    #[error("missing RULES block")]
    NoRules,
    #[error("{name} is used with arity {found} but was declared or used with arity {expected}")]
    ArityConflict { name: String, expected: usize, found: usize },
    #[error("variable {0} is applied to arguments")]
    VariableApplied(String),
    #[error("{0} is declared both as a variable and as a constructor")]
    VariableDeclaredConstructor(String),
    #[error("lhs is a variable")]
    VariableLhs,
    #[error("variable {0} does not occur in the lhs")]
    UnboundVariable(String),
    #[error("invalid probability {0:?}")]
    BadProbability(String),
    #[error("probability {0} is outside (0,1]")]
    ProbabilityOutOfRange(Prob),
    #[error("probabilities sum to {0}")]
    ProbabilitySum(Prob),
    #[error("constructor {0} is the root of a left-hand side")]
    ConstructorIsDefined(String),
    #[error("bad position {0:?}")]
    BadPosition(String),
    #[error("bad rule index {0:?}")]
    BadRuleIndex(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {kind}")]
pub struct Diagnostic {
    pub span: Span,
    pub kind: DiagnosticKind,
}

fn diag(span: Span, kind: DiagnosticKind) -> Diagnostic {
    Diagnostic { span, kind }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Arrow,
    Ident(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::Comma => f.write_str("','"),
            Tok::Colon => f.write_str("':'"),
            Tok::Arrow => f.write_str("'->'"),
            Tok::Ident(s) => write!(f, "{s:?}"),
        }
    }
}

fn is_ident_char(c: char) -> bool {
    !c.is_whitespace() && !"(){},:".contains(c)
}

fn lex(text: &str) -> Vec<(Tok, Span)> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut line, mut col) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            _ => None,
        };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
        } else if c.is_whitespace() {
            col += 1;
            i += 1;
        } else if let Some(t) = single {
            out.push((t, span));
            col += 1;
            i += 1;
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push((Tok::Arrow, span));
            col += 2;
            i += 2;
        } else {
            let mut name = String::new();
            while i < chars.len()
                && is_ident_char(chars[i])
                && !(chars[i] == '-' && chars.get(i + 1) == Some(&'>'))
            {
                name.push(chars[i]);
                col += 1;
                i += 1;
            }
            if name == "⊥" {
                name = "bot".into();
            }
            out.push((Tok::Ident(name), span));
        }
    }
    out
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    end: Span,
    vars: BTreeSet<String>,
    arities: BTreeMap<String, usize>,
}

impl Parser {
    fn new(text: &str) -> Self {
        let lines: Vec<&str> = text.split('\n').collect();
        let end = Span {
            line: lines.len(),
            col: lines.last().map_or(0, |l| l.chars().count()) + 1,
        };
        Parser {
            toks: lex(text),
            pos: 0,
            end,
            vars: BTreeSet::new(),
            arities: BTreeMap::new(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map_or(self.end, |(_, s)| *s)
    }

    fn bump(&mut self) -> Option<(Tok, Span)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn unexpected(&self, expected: &'static str) -> Diagnostic {
        match self.toks.get(self.pos) {
            Some((t, s)) => diag(*s, DiagnosticKind::Unexpected { found: t.to_string(), expected }),
            None => diag(self.end, DiagnosticKind::UnexpectedEof(expected)),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<Span, Diagnostic> {
        if self.peek() == Some(&tok) {
            Ok(self.bump().expect("peeked").1)
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn ident(&mut self, expected: &'static str) -> Result<(String, Span), Diagnostic> {
        match self.peek() {
            Some(Tok::Ident(_)) => match self.bump() {
                Some((Tok::Ident(s), sp)) => Ok((s, sp)),
                _ => unreachable!(),
            },
            _ => Err(self.unexpected(expected)),
        }
    }

    fn note_arity(&mut self, name: &str, arity: usize, span: Span) -> Result<(), Diagnostic> {
        match self.arities.get(name) {
            Some(&a) if a != arity => Err(diag(
                span,
                DiagnosticKind::ArityConflict {
                    name: name.to_string(),
                    expected: a,
                    found: arity,
                },
            )),
            _ => {
                self.arities.insert(name.to_string(), arity);
                Ok(())
            }
        }
    }

    fn term(&mut self) -> Result<Term, Diagnostic> {
        let (name, span) = self.ident("a term")?;
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.bump();
            if self.peek() != Some(&Tok::RParen) {
                loop {
                    args.push(self.term()?);
                    match self.peek() {
                        Some(Tok::Comma) => {
                            self.bump();
                        }
                        _ => break,
                    }
                }
            }
            self.expect(Tok::RParen, "',' or ')'")?;
        }
        if self.vars.contains(&name) {
            if !args.is_empty() {
                return Err(diag(span, DiagnosticKind::VariableApplied(name)));
            }
            return Ok(Term::var(name));
        }
        self.note_arity(&name, args.len(), span)?;
        Ok(Term::apply(name.as_str(), args))
    }

    fn probability(&mut self) -> Result<(Prob, Span), Diagnostic> {
        let (text, span) = self.ident("a probability")?;
        let bad = || diag(span, DiagnosticKind::BadProbability(text.clone()));
        let int = |s: &str| -> Option<BigInt> {
            (!s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
                .then(|| s.parse().ok())
                .flatten()
        };
        let p = match text.split_once('/') {
            Some((n, d)) => {
                let (n, d) = (int(n).ok_or_else(bad)?, int(d).ok_or_else(bad)?);
                if d.is_zero() {
                    return Err(bad());
                }
                Prob::new(n, d)
            }
            None => Prob::from_integer(int(&text).ok_or_else(bad)?),
        };
        Ok((p, span))
    }

    fn rule(&mut self) -> Result<ProbRule, Diagnostic> {
        let lhs_span = self.span();
        let lhs = self.term()?;
        if lhs.is_var() {
            return Err(diag(lhs_span, DiagnosticKind::VariableLhs));
        }
        self.expect(Tok::Arrow, "'->'")?;
        let mut rhs = Vec::new();
        let mut spans = Vec::new();
        let brace = self.span();
        if self.peek() == Some(&Tok::LBrace) {
            self.bump();
            loop {
                let (p, ps) = self.probability()?;
                if !in_unit_interval(&p) {
                    return Err(diag(ps, DiagnosticKind::ProbabilityOutOfRange(p)));
                }
                self.expect(Tok::Colon, "':'")?;
                spans.push(self.span());
                rhs.push((p, self.term()?));
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.bump();
                    }
                    _ => break,
                }
            }
            self.expect(Tok::RBrace, "',' or '}'")?;
            let sum: Prob = rhs.iter().map(|(p, _)| p).sum();
            if !sum.is_one() {
                return Err(diag(brace, DiagnosticKind::ProbabilitySum(sum)));
            }
        } else {
            spans.push(self.span());
            rhs.push((Prob::one(), self.term()?));
        }
        let bound = lhs.vars();
        for ((_, r), sp) in rhs.iter().zip(spans) {
            if let Some(v) = r.vars().into_iter().find(|v| !bound.contains(v)) {
                return Err(diag(sp, DiagnosticKind::UnboundVariable(v.to_string())));
            }
        }
        Ok(ProbRule::new(lhs, rhs))
    }

    fn at_block_end(&self) -> bool {
        matches!(self.peek(), Some(Tok::RParen) | None)
    }

    fn skip_balanced(&mut self) -> Result<(), Diagnostic> {
        let mut depth = 1usize;
        while depth > 0 {
            match self.bump() {
                Some((Tok::LParen, _)) => depth += 1,
                Some((Tok::RParen, _)) => depth -= 1,
                Some(_) => {}
                None => return Err(diag(self.end, DiagnosticKind::UnexpectedEof("')'"))),
            }
        }
        Ok(())
    }
}

fn in_unit_interval(p: &Prob) -> bool {
    *p.numer() > BigInt::zero() && *p <= Prob::one()
}

/// A parsed system with the source location of every rule.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub system: Ptrs,
    pub variables: BTreeSet<String>,
    pub rule_spans: Vec<Span>,
}

/// Parses a `.ptrs` file. Input without any block is read as a bare rule list.
pub fn parse(text: &str) -> Result<SourceFile, Diagnostic> {
    let mut p = Parser::new(text);
    let mut rules = Vec::new();
    let mut rule_spans = Vec::new();
    let mut constructors: Vec<(Symbol, Span)> = Vec::new();
    let mut saw_rules = false;
    if p.peek() != Some(&Tok::LParen) && p.peek().is_some() {
        while p.peek().is_some() {
            rule_spans.push(p.span());
            rules.push(p.rule()?);
        }
        saw_rules = true;
    }
    while p.peek().is_some() {
        p.expect(Tok::LParen, "'('")?;
        let (block, span) = p.ident("VAR, CONSTRUCTORS, RULES or COMMENT")?;
        match block.as_str() {
            "VAR" => {
                while !p.at_block_end() {
                    let (v, vs) = p.ident("a variable name")?;
                    if p.arities.contains_key(&v) {
                        return Err(diag(vs, DiagnosticKind::VariableDeclaredConstructor(v)));
                    }
                    p.vars.insert(v);
                }
            }
            "CONSTRUCTORS" => {
                while !p.at_block_end() {
                    let (decl, ds) = p.ident("name/arity")?;
                    let bad = || {
                        diag(ds, DiagnosticKind::Unexpected {
                            found: format!("{decl:?}"),
                            expected: "name/arity",
                        })
                    };
                    let (name, arity) = decl.rsplit_once('/').ok_or_else(bad)?;
                    let arity: usize = arity.parse().map_err(|_| bad())?;
                    if name.is_empty() {
                        return Err(bad());
                    }
                    if p.vars.contains(name) {
                        return Err(diag(ds, DiagnosticKind::VariableDeclaredConstructor(name.into())));
                    }
                    p.note_arity(name, arity, ds)?;
                    constructors.push((Symbol::new(name, arity), ds));
                }
            }
            "RULES" => {
                saw_rules = true;
                while !p.at_block_end() {
                    rule_spans.push(p.span());
                    rules.push(p.rule()?);
                }
            }
            "COMMENT" => {
                p.skip_balanced()?;
                continue;
            }
            _ => return Err(diag(span, DiagnosticKind::UnknownBlock(block))),
        }
        p.expect(Tok::RParen, "')'")?;
    }
    if !saw_rules {
        return Err(diag(p.end, DiagnosticKind::NoRules));
    }
    let roots: BTreeSet<Symbol> = rules.iter().filter_map(|r| r.lhs().root().cloned()).collect();
    if let Some((c, sp)) = constructors.iter().find(|(c, _)| roots.contains(c)) {
        return Err(diag(*sp, DiagnosticKind::ConstructorIsDefined(c.name().to_string())));
    }
    let system = Ptrs::new(rules, constructors.into_iter().map(|(c, _)| c))
        .expect("all violations are diagnosed while parsing");
    Ok(SourceFile {
        system,
        variables: p.vars,
        rule_spans,
    })
}

/// Parses a single term, reading the given names as variables.
pub fn parse_term(text: &str, vars: &BTreeSet<String>) -> Result<Term, Diagnostic> {
    let mut p = Parser::new(text);
    p.vars = vars.clone();
    let t = p.term()?;
    if p.peek().is_some() {
        return Err(p.unexpected("end of term"));
    }
    Ok(t)
}

/// Parses a ground term, checking arities against the signature of `s`.
pub fn parse_term_for(s: &Ptrs, text: &str) -> Result<Term, Diagnostic> {
    let mut p = Parser::new(text);
    for sym in s.signature() {
        p.arities.insert(sym.name().to_string(), sym.arity());
    }
    let t = p.term()?;
    if p.peek().is_some() {
        return Err(p.unexpected("end of term"));
    }
    Ok(t)
}

/// Renders `s` so that [`parse`] reads it back to an equal system.
pub fn serialize(s: &Ptrs) -> String {
    let vars: BTreeSet<String> = s
        .rules()
        .iter()
        .flat_map(|r| r.lhs().vars())
        .map(|v| v.to_string())
        .collect();
    let mut out = String::new();
    if !vars.is_empty() {
        let v: Vec<&str> = vars.iter().map(String::as_str).collect();
        writeln!(out, "(VAR {})", v.join(" ")).expect("write to string");
    }
    if !s.declared_constructors().is_empty() {
        let c: Vec<String> = s
            .declared_constructors()
            .iter()
            .map(|c| format!("{}/{}", c.name(), c.arity()))
            .collect();
        writeln!(out, "(CONSTRUCTORS {})", c.join(" ")).expect("write to string");
    }
    out.push_str("(RULES\n");
    for r in s.rules() {
        writeln!(out, "  {r}").expect("write to string");
    }
    out.push_str(")\n");
    out
}

/// Parses a policy script: one `PATTERN @ POS[,POS...] : RULE` entry per
/// line, `#` starts a comment. Variables of `vars` in patterns match anything.
pub fn parse_script(text: &str, vars: &BTreeSet<String>) -> Result<Scripted, Diagnostic> {
    let mut entries = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let at_span = |col: usize| Span { line: ln + 1, col: col + 1 };
        let shift = |d: Diagnostic, offset: usize| Diagnostic {
            span: Span {
                line: ln + 1,
                col: d.span.col + offset,
            },
            kind: d.kind,
        };
        let at = line.rfind('@').ok_or_else(|| {
            diag(at_span(line.len()), DiagnosticKind::UnexpectedEof("'@'"))
        })?;
        let colon = line[at..]
            .rfind(':')
            .map(|c| c + at)
            .ok_or_else(|| diag(at_span(line.len()), DiagnosticKind::UnexpectedEof("':'")))?;
        let pattern = parse_term(&line[..at], vars).map_err(|d| shift(d, 0))?;
        let positions = line[at + 1..colon]
            .split(',')
            .map(|p| {
                Position::parse(p.trim())
                    .ok_or_else(|| diag(at_span(at + 1), DiagnosticKind::BadPosition(p.trim().into())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let idx = line[colon + 1..].trim();
        let rule_index = idx
            .parse()
            .map_err(|_| diag(at_span(colon + 1), DiagnosticKind::BadRuleIndex(idx.into())))?;
        entries.push(ScriptEntry {
            pattern,
            positions,
            rule_index,
        });
    }
    Ok(Scripted::new(entries))
}

/// `t` rendered with at most about `budget` characters; an elided tail is
/// marked with `…`. Linear in the output size even for heavily shared terms.
pub fn render_bounded(t: &Term, budget: usize) -> String {
    fn go(t: &Term, out: &mut String, budget: usize) -> bool {
        if out.len() >= budget {
            out.push('…');
            return false;
        }
        match t.kind() {
            TermKind::Var(v) => write!(out, "{v}").expect("write to string"),
            TermKind::App(f, args) => {
                out.push_str(f.name());
                if !args.is_empty() {
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        if !go(a, out, budget) {
                            return false;
                        }
                    }
                    out.push(')');
                }
            }
        }
        true
    }
    let mut out = String::new();
    go(t, &mut out, budget);
    out
}
