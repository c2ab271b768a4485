mod report;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use past_lift::analyzer::{analyze_with, AnalyzeOptions, Claim, Scope};
use past_lift::engine::{PolicySpec, Strategy};
use past_lift::props::{self, DEFAULT_JOIN_DEPTH};
use past_lift::semantics::{
    adversarial_lower_bound, mc_estimate, unfold_exact, SemanticsError, UnfoldOptions,
    DEFAULT_MEMO_CAP, DEFAULT_SUPPORT_CAP,
};
use past_lift::spare::{
    default_basic_starts, falsify_spare, prove_spare, DEFAULT_ARG_DEPTH, DEFAULT_FALSIFY_DEPTH,
};
use past_lift::syntax::{parse, parse_script, parse_term_for, serialize, SourceFile};
use past_lift::transform::union_with_generators;
use past_lift::Term;

#[derive(Debug, Parser)]
#[command(name = "past-lift", version, about = "Analyze and run probabilistic term rewrite systems")]
struct Cli {
    /// Worker threads for parallel search and sampling (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScopeArg {
    All,
    Basic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Full,
    #[value(alias = "innermost")]
    I,
    #[value(alias = "leftmost-innermost")]
    Li,
    Par,
    Ipar,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Full => Strategy::Full,
            StrategyArg::I => Strategy::Innermost,
            StrategyArg::Li => Strategy::LeftmostInnermost,
            StrategyArg::Par => Strategy::Simultaneous,
            StrategyArg::Ipar => Strategy::InnermostSimultaneous,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Mc,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Syntactic properties: linearity, erasure, overlaps, WCR.
    Check {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_JOIN_DEPTH)]
        join_depth: usize,
        #[arg(long)]
        json: bool,
    },
    /// Theorem verdicts and the implications they license.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        scope: ScopeArg,
        /// A claim taken as known, e.g. iAST, iAST-par, wPAST, fAST@basic.
        #[arg(long = "assert", value_name = "CLAIM")]
        assertions: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Unfold the lifted semantics exactly or estimate termination by sampling.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        term: String,
        #[arg(long, value_enum, default_value = "full")]
        strategy: StrategyArg,
        /// first | rightmost | random:SEED | script:FILE
        #[arg(long, default_value = "first")]
        policy: String,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 100_000)]
        step_cap: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SUPPORT_CAP)]
        support_cap: usize,
        #[arg(long)]
        json: bool,
    },
    /// Least termination probability within N steps over all policies.
    Adversary {
        file: PathBuf,
        #[arg(long)]
        term: String,
        #[arg(long, value_enum, default_value = "i")]
        strategy: StrategyArg,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_MEMO_CAP)]
        memo_cap: usize,
        #[arg(long)]
        json: bool,
    },
    /// Spareness proof attempt and bounded counterexample search.
    Spare {
        file: PathBuf,
        #[arg(long)]
        falsify: bool,
        #[arg(long, default_value_t = DEFAULT_FALSIFY_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_ARG_DEPTH)]
        arg_depth: usize,
        /// Basic start term for the search; replaces the generated ones.
        #[arg(long = "start", value_name = "TERM")]
        starts: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Write S ∪ G(S).
    Transform {
        file: PathBuf,
        #[arg(long, required = true)]
        generators: bool,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

/// Failure classes, mapped to exit codes 1, 2 and 3.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Cap(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Cap(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Cap(m) => m,
        }
    }
}

fn semantics_failure(e: SemanticsError) -> Failure {
    match e {
        SemanticsError::Engine(e) => Failure::Input(e.to_string()),
        other => Failure::Cap(other.to_string()),
    }
}

fn load(path: &Path) -> Result<SourceFile, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|d| Failure::Input(format!("{}:{d}", path.display())))
}

fn term_arg(src: &SourceFile, text: &str) -> Result<Term, Failure> {
    parse_term_for(&src.system, text).map_err(|d| Failure::Input(format!("--term {text:?}: {d}")))
}

fn policy_arg(src: &SourceFile, text: &str) -> Result<PolicySpec, Failure> {
    match text.split_once(':') {
        None if text == "first" => Ok(PolicySpec::First),
        None if text == "rightmost" => Ok(PolicySpec::Rightmost),
        Some(("random", seed)) => seed
            .parse()
            .map(PolicySpec::Random)
            .map_err(|_| Failure::Usage(format!("bad seed in --policy {text:?}"))),
        Some(("script", file)) => {
            let body = fs::read_to_string(file).map_err(|e| Failure::Input(format!("{file}: {e}")))?;
            let script = parse_script(&body, &src.variables)
                .map_err(|d| Failure::Input(format!("{file}:{d}")))?;
            Ok(PolicySpec::Script(Arc::new(script)))
        }
        _ => Err(Failure::Usage(format!(
            "unknown policy {text:?}; expected first, rightmost, random:SEED or script:FILE"
        ))),
    }
}

/// Writes the result; a closed stdout (e.g. `| head`) is not an error.
fn emit(json: bool, value: serde_json::Value, text: String) {
    let mut out = io::stdout().lock();
    let _ = if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("serializable"))
    } else {
        out.write_all(text.as_bytes())
    };
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Check { file, join_depth, json } => {
            let src = load(&file)?;
            let r = props::check_with(&src.system, join_depth);
            emit(json, report::check_json(&src.system, &r), report::check_text(&src.system, &r));
        }
        Command::Analyze { file, scope, assertions, json } => {
            let src = load(&file)?;
            let claims = assertions
                .iter()
                .map(|a| a.parse::<Claim>().map_err(|e| Failure::Usage(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            let scope = match scope {
                ScopeArg::All => Scope::AllTerms,
                ScopeArg::Basic => Scope::BasicTerms,
            };
            let r = analyze_with(&src.system, scope, &claims, AnalyzeOptions::default());
            emit(json, report::analyze_json(&r), r.to_string());
        }
        Command::Simulate {
            file,
            term,
            strategy,
            policy,
            depth,
            mode,
            samples,
            step_cap,
            seed,
            support_cap,
            json,
        } => {
            let src = load(&file)?;
            let start = term_arg(&src, &term)?;
            let spec = policy_arg(&src, &policy)?;
            let strategy = Strategy::from(strategy);
            match mode {
                ModeArg::Exact => {
                    let options = UnfoldOptions {
                        support_cap,
                        coalesce: spec.is_term_deterministic(),
                    };
                    let mut p = spec.instantiate();
                    match unfold_exact(&src.system, &start, &strategy, p.as_mut(), depth, options) {
                        Ok(trace) => emit(
                            json,
                            report::trace_json(&start, &strategy, &policy, &trace, true),
                            report::trace_text(&trace, true),
                        ),
                        Err(SemanticsError::CapExceeded { step, size, cap, trace }) => {
                            emit(
                                json,
                                report::trace_json(&start, &strategy, &policy, &trace, false),
                                report::trace_text(&trace, false),
                            );
                            return Err(Failure::Cap(format!(
                                "support of step {step} has {size} entries, above the cap of {cap}"
                            )));
                        }
                        Err(e) => return Err(semantics_failure(e)),
                    }
                }
                ModeArg::Mc => {
                    let est = mc_estimate(&src.system, &start, &strategy, &spec, samples, step_cap, seed)
                        .map_err(|e| Failure::Input(e.to_string()))?;
                    emit(
                        json,
                        report::mc_json(&start, &strategy, &policy, step_cap, seed, &est),
                        report::mc_text(step_cap, &est),
                    );
                }
            }
        }
        Command::Adversary { file, term, strategy, depth, memo_cap, json } => {
            let src = load(&file)?;
            let start = term_arg(&src, &term)?;
            let strategy = Strategy::from(strategy);
            let bound = adversarial_lower_bound(&src.system, &start, &strategy, depth, memo_cap)
                .map_err(semantics_failure)?;
            emit(
                json,
                report::adversary_json(&start, &strategy, depth, &bound),
                report::adversary_text(&start, &strategy, depth, &bound),
            );
        }
        Command::Spare { file, falsify, depth, arg_depth, starts, json } => {
            let src = load(&file)?;
            let proof = prove_spare(&src.system);
            let search = if falsify {
                let starts = if starts.is_empty() {
                    default_basic_starts(&src.system, arg_depth)
                } else {
                    starts.iter().map(|t| term_arg(&src, t)).collect::<Result<_, _>>()?
                };
                let found = falsify_spare(&src.system, depth, &starts)
                    .map_err(|e| Failure::Input(e.to_string()))?;
                Some(report::Search { depth, arg_depth, starts: starts.len(), found })
            } else {
                None
            };
            emit(
                json,
                report::spare_json(&proof, search.as_ref()),
                report::spare_text(&proof, search.as_ref()),
            );
        }
        Command::Transform { file, generators, output, json } => {
            debug_assert!(generators);
            let src = load(&file)?;
            let (u, _) = union_with_generators(&src.system);
            let text = serialize(&u);
            if let Some(out) = &output {
                fs::write(out, &text).map_err(|e| Failure::Input(format!("{}: {e}", out.display())))?;
            }
            let added = u.rules().len() - src.system.rules().len();
            let shown = match &output {
                Some(out) => format!("wrote {} rules ({added} generator rules) to {}\n", u.rules().len(), out.display()),
                None => text.clone(),
            };
            emit(json, report::transform_json(output.as_deref(), &u, added, &text), shown);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
