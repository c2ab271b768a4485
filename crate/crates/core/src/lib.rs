//! Analysis and execution of probabilistic term rewrite systems.

pub mod analyzer;
pub mod engine;
pub mod model;
pub mod props;
pub mod semantics;
pub mod spare;
pub mod syntax;
pub mod transform;
pub mod term;

pub use model::{merge, ratio, scale, MultiDistribution, Prob, ProbRule, Ptrs, Violation};
pub use term::{unify, ParallelOrder, Position, Substitution, Symbol, Term, TermKind, Var};
