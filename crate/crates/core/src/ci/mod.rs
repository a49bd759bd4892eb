//! Extended conditional independence: statements over stochastic variables
//! and the regime indicator `Sigma`, the semi-graphoid axioms P1–P5, closure
//! computation and breadth-first proof search.
//!
//! Statements are written `left _||_ right | given`. The regime atom is never
//! allowed in the left term; a statement with `Sigma` on the right doubles as
//! its mirror image, which is how derivations pass through forms such as
//! `Sigma _||_ C | X` without ever storing them.

mod closure;
mod premises;
mod rules;
mod statement;

use thiserror::Error;

pub use closure::{
    closure, derive, verify_derivation, Closure, DeriveOutcome, Derivation, EngineConfig,
    Verification,
};
pub use premises::{parse_premises, PremiseSet};
pub use rules::{apply_rule, determined_by, is_function_of, FunctionalDep, ProofStep, Rule};
pub use statement::{parse_statement, Atom, AtomKind, CIStatement, VarSet, REGIME_NAME};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CiError {
    #[error("syntax error at column {}: {message}", position + 1)]
    Syntax { position: usize, message: String },
    #[error("syntax error on line {line}, column {column}: {message}")]
    PremiseSyntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid statement: {0}")]
    Validity(String),
    #[error("rule does not apply: {0}")]
    PatternMismatch(String),
    #[error("universe has {atoms} atoms, more than the cap of {cap}")]
    UniverseTooLarge { atoms: usize, cap: usize },
    #[error("atom '{0}' is not in the universe")]
    OutsideUniverse(String),
}

impl CiError {
    /// Stable machine-readable name.
    pub fn name(&self) -> &'static str {
        match self {
            CiError::Syntax { .. } | CiError::PremiseSyntax { .. } => "SyntaxError",
            CiError::Validity(_) => "ValidityError",
            CiError::PatternMismatch(_) => "PatternMismatch",
            CiError::UniverseTooLarge { .. } => "UniverseTooLarge",
            CiError::OutsideUniverse(_) => "OutsideUniverse",
        }
    }
}
