//! Typed-STRIPS subset of PDDL: reader, validated models, printer.

mod model;
mod parser;
mod printer;
pub mod sexpr;

use std::collections::BTreeSet;

pub use model::*;
pub use sexpr::Pos;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PddlError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unsupported PDDL feature: {feature}")]
    Unsupported { pos: Pos, feature: String },
    #[error("{pos}: {msg}")]
    Semantic { pos: Pos, msg: String },
}

impl PddlError {
    pub(crate) fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        PddlError::Syntax { pos, msg: msg.into() }
    }

    pub(crate) fn unsupported(pos: Pos, feature: &str) -> Self {
        PddlError::Unsupported {
            pos,
            feature: feature.to_string(),
        }
    }

    pub(crate) fn semantic(pos: Pos, msg: impl Into<String>) -> Self {
        PddlError::Semantic { pos, msg: msg.into() }
    }

    pub fn pos(&self) -> Option<Pos> {
        match self {
            PddlError::Syntax { pos, .. }
            | PddlError::Unsupported { pos, .. }
            | PddlError::Semantic { pos, .. } => Some(*pos),
        }
    }

    /// `file:line:col: message` diagnostic.
    pub fn diagnostic(&self, file: &str) -> String {
        format!("{file}:{self}")
    }
}

pub fn parse_domain(text: &str) -> Result<DomainModel, PddlError> {
    parser::parse_domain(text)
}

pub fn parse_problem(text: &str, domain: &DomainModel) -> Result<ProblemModel, PddlError> {
    parser::parse_problem(text, domain)
}

pub fn detect_static_predicates(domain: &DomainModel) -> BTreeSet<String> {
    domain.static_predicates()
}
