//! Interface-specification (`.is`) contracts: the entry points a module must
//! expose, the order in which they are assumed to be called, the external
//! functions it may call, and the order it must call them in.
//!
//! The concrete grammar is documented in `docs/contract-grammar.md`.

mod lexer;
mod order;
mod parser;
mod render;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sig::FunSignature;

pub(crate) use order::predecessors;
pub use order::{order_closure, CycleError, OrderClosure};
pub use parser::parse_contract;
pub use render::render_contract;
pub use validate::{validate_contract, ContractIssue, IssueKind};

/// `before` must happen before `after`. Always stored in `<` orientation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrderConstraint {
    pub before: String,
    pub after: String,
}

impl OrderConstraint {
    pub fn new(before: impl Into<String>, after: impl Into<String>) -> Self {
        OrderConstraint {
            before: before.into(),
            after: after.into(),
        }
    }
}

/// Functions another module provides, grouped under an identifier or a header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalGroup {
    pub group_id: String,
    pub decls: Vec<FunSignature>,
}

impl ExternalGroup {
    /// Header the group binds to, for ids such as `rtdb.h`.
    pub fn header_name(&self) -> Option<&str> {
        self.group_id
            .ends_with(".h")
            .then_some(self.group_id.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKeyword {
    EntryPoints,
    EntryFunctions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryOrderKeyword {
    EntryOrder,
    /// `EntryOrder`
    CamelCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExternalOrderKeyword {
    ExternalCallOrder,
    ExternalOrder,
}

/// Which keyword spelling each section used in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionSpelling {
    pub entry: EntryKeyword,
    pub entry_order: EntryOrderKeyword,
    pub external_order: ExternalOrderKeyword,
}

impl Default for SectionSpelling {
    fn default() -> Self {
        SectionSpelling {
            entry: EntryKeyword::EntryPoints,
            entry_order: EntryOrderKeyword::EntryOrder,
            external_order: ExternalOrderKeyword::ExternalCallOrder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ISContract {
    pub module_name: String,
    pub entry_points: Vec<FunSignature>,
    pub entry_order: Vec<OrderConstraint>,
    pub external_groups: Vec<ExternalGroup>,
    pub external_order: Vec<OrderConstraint>,
    pub spelling: SectionSpelling,
}

impl ISContract {
    pub fn entry(&self, name: &str) -> Option<&FunSignature> {
        self.entry_points.iter().find(|e| e.name == name)
    }

    pub fn is_entry(&self, name: &str) -> bool {
        self.entry(name).is_some()
    }

    pub fn entry_names(&self) -> impl Iterator<Item = &str> {
        self.entry_points.iter().map(|e| e.name.as_str())
    }

    /// The group and signature permitting a call to `name`.
    pub fn external(&self, name: &str) -> Option<(&ExternalGroup, &FunSignature)> {
        self.external_groups
            .iter()
            .find_map(|g| g.decls.iter().find(|d| d.name == name).map(|d| (g, d)))
    }

    pub fn external_names(&self) -> impl Iterator<Item = &str> {
        self.external_groups
            .iter()
            .flat_map(|g| g.decls.iter().map(|d| d.name.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("{line}:{column}: duplicate section `{section}`")]
    DuplicateSection {
        line: u32,
        column: u32,
        section: String,
    },
    #[error("{line}:{column}: unknown keyword `{keyword}`")]
    UnknownKeyword {
        line: u32,
        column: u32,
        keyword: String,
    },
}
