//! SMIv2 subset: lexing, parsing, printing, cross-module linking and
//! AUGMENTS resolution.

pub mod ast;
mod bundled;
mod lexer;
mod link;
mod parser;
mod printer;
mod resolve;

use thiserror::Error;

use crate::oid::Oid;

pub use ast::*;
pub use bundled::{Mib, MibLoadError, BUNDLED_SOURCES};
pub use link::{link_modules, MibNode, MibRegistry, NodeKind};
pub use parser::parse_mib;
pub use printer::syntax_text;
pub use resolve::{resolve_augments, ColumnDef, Resolution, ResolvedTable, Strictness};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: expected {expected}{}", found.as_ref().map(|f| format!(", found {f}")).unwrap_or_default())]
    Syntax { line: usize, expected: String, found: Option<String> },
    #[error("line {line}: unsupported construct {name}")]
    Unsupported { name: String, line: usize },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. } | ParseError::Unsupported { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("module {0} defined twice")]
    DuplicateModule(String),
    #[error("{module}: {name} defined twice")]
    DuplicateDefinition { name: String, module: String },
    #[error("{symbol} is not exported by {module}")]
    UnresolvedImport { symbol: String, module: String },
    #[error("{module}: unresolved name {name}")]
    UnresolvedName { name: String, module: String },
    #[error("{module}: {name} does not denote an OID")]
    NotAnOid { name: String, module: String },
    #[error("{module}: {name} has no OID and no AUGMENTS table to inherit one from")]
    OrphanEntry { name: String, module: String },
    #[error("{module}: unresolved type {name}")]
    UnresolvedType { name: String, module: String },
    #[error("OID cycle through {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("{name} resolves to invalid OID {oid}")]
    InvalidOid { name: String, oid: String },
    #[error("{oid} assigned to both {first} and {second}")]
    DuplicateOid { oid: Oid, first: String, second: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("unknown name {0}")]
    UnknownName(String),
    #[error("{name} is defined in several modules ({}); qualify as MODULE::{name}", modules.join(", "))]
    AmbiguousName { name: String, modules: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("table {table} has no row object")]
    MissingEntry { table: String },
    #[error("{name} AUGMENTS unknown object {target}")]
    DanglingAugments { name: String, target: String },
    #[error("{name} AUGMENTS {target}, which is not a table row")]
    AugmentsNonEntry { name: String, target: String },
    #[error("AUGMENTS cycle: {}", .0.join(" -> "))]
    AugmentsCycle(Vec<String>),
    #[error("chained AUGMENTS not supported: {name} AUGMENTS {target}, which itself AUGMENTS {base}")]
    ChainedAugments { name: String, target: String, base: String },
    #[error("AUGMENTS {{ {target} }} on table object {name}; only row objects may augment")]
    AugmentsOnTable { name: String, target: String },
    #[error("row {entry} has neither INDEX nor AUGMENTS")]
    MissingIndex { entry: String },
    #[error("INDEX of {entry} names unknown column {column}")]
    UnknownIndexColumn { entry: String, column: String },
    #[error("column {column} appears twice in the effective columns of {table}")]
    DuplicateColumn { table: String, column: String },
}
