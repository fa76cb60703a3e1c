//! C front end: preprocessing, parsing and the module model.

pub mod ast;
pub mod cfg;
pub mod lexer;
pub mod model;
pub mod parser;
pub mod preprocess;
pub mod scan;

use std::path::PathBuf;

use crate::source::SourceLoc;

pub use cfg::{build_cfg, BlockId, Cfg, Event};
pub use model::{parse_module, CModule, CallSite, ConstructFlag, ConstructKind, DeclaredIn, FunDeclSite, FunctionBody, GlobalVar, HeaderDef};
pub use preprocess::{preprocess, IncludeRecord, PreprocessConfig, Preprocessed};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrontendError {
    #[error("{path}: {message}", path = path.display())]
    Io { path: PathBuf, message: String },
    #[error("{loc}: lexical error: {message}")]
    Lex { loc: SourceLoc, message: String },
    #[error("{loc}: preprocessor error: {message}")]
    Preprocess { loc: SourceLoc, message: String },
    #[error("{loc}: cannot resolve include {name}")]
    UnresolvedInclude { loc: SourceLoc, name: String },
    #[error("{loc}: parse error: {message}")]
    Parse { loc: SourceLoc, message: String },
    #[error("{loc}: unsupported construct: {construct}")]
    Unsupported { loc: SourceLoc, construct: String },
    #[error("recursion among module functions: {}", functions.join(", "))]
    Recursion { functions: Vec<String> },
}
