//! The SPL language: syntax tree, text format, validation and block-level
//! revision.

mod ast;
mod catalogue;
mod labels;
mod naming;
mod parse;
mod render;
mod revise;
mod validate;

pub use ast::{BlockKind, Condition, Identifier, IdentifierError, Program, Statement};
pub use catalogue::{ActionCatalogue, BUILTIN_ACTIONS, CONDITION_NAMES, RESERVED_WORDS};
pub use labels::{ObjectLabel, DETECTION_LABELS};
pub use naming::{instruction_to_name, NameError};
pub use parse::{parse, parse_body, ParseError, ParseErrorKind};
pub use render::{render, render_listing, BlockNumbering, Numbering};
pub use revise::{apply_add, apply_change, apply_delete, DeleteOutcome, ReviseError};
pub use validate::{validate, validate_text, Issue, IssueCode, ValidationReport};
