use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ObjectLabel;

/// A name made only of `A`-`Z` and `_`, never starting or ending with `_`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Identifier(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentifierError {
    #[error("identifier is empty")]
    Empty,
    #[error("identifier {0:?} may only contain capital letters and underscores")]
    BadCharacter(String),
    #[error("identifier {0:?} starts or ends with an underscore")]
    EdgeUnderscore(String),
}

impl Identifier {
    pub fn new(name: impl Into<String>) -> Result<Self, IdentifierError> {
        let name = name.into();
        if name.is_empty() {
            return Err(IdentifierError::Empty);
        }
        if !name.chars().all(|c| c.is_ascii_uppercase() || c == '_') {
            return Err(IdentifierError::BadCharacter(name));
        }
        if name.starts_with('_') || name.ends_with('_') {
            return Err(IdentifierError::EdgeUnderscore(name));
        }
        Ok(Identifier(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Identifier {
    type Err = IdentifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Identifier::new(s)
    }
}

impl TryFrom<String> for Identifier {
    type Error = IdentifierError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Identifier::new(value)
    }
}

impl From<Identifier> for String {
    fn from(id: Identifier) -> Self {
        id.0
    }
}

impl PartialEq<str> for Identifier {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Identifier {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// A sensing condition usable after `IF` and `WHILE`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    Light,
    Dark,
    Far,
    Near,
    Found(ObjectLabel),
    /// A condition name the parser accepted syntactically but which is not
    /// one of the sensing conditions. Validation reports it.
    Other(Identifier),
}

impl Condition {
    pub fn keyword(&self) -> &str {
        match self {
            Condition::Light => "LIGHT",
            Condition::Dark => "DARK",
            Condition::Far => "FAR",
            Condition::Near => "NEAR",
            Condition::Found(_) => "FOUND",
            Condition::Other(name) => name.as_str(),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Found(label) => write!(f, "FOUND {}", label.spl_form()),
            other => f.write_str(other.keyword()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    Repeat,
    If,
    While,
}

impl BlockKind {
    pub fn keyword(self) -> &'static str {
        match self {
            BlockKind::Repeat => "REPEAT",
            BlockKind::If => "IF",
            BlockKind::While => "WHILE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statement {
    /// One of the built-in robot actions.
    Action(Identifier),
    Find(ObjectLabel),
    /// A user-defined function from the registry.
    Call(Identifier),
    Repeat {
        count: u32,
        body: Vec<Statement>,
    },
    If {
        cond: Condition,
        body: Vec<Statement>,
    },
    While {
        cond: Condition,
        body: Vec<Statement>,
    },
}

impl Statement {
    pub fn block_kind(&self) -> Option<BlockKind> {
        match self {
            Statement::Repeat { .. } => Some(BlockKind::Repeat),
            Statement::If { .. } => Some(BlockKind::If),
            Statement::While { .. } => Some(BlockKind::While),
            _ => None,
        }
    }

    pub fn is_block(&self) -> bool {
        self.block_kind().is_some()
    }

    pub fn body(&self) -> Option<&[Statement]> {
        match self {
            Statement::Repeat { body, .. } | Statement::If { body, .. } | Statement::While { body, .. } => Some(body),
            _ => None,
        }
    }

    pub fn body_mut(&mut self) -> Option<&mut Vec<Statement>> {
        match self {
            Statement::Repeat { body, .. } | Statement::If { body, .. } | Statement::While { body, .. } => Some(body),
            _ => None,
        }
    }

    /// The single line this statement occupies (the header for blocks).
    pub fn head_line(&self) -> String {
        match self {
            Statement::Action(name) | Statement::Call(name) => name.to_string(),
            Statement::Find(label) => format!("FIND {}", label.spl_form()),
            Statement::Repeat { count, .. } => format!("REPEAT {count} TIMES"),
            Statement::If { cond, .. } => format!("IF {cond}"),
            Statement::While { cond, .. } => format!("WHILE {cond}"),
        }
    }

    pub fn repeat(count: u32, body: Vec<Statement>) -> Self {
        Statement::Repeat { count, body }
    }

    pub fn if_(cond: Condition, body: Vec<Statement>) -> Self {
        Statement::If { cond, body }
    }

    pub fn while_(cond: Condition, body: Vec<Statement>) -> Self {
        Statement::While { cond, body }
    }

    /// Built-in action by name. Panics on a malformed name; meant for
    /// literals.
    pub fn action(name: &str) -> Self {
        Statement::Action(Identifier::new(name).expect("valid action name"))
    }

    pub fn call(name: &str) -> Self {
        Statement::Call(Identifier::new(name).expect("valid function name"))
    }

    pub fn find(label: &str) -> Self {
        Statement::Find(ObjectLabel::new(label))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Program {
    pub name: Identifier,
    pub statements: Vec<Statement>,
}

impl Program {
    pub const DEFAULT_NAME: &'static str = "PROGRAM";

    pub fn new(name: Identifier, statements: Vec<Statement>) -> Self {
        Program { name, statements }
    }

    pub fn unnamed(statements: Vec<Statement>) -> Self {
        Program {
            name: Identifier(Self::DEFAULT_NAME.to_owned()),
            statements,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// Number of lines in the rendered body, END lines included.
    pub fn line_count(&self) -> usize {
        fn count(stmts: &[Statement]) -> usize {
            stmts
                .iter()
                .map(|s| match s.body() {
                    Some(body) => 2 + count(body),
                    None => 1,
                })
                .sum()
        }
        count(&self.statements)
    }

    /// Names of every user function called anywhere in the program, in first
    /// occurrence order.
    pub fn called_functions(&self) -> Vec<Identifier> {
        fn walk(stmts: &[Statement], out: &mut Vec<Identifier>) {
            for s in stmts {
                match s {
                    Statement::Call(name) if !out.contains(name) => out.push(name.clone()),
                    _ => {}
                }
                if let Some(body) = s.body() {
                    walk(body, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.statements, &mut out);
        out
    }
}
