use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::Functions;
use crate::spl::{parse_body, render, validate, ActionCatalogue, Identifier, Numbering, Program, ValidationReport};

/// One user-defined function together with the instruction that created it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub name: Identifier,
    pub instruction: String,
    pub body: Program,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegisterError {
    #[error("DUPLICATE_NAME: {0} is already registered")]
    DuplicateName(Identifier),
    #[error("INVALID: {0} is a reserved word or built-in action")]
    ReservedName(Identifier),
    #[error("INVALID_BODY: {0}")]
    InvalidBody(ValidationReport),
    /// The function was valid but could not be written to storage.
    #[error("STORAGE: {0}")]
    Storage(String),
}

impl RegisterError {
    pub fn code(&self) -> &'static str {
        match self {
            RegisterError::DuplicateName(_) => "DUPLICATE_NAME",
            RegisterError::ReservedName(_) => "INVALID",
            RegisterError::InvalidBody(_) => "INVALID_BODY",
            RegisterError::Storage(_) => "STORAGE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RemoveError {
    #[error("no function named {0}")]
    NotFound(String),
    #[error("{name} is used by {}", by.iter().map(Identifier::as_str).collect::<Vec<_>>().join(", "))]
    Referenced { name: Identifier, by: Vec<Identifier> },
}

#[derive(Debug, Error)]
pub enum RegistryFileError {
    #[error("unsupported registry version {0}")]
    Version(u32),
    #[error("malformed registry document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("function {name}: {reason}")]
    Entry { name: String, reason: String },
}

/// On-disk document form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryDocument {
    pub version: u32,
    pub functions: Vec<FunctionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub name: String,
    pub instruction: String,
    pub spl: Vec<String>,
    pub created_at: DateTime<Utc>,
}

/// Registered user functions, in registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FunctionRegistry {
    entries: Vec<RegistryEntry>,
}

impl FunctionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&RegistryEntry> {
        self.entries.iter().find(|e| e.name.as_str() == name)
    }

    /// Built-ins plus every registered function.
    pub fn catalogue(&self) -> ActionCatalogue {
        let mut cat = ActionCatalogue::builtin();
        for e in &self.entries {
            cat.add_function(Program::new(e.name.clone(), e.body.statements.clone()));
        }
        cat
    }

    pub fn register(&mut self, name: Identifier, instruction: &str, body: Program) -> Result<(), RegisterError> {
        self.register_at(name, instruction, body, Utc::now())
    }

    pub fn register_at(
        &mut self,
        name: Identifier,
        instruction: &str,
        body: Program,
        created_at: DateTime<Utc>,
    ) -> Result<(), RegisterError> {
        if ActionCatalogue::is_reserved(name.as_str()) || ActionCatalogue::is_builtin(name.as_str()) {
            return Err(RegisterError::ReservedName(name));
        }
        if self.get(name.as_str()).is_some() {
            return Err(RegisterError::DuplicateName(name));
        }
        let report = validate(&body, &self.catalogue());
        if !report.ok() {
            return Err(RegisterError::InvalidBody(report));
        }
        self.entries.push(RegistryEntry {
            body: Program::new(name.clone(), body.statements),
            name,
            instruction: instruction.to_owned(),
            created_at,
        });
        Ok(())
    }

    /// Registered functions whose bodies call `name`.
    pub fn referenced_by(&self, name: &str) -> Vec<Identifier> {
        self.entries
            .iter()
            .filter(|e| e.name.as_str() != name && e.body.called_functions().iter().any(|c| c.as_str() == name))
            .map(|e| e.name.clone())
            .collect()
    }

    pub fn remove(&mut self, name: &str) -> Result<RegistryEntry, RemoveError> {
        let idx = self
            .entries
            .iter()
            .position(|e| e.name.as_str() == name)
            .ok_or_else(|| RemoveError::NotFound(name.to_owned()))?;
        let by = self.referenced_by(name);
        if !by.is_empty() {
            return Err(RemoveError::Referenced {
                name: self.entries[idx].name.clone(),
                by,
            });
        }
        Ok(self.entries.remove(idx))
    }

    pub fn to_document(&self) -> RegistryDocument {
        RegistryDocument {
            version: 1,
            functions: self
                .entries
                .iter()
                .map(|e| FunctionRecord {
                    name: e.name.to_string(),
                    instruction: e.instruction.clone(),
                    spl: render(&e.body, Numbering::None).lines().map(str::to_owned).collect(),
                    created_at: e.created_at,
                })
                .collect(),
        }
    }

    /// Rebuilds a registry, re-validating each entry against those before it.
    pub fn from_document(doc: RegistryDocument) -> Result<Self, RegistryFileError> {
        if doc.version != 1 {
            return Err(RegistryFileError::Version(doc.version));
        }
        let mut reg = FunctionRegistry::new();
        for f in doc.functions {
            let fail = |reason: String| RegistryFileError::Entry {
                name: f.name.clone(),
                reason,
            };
            let name = Identifier::new(f.name.as_str()).map_err(|e| fail(e.to_string()))?;
            let body = parse_body(&f.spl.join("\n")).map_err(|e| fail(e.to_string()))?;
            reg.register_at(name, &f.instruction, body, f.created_at)
                .map_err(|e| fail(e.to_string()))?;
        }
        Ok(reg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("registry serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RegistryFileError> {
        Self::from_document(serde_json::from_str(text)?)
    }
}

impl Functions for FunctionRegistry {
    fn body(&self, name: &Identifier) -> Option<Program> {
        self.get(name.as_str()).map(|e| e.body.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> Identifier {
        s.parse().unwrap()
    }

    use crate::spl::parse;

    fn turn_three() -> Program {
        parse("REPEAT 3 TIMES\n    TURN_RIGHT\nEND REPEAT").unwrap()
    }

    #[test]
    fn register_and_reject() {
        let mut reg = FunctionRegistry::new();
        reg.register(
            id("TURN_RIGHT_MULTIPLE_TIMES"),
            "Turn right multiple times!",
            turn_three(),
        )
        .unwrap();
        assert_eq!(
            reg.register(id("TURN_RIGHT_MULTIPLE_TIMES"), "again", turn_three()),
            Err(RegisterError::DuplicateName(id("TURN_RIGHT_MULTIPLE_TIMES")))
        );
        assert!(matches!(
            reg.register(id("REPEAT"), "x", turn_three()),
            Err(RegisterError::ReservedName(_))
        ));
        assert!(matches!(
            reg.register(id("LIFT"), "x", turn_three()),
            Err(RegisterError::ReservedName(_))
        ));
        let calls_unknown = parse("MAIN\nNOT_DEFINED").unwrap();
        assert!(matches!(
            reg.register(id("BROKEN"), "x", calls_unknown),
            Err(RegisterError::InvalidBody(_))
        ));
        assert_eq!(reg.len(), 1);
    }

    #[test]
    fn removal_respects_references() {
        let mut reg = FunctionRegistry::new();
        reg.register(id("SPIN"), "spin", turn_three()).unwrap();
        reg.register(id("SPIN_TWICE"), "spin twice", parse("MAIN\nSPIN\nSPIN").unwrap())
            .unwrap();
        assert_eq!(
            reg.remove("SPIN"),
            Err(RemoveError::Referenced {
                name: id("SPIN"),
                by: vec![id("SPIN_TWICE")]
            })
        );
        assert!(matches!(reg.remove("NOPE"), Err(RemoveError::NotFound(_))));
        reg.remove("SPIN_TWICE").unwrap();
        reg.remove("SPIN").unwrap();
        assert!(reg.is_empty());
    }

    #[test]
    fn document_round_trip() {
        let mut reg = FunctionRegistry::new();
        reg.register(id("SPIN"), "spin", turn_three()).unwrap();
        reg.register(id("SPIN_TWICE"), "spin twice", parse("MAIN\nSPIN\nSPIN").unwrap())
            .unwrap();
        let json = reg.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["functions"][0]["spl"][1], "    TURN_RIGHT");
        assert_eq!(FunctionRegistry::from_json(&json).unwrap(), reg);
    }

    #[test]
    fn documents_are_validated() {
        let bad = r#"{"version":1,"functions":[{"name":"A","instruction":"a",
            "spl":["GHOST"],"created_at":"2024-01-01T00:00:00Z"}]}"#;
        assert!(matches!(
            FunctionRegistry::from_json(bad),
            Err(RegistryFileError::Entry { .. })
        ));
        assert!(matches!(
            FunctionRegistry::from_json(r#"{"version":2,"functions":[]}"#),
            Err(RegistryFileError::Version(2))
        ));
    }
}
