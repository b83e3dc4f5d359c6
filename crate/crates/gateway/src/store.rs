use std::io::Write;
use std::path::{Path, PathBuf};

use spark_core::decompose::{RegisterError, RegistryFileError, RemoveError};
use spark_core::dialog::FunctionStore;
use spark_core::{FunctionRegistry, Identifier, Program, RegistryEntry};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot access registry file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("registry file {path} is invalid: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: RegistryFileError,
    },
}

#[derive(Debug, Error)]
pub enum DeleteError {
    #[error(transparent)]
    Remove(#[from] RemoveError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// The function registry, mirrored to a JSON file when a path is set.
#[derive(Debug, Default)]
pub struct RegistryStore {
    path: Option<PathBuf>,
    registry: FunctionRegistry,
}

impl RegistryStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads `path`, starting empty when the file does not exist yet.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let registry = match std::fs::read_to_string(&path) {
            Ok(text) => FunctionRegistry::from_json(&text).map_err(|source| StoreError::Invalid {
                path: path.clone(),
                source,
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => FunctionRegistry::new(),
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        Ok(RegistryStore {
            path: Some(path),
            registry,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Writes a temporary file next to the target and renames it over.
    pub fn persist(&self) -> Result<(), StoreError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(self.registry.to_json().as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }

    pub fn remove(&mut self, name: &str) -> Result<RegistryEntry, DeleteError> {
        let entry = self.registry.remove(name)?;
        if let Err(e) = self.persist() {
            let _ = self.registry.register_at(
                entry.name.clone(),
                &entry.instruction,
                entry.body.clone(),
                entry.created_at,
            );
            return Err(e.into());
        }
        Ok(entry)
    }
}

impl FunctionStore for RegistryStore {
    fn registry(&self) -> &FunctionRegistry {
        &self.registry
    }

    fn register(&mut self, name: Identifier, instruction: &str, body: Program) -> Result<(), RegisterError> {
        self.registry.register(name.clone(), instruction, body)?;
        if let Err(e) = self.persist() {
            let _ = self.registry.remove(name.as_str());
            return Err(RegisterError::Storage(e.to_string()));
        }
        Ok(())
    }
}
