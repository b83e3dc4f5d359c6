//! Natural-language instruction to SPL program.

mod extract;
mod llm;
mod prompt;
mod registry;
mod rules;

pub use extract::extract_program;
pub use llm::{CompletionClient, HttpCompletion};
pub use prompt::{build_prompt, build_revision_prompt, fill_template, PROMPT_TEMPLATE, REVISION_SENTENCE};
pub use registry::{
    FunctionRecord, FunctionRegistry, RegisterError, RegistryDocument, RegistryEntry, RegistryFileError, RemoveError,
};
pub use rules::{go_to, resolve_object, rules_decompose, rules_statements, VAGUE_REPEAT};

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spl::{
    instruction_to_name, parse, validate, validate_text, ActionCatalogue, Identifier, Numbering, ParseErrorKind,
    Program, Statement, ValidationReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecomposeError {
    #[error("SERVICE_UNAVAILABLE: {0}")]
    ServiceUnavailable(String),
    #[error("VALIDATION_FAILED: {0}")]
    ValidationFailed(ValidationReport),
    #[error("OUTPUT_TOO_LONG: {lines} lines exceeds the limit of {max}")]
    OutputTooLong { lines: usize, max: usize },
    #[error("NO_RULE_MATCH: {0:?}")]
    NoRuleMatch(String),
    #[error("NO_PROGRAM_FOUND")]
    NoProgramFound,
    #[error("EMPTY_INSTRUCTION")]
    EmptyInstruction,
}

impl DecomposeError {
    pub fn code(&self) -> &'static str {
        match self {
            DecomposeError::ServiceUnavailable(_) => "SERVICE_UNAVAILABLE",
            DecomposeError::ValidationFailed(_) => "VALIDATION_FAILED",
            DecomposeError::OutputTooLong { .. } => "OUTPUT_TOO_LONG",
            DecomposeError::NoRuleMatch(_) => "NO_RULE_MATCH",
            DecomposeError::NoProgramFound => "NO_PROGRAM_FOUND",
            DecomposeError::EmptyInstruction => "EMPTY_INSTRUCTION",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Llm,
    #[default]
    Rules,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("llm mode needs an endpoint (SPARK_LLM_URL)")]
    MissingEndpoint,
    #[error("an endpoint is only used in llm mode")]
    UnusedEndpoint,
    #[error("unknown decomposer mode {0:?}, expected llm or rules")]
    UnknownMode(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposerConfig {
    pub mode: Mode,
    pub endpoint: Option<String>,
    pub auth: Option<String>,
    pub max_output_lines: usize,
    pub timeout: Duration,
}

impl Default for DecomposerConfig {
    fn default() -> Self {
        DecomposerConfig {
            mode: Mode::Rules,
            endpoint: None,
            auth: None,
            max_output_lines: 50,
            timeout: Duration::from_secs(30),
        }
    }
}

impl DecomposerConfig {
    /// Reads `SPARK_DECOMPOSER`, `SPARK_LLM_URL` and `SPARK_LLM_KEY`. Without
    /// an explicit mode, a configured URL selects llm.
    pub fn from_env() -> Result<Self, ConfigError> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        Self::from_values(
            var("SPARK_DECOMPOSER").as_deref(),
            var("SPARK_LLM_URL"),
            var("SPARK_LLM_KEY"),
        )
    }

    pub fn from_values(
        mode: Option<&str>,
        endpoint: Option<String>,
        auth: Option<String>,
    ) -> Result<Self, ConfigError> {
        let mode = match mode.map(|m| m.trim().to_lowercase()) {
            Some(m) if m == "llm" => Mode::Llm,
            Some(m) if m == "rules" => Mode::Rules,
            Some(m) => return Err(ConfigError::UnknownMode(m)),
            None if endpoint.is_some() => Mode::Llm,
            None => Mode::Rules,
        };
        let endpoint = if mode == Mode::Rules { None } else { endpoint };
        let config = DecomposerConfig {
            mode,
            endpoint,
            auth,
            ..Default::default()
        };
        config.check()?;
        Ok(config)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        match (self.mode, &self.endpoint) {
            (Mode::Llm, None) => Err(ConfigError::MissingEndpoint),
            (Mode::Rules, Some(_)) => Err(ConfigError::UnusedEndpoint),
            _ => Ok(()),
        }
    }
}

enum Backend {
    Rules,
    Llm(Box<dyn CompletionClient>),
}

/// A revision statement plus any function names it introduces.
#[derive(Debug, Clone, PartialEq)]
pub struct Revision {
    pub statement: Statement,
    pub new_functions: Vec<Identifier>,
}

pub struct Decomposer {
    backend: Backend,
    max_output_lines: usize,
}

impl std::fmt::Debug for Decomposer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mode = match self.backend {
            Backend::Rules => "rules",
            Backend::Llm(_) => "llm",
        };
        f.debug_struct("Decomposer").field("mode", &mode).finish()
    }
}

impl Decomposer {
    pub fn rules() -> Self {
        Decomposer {
            backend: Backend::Rules,
            max_output_lines: 50,
        }
    }

    pub fn with_client(client: impl CompletionClient + 'static) -> Self {
        Decomposer {
            backend: Backend::Llm(Box::new(client)),
            max_output_lines: 50,
        }
    }

    pub fn from_config(config: &DecomposerConfig) -> Result<Self, ConfigError> {
        config.check()?;
        let backend = match (config.mode, &config.endpoint) {
            (Mode::Llm, Some(url)) => Backend::Llm(Box::new(HttpCompletion::new(
                url.clone(),
                config.auth.clone(),
                config.timeout,
            ))),
            _ => Backend::Rules,
        };
        Ok(Decomposer {
            backend,
            max_output_lines: config.max_output_lines,
        })
    }

    pub fn max_output_lines(mut self, max: usize) -> Self {
        self.max_output_lines = max;
        self
    }

    pub fn is_offline(&self) -> bool {
        matches!(self.backend, Backend::Rules)
    }

    /// Decomposes against built-ins plus the registry.
    pub fn decompose(&self, instruction: &str, registry: &FunctionRegistry) -> Result<Program, DecomposeError> {
        self.decompose_in(instruction, registry, &registry.catalogue())
    }

    /// Like [`decompose`](Self::decompose) but validates against an explicit
    /// catalogue, which may declare functions still being defined.
    pub fn decompose_in(
        &self,
        instruction: &str,
        registry: &FunctionRegistry,
        catalogue: &ActionCatalogue,
    ) -> Result<Program, DecomposeError> {
        if instruction.trim().is_empty() {
            return Err(DecomposeError::EmptyInstruction);
        }
        let statements = match &self.backend {
            Backend::Rules => rules_statements(instruction, registry)?,
            Backend::Llm(client) => {
                let completion = client.complete(&build_prompt(registry, instruction))?;
                let text = extract_program(&completion)?;
                self.check_length(text.lines().count())?;
                parse_candidate(&text)?.statements
            }
        };
        let name = instruction_to_name(instruction)
            .unwrap_or_else(|_| Identifier::new(Program::DEFAULT_NAME).expect("valid default"));
        let program = Program::new(name, statements);
        self.check_length(program.line_count())?;
        let report = validate(&program, catalogue);
        if !report.ok() {
            return Err(DecomposeError::ValidationFailed(report));
        }
        Ok(program)
    }

    /// Decomposes a revision instruction into one statement. Calls to
    /// names the catalogue does not know are returned as new functions for
    /// the caller to have defined. Rules mode turns an instruction it cannot
    /// decompose into such a call.
    pub fn revise(
        &self,
        instruction: &str,
        current: &Program,
        registry: &FunctionRegistry,
        catalogue: &ActionCatalogue,
    ) -> Result<Revision, DecomposeError> {
        if instruction.trim().is_empty() {
            return Err(DecomposeError::EmptyInstruction);
        }
        let statements = match &self.backend {
            Backend::Rules => match rules_statements(instruction, registry) {
                Ok(s) => s,
                Err(DecomposeError::NoRuleMatch(_)) => match instruction_to_name(instruction) {
                    Ok(name) if !ActionCatalogue::is_reserved(name.as_str()) => vec![Statement::Call(name)],
                    _ => return Err(DecomposeError::NoRuleMatch(instruction.to_owned())),
                },
                Err(e) => return Err(e),
            },
            Backend::Llm(client) => {
                let completion = client.complete(&build_revision_prompt(registry, instruction, current))?;
                let text = extract_program(&completion)?;
                self.check_length(text.lines().count())?;
                parse_candidate(&text)?.statements
            }
        };
        let statement = statements.into_iter().next().ok_or(DecomposeError::NoProgramFound)?;
        let probe = Program::unnamed(vec![statement.clone()]);
        let new_functions: Vec<Identifier> = probe
            .called_functions()
            .into_iter()
            .filter(|n| !catalogue.has_function(n) && !ActionCatalogue::is_builtin(n.as_str()))
            .collect();
        let mut extended = catalogue.clone();
        for n in &new_functions {
            if ActionCatalogue::is_reserved(n.as_str()) {
                return Err(DecomposeError::NoRuleMatch(instruction.to_owned()));
            }
            extended.declare(n.clone());
        }
        let report = validate(&probe, &extended);
        if !report.ok() {
            return Err(DecomposeError::ValidationFailed(report));
        }
        Ok(Revision {
            statement,
            new_functions,
        })
    }

    fn check_length(&self, lines: usize) -> Result<(), DecomposeError> {
        if lines > self.max_output_lines {
            return Err(DecomposeError::OutputTooLong {
                lines,
                max: self.max_output_lines,
            });
        }
        Ok(())
    }
}

/// Parses model output, closing a lone block header that arrived without
/// its END line.
fn parse_candidate(text: &str) -> Result<Program, DecomposeError> {
    let text = match parse(text) {
        Ok(p) => return Ok(p),
        Err(e) if e.kind == ParseErrorKind::UnbalancedEnd && text.lines().count() == 1 => {
            let keyword = text.split_whitespace().next().unwrap_or_default();
            format!("{}\nEND {keyword}", text.trim_end())
        }
        Err(_) => text.to_owned(),
    };
    match validate_text(&text, &ActionCatalogue::builtin()) {
        (Some(p), _) => Ok(p),
        (None, report) => Err(DecomposeError::ValidationFailed(report)),
    }
}

/// Renders the program block the way the prompt presents examples.
pub fn program_text(program: &Program) -> String {
    crate::spl::render(program, Numbering::None)
}
