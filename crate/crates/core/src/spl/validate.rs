use std::fmt;

use serde::{Deserialize, Serialize};

use super::{parse, ActionCatalogue, Condition, ParseErrorKind, Program, Statement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    UnknownAction,
    UnknownObject,
    BadCount,
    UnbalancedEnd,
    BadIndent,
    ParenCall,
    UnknownCondition,
    EmptyProgram,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::UnknownAction => "UNKNOWN_ACTION",
            IssueCode::UnknownObject => "UNKNOWN_OBJECT",
            IssueCode::BadCount => "BAD_COUNT",
            IssueCode::UnbalancedEnd => "UNBALANCED_END",
            IssueCode::BadIndent => "BAD_INDENT",
            IssueCode::ParenCall => "PAREN_CALL",
            IssueCode::UnknownCondition => "UNKNOWN_CONDITION",
            IssueCode::EmptyProgram => "EMPTY_PROGRAM",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    /// 1-based line in the unnumbered rendering of the program body.
    pub line: usize,
    pub code: IssueCode,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, line: usize, code: IssueCode, message: String) {
        self.issues.push(Issue { line, code, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return f.write_str("ok");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "line {}: {}: {}", issue.line, issue.code, issue.message)?;
        }
        Ok(())
    }
}

fn check_condition(cond: &Condition, line: usize, report: &mut ValidationReport) {
    match cond {
        Condition::Found(label) if !label.is_known() => report.push(
            line,
            IssueCode::UnknownObject,
            format!("{} is not an object I can find", label.spl_form()),
        ),
        Condition::Other(name) => report.push(
            line,
            IssueCode::UnknownCondition,
            format!("{name} is not a condition; use LIGHT, DARK, FAR, NEAR or FOUND"),
        ),
        _ => {}
    }
}

fn walk(stmts: &[Statement], catalogue: &ActionCatalogue, line: &mut usize, report: &mut ValidationReport) {
    for stmt in stmts {
        *line += 1;
        let here = *line;
        match stmt {
            Statement::Action(name) => {
                if !ActionCatalogue::is_builtin(name.as_str()) || name == "FIND" {
                    report.push(
                        here,
                        IssueCode::UnknownAction,
                        format!("{name} is not an action I know"),
                    );
                }
            }
            Statement::Call(name) => {
                if ActionCatalogue::is_reserved(name.as_str()) || !catalogue.has_function(name) {
                    report.push(
                        here,
                        IssueCode::UnknownAction,
                        format!("{name} is not an action I know"),
                    );
                }
            }
            Statement::Find(label) => {
                if !label.is_known() {
                    report.push(
                        here,
                        IssueCode::UnknownObject,
                        format!("{} is not an object I can find", label.spl_form()),
                    );
                }
            }
            Statement::Repeat { count, .. } => {
                if *count == 0 {
                    report.push(here, IssueCode::BadCount, "REPEAT needs a positive number".to_owned());
                }
            }
            Statement::If { cond, .. } | Statement::While { cond, .. } => {
                check_condition(cond, here, report);
            }
        }
        if let Some(body) = stmt.body() {
            walk(body, catalogue, line, report);
            *line += 1;
        }
    }
}

/// Checks every call, condition and object against what the robot supports.
/// All problems are reported, not just the first.
pub fn validate(program: &Program, catalogue: &ActionCatalogue) -> ValidationReport {
    let mut report = ValidationReport::default();
    if program.is_empty() {
        report.push(1, IssueCode::EmptyProgram, "the program has no statements".to_owned());
        return report;
    }
    let mut line = 0;
    walk(&program.statements, catalogue, &mut line, &mut report);
    report
}

/// Parses then validates. Syntax errors become a single issue; text that
/// does not parse cannot be checked further.
pub fn validate_text(text: &str, catalogue: &ActionCatalogue) -> (Option<Program>, ValidationReport) {
    match parse(text) {
        Ok(program) => {
            let report = validate(&program, catalogue);
            (Some(program), report)
        }
        Err(err) => {
            let code = match err.kind {
                ParseErrorKind::EmptyProgram => IssueCode::EmptyProgram,
                ParseErrorKind::BadIndent => IssueCode::BadIndent,
                ParseErrorKind::UnbalancedEnd => IssueCode::UnbalancedEnd,
                ParseErrorKind::BadCount => IssueCode::BadCount,
                ParseErrorKind::ParenCall => IssueCode::ParenCall,
                ParseErrorKind::BadSyntax | ParseErrorKind::MissingArgument => IssueCode::UnknownAction,
            };
            let mut report = ValidationReport::default();
            report.push(err.line, code, err.message);
            (None, report)
        }
    }
}
