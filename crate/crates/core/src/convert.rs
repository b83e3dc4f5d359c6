//! Conversion between SPL and the indentation-based host syntax the robot
//! runtime executes.
//!
//! | SPL               | host                 |
//! |-------------------|----------------------|
//! | `REPEAT N TIMES`  | `for _ in range(N):` |
//! | `IF COND`         | `if cond():`         |
//! | `WHILE COND`      | `while cond():`      |
//! | `FIND OBJECT`     | `find('object')`     |
//! | `FOUND OBJECT`    | `found('object')`    |
//! | `ACTION`          | `action()`           |
//!
//! END lines have no host counterpart; blocks close by dedenting. An empty
//! body is written as `pass`.

use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::spl::{ActionCatalogue, Condition, Identifier, ObjectLabel, Program, Statement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvertError {
    #[error("UNRECOGNIZED_CONSTRUCT at line {line}: {text:?}")]
    Unrecognized { line: usize, text: String },
}

fn condition_call(cond: &Condition) -> String {
    match cond {
        Condition::Found(label) => format!("found('{}')", label.as_str()),
        other => format!("{}()", other.keyword().to_lowercase()),
    }
}

fn emit(stmts: &[Statement], depth: usize, out: &mut Vec<String>) {
    let pad = "    ".repeat(depth);
    for stmt in stmts {
        let line = match stmt {
            Statement::Action(name) | Statement::Call(name) => {
                format!("{}()", name.as_str().to_lowercase())
            }
            Statement::Find(label) => format!("find('{}')", label.as_str()),
            Statement::Repeat { count, .. } => format!("for _ in range({count}):"),
            Statement::If { cond, .. } => format!("if {}:", condition_call(cond)),
            Statement::While { cond, .. } => format!("while {}:", condition_call(cond)),
        };
        out.push(format!("{pad}{line}"));
        if let Some(body) = stmt.body() {
            if body.is_empty() {
                out.push(format!("{pad}    pass"));
            } else {
                emit(body, depth + 1, out);
            }
        }
    }
}

pub fn to_host(program: &Program) -> String {
    let mut out = Vec::new();
    emit(&program.statements, 0, &mut out);
    out.join("\n")
}

static FOR_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^for _ in range\(([1-9][0-9]*)\):$").unwrap());
static COND_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(if|while) ([a-z][a-z_]*)\((?:'([a-z][a-z ]*)')?\):$").unwrap());
static FIND_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^find\('([a-z][a-z ]*)'\)$").unwrap());
static CALL_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^([a-z][a-z_]*)\(\)$").unwrap());

enum HostLine {
    Simple(Statement),
    Open(Statement),
    Pass,
}

fn host_condition(name: &str, arg: Option<&str>) -> Option<Condition> {
    match (name, arg) {
        ("light", None) => Some(Condition::Light),
        ("dark", None) => Some(Condition::Dark),
        ("far", None) => Some(Condition::Far),
        ("near", None) => Some(Condition::Near),
        ("found", Some(obj)) => Some(Condition::Found(ObjectLabel::new(obj))),
        (other, None) => Identifier::new(other.to_uppercase()).ok().map(Condition::Other),
        _ => None,
    }
}

fn classify(text: &str) -> Option<HostLine> {
    if text == "pass" {
        return Some(HostLine::Pass);
    }
    if let Some(c) = FOR_RE.captures(text) {
        let count = c[1].parse().ok()?;
        return Some(HostLine::Open(Statement::repeat(count, Vec::new())));
    }
    if let Some(c) = COND_RE.captures(text) {
        let cond = host_condition(&c[2], c.get(3).map(|m| m.as_str()))?;
        let stmt = if &c[1] == "if" {
            Statement::if_(cond, Vec::new())
        } else {
            Statement::while_(cond, Vec::new())
        };
        return Some(HostLine::Open(stmt));
    }
    if let Some(c) = FIND_RE.captures(text) {
        return Some(HostLine::Simple(Statement::Find(ObjectLabel::new(&c[1]))));
    }
    if let Some(c) = CALL_RE.captures(text) {
        let upper = c[1].to_uppercase();
        if upper == "FIND" || ActionCatalogue::is_reserved(&upper) {
            return None;
        }
        let id = Identifier::new(upper).ok()?;
        let stmt = if ActionCatalogue::is_builtin(id.as_str()) {
            Statement::Action(id)
        } else {
            Statement::Call(id)
        };
        return Some(HostLine::Simple(stmt));
    }
    None
}

/// Inverse of [`to_host`]. The result is named [`Program::DEFAULT_NAME`].
pub fn from_host(text: &str) -> Result<Program, ConvertError> {
    from_host_named(
        text,
        Identifier::new(Program::DEFAULT_NAME).expect("valid default name"),
    )
}

pub fn from_host_named(text: &str, name: Identifier) -> Result<Program, ConvertError> {
    let unrecognized = |line: usize, text: &str| ConvertError::Unrecognized {
        line,
        text: text.to_owned(),
    };

    let mut top: Vec<Statement> = Vec::new();
    let mut stack: Vec<Statement> = Vec::new();

    fn close_to(level: usize, stack: &mut Vec<Statement>, top: &mut Vec<Statement>) {
        while stack.len() > level {
            let done = stack.pop().expect("len > level");
            match stack.last_mut() {
                Some(parent) => parent.body_mut().expect("block").push(done),
                None => top.push(done),
            }
        }
    }

    // Set after a header: the next line must be indented one level deeper.
    let mut expect_body = false;

    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let spaces = line.len() - line.trim_start_matches(' ').len();
        if spaces % 4 != 0 {
            return Err(unrecognized(number, raw));
        }
        let level = spaces / 4;
        if expect_body && level != stack.len() {
            return Err(unrecognized(number, raw));
        }
        if level > stack.len() {
            return Err(unrecognized(number, raw));
        }
        close_to(level, &mut stack, &mut top);

        let item = classify(line.trim_start()).ok_or_else(|| unrecognized(number, raw))?;
        expect_body = false;
        match item {
            HostLine::Pass => {
                if level == 0 {
                    return Err(unrecognized(number, raw));
                }
            }
            HostLine::Simple(stmt) => match stack.last_mut() {
                Some(parent) => parent.body_mut().expect("block").push(stmt),
                None => top.push(stmt),
            },
            HostLine::Open(stmt) => {
                stack.push(stmt);
                expect_body = true;
            }
        }
    }
    if expect_body {
        let last = text.lines().count();
        return Err(unrecognized(last, "block header without a body"));
    }
    close_to(0, &mut stack, &mut top);
    Ok(Program::new(name, top))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spl::parse;

    #[test]
    fn repeat_to_host() {
        let p = Program::unnamed(vec![Statement::repeat(2, vec![Statement::action("MOVE_FORWARD")])]);
        assert_eq!(to_host(&p), "for _ in range(2):\n    move_forward()");
    }

    #[test]
    fn find_to_host() {
        let p = Program::unnamed(vec![Statement::find("chair")]);
        assert_eq!(to_host(&p), "find('chair')");
        assert_eq!(to_host(&Program::unnamed(vec![])), "");
    }

    #[test]
    fn while_from_host() {
        let p = from_host("while far():\n    move_forward()").unwrap();
        assert_eq!(
            p.statements,
            vec![Statement::while_(
                Condition::Far,
                vec![Statement::action("MOVE_FORWARD")]
            )]
        );
    }

    #[test]
    fn go_to_the_chair_round_trip() {
        let p =
            parse("FIND CHAIR\nIF FOUND CHAIR\n    WHILE FAR\n        MOVE_FORWARD\n    END WHILE\nEND IF").unwrap();
        let host = to_host(&p);
        assert_eq!(
            host,
            "find('chair')\nif found('chair'):\n    while far():\n        move_forward()"
        );
        assert_eq!(from_host(&host).unwrap(), p);
    }

    #[test]
    fn user_calls_and_empty_bodies() {
        let p = parse("TEST\nIF DARK\nEND IF\nTURN_AROUND\nFIND TEDDY_BEAR").unwrap();
        let host = to_host(&p);
        assert_eq!(host, "if dark():\n    pass\nturn_around()\nfind('teddy bear')");
        assert_eq!(from_host(&host).unwrap().statements, p.statements);
    }

    #[test]
    fn rejects_foreign_lines() {
        assert_eq!(
            from_host("import os"),
            Err(ConvertError::Unrecognized {
                line: 1,
                text: "import os".into()
            })
        );
        assert!(matches!(
            from_host("move_forward()\n  lift()"),
            Err(ConvertError::Unrecognized { line: 2, .. })
        ));
        assert!(from_host("for _ in range(0):\n    lift()").is_err());
        assert!(from_host("for _ in range(2):").is_err());
        assert!(from_host("lift()\n    lift()").is_err());
        assert!(from_host("find()").is_err());
        assert!(from_host("pass").is_err());
    }

    #[test]
    fn dedent_closes_several_blocks() {
        let host = "if light():\n    for _ in range(2):\n        lift()\nspin_jump()";
        let p = from_host(host).unwrap();
        assert_eq!(
            crate::spl::render(&p, crate::spl::Numbering::None),
            "IF LIGHT\n    REPEAT 2 TIMES\n        LIFT\n    END REPEAT\nEND IF\nSPIN_JUMP"
        );
        assert_eq!(to_host(&p), host);
    }
}
