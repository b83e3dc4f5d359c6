use std::fmt;

use thiserror::Error;

use super::{ActionCatalogue, BlockKind, Condition, Identifier, ObjectLabel, Program, Statement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParseErrorKind {
    EmptyProgram,
    BadIndent,
    UnbalancedEnd,
    BadCount,
    ParenCall,
    /// A token that is not SPL: lowercase words, punctuation, stray keywords.
    BadSyntax,
    MissingArgument,
}

impl ParseErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            ParseErrorKind::EmptyProgram => "EMPTY_PROGRAM",
            ParseErrorKind::BadIndent => "BAD_INDENT",
            ParseErrorKind::UnbalancedEnd => "UNBALANCED_END",
            ParseErrorKind::BadCount => "BAD_COUNT",
            ParseErrorKind::ParenCall => "PAREN_CALL",
            ParseErrorKind::BadSyntax => "BAD_SYNTAX",
            ParseErrorKind::MissingArgument => "MISSING_ARGUMENT",
        }
    }
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// First problem found in SPL source. `line` is 1-based and counts every
/// physical line of the input, including the name line and blank lines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, kind: ParseErrorKind, message: impl Into<String>) -> Self {
        ParseError {
            line,
            kind,
            message: message.into(),
        }
    }
}

struct SourceLine<'a> {
    number: usize,
    text: &'a str,
    numbered: bool,
}

/// Strips `N. ` prefixes. Unnumbered lines inside numbered text lose the
/// padding that edit-mode rendering puts in front of END lines.
fn strip_numbering(text: &str) -> Vec<SourceLine<'_>> {
    let raw: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.is_empty())
        .collect();

    let prefix_len = |line: &str| -> Option<usize> {
        let digits = line.bytes().take_while(u8::is_ascii_digit).count();
        (digits > 0 && line[digits..].starts_with(". ")).then_some(digits + 2)
    };

    let Some(pad) = raw.iter().find_map(|(_, l)| prefix_len(l)) else {
        return raw
            .into_iter()
            .map(|(number, text)| SourceLine {
                number,
                text,
                numbered: false,
            })
            .collect();
    };

    raw.into_iter()
        .map(|(number, text)| match prefix_len(text) {
            Some(len) => SourceLine {
                number,
                text: &text[len..],
                numbered: true,
            },
            None => {
                let spaces = text.len() - text.trim_start_matches(' ').len();
                SourceLine {
                    number,
                    text: &text[spaces.min(pad)..],
                    numbered: false,
                }
            }
        })
        .collect()
}

enum LineItem {
    Simple(Statement),
    Open(Statement),
    End(BlockKind),
}

fn parse_label(line: usize, token: &str) -> Result<ObjectLabel, ParseError> {
    if !token.chars().all(|c| c.is_ascii_alphabetic() || c == '_') {
        return Err(ParseError::new(
            line,
            ParseErrorKind::BadSyntax,
            format!("{token:?} is not an object name"),
        ));
    }
    Ok(ObjectLabel::new(token))
}

fn parse_condition(line: usize, tokens: &[&str]) -> Result<Condition, ParseError> {
    match tokens {
        [] => Err(ParseError::new(
            line,
            ParseErrorKind::MissingArgument,
            "condition missing",
        )),
        ["LIGHT"] => Ok(Condition::Light),
        ["DARK"] => Ok(Condition::Dark),
        ["FAR"] => Ok(Condition::Far),
        ["NEAR"] => Ok(Condition::Near),
        ["FOUND"] => Err(ParseError::new(
            line,
            ParseErrorKind::MissingArgument,
            "FOUND needs an object, for example FOUND CUP",
        )),
        ["FOUND", obj] => Ok(Condition::Found(parse_label(line, obj)?)),
        [name] => Identifier::new(*name)
            .map(Condition::Other)
            .map_err(|_| ParseError::new(line, ParseErrorKind::BadSyntax, format!("{name:?} is not a condition"))),
        _ => Err(ParseError::new(
            line,
            ParseErrorKind::BadSyntax,
            format!("unexpected words after condition: {}", tokens.join(" ")),
        )),
    }
}

fn parse_count(line: usize, token: &str) -> Result<u32, ParseError> {
    match token.parse::<u32>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(ParseError::new(
            line,
            ParseErrorKind::BadCount,
            format!("REPEAT needs a positive whole number, got {token:?}"),
        )),
    }
}

fn parse_item(line: usize, text: &str) -> Result<LineItem, ParseError> {
    if text.contains('(') || text.contains(')') {
        return Err(ParseError::new(
            line,
            ParseErrorKind::ParenCall,
            format!("write calls without brackets: {text:?}"),
        ));
    }
    let tokens: Vec<&str> = text.split_whitespace().collect();
    match tokens.as_slice() {
        ["REPEAT", n, "TIMES"] => Ok(LineItem::Open(Statement::repeat(parse_count(line, n)?, Vec::new()))),
        ["REPEAT", n] | ["REPEAT", n, ..] if !n.chars().all(|c| c.is_ascii_digit()) => Err(ParseError::new(
            line,
            ParseErrorKind::BadCount,
            format!("REPEAT needs a positive whole number, got {n:?}"),
        )),
        ["REPEAT", ..] => Err(ParseError::new(line, ParseErrorKind::BadSyntax, "write REPEAT N TIMES")),
        ["IF", rest @ ..] => Ok(LineItem::Open(Statement::if_(parse_condition(line, rest)?, Vec::new()))),
        ["WHILE", rest @ ..] => Ok(LineItem::Open(Statement::while_(
            parse_condition(line, rest)?,
            Vec::new(),
        ))),
        ["END", "REPEAT"] => Ok(LineItem::End(BlockKind::Repeat)),
        ["END", "IF"] => Ok(LineItem::End(BlockKind::If)),
        ["END", "WHILE"] => Ok(LineItem::End(BlockKind::While)),
        ["END", ..] => Err(ParseError::new(
            line,
            ParseErrorKind::UnbalancedEnd,
            format!("{text:?} does not close REPEAT, IF or WHILE"),
        )),
        ["FIND"] => Err(ParseError::new(
            line,
            ParseErrorKind::MissingArgument,
            "FIND needs an object, for example FIND CUP",
        )),
        ["FIND", obj] => Ok(LineItem::Simple(Statement::Find(parse_label(line, obj)?))),
        [name] if ActionCatalogue::is_reserved(name) => Err(ParseError::new(
            line,
            ParseErrorKind::BadSyntax,
            format!("{name} cannot be used on its own"),
        )),
        [name] => {
            let id =
                Identifier::new(*name).map_err(|e| ParseError::new(line, ParseErrorKind::BadSyntax, e.to_string()))?;
            if ActionCatalogue::is_builtin(name) {
                Ok(LineItem::Simple(Statement::Action(id)))
            } else {
                Ok(LineItem::Simple(Statement::Call(id)))
            }
        }
        _ => Err(ParseError::new(
            line,
            ParseErrorKind::BadSyntax,
            format!("{text:?} is not an SPL statement"),
        )),
    }
}

fn is_name_line(line: &SourceLine<'_>, numbered_text: bool, remaining: usize) -> bool {
    if line.numbered || line.text.starts_with(' ') {
        return false;
    }
    if numbered_text {
        return true;
    }
    remaining > 1
        && Identifier::new(line.text).is_ok()
        && !ActionCatalogue::is_builtin(line.text)
        && !ActionCatalogue::is_reserved(line.text)
}

/// Parses SPL source, with or without a leading name line and `N. ` line
/// numbers.
///
/// Without numbering, a first line holding a lone non-built-in identifier is
/// taken as the program name when more lines follow. Text without a name
/// line gets [`Program::DEFAULT_NAME`].
pub fn parse(text: &str) -> Result<Program, ParseError> {
    parse_inner(text, true)
}

/// Parses a program body that is known to have no name line, so a leading
/// user-function call stays a statement.
pub fn parse_body(text: &str) -> Result<Program, ParseError> {
    parse_inner(text, false)
}

fn parse_inner(text: &str, allow_name: bool) -> Result<Program, ParseError> {
    let lines = strip_numbering(text);
    let numbered_text = lines.iter().any(|l| l.numbered);

    let mut name = None;
    let mut body_lines = lines.as_slice();
    if let Some(first) = lines.first() {
        if allow_name && is_name_line(first, numbered_text, lines.len()) {
            name = Some(
                Identifier::new(first.text)
                    .map_err(|e| ParseError::new(first.number, ParseErrorKind::BadSyntax, e.to_string()))?,
            );
            body_lines = &lines[1..];
        }
    }

    if body_lines.is_empty() {
        let line = lines.last().map_or(1, |l| l.number);
        return Err(ParseError::new(
            line,
            ParseErrorKind::EmptyProgram,
            "the program has no statements",
        ));
    }

    // Open blocks, innermost last, each with the body collected so far.
    let mut stack: Vec<(usize, Statement)> = Vec::new();
    let mut top: Vec<Statement> = Vec::new();

    for line in body_lines {
        if line.text.starts_with('\t') || line.text.contains("\t") {
            return Err(ParseError::new(
                line.number,
                ParseErrorKind::BadIndent,
                "use spaces, not tabs",
            ));
        }
        let spaces = line.text.len() - line.text.trim_start_matches(' ').len();
        if spaces % 4 != 0 {
            return Err(ParseError::new(
                line.number,
                ParseErrorKind::BadIndent,
                format!("indentation of {spaces} spaces is not a multiple of 4"),
            ));
        }
        let level = spaces / 4;
        let depth = stack.len();

        match parse_item(line.number, line.text.trim_start())? {
            LineItem::End(kind) => {
                let Some((open_line, open)) = stack.pop() else {
                    return Err(ParseError::new(
                        line.number,
                        ParseErrorKind::UnbalancedEnd,
                        format!("END {} without a matching {}", kind.keyword(), kind.keyword()),
                    ));
                };
                if open.block_kind() != Some(kind) {
                    return Err(ParseError::new(
                        line.number,
                        ParseErrorKind::UnbalancedEnd,
                        format!(
                            "END {} closes the {} opened on line {open_line}",
                            kind.keyword(),
                            open.head_line()
                        ),
                    ));
                }
                if level != depth - 1 {
                    return Err(ParseError::new(
                        line.number,
                        ParseErrorKind::BadIndent,
                        format!("END {} must line up with its opening line", kind.keyword()),
                    ));
                }
                match stack.last_mut() {
                    Some((_, parent)) => parent.body_mut().expect("block").push(open),
                    None => top.push(open),
                }
            }
            item => {
                if level > depth {
                    return Err(ParseError::new(
                        line.number,
                        ParseErrorKind::BadIndent,
                        "line is indented more than its block allows",
                    ));
                }
                if level < depth {
                    let (open_line, open) = stack.last().expect("depth > 0");
                    return Err(ParseError::new(
                        line.number,
                        ParseErrorKind::UnbalancedEnd,
                        format!(
                            "{} on line {open_line} needs END {} before this line",
                            open.head_line(),
                            open.block_kind().expect("block").keyword()
                        ),
                    ));
                }
                match item {
                    LineItem::Open(stmt) => stack.push((line.number, stmt)),
                    LineItem::Simple(stmt) => match stack.last_mut() {
                        Some((_, parent)) => parent.body_mut().expect("block").push(stmt),
                        None => top.push(stmt),
                    },
                    LineItem::End(_) => unreachable!(),
                }
            }
        }
    }

    if let Some((open_line, open)) = stack.last() {
        return Err(ParseError::new(
            *open_line,
            ParseErrorKind::UnbalancedEnd,
            format!(
                "{} is never closed with END {}",
                open.head_line(),
                open.block_kind().expect("block").keyword()
            ),
        ));
    }

    let name = name.unwrap_or_else(|| Identifier::new(Program::DEFAULT_NAME).expect("valid"));
    Ok(Program::new(name, top))
}
