use serde::{Deserialize, Serialize};

use super::{Program, Statement};

/// How lines are numbered when a program is shown to a child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Numbering {
    /// No numbers at all; this is the on-disk format.
    #[default]
    None,
    /// Every line gets `N. `, END lines included. Used when a freshly
    /// generated or revised program is presented.
    Plain,
    /// Only non-END lines are numbered, zero-padded to two digits; END lines
    /// are padded with spaces so the code stays aligned. Used for change and
    /// remove.
    Edit,
    /// Every line numbered like `Plain`; position `count + 1` means append.
    Insert,
}

/// Display number to line index mapping for one numbering mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockNumbering {
    pub mode: Numbering,
    /// `(display number, zero-based line index)` pairs, in line order.
    pub entries: Vec<(usize, usize)>,
}

impl BlockNumbering {
    pub fn for_program(program: &Program, mode: Numbering) -> Self {
        let lines = flatten(program);
        let entries = match mode {
            Numbering::None => Vec::new(),
            Numbering::Plain | Numbering::Insert => (0..lines.len()).map(|i| (i + 1, i)).collect(),
            Numbering::Edit => lines
                .iter()
                .enumerate()
                .filter(|(_, l)| !l.is_end)
                .enumerate()
                .map(|(n, (i, _))| (n + 1, i))
                .collect(),
        };
        BlockNumbering { mode, entries }
    }

    pub fn line_index(&self, display: usize) -> Option<usize> {
        self.entries.iter().find(|(n, _)| *n == display).map(|(_, i)| *i)
    }

    /// Largest number a child may answer with. Insert mode allows one past
    /// the last line.
    pub fn max_choice(&self) -> usize {
        let last = self.entries.last().map_or(0, |(n, _)| *n);
        if self.mode == Numbering::Insert {
            last + 1
        } else {
            last
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Line {
    pub depth: usize,
    pub text: String,
    pub is_end: bool,
}

pub(crate) fn flatten(program: &Program) -> Vec<Line> {
    fn walk(stmts: &[Statement], depth: usize, out: &mut Vec<Line>) {
        for stmt in stmts {
            out.push(Line {
                depth,
                text: stmt.head_line(),
                is_end: false,
            });
            if let (Some(body), Some(kind)) = (stmt.body(), stmt.block_kind()) {
                walk(body, depth + 1, out);
                out.push(Line {
                    depth,
                    text: format!("END {}", kind.keyword()),
                    is_end: true,
                });
            }
        }
    }
    let mut out = Vec::new();
    walk(&program.statements, 0, &mut out);
    out
}

/// Renders the program body, one statement per line, four spaces per level.
pub fn render(program: &Program, numbering: Numbering) -> String {
    let lines = flatten(program);
    let indent = |depth: usize| "    ".repeat(depth);
    let rendered: Vec<String> = match numbering {
        Numbering::None => lines.iter().map(|l| format!("{}{}", indent(l.depth), l.text)).collect(),
        Numbering::Plain | Numbering::Insert => lines
            .iter()
            .enumerate()
            .map(|(i, l)| format!("{}. {}{}", i + 1, indent(l.depth), l.text))
            .collect(),
        Numbering::Edit => {
            let numbered = lines.iter().filter(|l| !l.is_end).count();
            let width = numbered.to_string().len().max(2);
            let mut n = 0;
            lines
                .iter()
                .map(|l| {
                    if l.is_end {
                        format!("{}{}{}", " ".repeat(width + 2), indent(l.depth), l.text)
                    } else {
                        n += 1;
                        format!("{n:0width$}. {}{}", indent(l.depth), l.text)
                    }
                })
                .collect()
        }
    };
    rendered.join("\n")
}

/// The program name on its own line, followed by the numbered body.
pub fn render_listing(program: &Program, numbering: Numbering) -> String {
    if program.is_empty() {
        return program.name.to_string();
    }
    format!("{}\n{}", program.name, render(program, numbering))
}
