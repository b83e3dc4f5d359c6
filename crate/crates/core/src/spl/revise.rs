use thiserror::Error;

use super::{Program, Statement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReviseError {
    #[error("BLOCK_OUT_OF_RANGE: there is no block {block}; choose 1 to {max}")]
    BlockOutOfRange { block: usize, max: usize },
}

/// Result of deleting a block. `emptied` is set when the program lost its
/// last statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeleteOutcome {
    pub program: Program,
    pub emptied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LineRole {
    Head,
    End,
}

/// Every rendered line as `(role, path)`, where `path` indexes down the
/// statement tree to the statement the line belongs to.
fn line_paths(stmts: &[Statement]) -> Vec<(LineRole, Vec<usize>)> {
    fn walk(stmts: &[Statement], prefix: &mut Vec<usize>, out: &mut Vec<(LineRole, Vec<usize>)>) {
        for (i, stmt) in stmts.iter().enumerate() {
            prefix.push(i);
            out.push((LineRole::Head, prefix.clone()));
            if let Some(body) = stmt.body() {
                walk(body, prefix, out);
                out.push((LineRole::End, prefix.clone()));
            }
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    walk(stmts, &mut Vec::new(), &mut out);
    out
}

fn list_at<'a>(stmts: &'a mut Vec<Statement>, parent: &[usize]) -> &'a mut Vec<Statement> {
    let mut list = stmts;
    for &i in parent {
        list = list[i].body_mut().expect("path runs through blocks");
    }
    list
}

/// Path of the `block`-th numbered line in edit mode (END lines skipped).
fn edit_path(program: &Program, block: usize) -> Result<Vec<usize>, ReviseError> {
    let heads: Vec<Vec<usize>> = line_paths(&program.statements)
        .into_iter()
        .filter(|(role, _)| *role == LineRole::Head)
        .map(|(_, path)| path)
        .collect();
    if block == 0 || block > heads.len() {
        return Err(ReviseError::BlockOutOfRange {
            block,
            max: heads.len(),
        });
    }
    Ok(heads[block - 1].clone())
}

/// Replaces the statement on edit-numbered line `block`.
///
/// Block headers keep their body when replaced by another header; the END
/// line follows the new kind automatically. A header replaced by a simple
/// statement leaves its body in place one level out. A simple statement
/// replaced by a header brings the header's own body, empty if it has none.
pub fn apply_change(program: &Program, block: usize, replacement: Statement) -> Result<Program, ReviseError> {
    let path = edit_path(program, block)?;
    let mut out = program.clone();
    let (idx, parent) = path.split_last().expect("non-empty path");
    let list = list_at(&mut out.statements, parent);
    let old = list[*idx].clone();

    match (old.body(), replacement.is_block()) {
        (Some(old_body), true) => {
            let mut new = replacement;
            *new.body_mut().expect("block") = old_body.to_vec();
            list[*idx] = new;
        }
        (Some(old_body), false) => {
            let spliced = std::iter::once(replacement).chain(old_body.iter().cloned());
            list.splice(*idx..=*idx, spliced);
        }
        (None, _) => list[*idx] = replacement,
    }
    Ok(out)
}

/// Inserts `stmt` before insert-numbered line `position`; `line_count + 1`
/// appends. The statement lands in whatever block encloses that line, so
/// inserting before an END line adds to the end of that block's body.
pub fn apply_add(program: &Program, position: usize, stmt: Statement) -> Result<Program, ReviseError> {
    let lines = line_paths(&program.statements);
    let max = lines.len() + 1;
    if position == 0 || position > max {
        return Err(ReviseError::BlockOutOfRange { block: position, max });
    }
    let mut out = program.clone();
    if position == max {
        out.statements.push(stmt);
        return Ok(out);
    }
    let (role, path) = &lines[position - 1];
    match role {
        LineRole::Head => {
            let (idx, parent) = path.split_last().expect("non-empty path");
            list_at(&mut out.statements, parent).insert(*idx, stmt);
        }
        LineRole::End => {
            list_at(&mut out.statements, path).push(stmt);
        }
    }
    Ok(out)
}

/// Removes the statement on edit-numbered line `block`. Removing a block
/// header keeps its body, moved one level out.
pub fn apply_delete(program: &Program, block: usize) -> Result<DeleteOutcome, ReviseError> {
    let path = edit_path(program, block)?;
    let mut out = program.clone();
    let (idx, parent) = path.split_last().expect("non-empty path");
    let list = list_at(&mut out.statements, parent);
    let old = list.remove(*idx);
    if let Some(body) = old.body() {
        for (offset, s) in body.iter().cloned().enumerate() {
            list.insert(idx + offset, s);
        }
    }
    let emptied = out.statements.is_empty();
    Ok(DeleteOutcome { program: out, emptied })
}
