use std::sync::LazyLock;

use regex::Regex;

use super::DecomposeError;

/// A line shaped like SPL: uppercase words, digits and underscores, with
/// optional indentation and an optional display number.
static SPL_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d+\.\s+)?\s*[A-Z][A-Z0-9_()]*(\s+[A-Z0-9_()]+)*\s*$").expect("valid regex"));

/// Pulls the program out of a model completion: code fences and prose are
/// dropped and the first maximal run of SPL-shaped lines is returned.
pub fn extract_program(completion: &str) -> Result<String, DecomposeError> {
    let mut best: Vec<&str> = Vec::new();
    let mut run: Vec<&str> = Vec::new();
    for line in completion.lines().map(|l| l.trim_end()) {
        let line = line.strip_prefix("Program:").map(str::trim).unwrap_or(line);
        if !line.trim().is_empty() && SPL_LINE.is_match(line) {
            run.push(line);
            continue;
        }
        if !run.is_empty() {
            best = std::mem::take(&mut run);
            break;
        }
    }
    if best.is_empty() {
        best = run;
    }
    if best.is_empty() {
        return Err(DecomposeError::NoProgramFound);
    }
    Ok(best.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn program_label() {
        assert_eq!(extract_program("Program:\nMOVE_FORWARD").unwrap(), "MOVE_FORWARD");
        assert_eq!(extract_program("Program: MOVE_FORWARD\n").unwrap(), "MOVE_FORWARD");
    }

    #[test]
    fn fenced_block() {
        let c = "Here you go:\n```\nREPEAT 2 TIMES\n    LIFT\nEND REPEAT\n```\nEnjoy!";
        assert_eq!(extract_program(c).unwrap(), "REPEAT 2 TIMES\n    LIFT\nEND REPEAT");
    }

    #[test]
    fn stops_at_following_example() {
        let c = "FIND CHAIR\nIF FOUND CHAIR\n    WHILE FAR\n        MOVE_FORWARD\n    END WHILE\nEND IF\n\nInstruction: jump\nProgram:\nSPIN_JUMP";
        assert_eq!(extract_program(c).unwrap().lines().count(), 6);
    }

    #[test]
    fn prose_only() {
        assert_eq!(
            extract_program("I cannot do that, sorry."),
            Err(DecomposeError::NoProgramFound)
        );
        assert_eq!(extract_program(""), Err(DecomposeError::NoProgramFound));
    }
}
