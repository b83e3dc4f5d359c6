use crate::spl::{render, Numbering, Program, BUILTIN_ACTIONS};

use super::FunctionRegistry;

/// Decomposition prompt. `{slot}` marks a substitution and `{{`/`}}` are
/// literal braces.
pub const PROMPT_TEMPLATE: &str = include_str!("../../assets/decomposition_prompt.txt");

pub const REVISION_SENTENCE: &str = "Write only the single statement or block for this revision.";

/// Substitutes named slots. Unknown slots are kept verbatim.
pub fn fill_template(template: &str, slot: impl Fn(&str) -> Option<String>) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(i) = rest.find(['{', '}']) {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        if tail.starts_with("{{") || tail.starts_with("}}") {
            out.push_str(&tail[..1]);
            rest = &tail[2..];
            continue;
        }
        if tail.starts_with('{') {
            if let Some(end) = tail.find('}') {
                let name = &tail[1..end];
                if let Some(value) = slot(name) {
                    out.push_str(&value);
                    rest = &tail[end + 1..];
                    continue;
                }
            }
        }
        out.push_str(&tail[..1]);
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

fn one_line(text: &str) -> String {
    text.split(['\n', '\r'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn body_text(program: &Program) -> String {
    render(program, Numbering::None)
}

struct Slots {
    available_options: String,
    new_option_pairs: String,
    new_program_pairs: String,
}

fn slots(registry: &FunctionRegistry) -> Slots {
    let options: Vec<&str> = BUILTIN_ACTIONS
        .iter()
        .copied()
        .chain(registry.entries().iter().map(|e| e.name.as_str()))
        .collect();
    let new_option_pairs = registry
        .entries()
        .iter()
        .map(|e| format!("\n{}: {}", e.name, one_line(&e.instruction)))
        .collect();
    let new_program_pairs = registry
        .entries()
        .iter()
        .map(|e| {
            format!(
                "Instruction: {}\nProgram:\n{}",
                one_line(&e.instruction),
                body_text(&e.body)
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    Slots {
        available_options: options.join("\n"),
        new_option_pairs,
        new_program_pairs,
    }
}

fn assemble(s: Slots, instruction: &str) -> String {
    fill_template(PROMPT_TEMPLATE, |name| match name {
        "available_options" => Some(s.available_options.clone()),
        "new_available_option_pairs" => Some(s.new_option_pairs.clone()),
        "new_instruction_program_pairs" => Some(s.new_program_pairs.clone()),
        "instruction" => Some(one_line(instruction)),
        _ => None,
    })
}

pub fn build_prompt(registry: &FunctionRegistry, instruction: &str) -> String {
    assemble(slots(registry), instruction)
}

/// The decomposition prompt with the program under revision appended to
/// the examples.
pub fn build_revision_prompt(registry: &FunctionRegistry, instruction: &str, current: &Program) -> String {
    let mut s = slots(registry);
    if !s.new_program_pairs.is_empty() {
        s.new_program_pairs.push('\n');
    }
    s.new_program_pairs.push_str(&format!(
        "Current program:\n{}\n{REVISION_SENTENCE}",
        body_text(current)
    ));
    assemble(s, instruction)
}
