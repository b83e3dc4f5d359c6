use std::sync::{Arc, Mutex};

use spark_core::decompose::{
    build_prompt, program_text, rules_decompose, CompletionClient, DecomposeError, Decomposer, FunctionRegistry,
    PROMPT_TEMPLATE,
};
use spark_core::spl::{parse, validate, ActionCatalogue, Statement};
use spark_core::{Identifier, Program};

/// `(instruction, program)` pairs shown in the bundled prompt.
fn prompt_examples() -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut lines = PROMPT_TEMPLATE.lines().peekable();
    while let Some(line) = lines.next() {
        let Some(instruction) = line.strip_prefix("Instruction: ") else {
            continue;
        };
        if instruction.contains('{') || lines.next() != Some("Program:") {
            continue;
        }
        let mut body = Vec::new();
        while let Some(l) = lines.peek() {
            if *l == "..." || l.starts_with('{') || l.starts_with("Instruction:") {
                break;
            }
            body.push(lines.next().unwrap());
        }
        out.push((instruction.to_owned(), body.join("\n")));
    }
    out
}

#[test]
fn rules_reproduce_prompt_examples() {
    let examples = prompt_examples();
    assert_eq!(examples.len(), 3);
    let registry = FunctionRegistry::new();
    for (instruction, body) in examples {
        let program = rules_decompose(&instruction, &registry).unwrap();
        assert_eq!(program_text(&program), body, "{instruction}");
        assert!(validate(&parse(&body).unwrap(), &ActionCatalogue::builtin()).ok());
    }
}

#[test]
fn rules_are_deterministic() {
    let registry = FunctionRegistry::new();
    for instruction in [
        "go to the chair",
        "Let's move right two times and go to my friend!",
        "turn left then jump",
    ] {
        assert_eq!(
            rules_decompose(instruction, &registry).unwrap(),
            rules_decompose(instruction, &registry).unwrap()
        );
    }
}

/// Answers every prompt with a fixed completion and remembers the prompts.
#[derive(Clone)]
struct Canned {
    reply: Result<String, DecomposeError>,
    prompts: Arc<Mutex<Vec<String>>>,
}

impl Canned {
    fn new(reply: Result<&str, DecomposeError>) -> Self {
        Canned {
            reply: reply.map(str::to_owned),
            prompts: Arc::default(),
        }
    }
}

impl CompletionClient for Canned {
    fn complete(&self, prompt: &str) -> Result<String, DecomposeError> {
        self.prompts.lock().unwrap().push(prompt.to_owned());
        self.reply.clone()
    }
}

#[test]
fn completion_is_extracted_and_named() {
    let client = Canned::new(Ok(
        "Sure! Here it is:\nProgram:\nREPEAT 2 TIMES\n    SPIN_JUMP\nEND REPEAT\n\nHave fun!",
    ));
    let prompts = client.prompts.clone();
    let decomposer = Decomposer::with_client(client);
    let registry = FunctionRegistry::new();
    let program = decomposer.decompose("jump two times", &registry).unwrap();
    assert_eq!(program.name, "JUMP_TWO_TIMES");
    assert_eq!(
        program.statements,
        vec![Statement::repeat(2, vec![Statement::action("SPIN_JUMP")])]
    );
    assert_eq!(
        prompts.lock().unwrap().as_slice(),
        [build_prompt(&registry, "jump two times")]
    );
}

#[test]
fn invalid_completion_is_rejected() {
    let decomposer = Decomposer::with_client(Canned::new(Ok("MOVE_BACKWARD\nFLY")));
    let err = decomposer.decompose("fly away", &FunctionRegistry::new()).unwrap_err();
    assert_eq!(err.code(), "VALIDATION_FAILED");
}

#[test]
fn service_errors_pass_through() {
    let decomposer = Decomposer::with_client(Canned::new(Err(DecomposeError::ServiceUnavailable("down".into()))));
    let err = decomposer.decompose("go", &FunctionRegistry::new()).unwrap_err();
    assert_eq!(err.code(), "SERVICE_UNAVAILABLE");
}

#[test]
fn overlong_completion_is_rejected() {
    let text = vec!["LIFT"; 60].join("\n");
    let decomposer = Decomposer::with_client(Canned::new(Ok(&text)));
    let err = decomposer
        .decompose("lift a lot", &FunctionRegistry::new())
        .unwrap_err();
    assert!(matches!(err, DecomposeError::OutputTooLong { lines: 60, max: 50 }));
}

#[test]
fn decomposed_programs_validate() {
    let mut registry = FunctionRegistry::new();
    let dance = Program::new(
        "MY_DANCE".parse().unwrap(),
        vec![Statement::action("FIRST_DANCE"), Statement::action("SECOND_DANCE")],
    );
    registry.register(dance.name.clone(), "my dance", dance).unwrap();
    let decomposer = Decomposer::rules();
    for instruction in [
        "go",
        "if far, then move twice",
        "go to the chair",
        "my dance and then turn left",
        "while dark move forward",
        "find a cup",
    ] {
        let program = decomposer.decompose(instruction, &registry).unwrap();
        assert!(validate(&program, &registry.catalogue()).ok(), "{instruction}");
    }
}

#[test]
fn revision_proposes_unknown_calls() {
    let decomposer = Decomposer::rules();
    let registry = FunctionRegistry::new();
    let current = rules_decompose("jump and lift", &registry).unwrap();
    let revision = decomposer
        .revise("do the robot", &current, &registry, &registry.catalogue())
        .unwrap();
    assert_eq!(revision.statement, Statement::call("DO_THE_ROBOT"));
    assert_eq!(revision.new_functions, ["DO_THE_ROBOT".parse::<Identifier>().unwrap()]);
}
