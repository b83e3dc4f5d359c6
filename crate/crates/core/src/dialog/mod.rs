//! Turn-taking conversation between a child and the robot.
//!
//! [`handle`] consumes one utterance and returns the system's replies.
//! Running a program is handed back to the caller as [`Effect::RunProgram`];
//! the caller reports the outcome through [`finish_execution`].

mod intent;

pub use intent::{classify_intent, Intent, Lexicon};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::decompose::{DecomposeError, Decomposer, FunctionRegistry, RegisterError};
use crate::interp::ExecutionTrace;
use crate::spl::{
    apply_add, apply_change, apply_delete, render, render_listing, validate, ActionCatalogue, BlockNumbering,
    Identifier, Numbering, Program, BUILTIN_ACTIONS,
};

pub const GREETING: &str = "Yes, What do you want me to do?";
pub const PRESENT: &str = "Sure, this is what I am going to do:";
pub const TRY_IT: &str = "Do you want me to try?";
pub const FIX_OFFER: &str = "Do you want to fix the program?";
pub const REVISION_KINDS: &str = "What do you want to do among change, add, and remove?";
pub const CHANGE_INTO: &str = "Which instruction do you want to change into?";
pub const ADD_WHAT: &str = "Which instruction do you want to add?";
pub const RUN: &str = "Let's run the program!";
pub const OKAY: &str = "Okay";
pub const ASK_AGAIN: &str = "I could not make a program for that. Can you tell me a different instruction?";
pub const UNAVAILABLE: &str = "I cannot think of a program right now. Please try again later.";
pub const WAKE_ME: &str = "Say \"Hey Spark!\" when you want me to do something.";
pub const BUSY: &str = "I am still running the program. Please wait.";
pub const ROBOT_BUSY: &str = "I am busy running another program. Ask me again in a moment.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevisionKind {
    Change,
    Add,
    Remove,
}

impl RevisionKind {
    fn verb(self) -> &'static str {
        match self {
            RevisionKind::Change => "change",
            RevisionKind::Add => "add",
            RevisionKind::Remove => "remove",
        }
    }

    fn numbering(self) -> Numbering {
        match self {
            RevisionKind::Add => Numbering::Insert,
            _ => Numbering::Edit,
        }
    }

    fn which_block(self) -> String {
        match self {
            RevisionKind::Add => "Which number do you want to add the block at?".into(),
            kind => format!("Which block do you want to {}?", kind.verb()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    #[default]
    Idle,
    AwaitInstruction,
    ProgramProposed,
    AwaitFixConsent,
    AwaitRevisionKind,
    AwaitBlockNumber {
        kind: RevisionKind,
    },
    AwaitRevisionInstruction {
        kind: RevisionKind,
        block: usize,
    },
    Executing,
    AwaitSaveConsent,
    DefiningPending,
}

/// A program put aside while the functions it calls are defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Suspended {
    program: Program,
    instruction: String,
    defining: Option<Identifier>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DialogState {
    pub phase: Phase,
    pub current_program: Option<Program>,
    /// The instruction the current program came from.
    pub instruction: Option<String>,
    /// Function names still waiting for a definition, next first.
    pub pending_definitions: VecDeque<Identifier>,
    pub last_numbering: Numbering,
    /// Name of the function whose definition is in progress.
    pub defining: Option<Identifier>,
    suspended: Vec<Suspended>,
}

impl DialogState {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, phase: Phase) {
        *self = DialogState {
            phase,
            ..Default::default()
        };
    }

    /// Registry names plus every name awaiting definition.
    pub fn catalogue(&self, registry: &FunctionRegistry) -> ActionCatalogue {
        let mut cat = registry.catalogue();
        let in_flight = self
            .pending_definitions
            .iter()
            .chain(self.defining.iter())
            .chain(self.suspended.iter().filter_map(|s| s.defining.as_ref()));
        for name in in_flight {
            cat.declare(name.clone());
        }
        cat
    }

    fn program(&self) -> &Program {
        self.current_program.as_ref().expect("phase implies a current program")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramView {
    pub name: String,
    pub lines: Vec<String>,
    pub numbering: Numbering,
}

impl ProgramView {
    pub fn of(program: &Program, numbering: Numbering) -> Self {
        ProgramView {
            name: program.name.to_string(),
            lines: render(program, numbering).lines().map(str::to_owned).collect(),
            numbering,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum Effect {
    RunProgram { program: Program },
    FunctionSaved { name: Identifier },
}

/// One system utterance. `text` is the complete message, program listing
/// included; `program_view` carries the same listing in structured form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub text: String,
    pub program_view: Option<ProgramView>,
    pub effects: Vec<Effect>,
}

impl Reply {
    pub fn say(text: impl Into<String>) -> Self {
        Reply {
            text: text.into(),
            program_view: None,
            effects: Vec::new(),
        }
    }

    fn listing(lead: &str, program: &Program, numbering: Numbering, tail: &str) -> Self {
        Reply {
            text: format!("{lead}\n{}\n{tail}", render_listing(program, numbering)),
            program_view: Some(ProgramView::of(program, numbering)),
            effects: Vec::new(),
        }
    }

    fn with(mut self, effect: Effect) -> Self {
        self.effects.push(effect);
        self
    }
}

/// Where saved functions go. The gateway's implementation persists them.
pub trait FunctionStore {
    fn registry(&self) -> &FunctionRegistry;
    fn register(&mut self, name: Identifier, instruction: &str, body: Program) -> Result<(), RegisterError>;
}

impl FunctionStore for FunctionRegistry {
    fn registry(&self) -> &FunctionRegistry {
        self
    }

    fn register(&mut self, name: Identifier, instruction: &str, body: Program) -> Result<(), RegisterError> {
        FunctionRegistry::register(self, name, instruction, body)
    }
}

pub struct Deps<'a> {
    pub decomposer: &'a Decomposer,
    pub store: &'a mut dyn FunctionStore,
    pub lexicon: &'a Lexicon,
}

/// The capabilities answer, listing built-ins and any saved functions.
pub fn capabilities(registry: &FunctionRegistry) -> String {
    let mut text = format!(
        "I can do the following easy actions: {}\nI can also do difficult actions by doing many easy actions.",
        BUILTIN_ACTIONS.join(", ")
    );
    if !registry.is_empty() {
        let names: Vec<&str> = registry.entries().iter().map(|e| e.name.as_str()).collect();
        text.push_str(&format!(
            "\nI also know the programs you taught me: {}",
            names.join(", ")
        ));
    }
    text
}

fn expects_number(phase: Phase) -> bool {
    matches!(phase, Phase::AwaitBlockNumber { .. })
}

/// Processes one utterance. Never fails: every problem becomes a reply.
pub fn handle(state: &mut DialogState, utterance: &str, deps: &mut Deps<'_>) -> Vec<Reply> {
    let intent = deps.lexicon.classify(utterance, expects_number(state.phase));
    if state.phase == Phase::Executing {
        return vec![Reply::say(BUSY)];
    }
    if intent == Intent::Greet {
        state.reset(Phase::AwaitInstruction);
        return vec![Reply::say(GREETING)];
    }
    if intent == Intent::AskCapabilities {
        if state.phase == Phase::Idle {
            state.phase = Phase::AwaitInstruction;
        }
        return vec![Reply::say(capabilities(deps.store.registry()))];
    }
    let text = utterance.trim();
    match state.phase {
        Phase::Idle => vec![Reply::say(WAKE_ME)],
        Phase::AwaitInstruction => match intent {
            Intent::Deny => {
                state.reset(Phase::Idle);
                vec![Reply::say(OKAY)]
            }
            _ => propose(state, text, None, deps),
        },
        Phase::DefiningPending => {
            let name = state.defining.clone().expect("defining set while pending");
            propose(state, text, Some(name), deps)
        }
        Phase::ProgramProposed => match intent {
            Intent::Affirm => {
                state.phase = Phase::Executing;
                let program = state.program().clone();
                vec![Reply::say(RUN).with(Effect::RunProgram { program })]
            }
            Intent::Deny if state.program().line_count() <= 1 => {
                if let Some(name) = state.defining.clone() {
                    state.phase = Phase::DefiningPending;
                    state.current_program = None;
                    return vec![Reply::say(OKAY), Reply::say(define_prompt(&name))];
                }
                state.reset(Phase::Idle);
                vec![Reply::say(OKAY)]
            }
            Intent::Deny => {
                state.phase = Phase::AwaitFixConsent;
                vec![Reply::say(FIX_OFFER)]
            }
            Intent::ReviseChange => choose_block(state, RevisionKind::Change),
            Intent::ReviseAdd => choose_block(state, RevisionKind::Add),
            Intent::ReviseRemove => choose_block(state, RevisionKind::Remove),
            _ => vec![Reply::say(TRY_IT)],
        },
        Phase::AwaitFixConsent => match intent {
            Intent::Affirm => {
                state.phase = Phase::AwaitRevisionKind;
                vec![Reply::say(REVISION_KINDS)]
            }
            Intent::Deny => {
                state.reset(Phase::Idle);
                vec![Reply::say(OKAY)]
            }
            Intent::ReviseChange => choose_block(state, RevisionKind::Change),
            Intent::ReviseAdd => choose_block(state, RevisionKind::Add),
            Intent::ReviseRemove => choose_block(state, RevisionKind::Remove),
            _ => vec![Reply::say(FIX_OFFER)],
        },
        Phase::AwaitRevisionKind => match intent {
            Intent::ReviseChange => choose_block(state, RevisionKind::Change),
            Intent::ReviseAdd => choose_block(state, RevisionKind::Add),
            Intent::ReviseRemove => choose_block(state, RevisionKind::Remove),
            Intent::Deny => {
                state.reset(Phase::Idle);
                vec![Reply::say(OKAY)]
            }
            _ => vec![Reply::say(REVISION_KINDS)],
        },
        Phase::AwaitBlockNumber { kind } => match intent {
            Intent::NumberRef(n) => block_chosen(state, kind, n as usize),
            Intent::Deny => {
                state.reset(Phase::Idle);
                vec![Reply::say(OKAY)]
            }
            _ => vec![Reply::say(kind.which_block())],
        },
        Phase::AwaitRevisionInstruction { kind, block } => revise(state, kind, block, text, deps),
        Phase::AwaitSaveConsent => match intent {
            Intent::Affirm => save(state, deps),
            Intent::Deny => {
                state.reset(Phase::Idle);
                vec![Reply::say(OKAY)]
            }
            _ => vec![Reply::say(save_offer(state.program()))],
        },
        Phase::Executing => unreachable!("handled above"),
    }
}

/// Reports the end of a run started by [`Effect::RunProgram`].
pub fn finish_execution(state: &mut DialogState, trace: &ExecutionTrace) -> Vec<Reply> {
    if state.phase != Phase::Executing {
        return Vec::new();
    }
    let mut replies = Vec::new();
    if !trace.completed() {
        let why = trace.detail.clone().unwrap_or_else(|| format!("{:?}", trace.halted));
        replies.push(Reply::say(format!("I had to stop: {why}")));
    }
    let program = state.program().clone();
    let defining = state.defining.is_some();
    if defining || (trace.completed() && program.line_count() > 1) {
        state.phase = Phase::AwaitSaveConsent;
        replies.push(Reply::say(save_offer(&program)));
    } else {
        state.reset(Phase::Idle);
    }
    replies
}

/// Backs out of a run the caller could not start because the robot is
/// busy. The program stays proposed.
pub fn execution_refused(state: &mut DialogState) -> Vec<Reply> {
    if state.phase == Phase::Executing {
        state.phase = Phase::ProgramProposed;
    }
    vec![Reply::say(ROBOT_BUSY)]
}

fn save_offer(program: &Program) -> String {
    format!("Do you want to save this program as {}?", program.name)
}

fn define_prompt(name: &Identifier) -> String {
    format!("I don't know how to do {name} yet. What should {name} do?")
}

fn propose(
    state: &mut DialogState,
    instruction: &str,
    defining: Option<Identifier>,
    deps: &mut Deps<'_>,
) -> Vec<Reply> {
    let registry = deps.store.registry();
    let catalogue = state.catalogue(registry);
    match deps.decomposer.decompose_in(instruction, registry, &catalogue) {
        Ok(mut program) => {
            if let Some(name) = &defining {
                program.name = name.clone();
                // a definition may not call itself
                if program.called_functions().contains(name) {
                    return vec![Reply::say(ASK_AGAIN)];
                }
            }
            state.current_program = Some(program);
            state.instruction = Some(instruction.to_owned());
            state.defining = defining;
            state.phase = Phase::ProgramProposed;
            state.last_numbering = Numbering::Plain;
            vec![Reply::listing(PRESENT, state.program(), Numbering::Plain, TRY_IT)]
        }
        Err(DecomposeError::ServiceUnavailable(_)) => vec![Reply::say(UNAVAILABLE)],
        Err(_) => vec![Reply::say(ASK_AGAIN)],
    }
}

fn choose_block(state: &mut DialogState, kind: RevisionKind) -> Vec<Reply> {
    let numbering = kind.numbering();
    state.phase = Phase::AwaitBlockNumber { kind };
    state.last_numbering = numbering;
    let program = state.program();
    let lead = match kind {
        RevisionKind::Add => format!("Let's add a block to {}!", program.name),
        kind => format!("Let's {} the block of {}!", kind.verb(), program.name),
    };
    vec![Reply::listing(&lead, program, numbering, &kind.which_block())]
}

fn block_chosen(state: &mut DialogState, kind: RevisionKind, block: usize) -> Vec<Reply> {
    let numbering = BlockNumbering::for_program(state.program(), kind.numbering());
    if block == 0 || block > numbering.max_choice() {
        return vec![Reply::say(format!("There is no block {block}. {}", kind.which_block()))];
    }
    match kind {
        RevisionKind::Change => {
            state.phase = Phase::AwaitRevisionInstruction { kind, block };
            vec![Reply::say(CHANGE_INTO)]
        }
        RevisionKind::Add => {
            state.phase = Phase::AwaitRevisionInstruction { kind, block };
            vec![Reply::say(ADD_WHAT)]
        }
        RevisionKind::Remove => {
            let outcome = match apply_delete(state.program(), block) {
                Ok(o) => o,
                Err(e) => return vec![Reply::say(format!("{e}. {}", kind.which_block()))],
            };
            if outcome.emptied {
                let name = state.program().name.clone();
                let defining = state.defining.clone();
                state.current_program = None;
                if let Some(def) = defining {
                    state.phase = Phase::DefiningPending;
                    return vec![
                        Reply::say(format!("{name} is empty now.")),
                        Reply::say(define_prompt(&def)),
                    ];
                }
                state.reset(Phase::AwaitInstruction);
                return vec![Reply::say(format!("{name} is empty now. {}", GREETING))];
            }
            let lead = format!("Let's remove block {block} of {}!", outcome.program.name);
            present_revised(state, outcome.program, &lead)
        }
    }
}

fn present_revised(state: &mut DialogState, program: Program, lead: &str) -> Vec<Reply> {
    state.current_program = Some(program);
    state.phase = Phase::ProgramProposed;
    state.last_numbering = Numbering::Plain;
    vec![Reply::listing(lead, state.program(), Numbering::Plain, TRY_IT)]
}

fn revise(state: &mut DialogState, kind: RevisionKind, block: usize, text: &str, deps: &mut Deps<'_>) -> Vec<Reply> {
    let ask = match kind {
        RevisionKind::Add => ADD_WHAT,
        _ => CHANGE_INTO,
    };
    let registry = deps.store.registry();
    let catalogue = state.catalogue(registry);
    let current = state.program().clone();
    let revision = match deps.decomposer.revise(text, &current, registry, &catalogue) {
        Ok(r) => r,
        Err(DecomposeError::ServiceUnavailable(_)) => return vec![Reply::say(UNAVAILABLE)],
        Err(_) => return vec![Reply::say(format!("I could not understand that. {ask}"))],
    };
    if revision.new_functions.contains(&current.name)
        || state
            .suspended
            .iter()
            .any(|s| revision.new_functions.contains(&s.program.name))
    {
        return vec![Reply::say(format!("A program cannot use itself. {ask}"))];
    }
    let applied = match kind {
        RevisionKind::Add => apply_add(&current, block, revision.statement),
        _ => apply_change(&current, block, revision.statement),
    };
    let program = match applied {
        Ok(p) => p,
        Err(e) => return vec![Reply::say(format!("{e}. {ask}"))],
    };
    let mut extended = catalogue;
    for n in &revision.new_functions {
        extended.declare(n.clone());
    }
    if !validate(&program, &extended).ok() {
        return vec![Reply::say(format!("I could not understand that. {ask}"))];
    }
    let lead = match kind {
        RevisionKind::Add => format!("Let's add block {block} to {}!", program.name),
        _ => format!("Let's change block {block} of {}!", program.name),
    };
    if revision.new_functions.is_empty() {
        return present_revised(state, program, &lead);
    }

    // Depth-first: the new names are defined before anything queued earlier.
    for n in revision.new_functions.iter().rev() {
        state.pending_definitions.push_front(n.clone());
    }
    state.suspended.push(Suspended {
        program: program.clone(),
        instruction: state.instruction.clone().unwrap_or_default(),
        defining: state.defining.take(),
    });
    let listing = format!("{lead}\n{}", render_listing(&program, Numbering::Plain));
    let mut replies = vec![Reply {
        text: listing,
        program_view: Some(ProgramView::of(&program, Numbering::Plain)),
        effects: Vec::new(),
    }];
    replies.push(next_definition(state));
    replies
}

/// Starts defining the next pending name.
fn next_definition(state: &mut DialogState) -> Reply {
    let name = state
        .pending_definitions
        .pop_front()
        .expect("called with pending definitions");
    state.defining = Some(name.clone());
    state.current_program = None;
    state.instruction = None;
    state.phase = Phase::DefiningPending;
    Reply::say(define_prompt(&name))
}

fn save(state: &mut DialogState, deps: &mut Deps<'_>) -> Vec<Reply> {
    let program = state.program().clone();
    let instruction = state.instruction.clone().unwrap_or_else(|| program.name.to_string());
    match deps.store.register(program.name.clone(), &instruction, program.clone()) {
        Ok(()) => {}
        Err(e) => {
            let why = match e {
                RegisterError::DuplicateName(n) => format!("You already have a program called {n}."),
                other => format!("I could not save it: {other}"),
            };
            state.reset(Phase::Idle);
            return vec![Reply::say(why)];
        }
    }
    let saved = Reply::say(OKAY).with(Effect::FunctionSaved {
        name: program.name.clone(),
    });

    if state.defining.is_none() {
        state.reset(Phase::Idle);
        return vec![saved];
    }
    // A definition just landed: continue with the next one or resume the
    // program that needed it.
    let pending_for_this_level = state.pending_definitions.front().is_some();
    if pending_for_this_level {
        let next = next_definition(state);
        return vec![saved, next];
    }
    match state.suspended.pop() {
        Some(resumed) => {
            state.defining = resumed.defining;
            state.instruction = Some(resumed.instruction);
            let lead = PRESENT;
            let mut replies = vec![saved];
            replies.extend(present_revised(state, resumed.program, lead));
            replies
        }
        None => {
            state.reset(Phase::Idle);
            vec![saved]
        }
    }
}

/// Drives [`handle`] and runs any program it asks for with `run`, feeding
/// the trace back through [`finish_execution`].
pub fn converse(
    state: &mut DialogState,
    utterance: &str,
    deps: &mut Deps<'_>,
    run: &mut dyn FnMut(&Program, &FunctionRegistry) -> ExecutionTrace,
) -> Vec<Reply> {
    let mut replies = handle(state, utterance, deps);
    let program = replies.iter().flat_map(|r| &r.effects).find_map(|e| match e {
        Effect::RunProgram { program } => Some(program.clone()),
        _ => None,
    });
    if let Some(program) = program {
        let trace = run(&program, deps.store.registry());
        replies.extend(finish_execution(state, &trace));
    }
    replies
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::HaltReason;

    fn done() -> ExecutionTrace {
        ExecutionTrace {
            steps: vec![],
            halted: HaltReason::Completed,
            detail: None,
        }
    }

    struct Harness {
        state: DialogState,
        registry: FunctionRegistry,
        decomposer: Decomposer,
        lexicon: Lexicon,
    }

    impl Harness {
        fn new() -> Self {
            Harness {
                state: DialogState::new(),
                registry: FunctionRegistry::new(),
                decomposer: Decomposer::rules(),
                lexicon: Lexicon::default(),
            }
        }

        fn say(&mut self, text: &str) -> Vec<String> {
            let mut deps = Deps {
                decomposer: &self.decomposer,
                store: &mut self.registry,
                lexicon: &self.lexicon,
            };
            converse(&mut self.state, text, &mut deps, &mut |_, _| done())
                .into_iter()
                .map(|r| r.text)
                .collect()
        }
    }

    #[test]
    fn greeting_and_capabilities() {
        let mut h = Harness::new();
        assert_eq!(h.say("go"), [WAKE_ME]);
        assert_eq!(h.say("Hey Spark!"), [GREETING]);
        let caps = h.say("What can you do?");
        assert!(caps[0].starts_with("I can do the following easy actions: STAND_DOWN, STAND_UP,"));
        assert!(caps[0].ends_with("FIND\nI can also do difficult actions by doing many easy actions."));
        assert_eq!(h.state.phase, Phase::AwaitInstruction);
    }

    #[test]
    fn single_line_deny_goes_idle() {
        let mut h = Harness::new();
        h.say("Hello Spark!");
        let r = h.say("Please do spin jump!");
        assert_eq!(
            r[0],
            "Sure, this is what I am going to do:\nPLEASE_DO_SPIN_JUMP\n1. SPIN_JUMP\nDo you want me to try?"
        );
        assert_eq!(h.say("no"), [OKAY]);
        assert_eq!(h.state.phase, Phase::Idle);
        assert!(h.state.current_program.is_none());
    }

    #[test]
    fn execution_of_single_action_skips_save() {
        let mut h = Harness::new();
        h.say("Hello Spark!");
        h.say("Please do spin jump!");
        assert_eq!(h.say("Sure, please."), [RUN]);
        assert_eq!(h.state.phase, Phase::Idle);
    }

    #[test]
    fn multi_line_run_offers_save() {
        let mut h = Harness::new();
        h.say("Hey Sparky!");
        h.say("Turn right multiple times!");
        let r = h.say("yes");
        assert_eq!(
            r,
            [RUN, "Do you want to save this program as TURN_RIGHT_MULTIPLE_TIMES?"]
        );
        assert_eq!(h.say("yes"), [OKAY]);
        assert!(h.registry.get("TURN_RIGHT_MULTIPLE_TIMES").is_some());
        h.say("Hey Sparky!");
        let r = h.say("turn right multiple times and jump");
        assert!(r[0].contains("1. TURN_RIGHT_MULTIPLE_TIMES\n2. SPIN_JUMP"), "{}", r[0]);
    }

    #[test]
    fn failed_decomposition_keeps_phase() {
        let mut h = Harness::new();
        h.say("Hey Spark!");
        assert_eq!(h.say("juggle"), [ASK_AGAIN]);
        assert_eq!(h.state.phase, Phase::AwaitInstruction);
    }

    #[test]
    fn remove_flow() {
        let mut h = Harness::new();
        h.say("Hey Spark!");
        h.say("jump and lift");
        assert_eq!(h.say("I don't like it."), [FIX_OFFER]);
        assert_eq!(h.say("yes"), [REVISION_KINDS]);
        let r = h.say("remove");
        assert_eq!(r[0], "Let's remove the block of JUMP_AND_LIFT!\nJUMP_AND_LIFT\n01. SPIN_JUMP\n02. LIFT\nWhich block do you want to remove?");
        assert_eq!(
            h.say("seven"),
            ["There is no block 7. Which block do you want to remove?"]
        );
        let r = h.say("the second one");
        assert_eq!(
            r[0],
            "Let's remove block 2 of JUMP_AND_LIFT!\nJUMP_AND_LIFT\n1. SPIN_JUMP\nDo you want me to try?"
        );
        assert_eq!(h.say("remove"), ["Let's remove the block of JUMP_AND_LIFT!\nJUMP_AND_LIFT\n01. SPIN_JUMP\nWhich block do you want to remove?"]);
        let r = h.say("1");
        assert_eq!(r, ["JUMP_AND_LIFT is empty now. Yes, What do you want me to do?"]);
        assert!(h.state.current_program.is_none());
    }

    #[test]
    fn add_flow() {
        let mut h = Harness::new();
        h.say("Hey Spark!");
        h.say("move right two times");
        h.say("no");
        h.say("sure");
        let r = h.say("add");
        assert!(r[0].ends_with(
            "1. REPEAT 2 TIMES\n2.     MOVE_RIGHT\n3. END REPEAT\nWhich number do you want to add the block at?"
        ));
        assert_eq!(h.say("3"), [ADD_WHAT]);
        let r = h.say("turn left");
        assert_eq!(
            r[0],
            "Let's add block 3 to MOVE_RIGHT_TWO_TIMES!\nMOVE_RIGHT_TWO_TIMES\n1. REPEAT 2 TIMES\n2.     MOVE_RIGHT\n3.     TURN_LEFT\n4. END REPEAT\nDo you want me to try?"
        );
    }

    #[test]
    fn new_function_is_defined_before_resuming() {
        let mut h = Harness::new();
        h.say("Hey Spark!");
        h.say("jump and lift");
        h.say("no");
        h.say("yes");
        h.say("change");
        h.say("2");
        let r = h.say("do the robot");
        assert_eq!(r.len(), 2);
        assert!(r[0].contains("2. DO_THE_ROBOT"), "{}", r[0]);
        assert_eq!(
            r[1],
            "I don't know how to do DO_THE_ROBOT yet. What should DO_THE_ROBOT do?"
        );
        assert_eq!(h.state.phase, Phase::DefiningPending);

        let r = h.say("turn left and turn right");
        assert_eq!(
            r[0],
            "Sure, this is what I am going to do:\nDO_THE_ROBOT\n1. TURN_LEFT\n2. TURN_RIGHT\nDo you want me to try?"
        );
        let r = h.say("yes");
        assert_eq!(r, [RUN, "Do you want to save this program as DO_THE_ROBOT?"]);
        let r = h.say("yes");
        assert_eq!(r[0], OKAY);
        assert_eq!(r[1], "Sure, this is what I am going to do:\nJUMP_AND_LIFT\n1. SPIN_JUMP\n2. DO_THE_ROBOT\nDo you want me to try?");
        assert!(h.registry.get("DO_THE_ROBOT").is_some());
        let r = h.say("yes");
        assert_eq!(r, [RUN, "Do you want to save this program as JUMP_AND_LIFT?"]);
        assert_eq!(h.say("yes"), [OKAY]);
        assert_eq!(h.registry.len(), 2);
        assert!(h.state.pending_definitions.is_empty() && h.state.phase == Phase::Idle);
    }

    #[test]
    fn busy_while_executing() {
        let mut h = Harness::new();
        h.say("Hey Spark!");
        h.say("jump");
        let mut deps = Deps {
            decomposer: &h.decomposer,
            store: &mut h.registry,
            lexicon: &h.lexicon,
        };
        let r = handle(&mut h.state, "yes", &mut deps);
        assert!(matches!(r[0].effects[0], Effect::RunProgram { .. }));
        assert_eq!(handle(&mut h.state, "Hey Spark!", &mut deps)[0].text, BUSY);
        assert!(finish_execution(&mut h.state, &done()).is_empty());
        assert_eq!(h.state.phase, Phase::Idle);
    }
}
