use std::collections::BTreeMap;

use super::{Identifier, Program};

/// Built-in robot actions, in the order they are offered to children.
pub const BUILTIN_ACTIONS: [&str; 18] = [
    "STAND_DOWN",
    "STAND_UP",
    "TILT_LEFT_SHOULDER",
    "TILT_RIGHT_SHOULDER",
    "TILT_HEAD_UP",
    "TILT_HEAD_DOWN",
    "TILT_HEAD_LEFT",
    "TILT_HEAD_RIGHT",
    "MOVE_FORWARD",
    "MOVE_LEFT",
    "MOVE_RIGHT",
    "TURN_LEFT",
    "TURN_RIGHT",
    "SPIN_JUMP",
    "LIFT",
    "FIRST_DANCE",
    "SECOND_DANCE",
    "FIND",
];

pub const CONDITION_NAMES: [&str; 5] = ["LIGHT", "DARK", "FAR", "NEAR", "FOUND"];

/// Words that can never name a user function.
pub const RESERVED_WORDS: [&str; 11] = [
    "REPEAT", "TIMES", "IF", "WHILE", "END", "FIND", "FOUND", "LIGHT", "DARK", "FAR", "NEAR",
];

/// Everything a program may call: the fixed built-ins plus user functions.
#[derive(Debug, Clone, Default)]
pub struct ActionCatalogue {
    user_functions: BTreeMap<Identifier, Option<Program>>,
}

impl ActionCatalogue {
    pub fn builtin() -> Self {
        Self::default()
    }

    pub fn is_builtin(name: &str) -> bool {
        BUILTIN_ACTIONS.contains(&name)
    }

    pub fn is_reserved(name: &str) -> bool {
        RESERVED_WORDS.contains(&name)
    }

    pub fn add_function(&mut self, program: Program) {
        self.user_functions.insert(program.name.clone(), Some(program));
    }

    /// Makes a name callable before its body exists, as happens while a
    /// child is still defining it.
    pub fn declare(&mut self, name: Identifier) {
        self.user_functions.entry(name).or_insert(None);
    }

    pub fn has_function(&self, name: &Identifier) -> bool {
        self.user_functions.contains_key(name)
    }

    pub fn function(&self, name: &Identifier) -> Option<&Program> {
        self.user_functions.get(name).and_then(Option::as_ref)
    }

    pub fn function_names(&self) -> impl Iterator<Item = &Identifier> {
        self.user_functions.keys()
    }
}
