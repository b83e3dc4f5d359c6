//! Offline decomposer: a fixed pattern pipeline over the lowercased
//! instruction. Deterministic by construction.

use std::sync::LazyLock;

use regex::Regex;

use super::{DecomposeError, FunctionRegistry};
use crate::numbers::extract_number;
use crate::spl::{instruction_to_name, Condition, ObjectLabel, Program, Statement, BUILTIN_ACTIONS};

/// "multiple", "many" and similar vague counts.
pub const VAGUE_REPEAT: u32 = 3;
const FUZZY_MATCH: f64 = 0.85;

const LEADING_FILLERS: &[&str] = &[
    "hey sparky",
    "hey spark",
    "hi sparky",
    "hi spark",
    "hello sparky",
    "hello spark",
    "sparky",
    "spark",
    "okay",
    "ok",
    "please",
    "lets",
    "let us",
    "can you",
    "could you",
    "would you",
    "will you",
    "i want you to",
    "i want to",
    "i would like you to",
    "i would like to",
    "i need you to",
    "try to",
    "go ahead and",
    "and then",
    "and",
    "then",
    "now",
    "just",
    "do a",
    "do the",
    "do",
    "a",
    "the",
];

const TRAILING_FILLERS: &[&str] = &[
    "please",
    "right now",
    "now",
    "for me",
    "once",
    "one time",
    "a bit",
    "again",
];

/// Words ignored inside verb phrases ("tilt your head up").
const NOISE: &[&str] = &["your", "the", "my", "a", "an", "to", "of", "little"];

const VERBS: &[(&str, &[&str])] = &[
    (
        "MOVE_FORWARD",
        &[
            "go",
            "move",
            "walk",
            "run",
            "go forward",
            "move forward",
            "walk forward",
            "run forward",
            "go forwards",
            "move forwards",
            "go straight",
            "move straight",
            "walk straight",
            "go ahead",
            "move ahead",
            "step forward",
            "forward",
            "go front",
            "move front",
        ],
    ),
    (
        "MOVE_LEFT",
        &[
            "move left",
            "go left",
            "walk left",
            "step left",
            "slide left",
            "move sideways left",
        ],
    ),
    (
        "MOVE_RIGHT",
        &[
            "move right",
            "go right",
            "walk right",
            "step right",
            "slide right",
            "move sideways right",
        ],
    ),
    (
        "TURN_LEFT",
        &["turn left", "rotate left", "turn around left", "spin left"],
    ),
    (
        "TURN_RIGHT",
        &["turn right", "rotate right", "turn around right", "spin right"],
    ),
    (
        "SPIN_JUMP",
        &["spin jump", "jump", "jump spin", "spinning jump", "jump and spin"],
    ),
    ("STAND_UP", &["stand up", "stand", "get up", "rise", "wake up"]),
    (
        "STAND_DOWN",
        &[
            "stand down",
            "sit down",
            "sit",
            "lie down",
            "lay down",
            "get down",
            "crouch",
        ],
    ),
    ("FIRST_DANCE", &["dance", "first dance", "dance one", "dance first"]),
    (
        "SECOND_DANCE",
        &[
            "second dance",
            "dance two",
            "other dance",
            "another dance",
            "dance second",
        ],
    ),
    ("LIFT", &["lift", "lift up", "lift body", "lift yourself"]),
    (
        "TILT_LEFT_SHOULDER",
        &["tilt left shoulder", "lean left", "tilt shoulder left"],
    ),
    (
        "TILT_RIGHT_SHOULDER",
        &["tilt right shoulder", "lean right", "tilt shoulder right"],
    ),
    (
        "TILT_HEAD_UP",
        &["tilt head up", "look up", "head up", "raise head", "tilt up"],
    ),
    (
        "TILT_HEAD_DOWN",
        &[
            "tilt head down",
            "look down",
            "head down",
            "lower head",
            "tilt down",
            "nod",
        ],
    ),
    (
        "TILT_HEAD_LEFT",
        &["tilt head left", "look left", "head left", "look to left"],
    ),
    (
        "TILT_HEAD_RIGHT",
        &["tilt head right", "look right", "head right", "look to right"],
    ),
];

const OBJECT_ALIASES: &[(&str, &str)] = &[
    ("friend", "person"),
    ("buddy", "person"),
    ("mom", "person"),
    ("mother", "person"),
    ("mum", "person"),
    ("dad", "person"),
    ("father", "person"),
    ("teacher", "person"),
    ("me", "person"),
    ("human", "person"),
    ("someone", "person"),
    ("somebody", "person"),
    ("people", "person"),
    ("man", "person"),
    ("woman", "person"),
    ("boy", "person"),
    ("girl", "person"),
    ("kid", "person"),
    ("child", "person"),
    ("brother", "person"),
    ("sister", "person"),
    ("phone", "cell phone"),
    ("mobile", "cell phone"),
    ("table", "dining table"),
    ("ball", "sports ball"),
    ("plant", "potted plant"),
    ("flower", "potted plant"),
    ("sofa", "couch"),
    ("teddy", "teddy bear"),
    ("doll", "teddy bear"),
    ("computer", "laptop"),
    ("television", "tv"),
    ("puppy", "dog"),
    ("doggy", "dog"),
    ("kitty", "cat"),
    ("kitten", "cat"),
    ("glass", "wine glass"),
    ("mug", "cup"),
    ("bike", "bicycle"),
    ("fridge", "refrigerator"),
];

const DETERMINERS: &[&str] = &[
    "the", "my", "a", "an", "your", "our", "that", "this", "some", "his", "her",
];

static CONDITIONAL_START: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:^|,\s*|\s+and\s+(?:then\s+)?|\s+then\s+)(if|while|as long as)\s").expect("valid regex")
});
static SEPARATOR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\s*,\s*(?:and\s+)?(?:then\s+)?|\s+and\s+then\s+|\s+and\s+|\s+then\s+|\s+after that\s+")
        .expect("valid regex")
});
static REPEAT_SUFFIX: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(.*\S)\s+(twice|thrice|multiple times|many times|several times|lots of times|a lot of times|a few times|a couple of times|a couple times)$",
    )
    .expect("valid regex")
});
static GO_TO: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:go|walk|move|run|come|head|get|drive)\s+(?:over\s+)?(?:to|toward|towards|up to)\s+(.+)$")
        .expect("valid regex")
});
static FIND: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:find|look for|search for|search|locate|seek|where is|look around for)\s+(.+)$")
        .expect("valid regex")
});

/// Lowercases, drops apostrophes, and turns every other non-alphanumeric
/// character except commas into a space.
fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars().flat_map(char::to_lowercase) {
        match c {
            '\'' | '\u{2019}' => {}
            c if c.is_ascii_alphanumeric() => out.push(c),
            ',' => out.push_str(" , "),
            _ => out.push(' '),
        }
    }
    let collapsed = out.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed.replace(" ,", ",")
}

fn strip_word_prefix<'a>(text: &'a str, prefix: &str) -> Option<&'a str> {
    let rest = text.strip_prefix(prefix)?;
    if rest.is_empty() || rest.starts_with(',') {
        Some(rest)
    } else {
        rest.strip_prefix(' ')
    }
}

fn strip_word_suffix<'a>(text: &'a str, suffix: &str) -> Option<&'a str> {
    let rest = text.strip_suffix(suffix)?;
    if rest.is_empty() {
        Some(rest)
    } else {
        rest.strip_suffix(' ')
    }
}

fn strip_fillers(text: &str) -> &str {
    let mut t = text.trim_matches(|c: char| c == ',' || c.is_whitespace());
    'outer: loop {
        for f in LEADING_FILLERS {
            if let Some(rest) = strip_word_prefix(t, f) {
                if !rest.is_empty() {
                    t = rest;
                    continue 'outer;
                }
            }
        }
        for f in TRAILING_FILLERS {
            if let Some(rest) = strip_word_suffix(t, f) {
                if !rest.is_empty() {
                    t = rest;
                    continue 'outer;
                }
            }
        }
        return t;
    }
}

fn without_noise(text: &str) -> String {
    text.split(' ')
        .filter(|w| !NOISE.contains(w))
        .collect::<Vec<_>>()
        .join(" ")
}

fn verb(clause: &str) -> Option<&'static str> {
    let c = without_noise(clause);
    if let Some((action, _)) = VERBS.iter().find(|(_, phrases)| phrases.contains(&c.as_str())) {
        return Some(action);
    }
    let spelled = c.replace(' ', "_").to_uppercase();
    BUILTIN_ACTIONS
        .iter()
        .find(|a| **a != "FIND" && **a == spelled)
        .copied()
}

/// Maps a noun phrase to a detection label.
pub fn resolve_object(phrase: &str) -> Option<ObjectLabel> {
    let mut p = phrase.trim();
    while let Some(rest) = DETERMINERS.iter().find_map(|d| strip_word_prefix(p, d)) {
        p = rest;
    }
    let candidates = [
        p.to_owned(),
        p.strip_suffix('s').unwrap_or(p).to_owned(),
        p.strip_suffix("es").unwrap_or(p).to_owned(),
    ];
    for cand in &candidates {
        let label = OBJECT_ALIASES
            .iter()
            .find(|(alias, _)| alias == cand)
            .map_or(ObjectLabel::new(cand), |(_, l)| ObjectLabel::new(l));
        if label.is_known() {
            return Some(label);
        }
    }
    None
}

fn count_of(phrase: &str) -> Option<u32> {
    match phrase {
        "twice" | "a couple of times" | "a couple times" => Some(2),
        "thrice" => Some(3),
        "multiple times" | "many times" | "several times" | "lots of times" | "a lot of times" | "a few times" => {
            Some(VAGUE_REPEAT)
        }
        _ => {
            let words = phrase.strip_suffix(" times").or_else(|| phrase.strip_suffix(" time"))?;
            let words = words.trim();
            // every token must be part of the number
            let all_numeric = words
                .split(' ')
                .all(|w| extract_number(w).is_some() || w == "zero" || w.chars().all(|c| c.is_ascii_digit()));
            if !all_numeric {
                return None;
            }
            extract_number(words)
        }
    }
}

/// Splits "<action> <number words> times", preferring the longest number.
fn numeric_suffix(text: &str) -> Option<(u32, &str)> {
    let head = strip_word_suffix(text, "times").or_else(|| strip_word_suffix(text, "time"))?;
    let words: Vec<&str> = head.split(' ').collect();
    for n in (1..=words.len().saturating_sub(1).min(3)).rev() {
        let phrase = words[words.len() - n..].join(" ");
        if let Some(count) = count_of(&format!("{phrase} times")) {
            let rest_len = head.len() - phrase.len();
            return Some((count, head[..rest_len].trim_end()));
        }
    }
    None
}

fn condition_prefix(text: &str) -> Option<(Condition, &str)> {
    let mut t = text.trim();
    for lead in [
        "it is",
        "its",
        "it s",
        "you are",
        "youre",
        "you re",
        "the room is",
        "we are",
        "there is",
        "theres",
    ] {
        if let Some(rest) = strip_word_prefix(t, lead) {
            t = rest;
            break;
        }
    }
    let simple: &[(&[&str], Condition)] = &[
        (
            &["far away", "far from everything", "far from things", "far"],
            Condition::Far,
        ),
        (
            &["near something", "close to something", "near", "close", "nearby"],
            Condition::Near,
        ),
        (&["bright", "light", "lit", "sunny"], Condition::Light),
        (&["dark", "dim"], Condition::Dark),
    ];
    for (phrases, cond) in simple {
        for p in *phrases {
            if let Some(rest) = strip_word_prefix(t, p) {
                return Some((cond.clone(), rest));
            }
        }
    }
    for lead in ["you found", "you find", "you see", "found", "you can see", "there is"] {
        if let Some(rest) = strip_word_prefix(t, lead) {
            // longest object phrase that resolves, up to three words
            let words: Vec<&str> = rest.split(' ').collect();
            for n in (1..=words.len().min(4)).rev() {
                let phrase = words[..n].join(" ");
                let phrase = phrase.trim_end_matches(',');
                if let Some(label) = resolve_object(phrase) {
                    let consumed: usize = words[..n].iter().map(|w| w.len() + 1).sum();
                    let remainder = rest.get(consumed.min(rest.len())..).unwrap_or("");
                    return Some((Condition::Found(label), remainder));
                }
            }
        }
    }
    None
}

struct Rules<'a> {
    registry: &'a FunctionRegistry,
}

impl Rules<'_> {
    fn registry_call(&self, clause: &str) -> Option<Statement> {
        let clause = strip_fillers(clause);
        if clause.is_empty() {
            return None;
        }
        self.registry.entries().iter().find_map(|e| {
            let source = normalize(&e.instruction);
            let source = strip_fillers(&source);
            let spelled = e.name.as_str().to_lowercase().replace('_', " ");
            let hit =
                clause == source || clause == spelled || strsim::normalized_levenshtein(clause, source) >= FUZZY_MATCH;
            hit.then(|| Statement::Call(e.name.clone()))
        })
    }

    fn sequence(&self, text: &str) -> Result<Vec<Statement>, DecomposeError> {
        let text = text.trim_matches(|c: char| c == ',' || c.is_whitespace());
        if let Some(call) = self.registry_call(text) {
            return Ok(vec![call]);
        }
        let (plain, conditional) = match CONDITIONAL_START.find(text) {
            Some(m) => {
                let kw = keyword_start(text, m.end());
                (&text[..m.start()], Some(&text[kw..]))
            }
            None => (text, None),
        };
        let mut out = Vec::new();
        for clause in SEPARATOR.split(plain) {
            if clause.trim().is_empty() {
                continue;
            }
            out.extend(self.clause(clause)?);
        }
        if let Some(cond_text) = conditional {
            out.push(self.conditional(cond_text)?);
        }
        if out.is_empty() {
            return Err(DecomposeError::NoRuleMatch(text.to_owned()));
        }
        Ok(out)
    }

    fn conditional(&self, text: &str) -> Result<Statement, DecomposeError> {
        let (is_while, rest) = if let Some(r) = strip_word_prefix(text, "if") {
            (false, r)
        } else if let Some(r) = strip_word_prefix(text, "while") {
            (true, r)
        } else if let Some(r) = strip_word_prefix(text, "as long as") {
            (true, r)
        } else {
            return Err(DecomposeError::NoRuleMatch(text.to_owned()));
        };
        let (cond, body_text) = condition_prefix(rest).ok_or_else(|| DecomposeError::NoRuleMatch(text.to_owned()))?;
        let mut body_text = body_text.trim_start_matches([',', ' ']);
        if let Some(r) = strip_word_prefix(body_text, "then") {
            body_text = r;
        }
        let body = if strip_fillers(body_text).is_empty() {
            vec![]
        } else {
            self.sequence(body_text)?
        };
        Ok(if is_while {
            Statement::While { cond, body }
        } else {
            Statement::If { cond, body }
        })
    }

    fn clause(&self, raw: &str) -> Result<Vec<Statement>, DecomposeError> {
        if let Some(call) = self.registry_call(raw) {
            return Ok(vec![call]);
        }
        let c = strip_fillers(raw);
        let no_match = || DecomposeError::NoRuleMatch(raw.trim().to_owned());
        if c.is_empty() {
            return Err(no_match());
        }

        if let Some(rest) = strip_word_prefix(c, "repeat") {
            if let Some(count) = count_of(rest) {
                return Ok(vec![Statement::Repeat { count, body: vec![] }]);
            }
            if let Some((count, inner)) = numeric_suffix(rest) {
                let body = match inner {
                    "it" | "that" | "this" => vec![],
                    inner => self.clause(inner)?,
                };
                return Ok(vec![Statement::Repeat { count, body }]);
            }
        }
        if c == "repeat" {
            return Ok(vec![Statement::Repeat {
                count: VAGUE_REPEAT,
                body: vec![],
            }]);
        }
        if let Some(caps) = REPEAT_SUFFIX.captures(c) {
            if let Some(count) = count_of(&caps[2]) {
                let body = self.clause(&caps[1])?;
                return Ok(vec![Statement::Repeat { count, body }]);
            }
        }
        if let Some((count, rest)) = numeric_suffix(c) {
            let body = self.clause(rest)?;
            return Ok(vec![Statement::Repeat { count, body }]);
        }
        if let Some(caps) = GO_TO.captures(c) {
            if let Some(label) = resolve_object(&caps[1]) {
                return Ok(go_to(label));
            }
        }
        if let Some(caps) = FIND.captures(c) {
            let label = resolve_object(&caps[1]).ok_or_else(no_match)?;
            return Ok(vec![Statement::Find(label)]);
        }
        verb(c).map(|a| vec![Statement::action(a)]).ok_or_else(no_match)
    }
}

/// Start of the conditional keyword in a match ending just after it.
fn keyword_start(text: &str, end: usize) -> usize {
    let head = &text[..end - 1];
    ["as long as", "while", "if"]
        .iter()
        .find(|k| head.ends_with(*k))
        .map_or(0, |k| head.len() - k.len())
}

/// The approach template: look for the object, then walk while far.
pub fn go_to(label: ObjectLabel) -> Vec<Statement> {
    vec![
        Statement::Find(label.clone()),
        Statement::If {
            cond: Condition::Found(label),
            body: vec![Statement::While {
                cond: Condition::Far,
                body: vec![Statement::action("MOVE_FORWARD")],
            }],
        },
    ]
}

/// Statements for `instruction`, before naming and validation.
pub fn rules_statements(instruction: &str, registry: &FunctionRegistry) -> Result<Vec<Statement>, DecomposeError> {
    let text = normalize(instruction);
    if text.is_empty() {
        return Err(DecomposeError::NoRuleMatch(instruction.to_owned()));
    }
    Rules { registry }.sequence(&text)
}

pub fn rules_decompose(instruction: &str, registry: &FunctionRegistry) -> Result<Program, DecomposeError> {
    let statements = rules_statements(instruction, registry)?;
    let name = instruction_to_name(instruction).map_err(|_| DecomposeError::NoRuleMatch(instruction.to_owned()))?;
    Ok(Program::new(name, statements))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spl::{parse, render, Numbering};

    fn rules(text: &str) -> String {
        render(
            &rules_decompose(text, &FunctionRegistry::new()).unwrap(),
            Numbering::None,
        )
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize("Let's move right, two times!"), "lets move right, two times");
        assert_eq!(strip_fillers("lets do spin jump please"), "spin jump");
    }

    #[test]
    fn simple_actions() {
        assert_eq!(rules("go"), "MOVE_FORWARD");
        assert_eq!(rules("Please do spin jump!"), "SPIN_JUMP");
        assert_eq!(rules("Tilt your head up"), "TILT_HEAD_UP");
        assert_eq!(rules("stand down and stand up"), "STAND_DOWN\nSTAND_UP");
        assert_eq!(rules("second dance"), "SECOND_DANCE");
    }

    #[test]
    fn repetition() {
        assert_eq!(
            rules("Turn right multiple times!"),
            "REPEAT 3 TIMES\n    TURN_RIGHT\nEND REPEAT"
        );
        assert_eq!(rules("jump 4 times"), "REPEAT 4 TIMES\n    SPIN_JUMP\nEND REPEAT");
        assert_eq!(rules("lift twenty one times"), "REPEAT 21 TIMES\n    LIFT\nEND REPEAT");
        assert_eq!(rules("Repeat five times!"), "REPEAT 5 TIMES\nEND REPEAT");
        assert_eq!(
            rules("repeat turn left 2 times"),
            "REPEAT 2 TIMES\n    TURN_LEFT\nEND REPEAT"
        );
    }

    #[test]
    fn conditionals() {
        assert_eq!(
            rules("if far, then move twice"),
            "IF FAR\n    REPEAT 2 TIMES\n        MOVE_FORWARD\n    END REPEAT\nEND IF"
        );
        assert_eq!(
            rules("while it is dark, turn left"),
            "WHILE DARK\n    TURN_LEFT\nEND WHILE"
        );
        assert_eq!(
            rules("lift and if near then sit"),
            "LIFT\nIF NEAR\n    STAND_DOWN\nEND IF"
        );
        assert_eq!(
            rules("if you found a cup, dance"),
            "IF FOUND CUP\n    FIRST_DANCE\nEND IF"
        );
        assert_eq!(rules("if it is light"), "IF LIGHT\nEND IF");
    }

    #[test]
    fn approach_template() {
        let expected = "FIND CHAIR\nIF FOUND CHAIR\n    WHILE FAR\n        MOVE_FORWARD\n    END WHILE\nEND IF";
        assert_eq!(rules("go to the chair"), expected);
        assert_eq!(rules("find the teddy bear"), "FIND TEDDY_BEAR");
        let p = rules_decompose(
            "Let's move right two times and go to my friend!",
            &FunctionRegistry::new(),
        )
        .unwrap();
        assert_eq!(p.name.as_str(), "LETS_MOVE_RIGHT_TWO_TIMES_AND_GO_TO_MY_FRIEND");
        assert_eq!(
            p.statements,
            parse("REPEAT 2 TIMES\n    MOVE_RIGHT\nEND REPEAT\nFIND PERSON\nIF FOUND PERSON\n    WHILE FAR\n        MOVE_FORWARD\n    END WHILE\nEND IF")
                .unwrap()
                .statements
        );
    }

    #[test]
    fn uncovered() {
        let reg = FunctionRegistry::new();
        assert!(matches!(
            rules_decompose("juggle", &reg),
            Err(DecomposeError::NoRuleMatch(_))
        ));
        assert!(matches!(
            rules_decompose("go to the unicorn", &reg),
            Err(DecomposeError::NoRuleMatch(_))
        ));
        assert!(matches!(
            rules_decompose("!!!", &reg),
            Err(DecomposeError::NoRuleMatch(_))
        ));
        assert!(matches!(
            rules_decompose("please", &reg),
            Err(DecomposeError::NoRuleMatch(_))
        ));
    }

    #[test]
    fn registered_functions_are_reused() {
        let mut reg = FunctionRegistry::new();
        reg.register(
            "TURN_RIGHT_MULTIPLE_TIMES".parse().unwrap(),
            "Turn right multiple times!",
            parse("REPEAT 3 TIMES\n    TURN_RIGHT\nEND REPEAT").unwrap(),
        )
        .unwrap();
        let p = rules_decompose("turn right multiple times and then jump", &reg).unwrap();
        assert_eq!(render(&p, Numbering::None), "TURN_RIGHT_MULTIPLE_TIMES\nSPIN_JUMP");
        let p = rules_decompose("Turn right multiple time", &reg).unwrap();
        assert_eq!(render(&p, Numbering::None), "TURN_RIGHT_MULTIPLE_TIMES");
        let p = rules_decompose("do turn right multiple times twice", &reg).unwrap();
        assert_eq!(
            render(&p, Numbering::None),
            "REPEAT 2 TIMES\n    TURN_RIGHT_MULTIPLE_TIMES\nEND REPEAT"
        );
    }

    #[test]
    fn deterministic() {
        let reg = FunctionRegistry::new();
        for text in [
            "go to the chair",
            "if far, then move twice",
            "Turn right multiple times!",
        ] {
            assert_eq!(rules_decompose(text, &reg), rules_decompose(text, &reg));
        }
    }
}
