//! Proptest strategies for programs, edits and worlds. Enabled by the
//! `testing` feature.

use std::collections::BTreeMap;

use proptest::prelude::*;

use crate::sim::geometry::clearance;
use crate::sim::{Bounds, Posture, RobotState, SimConfig, Tilt, World, WorldObject, WorldState};
use crate::spl::{
    ActionCatalogue, BlockNumbering, Condition, Identifier, Numbering, ObjectLabel, Program, Statement,
    BUILTIN_ACTIONS, DETECTION_LABELS,
};

/// User function names the generated programs may call.
pub const CALLABLE: [&str; 3] = ["DANCE_TWICE", "GO_HOME", "SAY_HI"];

pub const PROGRAM_NAMES: [&str; 4] = ["PROGRAM", "TURN_RIGHT_MULTIPLE_TIMES", "GO_TO_THE_CHAIR", "MY_DANCE"];

/// Built-ins plus every name in [`CALLABLE`].
pub fn catalogue() -> ActionCatalogue {
    let mut cat = ActionCatalogue::builtin();
    for name in CALLABLE {
        cat.declare(Identifier::new(name).expect("valid"));
    }
    cat
}

pub fn arb_label() -> impl Strategy<Value = ObjectLabel> {
    prop::sample::select(&DETECTION_LABELS[..]).prop_map(ObjectLabel::new)
}

pub fn arb_condition() -> impl Strategy<Value = Condition> {
    prop_oneof![
        Just(Condition::Light),
        Just(Condition::Dark),
        Just(Condition::Far),
        Just(Condition::Near),
        arb_label().prop_map(Condition::Found),
    ]
}

pub fn arb_leaf() -> impl Strategy<Value = Statement> {
    let actions: Vec<&str> = BUILTIN_ACTIONS.iter().copied().filter(|a| *a != "FIND").collect();
    prop_oneof![
        6 => prop::sample::select(actions).prop_map(Statement::action),
        2 => arb_label().prop_map(Statement::Find),
        1 => prop::sample::select(&CALLABLE[..]).prop_map(Statement::call),
    ]
}

/// Statements nested at most `depth` blocks deep.
pub fn arb_statement(depth: u32) -> impl Strategy<Value = Statement> {
    arb_leaf().prop_recursive(depth, 24, 4, |inner| {
        let body = prop::collection::vec(inner, 0..4);
        prop_oneof![
            (1u32..=20, body.clone()).prop_map(|(n, b)| Statement::repeat(n, b)),
            (arb_condition(), body.clone()).prop_map(|(c, b)| Statement::if_(c, b)),
            (arb_condition(), body).prop_map(|(c, b)| Statement::while_(c, b)),
        ]
    })
}

/// Non-empty programs of at most 30 rendered lines and nesting depth 4.
pub fn arb_program() -> impl Strategy<Value = Program> {
    (
        prop::sample::select(&PROGRAM_NAMES[..]),
        prop::collection::vec(arb_statement(4), 1..6),
    )
        .prop_map(|(name, stmts)| Program::new(Identifier::new(name).expect("valid"), stmts))
        .prop_filter("at most 30 lines", |p| p.line_count() <= 30)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Edit {
    Change { block: usize, stmt: Statement },
    Add { position: usize, stmt: Statement },
    Delete { block: usize },
}

/// A program together with an edit whose block number is in range.
pub fn arb_program_and_edit() -> impl Strategy<Value = (Program, Edit)> {
    arb_program().prop_flat_map(|p| {
        let edit_max = BlockNumbering::for_program(&p, Numbering::Edit).max_choice();
        let insert_max = BlockNumbering::for_program(&p, Numbering::Insert).max_choice();
        let edit = prop_oneof![
            (1..=edit_max, arb_statement(1)).prop_map(|(block, stmt)| Edit::Change { block, stmt }),
            (1..=insert_max, arb_statement(1)).prop_map(|(position, stmt)| Edit::Add { position, stmt }),
            (1..=edit_max).prop_map(|block| Edit::Delete { block }),
        ];
        (Just(p), edit)
    })
}

fn robot_at(x: f64, y: f64, heading: f64) -> RobotState {
    RobotState {
        x,
        y,
        heading,
        posture: Posture::Standing,
        tilt: Tilt::Neutral,
        found: BTreeMap::new(),
    }
}

/// Rooms of 4 to 10 m a side holding up to eight objects, with the robot
/// placed at least 0.35 m from everything.
pub fn arb_cluttered_world() -> impl Strategy<Value = World> {
    (4.0f64..10.0, 4.0f64..10.0).prop_flat_map(|(w, h)| {
        let obj = (arb_label(), -w / 2.0..w / 2.0, -h / 2.0..h / 2.0, 0.1f64..0.6)
            .prop_map(|(label, x, y, radius)| WorldObject { label, x, y, radius });
        (
            prop::collection::vec(obj, 1..8),
            -w / 2.0..w / 2.0,
            -h / 2.0..h / 2.0,
            0.0f64..360.0,
            0.0f64..=1.0,
        )
            .prop_filter_map(
                "robot too close to something",
                move |(objects, x, y, heading, ambient)| {
                    let bounds = Bounds { w, h };
                    if clearance(&bounds, &objects, x, y) < 0.35 {
                        return None;
                    }
                    let state = WorldState {
                        bounds,
                        ambient,
                        robot: robot_at(x, y, heading),
                        objects,
                    };
                    World::new(state, SimConfig::default()).ok()
                },
            )
    })
}

/// A 10 m square room containing only a chair, anywhere not touching the
/// robot.
pub fn arb_chair_world() -> impl Strategy<Value = World> {
    (
        -4.5f64..4.5,
        -4.5f64..4.5,
        0.1f64..0.5,
        -4.5f64..4.5,
        -4.5f64..4.5,
        0.0f64..360.0,
    )
        .prop_filter_map("chair overlaps robot", |(cx, cy, radius, x, y, heading)| {
            if ((cx - x).powi(2) + (cy - y).powi(2)).sqrt() < radius + 0.35 {
                return None;
            }
            let state = WorldState {
                bounds: Bounds { w: 10.0, h: 10.0 },
                ambient: 0.7,
                robot: robot_at(x, y, heading),
                objects: vec![WorldObject {
                    label: ObjectLabel::new("chair"),
                    x: cx,
                    y: cy,
                    radius,
                }],
            };
            World::new(state, SimConfig::default()).ok()
        })
}

/// Commands for random walks: movement, turns and FIND.
pub fn arb_command() -> impl Strategy<Value = (String, Vec<String>)> {
    prop_oneof![
        3 => Just(("MOVE_FORWARD".to_owned(), vec![])),
        2 => Just(("MOVE_LEFT".to_owned(), vec![])),
        2 => Just(("MOVE_RIGHT".to_owned(), vec![])),
        2 => Just(("TURN_LEFT".to_owned(), vec![])),
        2 => Just(("TURN_RIGHT".to_owned(), vec![])),
        1 => Just(("SPIN_JUMP".to_owned(), vec![])),
        1 => arb_label().prop_map(|l| ("FIND".to_owned(), vec![l.to_string()])),
    ]
}

/// Collapses each line's whitespace runs and trims it.
pub fn normalize_whitespace(text: &str) -> String {
    text.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
}

/// A scripted exchange: blank-line separated turns prefixed `child:` or
/// `spark:`.
#[derive(Debug, Clone, PartialEq)]
pub enum Turn {
    Child(String),
    Spark(String),
}

pub fn parse_transcript(text: &str) -> Vec<Turn> {
    text.split("\n\n")
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            if let Some(rest) = t.strip_prefix("child:") {
                Turn::Child(rest.trim().to_owned())
            } else if let Some(rest) = t.strip_prefix("spark:") {
                Turn::Spark(rest.trim().to_owned())
            } else {
                panic!("turn without speaker: {t:?}")
            }
        })
        .collect()
}

/// Replays `transcript` against a fresh dialog with the rules decomposer and
/// the default world. Returns one message per mismatching system turn.
pub fn replay_transcript(transcript: &str) -> Vec<String> {
    use crate::decompose::{Decomposer, FunctionRegistry};
    use crate::dialog::{converse, Deps, DialogState, Lexicon};
    use crate::interp::execute;
    use crate::sim::SimRobot;

    let decomposer = Decomposer::rules();
    let lexicon = Lexicon::default();
    let mut registry = FunctionRegistry::new();
    let mut state = DialogState::new();
    let mut robot = SimRobot::new(World::default_world());
    let mut pending: Vec<String> = Vec::new();
    let mut problems = Vec::new();

    for turn in parse_transcript(transcript) {
        match turn {
            Turn::Child(text) => {
                if !pending.is_empty() {
                    problems.push(format!("unexpected system turns before {text:?}: {pending:?}"));
                }
                let mut deps = Deps {
                    decomposer: &decomposer,
                    store: &mut registry,
                    lexicon: &lexicon,
                };
                let mut run = |p: &Program, reg: &crate::decompose::FunctionRegistry| {
                    execute(p, &mut robot, reg, Default::default())
                };
                pending = converse(&mut state, &text, &mut deps, &mut run)
                    .into_iter()
                    .map(|r| r.text)
                    .collect();
                pending.reverse();
            }
            Turn::Spark(expected) => match pending.pop() {
                Some(got) if normalize_whitespace(&got) == normalize_whitespace(&expected) => {}
                Some(got) => problems.push(format!("expected {expected:?}, got {got:?}")),
                None => problems.push(format!("expected {expected:?}, got nothing")),
            },
        }
    }
    problems
}
