use proptest::prelude::*;

use spark_core::decompose::{Decomposer, FunctionRegistry};
use spark_core::dialog::{converse, Deps, DialogState, Lexicon, Phase, Reply};
use spark_core::interp::execute;
use spark_core::sim::{SimRobot, World};
use spark_core::spl::validate;

const UTTERANCES: [&str; 24] = [
    "Hey Spark!",
    "Hello Sparky",
    "What can you do?",
    "yes",
    "Sure, please.",
    "no",
    "I don't like it.",
    "change",
    "add",
    "remove",
    "1",
    "the second one",
    "99",
    "0",
    "turn right multiple times",
    "jump and lift",
    "go to the chair",
    "do the robot",
    "juggle",
    "Repeat five times!",
    "if far, then move twice",
    "",
    "spin",
    "move left then turn right",
];

struct Session {
    state: DialogState,
    registry: FunctionRegistry,
    robot: SimRobot,
}

impl Session {
    fn new() -> Self {
        Session {
            state: DialogState::new(),
            registry: FunctionRegistry::new(),
            robot: SimRobot::new(World::default_world()),
        }
    }

    fn say(&mut self, decomposer: &Decomposer, lexicon: &Lexicon, text: &str) -> Vec<Reply> {
        let mut deps = Deps {
            decomposer,
            store: &mut self.registry,
            lexicon,
        };
        let robot = &mut self.robot;
        let mut run = |p: &spark_core::Program, reg: &FunctionRegistry| execute(p, robot, reg, Default::default());
        converse(&mut self.state, text, &mut deps, &mut run)
    }
}

fn needs_program(phase: Phase) -> bool {
    !matches!(phase, Phase::Idle | Phase::AwaitInstruction | Phase::DefiningPending)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn dialog_is_total(script in prop::collection::vec(prop::sample::select(&UTTERANCES[..]), 1..40)) {
        let decomposer = Decomposer::rules();
        let lexicon = Lexicon::default();
        let mut s = Session::new();
        for text in script {
            let replies = s.say(&decomposer, &lexicon, text);
            prop_assert!(!replies.is_empty(), "no reply to {text:?} in {:?}", s.state.phase);
            prop_assert!(s.state.phase != Phase::Executing);
            if needs_program(s.state.phase) {
                let program = s.state.current_program.as_ref();
                prop_assert!(program.is_some(), "{:?} without program", s.state.phase);
                let cat = s.state.catalogue(&s.registry);
                prop_assert!(validate(program.unwrap(), &cat).ok());
            }
            if s.state.phase == Phase::DefiningPending {
                prop_assert!(s.state.defining.is_some());
            }
            for entry in s.registry.entries() {
                prop_assert!(validate(&entry.body, &s.registry.catalogue()).ok());
            }
        }
    }

    #[test]
    fn sessions_do_not_interfere(
        a in prop::collection::vec(prop::sample::select(&UTTERANCES[..]), 1..20),
        b in prop::collection::vec(prop::sample::select(&UTTERANCES[..]), 1..20),
    ) {
        let decomposer = Decomposer::rules();
        let lexicon = Lexicon::default();
        let solo = |script: &[&str]| {
            let mut s = Session::new();
            let texts: Vec<Vec<String>> = script
                .iter()
                .map(|t| s.say(&decomposer, &lexicon, t).into_iter().map(|r| r.text).collect())
                .collect();
            (texts, s.state)
        };
        let (want_a, state_a) = solo(&a);
        let (want_b, state_b) = solo(&b);

        let (mut sa, mut sb) = (Session::new(), Session::new());
        let (mut got_a, mut got_b) = (Vec::new(), Vec::new());
        for i in 0..a.len().max(b.len()) {
            if let Some(t) = a.get(i) {
                got_a.push(sa.say(&decomposer, &lexicon, t).into_iter().map(|r| r.text).collect::<Vec<_>>());
            }
            if let Some(t) = b.get(i) {
                got_b.push(sb.say(&decomposer, &lexicon, t).into_iter().map(|r| r.text).collect::<Vec<_>>());
            }
        }
        prop_assert_eq!(got_a, want_a);
        prop_assert_eq!(got_b, want_b);
        prop_assert_eq!(sa.state, state_a);
        prop_assert_eq!(sb.state, state_b);
    }
}

#[test]
fn out_of_range_block_reasks() {
    let decomposer = Decomposer::rules();
    let lexicon = Lexicon::default();
    let mut s = Session::new();
    for t in ["Hey Spark!", "Turn right multiple times!", "no", "yes", "change"] {
        s.say(&decomposer, &lexicon, t);
    }
    for n in ["0", "3", "42", "the tenth one"] {
        let r = s.say(&decomposer, &lexicon, n);
        assert!(
            r[0].text.ends_with("Which block do you want to change?"),
            "{n}: {}",
            r[0].text
        );
        assert!(matches!(s.state.phase, Phase::AwaitBlockNumber { .. }));
    }
}
