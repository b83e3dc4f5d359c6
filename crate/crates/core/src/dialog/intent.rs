use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::numbers::extract_number;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Intent {
    Greet,
    AskCapabilities,
    Affirm,
    Deny,
    ReviseChange,
    ReviseAdd,
    ReviseRemove,
    NumberRef(u32),
    Instruction(String),
}

/// Word lists behind [`classify_intent`]. Phrases are matched after the
/// same normalization as utterances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub greeting: Vec<String>,
    pub wake: Vec<String>,
    pub capabilities: Vec<String>,
    pub affirm: Vec<String>,
    pub deny: Vec<String>,
    /// Words allowed around an affirm or deny phrase.
    pub filler: Vec<String>,
    pub change: Vec<String>,
    pub add: Vec<String>,
    pub remove: Vec<String>,
}

static DEFAULT_LEXICON: LazyLock<Lexicon> = LazyLock::new(|| {
    serde_json::from_str(include_str!("../../assets/dialog_lexicon.json")).expect("bundled lexicon parses")
});

impl Default for Lexicon {
    fn default() -> Self {
        DEFAULT_LEXICON.clone()
    }
}

/// Lowercase words with apostrophes removed and other punctuation split off.
fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .replace(['\'', '\u{2019}'], "")
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Token span covered by `phrase` starting at each position.
fn phrase_at(words: &[String], phrase: &[String], at: usize) -> bool {
    words.len() >= at + phrase.len() && words[at..at + phrase.len()] == *phrase
}

/// True when `words` contains at least one of `phrases` and every other
/// word is filler.
fn only_phrases(words: &[String], phrases: &[String], filler: &[String]) -> bool {
    let phrases: Vec<Vec<String>> = phrases.iter().map(|p| tokens(p)).filter(|p| !p.is_empty()).collect();
    let mut covered = vec![false; words.len()];
    let mut any = false;
    for i in 0..words.len() {
        for p in &phrases {
            if phrase_at(words, p, i) {
                any = true;
                covered[i..i + p.len()].iter_mut().for_each(|c| *c = true);
            }
        }
    }
    any && words
        .iter()
        .zip(&covered)
        .all(|(w, c)| *c || filler.iter().any(|f| f == w))
}

fn contains_phrase(words: &[String], phrase: &str) -> bool {
    let p = tokens(phrase);
    !p.is_empty() && (0..words.len()).any(|i| phrase_at(words, &p, i))
}

impl Lexicon {
    /// Classifies one utterance. `expects_number` is set while the dialog
    /// is waiting for a block number.
    pub fn classify(&self, utterance: &str, expects_number: bool) -> Intent {
        let words = tokens(utterance);
        let greets = words.windows(2).any(|w| {
            let (a, b) = (&w[0], &w[1]);
            let pair = |x: &String, y: &String| self.greeting.contains(x) && self.wake.contains(y);
            pair(a, b) || pair(b, a)
        });
        if greets {
            return Intent::Greet;
        }
        if self.capabilities.iter().any(|p| contains_phrase(&words, p)) {
            return Intent::AskCapabilities;
        }
        if expects_number {
            if let Some(n) = extract_number(utterance) {
                return Intent::NumberRef(n);
            }
        }
        if only_phrases(&words, &self.affirm, &self.filler) {
            return Intent::Affirm;
        }
        if only_phrases(&words, &self.deny, &self.filler) {
            return Intent::Deny;
        }
        let has = |list: &[String]| words.iter().any(|w| list.contains(w));
        if has(&self.remove) {
            return Intent::ReviseRemove;
        }
        if has(&self.change) {
            return Intent::ReviseChange;
        }
        if has(&self.add) {
            return Intent::ReviseAdd;
        }
        Intent::Instruction(utterance.trim().to_owned())
    }
}

/// [`Lexicon::classify`] with the bundled word lists.
pub fn classify_intent(utterance: &str, expects_number: bool) -> Intent {
    DEFAULT_LEXICON.classify(utterance, expects_number)
}
