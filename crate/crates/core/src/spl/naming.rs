use thiserror::Error;

use super::Identifier;
use crate::numbers::number_to_words;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("NAME_UNDERIVABLE: no letters or digits in {0:?}")]
    Underivable(String),
}

/// Derives a program name from the instruction that produced it:
/// `"Let's move right two times!"` becomes `LETS_MOVE_RIGHT_TWO_TIMES`.
///
/// Everything except ASCII letters, digits and whitespace is dropped, and
/// whitespace runs become single underscores. Identifiers cannot hold
/// digits, so digit runs are spelled out (`3` becomes `THREE`).
pub fn instruction_to_name(instruction: &str) -> Result<Identifier, NameError> {
    let mut words: Vec<String> = Vec::new();
    for raw in instruction.split_whitespace() {
        let mut word = String::new();
        let mut digits = String::new();
        let flush = |digits: &mut String, word: &mut String, words: &mut Vec<String>| {
            if digits.is_empty() {
                return;
            }
            if !word.is_empty() {
                words.push(std::mem::take(word));
            }
            let spelled = match digits.parse::<u64>() {
                Ok(n) => number_to_words(n),
                // Too long for u64: spell digit by digit.
                Err(_) => digits
                    .chars()
                    .map(|d| number_to_words(u64::from(d.to_digit(10).unwrap_or(0))))
                    .collect::<Vec<_>>()
                    .join(" "),
            };
            words.extend(spelled.split(' ').map(str::to_uppercase));
            digits.clear();
        };
        for c in raw.chars() {
            if c.is_ascii_digit() {
                digits.push(c);
            } else if c.is_ascii_alphabetic() {
                flush(&mut digits, &mut word, &mut words);
                word.push(c.to_ascii_uppercase());
            }
        }
        flush(&mut digits, &mut word, &mut words);
        if !word.is_empty() {
            words.push(word);
        }
    }
    if words.is_empty() {
        return Err(NameError::Underivable(instruction.to_owned()));
    }
    Ok(Identifier::new(words.join("_")).expect("letters and single underscores"))
}
