//! Spoken-number handling: reading "twenty three" or "the second one" as an
//! integer, and spelling integers back out as words.

const UNITS: [&str; 20] = [
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
];

const UNIT_ORDINALS: [&str; 20] = [
    "zeroth",
    "first",
    "second",
    "third",
    "fourth",
    "fifth",
    "sixth",
    "seventh",
    "eighth",
    "ninth",
    "tenth",
    "eleventh",
    "twelfth",
    "thirteenth",
    "fourteenth",
    "fifteenth",
    "sixteenth",
    "seventeenth",
    "eighteenth",
    "nineteenth",
];

const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

const TEN_ORDINALS: [&str; 10] = [
    "",
    "",
    "twentieth",
    "thirtieth",
    "fortieth",
    "fiftieth",
    "sixtieth",
    "seventieth",
    "eightieth",
    "ninetieth",
];

fn unit_value(word: &str) -> Option<u32> {
    UNITS
        .iter()
        .position(|w| *w == word)
        .or_else(|| UNIT_ORDINALS.iter().position(|w| *w == word))
        .map(|i| i as u32)
}

fn tens_value(word: &str) -> Option<(u32, bool)> {
    if let Some(i) = TENS.iter().position(|w| !w.is_empty() && *w == word) {
        return Some((i as u32 * 10, false));
    }
    TEN_ORDINALS
        .iter()
        .position(|w| !w.is_empty() && *w == word)
        .map(|i| (i as u32 * 10, true))
}

fn digit_value(token: &str) -> Option<u32> {
    let digits: String = token.chars().take_while(char::is_ascii_digit).collect();
    if digits.is_empty() {
        return None;
    }
    let suffix = &token[digits.len()..];
    if !matches!(suffix, "" | "st" | "nd" | "rd" | "th") {
        return None;
    }
    digits.parse().ok()
}

/// Finds the first positive number written as digits (`3`, `3rd`), cardinal
/// words (`three`, `twenty three`, `twenty-three`, `one hundred`) or ordinal
/// words (`first`, `twenty second`, `hundredth`). Values above 100 are only
/// recognized as digits.
pub fn extract_number(text: &str) -> Option<u32> {
    let lower = text.to_lowercase();
    let tokens: Vec<&str> = lower
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect();

    let mut i = 0;
    while i < tokens.len() {
        let tok = tokens[i];
        if let Some(n) = digit_value(tok) {
            if n > 0 {
                return Some(n);
            }
        } else if matches!(tok, "hundred" | "hundredth") && i > 0 && tokens[i - 1] == "a" {
            return Some(100);
        } else if let Some((tens, ordinal)) = tens_value(tok) {
            if !ordinal {
                if let Some(unit) = tokens.get(i + 1).and_then(|t| unit_value(t)) {
                    if (1..=9).contains(&unit) {
                        return Some(tens + unit);
                    }
                }
            }
            return Some(tens);
        } else if let Some(unit) = unit_value(tok) {
            if unit == 1 && matches!(tokens.get(i + 1), Some(&"hundred") | Some(&"hundredth")) {
                return Some(100);
            }
            if unit > 0 {
                return Some(unit);
            }
        }
        i += 1;
    }
    None
}

/// Spells a number in English words separated by single spaces, e.g.
/// `23` as `twenty three`.
pub fn number_to_words(n: u64) -> String {
    fn below_thousand(n: u64, out: &mut Vec<String>) {
        let hundreds = n / 100;
        let rest = n % 100;
        if hundreds > 0 {
            out.push(UNITS[hundreds as usize].to_owned());
            out.push("hundred".to_owned());
        }
        if rest >= 20 {
            out.push(TENS[(rest / 10) as usize].to_owned());
            if rest % 10 > 0 {
                out.push(UNITS[(rest % 10) as usize].to_owned());
            }
        } else if rest > 0 {
            out.push(UNITS[rest as usize].to_owned());
        }
    }

    if n == 0 {
        return UNITS[0].to_owned();
    }
    let mut out = Vec::new();
    let mut scales = Vec::new();
    let mut rest = n;
    for name in [
        "",
        "thousand",
        "million",
        "billion",
        "trillion",
        "quadrillion",
        "quintillion",
    ] {
        scales.push((rest % 1000, name));
        rest /= 1000;
        if rest == 0 {
            break;
        }
    }
    for (chunk, name) in scales.into_iter().rev() {
        if chunk == 0 {
            continue;
        }
        below_thousand(chunk, &mut out);
        if !name.is_empty() {
            out.push(name.to_owned());
        }
    }
    out.join(" ")
}
