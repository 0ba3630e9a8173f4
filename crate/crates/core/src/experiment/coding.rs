//! Free-text hypotheses: mapping to catalog rules and correctness coding.

use serde::{Deserialize, Serialize};

use crate::llm::{ChatMessage, LlmClient};
use crate::rule_space::{extensionally_equal, Domain, Rule, RuleTag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Code {
    Correct,
    Incorrect,
    Unparseable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coded {
    pub code: Code,
    /// The model coder failed and the keyword coder answered instead.
    pub fallback: bool,
}

pub enum Coder<'a> {
    Keyword,
    Llm(&'a LlmClient),
}

/// Lowercase words with punctuation turned into spaces, padded so phrases
/// can be matched on word boundaries.
fn normalize(text: &str) -> String {
    let mut spaced = String::with_capacity(text.len());
    for c in text.chars().flat_map(char::to_lowercase) {
        match c {
            '+' => spaced.push_str(" + "),
            c if c.is_alphanumeric() => spaced.push(c),
            _ => spaced.push(' '),
        }
    }
    format!(" {} ", spaced.split_whitespace().collect::<Vec<_>>().join(" "))
}

fn has_any(text: &str, phrases: &[&str]) -> bool {
    phrases.iter().any(|p| text.contains(&format!(" {p} ")))
}

fn has_prefix(text: &str, stems: &[&str]) -> bool {
    text.split(' ').any(|w| stems.iter().any(|s| w.starts_with(s)))
}

const STEP_TWO: &[&str] = &[
    "by 2", "by two", "+ 2", "plus 2", "plus two", "add 2", "add two", "adding 2", "adding two", "2 apart",
    "two apart", "difference of 2", "difference of two", "gap of 2", "gap of two", "step of 2", "steps of 2",
    "consecutive even", "consecutive odd", "skip one", "every other",
];
const SAME_STEP: &[&str] = &[
    "same amount", "same difference", "same gap", "same step", "same interval", "equal steps", "equal gaps",
    "equal difference", "equal differences", "equally spaced", "evenly spaced", "constant difference",
    "constant step", "constant amount", "arithmetic",
];
const SAME_PARITY: &[&str] = &["same parity", "all odd or all even", "all even or all odd", "odd or even", "even or odd"];
const ASCENDING: &[&str] = &["increas", "ascend", "rising", "bigger", "larger", "greater", "higher", "grow"];
const ASCENDING_PHRASES: &[&str] = &["goes up", "go up", "going up", "in order", "low to high", "smallest to largest"];
const SUM: &[&str] = &["sum", "total", "add up", "adds up", "added together"];
/// Constraints no catalog rule captures; with them present an answer is not
/// the plain rule it would otherwise map to.
const UNMAPPED: &[&str] = &["order", "differ"];
const ANY: &[&str] = &["any", "anything", "any three numbers", "no rule", "all sequences", "whatever"];

/// Nearest catalog rule named by a free-text hypothesis, if any keyword fires.
pub fn map_free_text(text: &str) -> Option<RuleTag> {
    let t = normalize(text);
    let even = has_any(&t, &["even", "evens"]);
    let odd = has_any(&t, &["odd", "odds"]);
    let ascending = has_prefix(&t, ASCENDING) || has_any(&t, ASCENDING_PHRASES);
    if has_any(&t, STEP_TWO) {
        return Some(RuleTag::ArithProg2);
    }
    if has_any(&t, SAME_STEP) {
        return Some(RuleTag::ArithProg);
    }
    if has_any(&t, SUM) && (even || odd) {
        return Some(RuleTag::SumEven);
    }
    if has_any(&t, SAME_PARITY) || (even && odd) {
        return Some(RuleTag::SameParity);
    }
    if even && ascending {
        return Some(RuleTag::EvenAscending);
    }
    if has_prefix(&t, UNMAPPED) {
        return None;
    }
    if even {
        return Some(RuleTag::AllEven);
    }
    if ascending {
        return Some(RuleTag::Ascending);
    }
    if has_any(&t, ANY) {
        return Some(RuleTag::Any);
    }
    None
}

/// Keyword coding: correct iff the text maps to a rule extensionally equal to
/// the truth.
pub fn keyword_code(text: &str, true_rule: &Rule, domain: Domain) -> Code {
    if text.trim().is_empty() {
        return Code::Unparseable;
    }
    match map_free_text(text) {
        Some(tag) if extensionally_equal(&tag.into(), true_rule, domain) => Code::Correct,
        _ => Code::Incorrect,
    }
}

fn coding_prompt(true_rule: &Rule) -> String {
    format!(
        "You grade answers from a number-sequence rule discovery task. The hidden rule is: {}. \
         A participant's answer is CORRECT only if it states exactly that rule, with no extra \
         requirement and nothing more general. Reply with one word: CORRECT or INCORRECT.",
        true_rule.describe()
    )
}

fn parse_verdict(reply: &str) -> Option<Code> {
    let up = reply.to_uppercase();
    if up.contains("INCORRECT") {
        Some(Code::Incorrect)
    } else if up.contains("CORRECT") {
        Some(Code::Correct)
    } else {
        None
    }
}

/// Code a stated hypothesis as correct, incorrect or unparseable.
///
/// The model coder falls back to the keyword coder, flagged, when the call
/// fails or the reply has no verdict.
pub fn code_free_text_hypothesis(text: &str, true_rule: &Rule, coder: Coder<'_>, domain: Domain) -> Coded {
    if text.trim().is_empty() {
        return Coded { code: Code::Unparseable, fallback: false };
    }
    match coder {
        Coder::Keyword => Coded { code: keyword_code(text, true_rule, domain), fallback: false },
        Coder::Llm(client) => {
            let messages = [ChatMessage::system(coding_prompt(true_rule)), ChatMessage::user(text)];
            match client.complete(&messages).ok().and_then(|r| parse_verdict(&r)) {
                Some(code) => Coded { code, fallback: false },
                None => {
                    log::warn!("model coder unavailable, using keyword coder");
                    Coded { code: keyword_code(text, true_rule, domain), fallback: true }
                }
            }
        }
    }
}
