use serde::{Deserialize, Serialize};

use super::{LlmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YesNo {
    Yes,
    No,
}

/// Interpret a yes/no answer.
///
/// Markup and punctuation are ignored and matching is case-insensitive. A
/// leading "yes"/"no" token decides; otherwise the response must contain
/// exactly one of the two tokens.
pub fn parse_yes_no(response: &str) -> Result<YesNo> {
    let lowered = response.to_lowercase();
    let tokens: Vec<&str> = lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect();
    let classify = |t: &str| match t {
        "yes" => Some(YesNo::Yes),
        "no" => Some(YesNo::No),
        _ => None,
    };
    if let Some(first) = tokens.first().and_then(|t| classify(t)) {
        return Ok(first);
    }
    let has_yes = tokens.contains(&"yes");
    let has_no = tokens.contains(&"no");
    match (has_yes, has_no) {
        (true, false) => Ok(YesNo::Yes),
        (false, true) => Ok(YesNo::No),
        _ => Err(LlmError::Ambiguous {
            raw: response.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(parse_yes_no("Yes.").unwrap(), YesNo::Yes);
        assert_eq!(parse_yes_no("no, the emotion is not conveyed").unwrap(), YesNo::No);
        assert!(matches!(parse_yes_no("It depends."), Err(LlmError::Ambiguous { .. })));
    }

    #[test]
    fn markup_and_case() {
        assert_eq!(parse_yes_no("**YES**").unwrap(), YesNo::Yes);
        assert_eq!(parse_yes_no("\"No\"").unwrap(), YesNo::No);
        assert_eq!(parse_yes_no("Answer: yes").unwrap(), YesNo::Yes);
        assert_eq!(parse_yes_no("Yes, but no one would agree").unwrap(), YesNo::Yes);
    }

    #[test]
    fn ambiguous_when_both_or_neither() {
        assert!(parse_yes_no("Maybe yes, maybe no").is_err());
        assert!(parse_yes_no("").is_err());
        assert!(parse_yes_no("nope").is_err());
    }
}
