use serde::{Deserialize, Serialize};

const BANNED_JSON: &str = include_str!("../../data/banned_stems.json");

/// Banned emotion words and the stem prefixes used to catch their forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BannedStems {
    pub words: Vec<String>,
    pub stems: Vec<String>,
}

impl BannedStems {
    pub fn bundled() -> Self {
        serde_json::from_str(BANNED_JSON).expect("bundled stem list is valid")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        let mut s: Self = serde_json::from_str(json)?;
        for stem in &mut s.stems {
            *stem = stem.to_lowercase();
        }
        Ok(s)
    }

    /// Matching stem for a lowercase word token, if any.
    pub fn matching_stem(&self, token: &str) -> Option<&str> {
        self.stems
            .iter()
            .find(|stem| token.starts_with(stem.as_str()))
            .map(String::as_str)
    }

    /// Every word token of `text` that starts with a banned stem.
    pub fn hits(&self, text: &str) -> Vec<BannedHit> {
        word_tokens(text)
            .filter_map(|(pos, word)| {
                let lower = word.to_lowercase();
                self.matching_stem(&lower).map(|_| BannedHit {
                    word: word.to_string(),
                    position: pos,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BannedHit {
    pub word: String,
    /// Byte offset in the appended text.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub original_preserved: bool,
    pub sentence_count: usize,
    pub banned_word_hits: Vec<BannedHit>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn new(original_preserved: bool, sentence_count: usize, banned_word_hits: Vec<BannedHit>) -> Self {
        let passed = original_preserved && (1..=2).contains(&sentence_count) && banned_word_hits.is_empty();
        Self {
            original_preserved,
            sentence_count,
            banned_word_hits,
            passed,
        }
    }

    /// Short failure reasons, empty when passed.
    pub fn failure_reasons(&self) -> Vec<&'static str> {
        let mut reasons = Vec::new();
        if !self.original_preserved {
            reasons.push("original_not_preserved");
        }
        if !(1..=2).contains(&self.sentence_count) {
            reasons.push("sentence_count");
        }
        if !self.banned_word_hits.is_empty() {
            reasons.push("banned_word");
        }
        reasons
    }
}

/// Alphanumeric word tokens with their byte offsets.
fn word_tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            tokens.push((s, &text[s..i]));
        }
    }
    if let Some(s) = start {
        tokens.push((s, &text[s..]));
    }
    tokens.into_iter()
}

/// Count sentences: a run of `.`, `!` or `?` followed by whitespace or the
/// end of text closes a sentence; a trailing unterminated fragment counts as
/// one more. Segments without any alphanumeric character are ignored.
pub fn count_sentences(text: &str) -> usize {
    let mut count = 0;
    let mut has_content = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            while matches!(chars.peek(), Some('.' | '!' | '?')) {
                chars.next();
            }
            let boundary = chars.peek().is_none_or(|n| n.is_whitespace());
            if boundary && has_content {
                count += 1;
                has_content = false;
            }
        } else if c.is_alphanumeric() {
            has_content = true;
        }
    }
    if has_content {
        count += 1;
    }
    count
}

/// Validate appended context against the original post.
pub fn validate_context(original: &str, appended: &str, banned: &BannedStems) -> ValidationReport {
    let candidate = format!("{original} {appended}");
    let original_preserved = !original.trim().is_empty() && candidate.starts_with(original);
    ValidationReport::new(original_preserved, count_sentences(appended), banned.hits(appended))
}

/// Result of separating generated context from an LLM response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub appended: String,
    pub original_preserved: bool,
}

fn strip_quotes(s: &str) -> &str {
    let s = s.trim();
    for (open, close) in [('"', '"'), ('\'', '\''), ('\u{201c}', '\u{201d}')] {
        if s.len() >= 2 && s.starts_with(open) && s.ends_with(close) {
            return s[open.len_utf8()..s.len() - close.len_utf8()].trim();
        }
    }
    s
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn lower_words(s: &str, n: usize) -> Vec<String> {
    word_tokens(s).take(n).map(|(_, w)| w.to_lowercase()).collect()
}

/// Split a generation response into appended context.
///
/// An exact echo of the post (modulo surrounding whitespace/quotes and
/// whitespace runs) yields the remainder as context. A response that opens
/// with the post's first words but then diverges is treated as a rewrite of
/// the post and marked not preserved. Anything else is taken to be context
/// only.
pub fn extract_appended(original: &str, response: &str) -> Extraction {
    let resp = strip_quotes(response);
    let orig = original.trim();
    if let Some(rest) = resp.strip_prefix(orig) {
        return Extraction {
            appended: rest.trim().to_string(),
            original_preserved: true,
        };
    }
    let (resp_n, orig_n) = (collapse_ws(resp), collapse_ws(orig));
    if let Some(rest) = resp_n.strip_prefix(&orig_n) {
        return Extraction {
            appended: rest.trim().to_string(),
            original_preserved: true,
        };
    }
    let lead = lower_words(orig, 3);
    if !lead.is_empty() && lower_words(resp, lead.len()) == lead {
        return Extraction {
            appended: resp.to_string(),
            original_preserved: false,
        };
    }
    Extraction {
        appended: resp.to_string(),
        original_preserved: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn banned() -> BannedStems {
        BannedStems::bundled()
    }

    #[test]
    fn awe_example_passes() {
        let r = validate_context("Wow!!!", "I am truly in awe.", &banned());
        assert!(r.passed);
        assert_eq!(r.sentence_count, 1);
    }

    #[test]
    fn joyful_hits_joy_stem() {
        let r = validate_context("Nice.", "I feel so joyful today.", &banned());
        assert_eq!(r.banned_word_hits.len(), 1);
        assert_eq!(r.banned_word_hits[0].word, "joyful");
        assert_eq!(r.banned_word_hits[0].position, 10);
        assert!(!r.passed);
    }

    #[test]
    fn empty_appended_fails() {
        let r = validate_context("Hello", "", &banned());
        assert_eq!(r.sentence_count, 0);
        assert!(!r.passed);
    }

    #[test]
    fn every_banned_word_is_caught() {
        let b = banned();
        assert_eq!(b.words.len(), 27);
        for w in &b.words {
            assert!(b.matching_stem(w).is_some(), "{w}");
        }
        for form in [
            "Admired",
            "amusing",
            "angrily",
            "annoyed",
            "approves",
            "disapproving",
            "excited",
            "fearful",
            "grateful",
            "grieving",
            "lovely",
            "loving",
            "nervously",
            "optimistic",
            "proud",
            "realized",
            "relieved",
            "sadly",
            "surprising",
            "curious",
            "confused",
            "desirable",
            "embarrassed",
        ] {
            assert!(!b.hits(form).is_empty(), "{form}");
        }
    }

    #[test]
    fn sentence_counting() {
        assert_eq!(count_sentences("One. Two! Three?"), 3);
        assert_eq!(count_sentences("Wow!!!"), 1);
        assert_eq!(count_sentences("It costs 3.5 dollars. Fine"), 2);
        assert_eq!(count_sentences("No terminal punctuation"), 1);
        assert_eq!(count_sentences("   "), 0);
        assert_eq!(count_sentences("e.g. this is one"), 2);
        assert_eq!(count_sentences("... !"), 0);
    }

    #[test]
    fn extraction_of_echoed_response() {
        let original = "What do the [NAME] have to do with it?";
        let context = "I can't help but wonder how they're connected to this situation. Can anyone shed some light on this intriguing aspect?";
        let e = extract_appended(original, &format!("{original} {context}"));
        assert_eq!(e.appended, context);
        assert!(e.original_preserved);
        let quoted = format!("  \"{original}  {context}\" ");
        let e = extract_appended(original, &quoted);
        assert_eq!(e.appended, context);
        assert!(e.original_preserved);
    }

    #[test]
    fn extraction_of_context_only_and_rewrite() {
        let e = extract_appended("Calm down bro", "Everyone needs a breather sometimes.");
        assert_eq!(e.appended, "Everyone needs a breather sometimes.");
        assert!(e.original_preserved);
        let e = extract_appended(
            "Noooo not the booze",
            "Noooo, not the booze. It's just that I would prefer something non-alcoholic to drink.",
        );
        assert!(!e.original_preserved);
    }
}
