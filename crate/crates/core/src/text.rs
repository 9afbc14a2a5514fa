//! Tokenization shared by the lexicon scorer, relevance and overlap scores.

use std::collections::BTreeSet;

/// Lowercased alphanumeric words (apostrophes dropped, `-` and `_` split).
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|w| w.replace('\'', "").to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

pub fn token_set(text: &str) -> BTreeSet<String> {
    tokens(text).into_iter().collect()
}

/// |A ∩ B| / |A ∪ B|; 0 when both are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Whether the char at `i` ends a sentence: `.`, `!` or `?` followed by
/// whitespace or the end of the text (so `42.5` stays whole).
fn ends_sentence(chars: &[char], i: usize) -> bool {
    matches!(chars[i], '.' | '!' | '?') && chars.get(i + 1).is_none_or(|c| c.is_whitespace())
}

/// First sentence (up to and including the terminating punctuation).
pub fn first_sentence(text: &str) -> String {
    let chars: Vec<char> = text.trim().chars().collect();
    match (0..chars.len()).find(|&i| ends_sentence(&chars, i)) {
        Some(i) => chars[..=i].iter().collect(),
        None => chars.iter().collect(),
    }
}

/// Splits on sentence terminators and newlines; trims each sentence.
pub fn sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    for (i, &ch) in chars.iter().enumerate() {
        if ch == '\n' {
            push_sentence(&mut out, &mut cur);
            continue;
        }
        cur.push(ch);
        if ends_sentence(&chars, i) {
            push_sentence(&mut out, &mut cur);
        }
    }
    push_sentence(&mut out, &mut cur);
    out
}

fn push_sentence(out: &mut Vec<String>, cur: &mut String) {
    let s = cur.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    cur.clear();
}
