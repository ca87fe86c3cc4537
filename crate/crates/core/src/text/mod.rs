//! Tokenization, normalization, sentence splitting, and stemming.
//!
//! All matching elsewhere in the pipeline runs on the output of this module:
//! the rubric matchers compare stems, embedding training and lookup use the
//! normalized (unstemmed) forms so that misspellings stay distinct trainable
//! words.

mod porter;

use serde::{Deserialize, Serialize};

/// One word of an essay, with its normalized and stemmed forms and the byte
/// span of the original surface text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// The surface form as written, including any punctuation.
    pub surface: String,
    /// Lowercased surface with leading/trailing punctuation stripped.
    /// Interior hyphens and apostrophes are kept; never empty.
    pub norm: String,
    /// Suffix-stripped form of `norm`.
    pub stem: String,
    /// Byte offset of the surface form in the source text.
    pub start: usize,
    /// Byte offset one past the end of the surface form.
    pub end: usize,
}

impl Token {
    /// Build a token from a surface form located at `start..end`.
    /// Returns `None` when the surface normalizes to nothing (pure
    /// punctuation), which is not a word.
    pub fn from_surface(surface: &str, start: usize, end: usize) -> Option<Token> {
        let norm = normalize(surface);
        if norm.is_empty() {
            return None;
        }
        let stem = stem(&norm);
        Some(Token {
            surface: surface.to_string(),
            norm,
            stem,
            start,
            end,
        })
    }
}

/// Lowercase and strip leading/trailing non-alphanumeric characters.
/// Numerals are kept: years and counts are evidence too.
pub fn normalize(surface: &str) -> String {
    surface
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// Split text on whitespace into [`Token`]s, in order. Pieces that are pure
/// punctuation are dropped; everything else keeps its byte span so matched
/// evidence can be highlighted in the original essay.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                if let Some(tok) = Token::from_surface(&text[s..i], s, i) {
                    tokens.push(tok);
                }
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        if let Some(tok) = Token::from_surface(&text[s..], s, text.len()) {
            tokens.push(tok);
        }
    }
    tokens
}

/// Split text into sentences on `.`, `!`, or `?` followed by whitespace or
/// end of text. Sentences keep their terminators and trailing whitespace, so
/// for any text containing at least one word the concatenation of the
/// returned sentences is exactly the input. Never returns empty or
/// word-free sentences; all-punctuation text yields none.
pub fn split_sentences(text: &str) -> Vec<&str> {
    fn has_word(s: &str) -> bool {
        s.chars().any(|c| c.is_alphanumeric())
    }

    let bytes = text.as_bytes();
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut seg_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if matches!(bytes[i], b'.' | b'!' | b'?') {
            // Consume the full terminator run; it only ends a sentence when
            // followed by whitespace or end of text (so "3.14" stays whole).
            let mut j = i + 1;
            while j < bytes.len() && matches!(bytes[j], b'.' | b'!' | b'?') {
                j += 1;
            }
            if j >= bytes.len() || bytes[j].is_ascii_whitespace() {
                while j < bytes.len() {
                    let c = text[j..].chars().next().expect("in-bounds char");
                    if !c.is_whitespace() {
                        break;
                    }
                    j += c.len_utf8();
                }
                if has_word(&text[seg_start..j]) {
                    spans.push((seg_start, j));
                    seg_start = j;
                } else if let Some(last) = spans.last_mut() {
                    // Word-free fragment (stray "...") joins its neighbor.
                    last.1 = j;
                    seg_start = j;
                }
                // With no neighbor yet, leave seg_start so the fragment
                // merges into the next sentence instead.
            }
            i = j;
        } else {
            i += 1;
        }
    }
    if seg_start < text.len() {
        if has_word(&text[seg_start..]) {
            spans.push((seg_start, text.len()));
        } else if let Some(last) = spans.last_mut() {
            last.1 = text.len();
        }
    }
    spans.into_iter().map(|(s, e)| &text[s..e]).collect()
}

/// Suffix-strip a normalized word.
///
/// Applies the Porter rule passes repeatedly until the output is stable, so
/// `stem(stem(w)) == stem(w)` always holds and inflection variants of a word
/// land on one attractor form. Words of one or two letters are left alone
/// (the rule tables would reduce "s" to nothing), as are words containing
/// anything but ASCII letters (numerals, hyphenated or apostrophized
/// forms). Irregular conjugations are not unified: `went` stays `went`.
pub fn stem(word: &str) -> String {
    if word.is_empty() || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut current = word.to_string();
    // Each pass either shortens the word or only rewrites y->i, so this
    // terminates in at most len(word) passes.
    while current.len() > 2 {
        let next = porter::porter_pass(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}
