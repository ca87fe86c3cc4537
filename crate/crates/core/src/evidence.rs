//! Window-based rubric feature extraction.
//!
//! Four interpretable features describe how an essay uses evidence from the
//! source article, all driven by expert-authored word lists:
//!
//! - **NPE** — how many distinct topics the essay mentions. A topic counts
//!   when some token window contains at least two of its words.
//! - **CON** — 1 when fewer than 3 sentences mention any topic word (the
//!   essay lists evidence instead of elaborating), else 0.
//! - **SPC** — per topic, how many distinct examples from the article the
//!   essay mentions; an example counts when some window contains at least
//!   two of its words, and each example counts at most once.
//! - **WOC** — word count.
//!
//! Word equivalence is delegated to a [`Matcher`]: exact stem matching, or
//! stem matching plus embedding similarity above a threshold.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{MatchKind, Matcher};
use crate::error::{Error, Result};
use crate::text::{self, Token};

/// One entry of a crafted word list: the stem it matches on, plus the
/// normalized surface forms that produced it (used for embedding lookups,
/// where misspellings and inflections are distinct vocabulary items).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListWord {
    pub stem: String,
    pub norms: Vec<String>,
}

/// A set of list words, deduplicated by stem, insertion order preserved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSet {
    pub words: Vec<ListWord>,
}

impl WordSet {
    /// Normalize and stem raw surface words into a set. Words that collapse
    /// to the same stem become one entry with several lookup norms.
    pub fn from_surfaces<S: AsRef<str>>(surfaces: &[S]) -> Result<WordSet> {
        let mut words: Vec<ListWord> = Vec::new();
        for surface in surfaces {
            let norm = text::normalize(surface.as_ref());
            if norm.is_empty() {
                return Err(Error::validation(format!(
                    "list word {:?} normalizes to nothing",
                    surface.as_ref()
                )));
            }
            let stem = text::stem(&norm);
            match words.iter_mut().find(|w| w.stem == stem) {
                Some(existing) => {
                    if !existing.norms.contains(&norm) {
                        existing.norms.push(norm);
                    }
                }
                None => words.push(ListWord {
                    stem,
                    norms: vec![norm],
                }),
            }
        }
        Ok(WordSet { words })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// A named topic and the words that signal it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub name: String,
    pub words: WordSet,
}

/// The expert-authored topic word list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicList {
    pub topics: Vec<Topic>,
}

impl TopicList {
    pub fn new(topics: Vec<Topic>) -> Result<TopicList> {
        if topics.is_empty() {
            return Err(Error::validation("topic list has no topics"));
        }
        let mut seen = std::collections::HashSet::new();
        for topic in &topics {
            if topic.words.is_empty() {
                return Err(Error::validation(format!(
                    "topic {:?} has an empty word set",
                    topic.name
                )));
            }
            if !seen.insert(topic.name.as_str()) {
                return Err(Error::validation(format!(
                    "duplicate topic name {:?}",
                    topic.name
                )));
            }
        }
        Ok(TopicList { topics })
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }
}

/// One example from the article: a specific detail under a topic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub topic: String,
    pub id: String,
    pub words: WordSet,
}

/// The expert-authored example list, partitioned by topic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleList {
    pub examples: Vec<Example>,
}

impl ExampleList {
    /// Validate: every example needs at least two distinct stems (a match
    /// requires two word hits), and (topic, id) pairs must be unique.
    pub fn new(examples: Vec<Example>) -> Result<ExampleList> {
        let mut seen = std::collections::HashSet::new();
        for example in &examples {
            if example.words.len() < 2 {
                return Err(Error::validation(format!(
                    "example {}/{} needs at least two distinct words",
                    example.topic, example.id
                )));
            }
            if !seen.insert((example.topic.as_str(), example.id.as_str())) {
                return Err(Error::validation(format!(
                    "duplicate example {}/{}",
                    example.topic, example.id
                )));
            }
        }
        Ok(ExampleList { examples })
    }

    /// Topics in first-appearance order; this fixes the SPC vector layout.
    pub fn topic_order(&self) -> Vec<&str> {
        let mut order = Vec::new();
        for example in &self.examples {
            if !order.contains(&example.topic.as_str()) {
                order.push(example.topic.as_str());
            }
        }
        order
    }

    /// Check that every example's topic exists in the companion topic list.
    pub fn validate_against(&self, topics: &TopicList) -> Result<()> {
        for example in &self.examples {
            if !topics.topics.iter().any(|t| t.name == example.topic) {
                return Err(Error::validation(format!(
                    "example {}/{} references unknown topic {:?}",
                    example.topic, example.id, example.topic
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }
}

/// Sliding window geometry for the matchers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Tokens per window; at least 2, since a match needs two hits.
    pub window_size: usize,
    pub stride: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        // Roughly clause-length; stride 1 keeps the scan order-insensitive.
        WindowConfig {
            window_size: 10,
            stride: 1,
        }
    }
}

impl WindowConfig {
    pub fn new(window_size: usize, stride: usize) -> Result<WindowConfig> {
        if window_size < 2 {
            return Err(Error::validation("window size must be at least 2"));
        }
        if stride < 1 {
            return Err(Error::validation("stride must be at least 1"));
        }
        Ok(WindowConfig {
            window_size,
            stride,
        })
    }
}

/// Contiguous token windows of `cfg.window_size`, advancing by `cfg.stride`.
/// If tokens past the last full window would otherwise go unseen, one final
/// shorter window covers them.
pub fn windows<'a>(tokens: &'a [Token], cfg: &WindowConfig) -> impl Iterator<Item = &'a [Token]> {
    let size = cfg.window_size.max(1);
    let stride = cfg.stride.max(1);
    let len = tokens.len();
    let mut offset = 0;
    let mut done = len == 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        if offset + size <= len {
            let window = &tokens[offset..offset + size];
            if offset + size == len {
                done = true;
            }
            offset += stride;
            Some(window)
        } else if offset < len {
            done = true;
            Some(&tokens[offset..len])
        } else {
            done = true;
            None
        }
    })
}

/// Number of distinct list words matched by at least one token in the
/// window. Repeats of one list word count once.
pub fn window_hits(window: &[Token], words: &WordSet, matcher: &Matcher) -> usize {
    words
        .words
        .iter()
        .filter(|word| window.iter().any(|token| matcher.matches(token, word)))
        .count()
}

/// The extracted rubric feature vector, in fixed order
/// `[NPE, CON, SPC per topic, WOC]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceFeatures {
    pub npe: u32,
    pub con: u8,
    pub spc: Vec<u32>,
    pub woc: u32,
}

impl EvidenceFeatures {
    /// Flatten to the numeric layout described by [`FeatureSchema`].
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 + self.spc.len());
        v.push(f64::from(self.npe));
        v.push(f64::from(self.con));
        v.extend(self.spc.iter().map(|&s| f64::from(s)));
        v.push(f64::from(self.woc));
        v
    }
}

/// Column layout of the feature vector; stored next to trained models so
/// they stay portable across runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<String>,
}

impl FeatureSchema {
    pub fn for_lists(examples: &ExampleList) -> FeatureSchema {
        let mut columns = vec!["npe".to_string(), "con".to_string()];
        columns.extend(
            examples
                .topic_order()
                .iter()
                .map(|topic| format!("spc:{topic}")),
        );
        columns.push("woc".to_string());
        FeatureSchema { columns }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Per-essay cache of the token-type x list-word match relation. Extraction
/// consults the matcher once per distinct (token, word) pair instead of once
/// per window position.
struct MatchTable<'a> {
    /// For each token position, the index of its distinct type.
    type_of_token: Vec<usize>,
    /// matched[type][word_index] for the word set currently loaded.
    words: &'a WordSet,
    matched: Vec<Vec<bool>>,
}

impl<'a> MatchTable<'a> {
    fn build(tokens: &[Token], words: &'a WordSet, matcher: &Matcher) -> MatchTable<'a> {
        let mut type_ids: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        let mut representative: Vec<&Token> = Vec::new();
        let mut type_of_token = Vec::with_capacity(tokens.len());
        for token in tokens {
            let key = (token.norm.as_str(), token.stem.as_str());
            let id = *type_ids.entry(key).or_insert_with(|| {
                representative.push(token);
                representative.len() - 1
            });
            type_of_token.push(id);
        }
        let matched = representative
            .iter()
            .map(|token| {
                words
                    .words
                    .iter()
                    .map(|word| matcher.matches(token, word))
                    .collect()
            })
            .collect();
        MatchTable {
            type_of_token,
            words,
            matched,
        }
    }

    /// Distinct list words matched within `range` of the token stream.
    fn hits_in(&self, range: std::ops::Range<usize>) -> usize {
        (0..self.words.len())
            .filter(|&w| {
                range
                    .clone()
                    .any(|t| self.matched[self.type_of_token[t]][w])
            })
            .count()
    }
}

/// Window offsets in the same geometry as [`windows`].
fn window_ranges(len: usize, cfg: &WindowConfig) -> Vec<std::ops::Range<usize>> {
    let mut ranges = Vec::new();
    let size = cfg.window_size.max(1);
    let stride = cfg.stride.max(1);
    let mut offset = 0;
    while offset + size <= len {
        ranges.push(offset..offset + size);
        if offset + size == len {
            return ranges;
        }
        offset += stride;
    }
    if offset < len {
        ranges.push(offset..len);
    }
    ranges
}

/// NPE: count of topics with at least one window containing two or more of
/// the topic's words. Each topic counts once.
pub fn extract_npe(
    tokens: &[Token],
    topics: &TopicList,
    matcher: &Matcher,
    cfg: &WindowConfig,
) -> u32 {
    let ranges = window_ranges(tokens.len(), cfg);
    topics
        .topics
        .iter()
        .filter(|topic| {
            let table = MatchTable::build(tokens, &topic.words, matcher);
            ranges.iter().any(|r| table.hits_in(r.clone()) >= 2)
        })
        .count() as u32
}

/// Number of sentences mentioning at least one topic word from any topic.
pub fn topic_sentence_count(sentences: &[&str], topics: &TopicList, matcher: &Matcher) -> usize {
    sentences
        .iter()
        .filter(|sentence| {
            let tokens = text::tokenize(sentence);
            tokens.iter().any(|token| {
                topics.topics.iter().any(|topic| {
                    topic
                        .words
                        .words
                        .iter()
                        .any(|word| matcher.matches(token, word))
                })
            })
        })
        .count()
}

/// CON: 1 when fewer than 3 sentences mention a topic word, else 0.
pub fn extract_con(sentences: &[&str], topics: &TopicList, matcher: &Matcher) -> u8 {
    u8::from(topic_sentence_count(sentences, topics, matcher) < 3)
}

/// SPC: per topic (in the example list's topic order), the number of
/// distinct examples with at least one window containing two or more of the
/// example's words. Each example counts at most once.
pub fn extract_spc(
    tokens: &[Token],
    examples: &ExampleList,
    matcher: &Matcher,
    cfg: &WindowConfig,
) -> Vec<u32> {
    let order = examples.topic_order();
    let ranges = window_ranges(tokens.len(), cfg);
    let mut spc = vec![0u32; order.len()];
    for example in &examples.examples {
        let table = MatchTable::build(tokens, &example.words, matcher);
        let mentioned = ranges.iter().any(|r| table.hits_in(r.clone()) >= 2);
        if mentioned {
            let slot = order
                .iter()
                .position(|&t| t == example.topic)
                .expect("topic_order covers every example topic");
            spc[slot] += 1;
        }
    }
    spc
}

/// WOC: the token count.
pub fn extract_woc(tokens: &[Token]) -> u32 {
    tokens.len() as u32
}

/// Extract the full feature vector for one essay text.
pub fn extract_features(
    essay_text: &str,
    topics: &TopicList,
    examples: &ExampleList,
    matcher: &Matcher,
    cfg: &WindowConfig,
) -> EvidenceFeatures {
    let tokens = text::tokenize(essay_text);
    let sentences = text::split_sentences(essay_text);
    EvidenceFeatures {
        npe: extract_npe(&tokens, topics, matcher, cfg),
        con: extract_con(&sentences, topics, matcher),
        spc: extract_spc(&tokens, examples, matcher, cfg),
        woc: extract_woc(&tokens),
    }
}

/// One matched list word inside an evidence window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedWord {
    pub list_stem: String,
    /// Surface form of the essay token that matched.
    pub token: String,
    pub kind: MatchKind,
}

/// An example located in the essay: the first window that mentions it,
/// as a byte span of the original text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleEvidence {
    pub topic: String,
    pub example_id: String,
    pub start: usize,
    pub end: usize,
    pub words: Vec<MatchedWord>,
}

/// Locate every example the essay mentions, reporting the first matching
/// window span and which list words matched (exactly or via embedding).
pub fn find_example_evidence(
    essay_text: &str,
    examples: &ExampleList,
    matcher: &Matcher,
    cfg: &WindowConfig,
) -> Vec<ExampleEvidence> {
    let tokens = text::tokenize(essay_text);
    let mut found = Vec::new();
    for example in &examples.examples {
        for window in windows(&tokens, cfg) {
            let mut words = Vec::new();
            for word in &example.words.words {
                let hit = window
                    .iter()
                    .find_map(|token| matcher.match_kind(token, word).map(|kind| (token, kind)));
                if let Some((token, kind)) = hit {
                    words.push(MatchedWord {
                        list_stem: word.stem.clone(),
                        token: token.surface.clone(),
                        kind,
                    });
                }
            }
            if words.len() >= 2 {
                found.push(ExampleEvidence {
                    topic: example.topic.clone(),
                    example_id: example.id.clone(),
                    start: window.first().map_or(0, |t| t.start),
                    end: window.last().map_or(0, |t| t.end),
                    words,
                });
                break;
            }
        }
    }
    found
}

/// Parse a topic list file: one topic per line, `name: w1 w2 w3 ...`.
/// Blank lines and lines starting with `#` are skipped.
pub fn load_topic_list(path: &Path) -> Result<TopicList> {
    let shown = path.display().to_string();
    let content = std::fs::read_to_string(path)?;
    let mut topics = Vec::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, words) = line.split_once(':').ok_or_else(|| {
            Error::parse(&shown, idx + 1, "expected `topic_name: w1 w2 ...`")
        })?;
        let surfaces: Vec<&str> = words.split_whitespace().collect();
        if surfaces.is_empty() {
            return Err(Error::parse(&shown, idx + 1, "topic has no words"));
        }
        topics.push(Topic {
            name: name.trim().to_string(),
            words: WordSet::from_surfaces(&surfaces)?,
        });
    }
    TopicList::new(topics)
}

/// Write a topic list in the line format [`load_topic_list`] reads.
pub fn save_topic_list(topics: &TopicList, path: &Path) -> Result<()> {
    let mut out = String::new();
    for topic in &topics.topics {
        let words: Vec<&str> = topic
            .words
            .words
            .iter()
            .flat_map(|w| w.norms.iter().map(String::as_str))
            .collect();
        out.push_str(&format!("{}: {}\n", topic.name, words.join(" ")));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write an example list in the line format [`load_example_list`] reads.
pub fn save_example_list(examples: &ExampleList, path: &Path) -> Result<()> {
    let mut out = String::new();
    for example in &examples.examples {
        let words: Vec<&str> = example
            .words
            .words
            .iter()
            .flat_map(|w| w.norms.iter().map(String::as_str))
            .collect();
        out.push_str(&format!(
            "{} | {}: {}\n",
            example.topic,
            example.id,
            words.join(" ")
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parse an example list file: one example per line,
/// `topic_name | example_id: w1 w2 ...`.
pub fn load_example_list(path: &Path) -> Result<ExampleList> {
    let shown = path.display().to_string();
    let content = std::fs::read_to_string(path)?;
    let mut examples = Vec::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (head, words) = line.split_once(':').ok_or_else(|| {
            Error::parse(&shown, idx + 1, "expected `topic | example_id: w1 w2 ...`")
        })?;
        let (topic, example_id) = head.split_once('|').ok_or_else(|| {
            Error::parse(&shown, idx + 1, "expected `topic | example_id` before the colon")
        })?;
        let surfaces: Vec<&str> = words.split_whitespace().collect();
        examples.push(Example {
            topic: topic.trim().to_string(),
            id: example_id.trim().to_string(),
            words: WordSet::from_surfaces(&surfaces)?,
        });
    }
    ExampleList::new(examples)
}
