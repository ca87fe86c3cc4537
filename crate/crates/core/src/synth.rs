//! Synthetic essay corpora with planted evidence.
//!
//! Real graded corpora and the expert word lists are not redistributable,
//! so pipeline validation uses generated ones: a made-up article vocabulary
//! defines topics and examples, each essay plants a known number of
//! evidence mentions, and the score is a clamped function of that count
//! plus optional label noise. A misspelling plan rewrites a fraction of one
//! target word's occurrences, mirroring how students systematically
//! misspell; the label still counts the evidence, so only a fuzzy matcher
//! can recover it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Essay, EssayCollection, GradeBand};
use crate::error::{Error, Result};
use crate::evidence::{Example, ExampleList, Topic, TopicList, WordSet};
use crate::text;

/// Systematic misspelling of one list word.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisspellingPlan {
    /// Fraction of the target word's occurrences written misspelled.
    pub rate: f64,
}

/// Generator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub essays: usize,
    pub topic_count: usize,
    pub examples_per_topic: usize,
    /// Probability that a label moves one step off its true value.
    pub label_noise: f64,
    /// Additional ungraded essays appended to the collection.
    pub ungraded: usize,
    pub misspelling: Option<MisspellingPlan>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            essays: 400,
            topic_count: 4,
            examples_per_topic: 3,
            label_noise: 0.1,
            ungraded: 0,
            misspelling: None,
            seed: 0,
        }
    }
}

/// A generated corpus with its lists and the planted special words.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub collection: EssayCollection,
    pub topics: TopicList,
    pub examples: ExampleList,
    /// The word subject to misspelling, when a plan was set.
    pub target_word: Option<String>,
    pub misspelled_form: Option<String>,
    /// A frequent filler word that never co-occurs with evidence; a sound
    /// fuzzy matcher must not match it against list words.
    pub unrelated_word: String,
    /// Planted example count per graded essay, by essay id.
    pub planted_counts: std::collections::BTreeMap<String, usize>,
}

const GLUE: [&str; 8] = ["the", "and", "was", "has", "they", "their", "more", "with"];

/// Random pronounceable word of at least six letters whose stem collides
/// with nothing generated before.
fn fresh_word(rng: &mut ChaCha8Rng, used_stems: &mut std::collections::HashSet<String>) -> String {
    const CONSONANTS: &[u8] = b"bcdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    loop {
        let syllables = rng.gen_range(3..=4);
        let mut word = String::new();
        for _ in 0..syllables {
            word.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char);
            word.push(VOWELS[rng.gen_range(0..VOWELS.len())] as char);
        }
        let stem = text::stem(&word);
        if used_stems.insert(stem) {
            return word;
        }
    }
}

/// Misspell by doubling an interior consonant, keeping the stem distinct
/// from every list word's stem.
fn misspell(
    word: &str,
    rng: &mut ChaCha8Rng,
    used_stems: &std::collections::HashSet<String>,
) -> String {
    let bytes = word.as_bytes();
    for _ in 0..50 {
        let at = rng.gen_range(1..bytes.len());
        let mut out = String::with_capacity(word.len() + 1);
        out.push_str(&word[..at]);
        out.push(bytes[at - 1] as char);
        out.push_str(&word[at..]);
        let stem = text::stem(&out);
        if !used_stems.contains(&stem) {
            return out;
        }
    }
    // Fall back to a prefix marker; stems starting differently never collide.
    format!("x{word}")
}

/// Generate a corpus. Deterministic in the seed.
pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    if config.essays == 0 {
        return Err(Error::validation("need at least one essay"));
    }
    if config.topic_count == 0 || config.examples_per_topic == 0 {
        return Err(Error::validation("need at least one topic and example"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut used_stems: std::collections::HashSet<String> =
        GLUE.iter().map(|g| text::stem(g)).collect();

    // Article vocabulary: per topic, two signal words plus per example two
    // detail words (every example also reuses one topic word so topics and
    // examples interlock like a real article).
    let mut topics = Vec::new();
    let mut examples = Vec::new();
    for t in 0..config.topic_count {
        let topic_words: Vec<String> = (0..3).map(|_| fresh_word(&mut rng, &mut used_stems)).collect();
        for e in 0..config.examples_per_topic {
            let detail_a = fresh_word(&mut rng, &mut used_stems);
            let detail_b = fresh_word(&mut rng, &mut used_stems);
            examples.push(Example {
                topic: format!("topic{t}"),
                id: format!("ex{t}_{e}"),
                words: WordSet::from_surfaces(&[
                    detail_a.as_str(),
                    detail_b.as_str(),
                    topic_words[e % topic_words.len()].as_str(),
                ])?,
            });
        }
        topics.push(Topic {
            name: format!("topic{t}"),
            words: WordSet::from_surfaces(
                &topic_words.iter().map(String::as_str).collect::<Vec<_>>(),
            )?,
        });
    }
    let topics = TopicList::new(topics)?;
    let examples = ExampleList::new(examples)?;

    // Fillers: never match list words; one is the designated unrelated word.
    let fillers: Vec<String> = (0..30).map(|_| fresh_word(&mut rng, &mut used_stems)).collect();
    let unrelated_word = fillers[0].clone();

    // The misspelling target is the first detail word of the first example.
    let target_word = config
        .misspelling
        .map(|_| examples.examples[0].words.words[0].norms[0].clone());
    let misspelled_form = target_word
        .as_ref()
        .map(|w| misspell(w, &mut rng, &used_stems));

    let total_examples = examples.len();
    let max_planted = total_examples.min(11);
    let mut essays = Vec::new();
    let mut planted_counts = std::collections::BTreeMap::new();
    let total = config.essays + config.ungraded;
    for i in 0..total {
        let planted = rng.gen_range(0..=max_planted);
        let mut chosen: Vec<usize> = (0..total_examples).collect();
        // Partial Fisher-Yates: the first `planted` entries are the sample.
        for j in 0..planted {
            let swap = rng.gen_range(j..total_examples);
            chosen.swap(j, swap);
        }
        chosen.truncate(planted);
        chosen.sort_unstable();

        let mut sentences: Vec<String> = Vec::new();
        for &e in &chosen {
            let example = &examples.examples[e];
            let mut words: Vec<String> = Vec::new();
            words.push(GLUE[rng.gen_range(0..GLUE.len())].to_string());
            for w in example.words.words.iter().take(2 + rng.gen_range(0..2)) {
                let mut norm = w.norms[0].clone();
                if let (Some(target), Some(missp), Some(plan)) =
                    (&target_word, &misspelled_form, &config.misspelling)
                {
                    if &norm == target && rng.gen::<f64>() < plan.rate {
                        norm = missp.clone();
                    }
                }
                words.push(norm);
            }
            words.push(GLUE[rng.gen_range(0..GLUE.len())].to_string());
            words.push(fillers[rng.gen_range(0..fillers.len())].clone());
            sentences.push(format!("{}.", words.join(" ")));
        }
        // Filler sentences built from fillers only, so the unrelated word
        // lives in contexts disjoint from every list word.
        for _ in 0..rng.gen_range(1..=3) {
            let n = rng.gen_range(4..=7);
            let mut words: Vec<String> = (0..n)
                .map(|_| fillers[rng.gen_range(0..fillers.len())].clone())
                .collect();
            words[0] = unrelated_word.clone();
            sentences.push(format!("{}.", words.join(" ")));
        }
        // Interleave planted and filler sentences.
        sentences.shuffle(&mut rng);

        let noise: i32 = if rng.gen::<f64>() < config.label_noise {
            if rng.gen_bool(0.5) {
                1
            } else {
                -1
            }
        } else {
            0
        };
        let score = (1 + (planted / 3) as i32 + noise).clamp(1, 4) as u8;
        let graded = i < config.essays;
        let id = format!("synth-{i:04}");
        if graded {
            planted_counts.insert(id.clone(), planted);
        }
        essays.push(Essay::new(
            id,
            if i % 2 == 0 {
                GradeBand::Lower
            } else {
                GradeBand::Higher
            },
            graded.then_some(score),
            None,
            sentences.join(" "),
        )?);
    }

    Ok(SynthCorpus {
        collection: EssayCollection::new("synth", essays)?,
        topics,
        examples,
        target_word,
        misspelled_form,
        unrelated_word,
        planted_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Matcher;
    use crate::evidence::{extract_features, WindowConfig};

    #[test]
    fn deterministic_and_sized() {
        let config = SynthConfig {
            essays: 50,
            ungraded: 10,
            seed: 4,
            ..SynthConfig::default()
        };
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a.collection, b.collection);
        assert_eq!(a.collection.len(), 60);
        let (graded, ungraded) = a.collection.partition_graded();
        assert_eq!(graded.len(), 50);
        assert_eq!(ungraded.len(), 10);
    }

    #[test]
    fn planted_evidence_is_recovered_by_exact_matching() {
        let config = SynthConfig {
            essays: 60,
            label_noise: 0.0,
            seed: 9,
            ..SynthConfig::default()
        };
        let corpus = generate(&config).unwrap();
        let matcher = Matcher::exact();
        let window = WindowConfig::default();
        for essay in corpus.collection.iter().take(30) {
            let features = extract_features(
                &essay.text,
                &corpus.topics,
                &corpus.examples,
                &matcher,
                &window,
            );
            let planted = corpus.planted_counts[&essay.id];
            let found: u32 = features.spc.iter().sum();
            assert!(
                found as usize >= planted,
                "essay {} planted {planted}, features found {found}",
                essay.id
            );
            let score = essay.score_rater1.unwrap();
            assert_eq!(score, ((1 + planted / 3).min(4)) as u8);
        }
    }

    #[test]
    fn misspelling_plan_rewrites_some_occurrences() {
        let config = SynthConfig {
            essays: 300,
            misspelling: Some(MisspellingPlan { rate: 0.1 }),
            seed: 21,
            ..SynthConfig::default()
        };
        let corpus = generate(&config).unwrap();
        let target = corpus.target_word.clone().unwrap();
        let missp = corpus.misspelled_form.clone().unwrap();
        assert_ne!(text::stem(&target), text::stem(&missp));
        let mut correct = 0usize;
        let mut wrong = 0usize;
        for essay in corpus.collection.iter() {
            for token in text::tokenize(&essay.text) {
                if token.norm == target {
                    correct += 1;
                }
                if token.norm == missp {
                    wrong += 1;
                }
            }
        }
        assert!(wrong > 0, "no misspelled occurrences generated");
        let rate = wrong as f64 / (correct + wrong) as f64;
        assert!((0.02..=0.3).contains(&rate), "misspelling rate {rate}");
    }

    #[test]
    fn lists_validate_and_interlock() {
        let corpus = generate(&SynthConfig::default()).unwrap();
        corpus.examples.validate_against(&corpus.topics).unwrap();
        assert_eq!(corpus.topics.len(), 4);
        assert_eq!(corpus.examples.len(), 12);
    }
}
