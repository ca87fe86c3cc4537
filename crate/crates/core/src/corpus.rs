//! Essay data model, corpus files, and the stratified three-way split.
//!
//! A corpus is a named, ordered collection of essays. Graded essays carry a
//! 1-4 evidence score from the first rater (and optionally a second rater);
//! ungraded essays are retained because they still enlarge the embedding
//! training text. The split reserves 40% of the graded data for embedding
//! training, 20% for model/threshold selection, and 40% for final testing,
//! stratified per score class.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;
use crate::{SCORE_MAX, SCORE_MIN};

/// Grade band of the student who wrote the essay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradeBand {
    /// Grades 4-6.
    Lower,
    /// Grades 6-8.
    Higher,
}

impl GradeBand {
    pub fn as_str(self) -> &'static str {
        match self {
            GradeBand::Lower => "lower",
            GradeBand::Higher => "higher",
        }
    }

    pub fn parse(s: &str) -> Result<GradeBand> {
        match s {
            "lower" => Ok(GradeBand::Lower),
            "higher" => Ok(GradeBand::Higher),
            other => Err(Error::validation(format!(
                "unknown grade band {other:?} (expected \"lower\" or \"higher\")"
            ))),
        }
    }
}

/// One student response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Essay {
    pub id: String,
    pub grade_band: GradeBand,
    /// Evidence score from the first rater; evaluation always targets this.
    #[serde(rename = "score1")]
    pub score_rater1: Option<u8>,
    #[serde(rename = "score2")]
    pub score_rater2: Option<u8>,
    pub text: String,
}

impl Essay {
    /// Validate and construct. Scores must lie on the 1-4 rubric scale and
    /// the text must contain something besides whitespace.
    pub fn new(
        id: impl Into<String>,
        grade_band: GradeBand,
        score_rater1: Option<u8>,
        score_rater2: Option<u8>,
        text: impl Into<String>,
    ) -> Result<Essay> {
        let essay = Essay {
            id: id.into(),
            grade_band,
            score_rater1,
            score_rater2,
            text: text.into(),
        };
        essay.validate()?;
        Ok(essay)
    }

    fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::validation("essay id is empty"));
        }
        for (which, score) in [("score1", self.score_rater1), ("score2", self.score_rater2)] {
            if let Some(s) = score {
                if !(SCORE_MIN..=SCORE_MAX).contains(&s) {
                    return Err(Error::validation(format!(
                        "essay {:?}: {which} is {s}, outside the rubric scale {SCORE_MIN}..{SCORE_MAX}",
                        self.id
                    )));
                }
            }
        }
        if self.text.trim().is_empty() {
            return Err(Error::validation(format!(
                "essay {:?}: text is empty",
                self.id
            )));
        }
        Ok(())
    }

    /// Whether the first rater graded this essay.
    pub fn is_graded(&self) -> bool {
        self.score_rater1.is_some()
    }
}

/// An ordered, id-unique collection of essays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssayCollection {
    pub name: String,
    pub essays: Vec<Essay>,
}

impl EssayCollection {
    pub fn new(name: impl Into<String>, essays: Vec<Essay>) -> Result<EssayCollection> {
        let collection = EssayCollection {
            name: name.into(),
            essays,
        };
        let mut seen = HashSet::new();
        for essay in &collection.essays {
            essay.validate()?;
            if !seen.insert(essay.id.as_str()) {
                return Err(Error::validation(format!(
                    "duplicate essay id {:?} in collection {:?}",
                    essay.id, collection.name
                )));
            }
        }
        Ok(collection)
    }

    pub fn len(&self) -> usize {
        self.essays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.essays.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Essay> {
        self.essays.iter()
    }

    /// Split into (graded, ungraded) by presence of the first rater's score.
    pub fn partition_graded(&self) -> (EssayCollection, EssayCollection) {
        let (graded, ungraded): (Vec<Essay>, Vec<Essay>) = self
            .essays
            .iter()
            .cloned()
            .partition(|essay| essay.is_graded());
        (
            EssayCollection {
                name: self.name.clone(),
                essays: graded,
            },
            EssayCollection {
                name: format!("{}-ungraded", self.name),
                essays: ungraded,
            },
        )
    }

    /// Count of essays per score class 1..=4 (first rater).
    pub fn class_counts(&self) -> BTreeMap<u8, usize> {
        let mut counts = BTreeMap::new();
        for essay in &self.essays {
            if let Some(score) = essay.score_rater1 {
                *counts.entry(score).or_insert(0) += 1;
            }
        }
        counts
    }
}

/// Corpus file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    /// UTF-8 CSV with header `id,grade_band,score1,score2,text`; the text
    /// field is quoted, empty score fields mean ungraded.
    Delimited,
    /// One JSON record per line with the same five fields.
    RecordPerLine,
}

/// Specification of the embed/dev/test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fractions for (embedding-train, dev, test); must sum to 1.
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            ratios: [0.40, 0.20, 0.40],
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn new(ratios: [f64; 3], seed: u64) -> Result<SplitSpec> {
        let spec = SplitSpec { ratios, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for r in self.ratios {
            if !(0.0..=1.0).contains(&r) || !r.is_finite() {
                return Err(Error::validation(format!(
                    "split ratio {r} outside [0, 1]"
                )));
            }
        }
        let sum: f64 = self.ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "split ratios sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Load a corpus from disk; the file stem becomes the collection name.
/// Essays without a first-rater score are retained as ungraded.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<EssayCollection> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    let shown = path.display().to_string();
    let essays = match format {
        CorpusFormat::Delimited => load_delimited(path, &shown)?,
        CorpusFormat::RecordPerLine => load_jsonl(path, &shown)?,
    };
    if essays.is_empty() {
        return Err(Error::EmptyInput(format!("corpus file {shown} has no records")));
    }
    EssayCollection::new(name, essays)
}

const HEADER: [&str; 5] = ["id", "grade_band", "score1", "score2", "text"];

fn parse_score(field: &str, id: &str, which: &str) -> Result<Option<u8>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    let value: i64 = field.parse().map_err(|_| {
        Error::validation(format!("essay {id:?}: {which} {field:?} is not an integer"))
    })?;
    if !(i64::from(SCORE_MIN)..=i64::from(SCORE_MAX)).contains(&value) {
        return Err(Error::validation(format!(
            "essay {id:?}: {which} is {value}, outside the rubric scale {SCORE_MIN}..{SCORE_MAX}"
        )));
    }
    Ok(Some(value as u8))
}

fn load_delimited(path: &Path, shown: &str) -> Result<Vec<Essay>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::parse(shown, 1, e.to_string()))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| Error::parse(shown, 1, e.to_string()))?;
        let got: Vec<&str> = headers.iter().map(str::trim).collect();
        if got != HEADER {
            return Err(Error::parse(
                shown,
                1,
                format!("expected header {:?}, found {:?}", HEADER.join(","), got.join(",")),
            ));
        }
    }
    let mut essays = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(0);
            Error::parse(shown, line, e.to_string())
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(0);
        if record.len() != 5 {
            return Err(Error::parse(
                shown,
                line,
                format!("expected 5 fields, found {}", record.len()),
            ));
        }
        let id = record[0].trim().to_string();
        let band = GradeBand::parse(record[1].trim())?;
        let score1 = parse_score(&record[2], &id, "score1")?;
        let score2 = parse_score(&record[3], &id, "score2")?;
        essays.push(Essay::new(id, band, score1, score2, record[4].to_string())?);
    }
    Ok(essays)
}

fn load_jsonl(path: &Path, shown: &str) -> Result<Vec<Essay>> {
    #[derive(Deserialize)]
    struct Record {
        id: String,
        grade_band: String,
        score1: Option<i64>,
        score2: Option<i64>,
        text: String,
    }

    let file = std::fs::File::open(path)?;
    let mut essays = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line)
            .map_err(|e| Error::parse(shown, idx + 1, e.to_string()))?;
        let band = GradeBand::parse(&record.grade_band)?;
        let to_score = |value: Option<i64>, which: &str| -> Result<Option<u8>> {
            match value {
                None => Ok(None),
                Some(v) => parse_score(&v.to_string(), &record.id, which),
            }
        };
        let score1 = to_score(record.score1, "score1")?;
        let score2 = to_score(record.score2, "score2")?;
        essays.push(Essay::new(record.id, band, score1, score2, record.text)?);
    }
    Ok(essays)
}

/// Write a corpus to disk in the given format. `load_corpus` of the result
/// reproduces the collection exactly (the name follows the file stem).
pub fn save_corpus(collection: &EssayCollection, path: &Path, format: CorpusFormat) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        CorpusFormat::Delimited => {
            writeln!(out, "{}", HEADER.join(","))?;
            for essay in &collection.essays {
                let score = |s: Option<u8>| s.map(|v| v.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    csv_field(&essay.id, false),
                    essay.grade_band.as_str(),
                    score(essay.score_rater1),
                    score(essay.score_rater2),
                    csv_field(&essay.text, true),
                )?;
            }
        }
        CorpusFormat::RecordPerLine => {
            for essay in &collection.essays {
                let json = serde_json::to_string(essay)
                    .map_err(|e| Error::Internal(format!("serialize essay: {e}")))?;
                writeln!(out, "{json}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Quote a CSV field; the text column is always quoted, others only when
/// they contain a delimiter, quote, or newline.
fn csv_field(value: &str, force_quote: bool) -> String {
    let needs_quote =
        force_quote || value.contains(',') || value.contains('"') || value.contains('\n');
    if needs_quote {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

/// Allocate `n` items across three parts by largest remainder: floor each
/// share, then hand out the shortfall in order of descending fractional
/// remainder, ties to the earlier part.
fn largest_remainder(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let mut alloc = [0usize; 3];
    let mut remainders = [0f64; 3];
    let mut assigned = 0;
    for (i, r) in ratios.iter().enumerate() {
        let share = n as f64 * r;
        alloc[i] = share.floor() as usize;
        remainders[i] = share - share.floor();
        assigned += alloc[i];
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        remainders[b]
            .partial_cmp(&remainders[a])
            .expect("finite remainders")
            .then(a.cmp(&b))
    });
    for &part in order.iter().take(n.saturating_sub(assigned)) {
        alloc[part] += 1;
    }
    alloc
}

/// Stratified split into (embedding-train, dev, test).
///
/// Every essay must be graded by the first rater. Within each score class
/// the members are shuffled by the spec's seed and dealt to the parts by
/// largest-remainder allocation, so per class and part the count differs
/// from `ratio * class_count` by at most one. Parts preserve corpus order.
pub fn stratified_split(
    collection: &EssayCollection,
    spec: &SplitSpec,
) -> Result<(EssayCollection, EssayCollection, EssayCollection)> {
    spec.validate()?;
    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (idx, essay) in collection.essays.iter().enumerate() {
        match essay.score_rater1 {
            Some(score) => by_class.entry(score).or_default().push(idx),
            None => {
                return Err(Error::validation(format!(
                    "essay {:?} is ungraded; the stratified split requires first-rater scores",
                    essay.id
                )))
            }
        }
    }
    if collection.is_empty() {
        return Err(Error::EmptyInput("cannot split an empty collection".into()));
    }

    let nonzero_parts = spec.ratios.iter().filter(|&&r| r > 0.0).count();
    for (&score, members) in &by_class {
        if members.len() < nonzero_parts {
            return Err(Error::validation(format!(
                "score class {score} has only {} essay(s); cannot place one in each of the {nonzero_parts} nonzero parts",
                members.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut parts: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for members in by_class.values() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        let alloc = largest_remainder(shuffled.len(), spec.ratios);
        let mut cursor = 0;
        for (part, &take) in alloc.iter().enumerate() {
            parts[part].extend(&shuffled[cursor..cursor + take]);
            cursor += take;
        }
    }

    let build = |indices: &mut Vec<usize>, suffix: &str| -> EssayCollection {
        indices.sort_unstable();
        EssayCollection {
            name: format!("{}-{suffix}", collection.name),
            essays: indices
                .iter()
                .map(|&i| collection.essays[i].clone())
                .collect(),
        }
    };
    let [mut a, mut b, mut c] = parts;
    Ok((
        build(&mut a, "embed"),
        build(&mut b, "dev"),
        build(&mut c, "test"),
    ))
}

/// Token sequences for embedding training: every essay of the embedding
/// split plus every ungraded essay, normalized forms only, labels dropped.
pub fn embedding_corpus(
    embed_train: &EssayCollection,
    ungraded: &EssayCollection,
) -> Vec<Vec<String>> {
    embed_train
        .iter()
        .chain(ungraded.iter())
        .map(|essay| {
            text::tokenize(&essay.text)
                .into_iter()
                .map(|t| t.norm)
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn essay(id: &str, score: Option<u8>) -> Essay {
        Essay::new(id, GradeBand::Lower, score, None, format!("text of {id}")).unwrap()
    }

    fn collection_with_counts(counts: &[(u8, usize)]) -> EssayCollection {
        let mut essays = Vec::new();
        for &(score, n) in counts {
            for i in 0..n {
                essays.push(essay(&format!("s{score}-{i}"), Some(score)));
            }
        }
        EssayCollection::new("synthetic", essays).unwrap()
    }

    #[test]
    fn essay_rejects_out_of_scale_score() {
        let err = Essay::new("e1", GradeBand::Lower, Some(5), None, "words").unwrap_err();
        assert!(err.to_string().contains("e1"), "{err}");
    }

    #[test]
    fn essay_rejects_blank_text() {
        assert!(Essay::new("e1", GradeBand::Lower, Some(2), None, "   ").is_err());
    }

    #[test]
    fn collection_rejects_duplicate_ids() {
        let essays = vec![essay("dup", Some(1)), essay("dup", Some(2))];
        assert!(EssayCollection::new("c", essays).is_err());
    }

    #[test]
    fn load_counts_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("three.csv");
        std::fs::write(
            &path,
            "id,grade_band,score1,score2,text\n\
             a,lower,1,,\"first essay\"\n\
             b,higher,4,3,\"second, with a comma\"\n\
             c,lower,,,\"ungraded essay\"\n",
        )
        .unwrap();
        let collection = load_corpus(&path, CorpusFormat::Delimited).unwrap();
        assert_eq!(collection.len(), 3);
        assert_eq!(collection.name, "three");
        assert_eq!(collection.essays[2].score_rater1, None);

        let bad = dir.path().join("bad.csv");
        std::fs::write(
            &bad,
            "id,grade_band,score1,score2,text\nnaughty,lower,5,,\"essay\"\n",
        )
        .unwrap();
        let err = load_corpus(&bad, CorpusFormat::Delimited).unwrap_err();
        assert!(err.to_string().contains("naughty"), "{err}");

        let empty = dir.path().join("empty.csv");
        std::fs::write(&empty, "id,grade_band,score1,score2,text\n").unwrap();
        assert!(matches!(
            load_corpus(&empty, CorpusFormat::Delimited),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn load_reports_malformed_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mangled.csv");
        std::fs::write(
            &path,
            "id,grade_band,score1,score2,text\na,lower,1,,\"fine\"\nb,lower,1\n",
        )
        .unwrap();
        let err = load_corpus(&path, CorpusFormat::Delimited).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn split_on_published_class_counts() {
        // Class counts 538/789/512/237; expected part sizes computed by the
        // counting oracle below (per-class largest remainder, ties early).
        let collection = collection_with_counts(&[(1, 538), (2, 789), (3, 512), (4, 237)]);
        let spec = SplitSpec::new([0.4, 0.2, 0.4], 11).unwrap();

        // Counting oracle, independent of the implementation.
        let mut expected = [0usize; 3];
        for &count in &[538usize, 789, 512, 237] {
            let shares: Vec<f64> = spec.ratios.iter().map(|r| count as f64 * r).collect();
            let mut alloc: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
            let mut order: Vec<usize> = (0..3).collect();
            order.sort_by(|&a, &b| {
                let ra = shares[a] - shares[a].floor();
                let rb = shares[b] - shares[b].floor();
                rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
            });
            let shortfall = count - alloc.iter().sum::<usize>();
            for &p in order.iter().take(shortfall) {
                alloc[p] += 1;
            }
            for p in 0..3 {
                expected[p] += alloc[p];
            }
        }
        assert_eq!(expected.iter().sum::<usize>(), 2076);

        let (embed, dev, test) = stratified_split(&collection, &spec).unwrap();
        assert_eq!([embed.len(), dev.len(), test.len()], expected);
        // Frozen oracle outcome for these counts and ratios.
        assert_eq!(expected, [831, 415, 830]);
    }

    #[test]
    fn split_is_deterministic() {
        let collection = collection_with_counts(&[(1, 20), (2, 35), (3, 11), (4, 9)]);
        let spec = SplitSpec::new([0.4, 0.2, 0.4], 99).unwrap();
        let (a1, b1, c1) = stratified_split(&collection, &spec).unwrap();
        let (a2, b2, c2) = stratified_split(&collection, &spec).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        assert_eq!(c1, c2);
    }

    #[test]
    fn split_all_to_first_part() {
        let collection = collection_with_counts(&[(1, 4), (2, 5)]);
        let spec = SplitSpec::new([1.0, 0.0, 0.0], 3).unwrap();
        let (embed, dev, test) = stratified_split(&collection, &spec).unwrap();
        assert_eq!(embed.len(), 9);
        assert!(dev.is_empty());
        assert!(test.is_empty());
    }

    #[test]
    fn split_rejects_tiny_class() {
        let collection = collection_with_counts(&[(1, 10), (2, 2)]);
        let spec = SplitSpec::default();
        let err = stratified_split(&collection, &spec).unwrap_err();
        assert!(err.to_string().contains("score class 2"), "{err}");
    }

    #[test]
    fn split_rejects_ungraded() {
        let essays = vec![essay("a", Some(1)), essay("b", None)];
        let collection = EssayCollection::new("c", essays).unwrap();
        assert!(stratified_split(&collection, &SplitSpec::default()).is_err());
    }

    #[test]
    fn embedding_corpus_counts() {
        let embed = collection_with_counts(&[(1, 3)]);
        let (_, empty) = embed.partition_graded();
        assert_eq!(embedding_corpus(&embed, &empty).len(), 3);
        let ungraded = EssayCollection::new(
            "u",
            vec![essay("u0", None), essay("u1", None)],
        )
        .unwrap();
        assert_eq!(embedding_corpus(&embed, &ungraded).len(), 5);
        let none = EssayCollection::new("none", vec![]).unwrap();
        assert!(embedding_corpus(&none, &none).is_empty());
    }

    #[test]
    fn round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let essays = vec![
            Essay::new("a", GradeBand::Lower, Some(1), Some(2), "plain text").unwrap(),
            Essay::new("b", GradeBand::Higher, Some(4), None, "with \"quotes\", commas").unwrap(),
            Essay::new("c", GradeBand::Lower, None, None, "ungraded here").unwrap(),
        ];
        let original = EssayCollection::new("rt", essays).unwrap();
        for (format, file) in [
            (CorpusFormat::Delimited, "rt.csv"),
            (CorpusFormat::RecordPerLine, "rt.jsonl"),
        ] {
            let path = dir.path().join(file);
            save_corpus(&original, &path, format).unwrap();
            let loaded = load_corpus(&path, format).unwrap();
            assert_eq!(loaded.essays, original.essays, "{format:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn split_parts_partition_the_corpus(
            seed in 0u64..1000,
            counts in proptest::collection::vec(3usize..60, 4),
        ) {
            let spec = SplitSpec::new([0.4, 0.2, 0.4], seed).unwrap();
            let pairs: Vec<(u8, usize)> = counts
                .iter()
                .enumerate()
                .map(|(i, &n)| (i as u8 + 1, n))
                .collect();
            let collection = collection_with_counts(&pairs);
            let (embed, dev, test) = stratified_split(&collection, &spec).unwrap();

            // Disjoint and exhaustive.
            let mut ids: Vec<&str> = embed
                .iter()
                .chain(dev.iter())
                .chain(test.iter())
                .map(|e| e.id.as_str())
                .collect();
            ids.sort_unstable();
            let mut expected: Vec<&str> =
                collection.iter().map(|e| e.id.as_str()).collect();
            expected.sort_unstable();
            prop_assert_eq!(ids, expected);

            // Per-class counts within one of the exact share.
            for (part, ratio) in [(&embed, 0.4), (&dev, 0.2), (&test, 0.4)] {
                let part_counts = part.class_counts();
                for &(class, total) in &pairs {
                    let got = *part_counts.get(&class).unwrap_or(&0) as f64;
                    prop_assert!((got - ratio * total as f64).abs() <= 1.0 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn split_partition_large_random_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let counts: Vec<(u8, usize)> = (1..=4u8)
                .map(|c| (c, rng.gen_range(25..1250)))
                .collect();
            let collection = collection_with_counts(&counts);
            let spec = SplitSpec::new([0.4, 0.2, 0.4], rng.gen()).unwrap();
            let (embed, dev, test) = stratified_split(&collection, &spec).unwrap();
            assert_eq!(embed.len() + dev.len() + test.len(), collection.len());
        }
    }
}
