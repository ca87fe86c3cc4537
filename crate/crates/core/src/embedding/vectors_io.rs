//! Reading and writing word vectors in the standard word2vec layouts.
//!
//! Text format: a header line `V d`, then one line per word with the word
//! followed by `d` decimal floats, all space-separated. Binary format: the
//! same ASCII header, then for each word the word bytes, one space, and `d`
//! little-endian f32 values followed by a newline. Each model file gets a
//! JSON metadata sidecar (`<file>.meta.json`) recording algorithm, params,
//! corpus fingerprint, and seed.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint;

use super::{Algorithm, EmbeddingModel, ModelMetadata, Vocabulary};

/// On-disk vector layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorFormat {
    Text,
    Binary,
}

/// Write the model in word2vec text format. Floats use the shortest
/// round-trip decimal form, so save -> load reproduces the vectors exactly.
pub fn save_text(model: &EmbeddingModel, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{} {}", model.vocab().len(), model.dimension())?;
    for i in 0..model.vocab().len() {
        write!(out, "{}", model.vocab().word(i))?;
        for value in model.vector_at(i) {
            write!(out, " {value}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Write the model in word2vec binary format (f32 values).
pub fn save_binary(model: &EmbeddingModel, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{} {}", model.vocab().len(), model.dimension())?;
    for i in 0..model.vocab().len() {
        write!(out, "{} ", model.vocab().word(i))?;
        for value in model.vector_at(i) {
            out.write_all(&(*value as f32).to_le_bytes())?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Load word vectors from a word2vec-format file.
///
/// The resulting model is marked `external`. Words are stored exactly as the
/// file has them (case and symbols included); queries normalize the essay
/// side only, so a case-sensitive file simply leaves cased entries
/// unreachable.
pub fn load_embeddings(path: &Path, format: VectorFormat) -> Result<EmbeddingModel> {
    let shown = path.display().to_string();
    let (words, dimension, vectors) = match format {
        VectorFormat::Text => load_text(path, &shown)?,
        VectorFormat::Binary => load_binary(path, &shown)?,
    };
    let fingerprint = {
        let mut acc = format!("{} {}", words.len(), dimension);
        for w in &words {
            acc.push(' ');
            acc.push_str(w);
        }
        fingerprint::fingerprint_bytes(acc.as_bytes())
    };
    let source = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "external".into());
    let vocab = Vocabulary::from_words(words)?;
    EmbeddingModel::new(
        vocab,
        dimension,
        vectors,
        ModelMetadata {
            algorithm: Algorithm::External,
            params: None,
            corpus_fingerprint: fingerprint,
            seed: 0,
            source,
            epoch_mean_loss: vec![],
        },
    )
}

fn parse_header(line: &str, shown: &str) -> Result<(usize, usize)> {
    let mut parts = line.split_whitespace();
    let v = parts
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::parse(shown, 1, "malformed header: expected `V d`"))?;
    let d = parts
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::parse(shown, 1, "malformed header: expected `V d`"))?;
    if parts.next().is_some() {
        return Err(Error::parse(shown, 1, "malformed header: trailing fields"));
    }
    if d == 0 {
        return Err(Error::parse(shown, 1, "dimension must be >= 1"));
    }
    Ok((v, d))
}

fn load_text(path: &Path, shown: &str) -> Result<(Vec<String>, usize, Vec<f64>)> {
    let mut lines = BufReader::new(std::fs::File::open(path)?).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(shown, 1, "empty file"))??;
    let (v, d) = parse_header(&header, shown)?;
    let mut words = Vec::with_capacity(v);
    let mut vectors = Vec::with_capacity(v * d);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if words.len() == v {
            return Err(Error::parse(
                shown,
                idx + 2,
                format!("header declared {v} words but more rows follow"),
            ));
        }
        let mut parts = line.split_whitespace();
        let word = parts
            .next()
            .ok_or_else(|| Error::parse(shown, idx + 2, "missing word"))?;
        let values: Vec<f64> = parts
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(shown, idx + 2, format!("bad float {s:?}")))
            })
            .collect::<Result<_>>()?;
        if values.len() != d {
            return Err(Error::parse(
                shown,
                idx + 2,
                format!("word {word:?} has {} values, expected {d}", values.len()),
            ));
        }
        words.push(word.to_string());
        vectors.extend(values);
    }
    if words.len() != v {
        return Err(Error::parse(
            shown,
            words.len() + 1,
            format!("header declared {v} words but file has {}", words.len()),
        ));
    }
    Ok((words, d, vectors))
}

fn load_binary(path: &Path, shown: &str) -> Result<(Vec<String>, usize, Vec<f64>)> {
    let mut reader = BufReader::new(std::fs::File::open(path)?);
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header)?;
    let header = String::from_utf8(header)
        .map_err(|_| Error::parse(shown, 1, "header is not ASCII"))?;
    let (v, d) = parse_header(header.trim_end(), shown)?;
    let mut words = Vec::with_capacity(v);
    let mut vectors = Vec::with_capacity(v * d);
    let mut float_buf = vec![0u8; d * 4];
    for row in 0..v {
        let mut word_bytes = Vec::new();
        let read = reader.read_until(b' ', &mut word_bytes)?;
        if read == 0 {
            return Err(Error::parse(
                shown,
                row + 2,
                format!("header declared {v} words but file has {row}"),
            ));
        }
        if word_bytes.last() == Some(&b' ') {
            word_bytes.pop();
        }
        // Skip a stray newline left over from the previous row.
        while word_bytes.first() == Some(&b'\n') {
            word_bytes.remove(0);
        }
        let word = String::from_utf8(word_bytes)
            .map_err(|_| Error::parse(shown, row + 2, "word is not UTF-8"))?;
        reader.read_exact(&mut float_buf).map_err(|_| {
            Error::parse(shown, row + 2, format!("word {word:?} has a truncated vector"))
        })?;
        for chunk in float_buf.chunks_exact(4) {
            let bits = [chunk[0], chunk[1], chunk[2], chunk[3]];
            vectors.push(f64::from(f32::from_le_bytes(bits)));
        }
        words.push(word);
    }
    Ok((words, d, vectors))
}

/// Path of the metadata sidecar for a model file.
pub fn metadata_path(model_path: &Path) -> PathBuf {
    let mut name = model_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".meta.json");
    model_path.with_file_name(name)
}

/// Write the metadata sidecar next to a model file.
pub fn write_metadata(metadata: &ModelMetadata, model_path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(metadata)
        .map_err(|e| Error::Internal(format!("serialize metadata: {e}")))?;
    std::fs::write(metadata_path(model_path), json)?;
    Ok(())
}

/// Read a model's metadata sidecar.
pub fn load_metadata(model_path: &Path) -> Result<ModelMetadata> {
    let path = metadata_path(model_path);
    let json = std::fs::read_to_string(&path)?;
    serde_json::from_str(&json)
        .map_err(|e| Error::parse(path.display().to_string(), 1, e.to_string()))
}
