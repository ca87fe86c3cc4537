//! Skip-gram and CBOW training with negative sampling.
//!
//! Plain SGD, single-threaded so identical seeds give bitwise-identical
//! models. The learning rate decays linearly over the scheduled token count,
//! negatives are drawn from the unigram distribution raised to 0.75, and
//! frequent words are subsampled. The loss/gradient math lives in small pure
//! functions so tests can check the analytic gradients against finite
//! differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fingerprint;

use super::{Algorithm, EmbeddingModel, ModelMetadata, TrainParams, Vocabulary};

/// Numerically stable `ln(sigmoid(x))`.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Negative-sampling loss for one training event:
/// `-ln s(u_pos . x) - sum_j ln s(-u_neg_j . x)`.
fn event_loss(input: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    let mut loss = -log_sigmoid(dot(positive, input));
    for neg in negatives {
        loss -= log_sigmoid(-dot(neg, input));
    }
    loss
}

/// Gradients of [`event_loss`] with respect to every participating vector.
#[derive(Debug, Clone)]
pub struct EventGradients {
    /// Gradient for the input vector (skip-gram) or the averaged context
    /// (CBOW, before distribution to the context words).
    pub input: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

fn event_gradients(input: &[f64], positive: &[f64], negatives: &[&[f64]]) -> EventGradients {
    let d = input.len();
    let mut d_input = vec![0.0; d];
    let g_pos = sigmoid(dot(positive, input)) - 1.0;
    let d_positive: Vec<f64> = input.iter().map(|&x| g_pos * x).collect();
    for (di, &u) in d_input.iter_mut().zip(positive) {
        *di += g_pos * u;
    }
    let mut d_negatives = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let g = sigmoid(dot(neg, input));
        d_negatives.push(input.iter().map(|&x| g * x).collect());
        for (di, &u) in d_input.iter_mut().zip(*neg) {
            *di += g * u;
        }
    }
    EventGradients {
        input: d_input,
        positive: d_positive,
        negatives: d_negatives,
    }
}

/// Skip-gram event loss: the center word's vector predicts one context word
/// against sampled negatives.
pub fn sg_event_loss(center: &[f64], context_out: &[f64], negatives: &[&[f64]]) -> f64 {
    event_loss(center, context_out, negatives)
}

/// Analytic gradients of [`sg_event_loss`].
pub fn sg_event_gradients(
    center: &[f64],
    context_out: &[f64],
    negatives: &[&[f64]],
) -> EventGradients {
    event_gradients(center, context_out, negatives)
}

/// CBOW event loss: the average of the context vectors predicts the center
/// word against sampled negatives.
pub fn cbow_event_loss(context: &[&[f64]], center_out: &[f64], negatives: &[&[f64]]) -> f64 {
    let mean = average(context);
    event_loss(&mean, center_out, negatives)
}

/// Analytic gradients of [`cbow_event_loss`]. `input` holds the gradient for
/// each individual context vector (the averaged gradient divided by the
/// context count); every context word receives that same vector.
pub fn cbow_event_gradients(
    context: &[&[f64]],
    center_out: &[f64],
    negatives: &[&[f64]],
) -> EventGradients {
    let mean = average(context);
    let mut grads = event_gradients(&mean, center_out, negatives);
    let scale = 1.0 / context.len() as f64;
    for g in &mut grads.input {
        *g *= scale;
    }
    grads
}

fn average(vectors: &[&[f64]]) -> Vec<f64> {
    let d = vectors[0].len();
    let mut mean = vec![0.0; d];
    for v in vectors {
        for (m, &x) in mean.iter_mut().zip(*v) {
            *m += x;
        }
    }
    let scale = 1.0 / vectors.len() as f64;
    for m in &mut mean {
        *m *= scale;
    }
    mean
}

/// Cumulative table for drawing negatives proportional to count^0.75.
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn build(vocab: &Vocabulary) -> NoiseTable {
        let mut cumulative = Vec::with_capacity(vocab.len());
        let mut acc = 0.0;
        for i in 0..vocab.len() {
            acc += (vocab.count(i) as f64).powf(0.75);
            cumulative.push(acc);
        }
        NoiseTable { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let r = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= r)
    }
}

/// Uniform init in [-0.5/d, 0.5/d), matching the reference implementation.
fn init_matrix(rng: &mut ChaCha8Rng, rows: usize, d: usize) -> Vec<f64> {
    (0..rows * d)
        .map(|_| (rng.gen::<f64>() - 0.5) / d as f64)
        .collect()
}

enum Objective {
    SkipGram,
    Cbow,
}

/// Train skip-gram vectors with negative sampling.
pub fn train_skipgram(corpus: &[Vec<String>], params: &TrainParams) -> Result<EmbeddingModel> {
    train(corpus, params, Objective::SkipGram)
}

/// Train CBOW vectors with negative sampling.
pub fn train_cbow(corpus: &[Vec<String>], params: &TrainParams) -> Result<EmbeddingModel> {
    train(corpus, params, Objective::Cbow)
}

fn train(
    corpus: &[Vec<String>],
    params: &TrainParams,
    objective: Objective,
) -> Result<EmbeddingModel> {
    params.validate()?;
    let vocab = Vocabulary::build(corpus, params.min_count)?;
    if vocab.len() < 2 {
        return Err(Error::Degenerate(format!(
            "vocabulary has {} word(s) after min_count filtering; need at least 2",
            vocab.len()
        )));
    }
    let d = params.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // Input vectors random, output vectors zero.
    let mut input = init_matrix(&mut rng, vocab.len(), d);
    let mut output = vec![0.0f64; vocab.len() * d];
    let noise = NoiseTable::build(&vocab);

    // Documents as vocabulary ids, out-of-vocabulary tokens dropped.
    let docs: Vec<Vec<usize>> = corpus
        .iter()
        .map(|doc| doc.iter().filter_map(|w| vocab.index_of(w)).collect())
        .collect();
    let scheduled: u64 =
        (docs.iter().map(|d| d.len() as u64).sum::<u64>()).max(1) * params.epochs as u64;
    let total_count = vocab.total() as f64;

    let mut processed: u64 = 0;
    let mut epoch_mean_loss = Vec::with_capacity(params.epochs);
    let mut negatives_idx: Vec<usize> = Vec::with_capacity(params.negatives);

    for _epoch in 0..params.epochs {
        let mut epoch_loss = 0.0;
        let mut epoch_events: u64 = 0;
        for doc in &docs {
            // Subsample frequent words, then slide the dynamic window over
            // what is left.
            let kept: Vec<usize> = doc
                .iter()
                .copied()
                .filter(|&w| {
                    if params.subsample <= 0.0 {
                        return true;
                    }
                    let frequency = vocab.count(w) as f64 / total_count;
                    let keep = (frequency / params.subsample).sqrt().recip()
                        + params.subsample / frequency;
                    keep >= 1.0 || rng.gen::<f64>() < keep
                })
                .collect();
            for (pos, &center) in kept.iter().enumerate() {
                let lr = params.learning_rate
                    * (1.0 - processed as f64 / (scheduled as f64 + 1.0)).max(1e-4);
                processed += 1;
                let span = rng.gen_range(1..=params.window);
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(kept.len().saturating_sub(1));
                let context: Vec<usize> = (lo..=hi).filter(|&j| j != pos).collect();
                if context.is_empty() {
                    continue;
                }
                match objective {
                    Objective::SkipGram => {
                        for &cpos in &context {
                            let target = kept[cpos];
                            draw_negatives(
                                &noise,
                                &mut rng,
                                params.negatives,
                                target,
                                &mut negatives_idx,
                            );
                            epoch_loss += apply_event(
                                &mut input,
                                &mut output,
                                d,
                                &[center],
                                target,
                                &negatives_idx,
                                lr,
                            );
                            epoch_events += 1;
                        }
                    }
                    Objective::Cbow => {
                        let context_words: Vec<usize> =
                            context.iter().map(|&j| kept[j]).collect();
                        draw_negatives(
                            &noise,
                            &mut rng,
                            params.negatives,
                            center,
                            &mut negatives_idx,
                        );
                        epoch_loss += apply_event(
                            &mut input,
                            &mut output,
                            d,
                            &context_words,
                            center,
                            &negatives_idx,
                            lr,
                        );
                        epoch_events += 1;
                    }
                }
            }
        }
        epoch_mean_loss.push(if epoch_events == 0 {
            0.0
        } else {
            epoch_loss / epoch_events as f64
        });
    }

    let algorithm = match objective {
        Objective::SkipGram => Algorithm::SkipGram,
        Objective::Cbow => Algorithm::Cbow,
    };
    let metadata = ModelMetadata {
        algorithm,
        params: Some(params.clone()),
        corpus_fingerprint: corpus_fingerprint(corpus),
        seed: params.seed,
        source: format!("{algorithm}_d{}_w{}", params.dimension, params.window),
        epoch_mean_loss,
    };
    EmbeddingModel::new(vocab, d, input, metadata)
}

/// Draw negatives from the noise distribution, skipping collisions with the
/// positive target (so an event never contradicts itself).
fn draw_negatives(
    noise: &NoiseTable,
    rng: &mut ChaCha8Rng,
    count: usize,
    target: usize,
    out: &mut Vec<usize>,
) {
    out.clear();
    for _ in 0..count {
        let neg = noise.sample(rng);
        if neg != target {
            out.push(neg);
        }
    }
}

/// Evaluate one event, apply the SGD step, and return the event's loss.
/// `input_rows` is the single center word for skip-gram or the context words
/// for CBOW.
fn apply_event(
    input: &mut [f64],
    output: &mut [f64],
    d: usize,
    input_rows: &[usize],
    positive: usize,
    negatives: &[usize],
    lr: f64,
) -> f64 {
    let row = |m: &[f64], i: usize| m[i * d..(i + 1) * d].to_vec();
    let in_vecs: Vec<Vec<f64>> = input_rows.iter().map(|&i| row(input, i)).collect();
    let in_refs: Vec<&[f64]> = in_vecs.iter().map(|v| v.as_slice()).collect();
    let pos_vec = row(output, positive);
    let neg_vecs: Vec<Vec<f64>> = negatives.iter().map(|&i| row(output, i)).collect();
    let neg_refs: Vec<&[f64]> = neg_vecs.iter().map(|v| v.as_slice()).collect();

    let (loss, grads) = if input_rows.len() == 1 {
        (
            sg_event_loss(&in_refs[0], &pos_vec, &neg_refs),
            sg_event_gradients(&in_refs[0], &pos_vec, &neg_refs),
        )
    } else {
        (
            cbow_event_loss(&in_refs, &pos_vec, &neg_refs),
            cbow_event_gradients(&in_refs, &pos_vec, &neg_refs),
        )
    };

    for &i in input_rows {
        let target = &mut input[i * d..(i + 1) * d];
        for (t, g) in target.iter_mut().zip(&grads.input) {
            *t -= lr * g;
        }
    }
    let target = &mut output[positive * d..(positive + 1) * d];
    for (t, g) in target.iter_mut().zip(&grads.positive) {
        *t -= lr * g;
    }
    for (&i, grad) in negatives.iter().zip(&grads.negatives) {
        let target = &mut output[i * d..(i + 1) * d];
        for (t, g) in target.iter_mut().zip(grad) {
            *t -= lr * g;
        }
    }
    loss
}

fn corpus_fingerprint(corpus: &[Vec<String>]) -> String {
    let mut acc = fingerprint::fnv1a(b"corpus");
    for doc in corpus {
        for word in doc {
            acc ^= fingerprint::fnv1a(word.as_bytes());
            acc = acc.wrapping_mul(0x100000001b3);
        }
        acc = acc.wrapping_mul(0x100000001b3);
    }
    format!("{acc:016x}")
}
