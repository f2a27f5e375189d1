//! Skip-gram negative-sampling trainer.
//!
//! Deliberately small: fixed context window, constant learning rate,
//! sequential updates. Input vectors start uniform in ±0.5/dim, output
//! vectors at zero, negatives drawn from the unigram distribution raised
//! to 3/4 — the standard skip-gram setup. The per-pair loss lives in
//! [`pair_loss`] / [`pair_gradients`] so tests can finite-difference it.

use ndarray::Array2;
use rand::Rng;

use crate::corpus::TokenStream;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

use super::WordEmbeddings;

/// Hyperparameters for skip-gram negative-sampling training.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            min_count: 1,
            seed: 0,
        }
    }
}

/// Trained embeddings plus the mean negative-sampling log-loss per epoch.
#[derive(Debug)]
pub struct SgnsOutcome {
    pub embeddings: WordEmbeddings,
    pub epoch_losses: Vec<f64>,
}

/// Train skip-gram embeddings over preprocessed token streams.
pub fn train_sgns(streams: &[TokenStream], cfg: &SgnsConfig) -> Result<SgnsOutcome> {
    if cfg.dim == 0 || cfg.window == 0 || cfg.negatives == 0 {
        return Err(Error::config(
            "sgns: dim, window and negatives must all be at least 1",
        ));
    }
    let vocab = build_vocab(streams, cfg.min_count);
    if vocab.words.is_empty() {
        return Err(Error::data("sgns: corpus has no tokens above min_count"));
    }

    let sentences: Vec<Vec<usize>> = streams
        .iter()
        .map(|s| {
            s.tokens
                .iter()
                .filter_map(|t| vocab.lookup(t))
                .collect::<Vec<_>>()
        })
        .collect();

    let n = vocab.words.len();
    let mut rng = stream_rng(cfg.seed, "sgns");
    let mut input = Array2::<f64>::zeros((n, cfg.dim));
    for v in input.iter_mut() {
        *v = (rng.random::<f64>() - 0.5) / cfg.dim as f64;
    }
    let mut output = Array2::<f64>::zeros((n, cfg.dim));
    let sampler = NegativeSampler::new(&vocab.counts);

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0usize;
        for sentence in &sentences {
            for (pos, &center) in sentence.iter().enumerate() {
                let lo = pos.saturating_sub(cfg.window);
                let hi = (pos + cfg.window + 1).min(sentence.len());
                for ctx_pos in lo..hi {
                    if ctx_pos == pos {
                        continue;
                    }
                    let context = sentence[ctx_pos];
                    let negatives = sampler.draw(cfg.negatives, context, &mut rng);
                    loss_sum += sgd_step(
                        &mut input,
                        &mut output,
                        center,
                        context,
                        &negatives,
                        cfg.lr,
                    );
                    pairs += 1;
                }
            }
        }
        if pairs == 0 {
            return Err(Error::data(
                "sgns: no training pairs (all sentences shorter than 2 tokens)",
            ));
        }
        let mean = loss_sum / pairs as f64;
        if !mean.is_finite() {
            return Err(Error::numeric(format!("sgns: epoch loss {mean}")));
        }
        epoch_losses.push(mean);
    }

    let embeddings = WordEmbeddings::new(vocab.words, input)?;
    Ok(SgnsOutcome {
        embeddings,
        epoch_losses,
    })
}

/// Negative-sampling loss for one (center, context, negatives) triple:
/// `-log σ(u_c·v) - Σ_n log σ(-u_n·v)`.
pub fn pair_loss(v_center: &[f64], u_context: &[f64], u_negatives: &[Vec<f64>]) -> f64 {
    let mut loss = softplus(-dot(v_center, u_context));
    for u_neg in u_negatives {
        loss += softplus(dot(v_center, u_neg));
    }
    loss
}

/// Analytic gradients of [`pair_loss`] with respect to the center input
/// vector, the context output vector and each negative output vector.
pub fn pair_gradients(
    v_center: &[f64],
    u_context: &[f64],
    u_negatives: &[Vec<f64>],
) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let dim = v_center.len();
    let g_pos = sigmoid(dot(v_center, u_context)) - 1.0;
    let mut grad_center: Vec<f64> = u_context.iter().map(|u| g_pos * u).collect();
    let grad_context: Vec<f64> = v_center.iter().map(|v| g_pos * v).collect();
    let mut grad_negatives = Vec::with_capacity(u_negatives.len());
    for u_neg in u_negatives {
        let g_neg = sigmoid(dot(v_center, u_neg));
        for j in 0..dim {
            grad_center[j] += g_neg * u_neg[j];
        }
        grad_negatives.push(v_center.iter().map(|v| g_neg * v).collect());
    }
    (grad_center, grad_context, grad_negatives)
}

fn sgd_step(
    input: &mut Array2<f64>,
    output: &mut Array2<f64>,
    center: usize,
    context: usize,
    negatives: &[usize],
    lr: f64,
) -> f64 {
    let v_center = input.row(center).to_vec();
    let u_context = output.row(context).to_vec();
    let u_negatives: Vec<Vec<f64>> = negatives.iter().map(|&n| output.row(n).to_vec()).collect();

    let loss = pair_loss(&v_center, &u_context, &u_negatives);
    let (g_center, g_context, g_negatives) = pair_gradients(&v_center, &u_context, &u_negatives);

    for (j, g) in g_center.iter().enumerate() {
        input[(center, j)] -= lr * g;
    }
    for (j, g) in g_context.iter().enumerate() {
        output[(context, j)] -= lr * g;
    }
    for (&neg, grads) in negatives.iter().zip(&g_negatives) {
        for (j, g) in grads.iter().enumerate() {
            output[(neg, j)] -= lr * g;
        }
    }
    loss
}

struct Vocab {
    words: Vec<String>,
    counts: Vec<usize>,
    index: std::collections::HashMap<String, usize>,
}

impl Vocab {
    fn lookup(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }
}

/// Count corpus frequencies and keep words with count >= min_count,
/// ordered by descending count then lexicographically for determinism.
fn build_vocab(streams: &[TokenStream], min_count: usize) -> Vocab {
    let mut counts = std::collections::HashMap::<&str, usize>::new();
    for stream in streams {
        for token in &stream.tokens {
            *counts.entry(token).or_default() += 1;
        }
    }
    let mut entries: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count.max(1))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let words: Vec<String> = entries.iter().map(|(w, _)| w.to_string()).collect();
    let counts: Vec<usize> = entries.iter().map(|&(_, c)| c).collect();
    let index = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    Vocab {
        words,
        counts,
        index,
    }
}

/// Draws negatives from the unigram^(3/4) distribution by inverse CDF.
struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    fn new(counts: &[usize]) -> Self {
        let mut cumulative = Vec::with_capacity(counts.len());
        let mut acc = 0.0;
        for &c in counts {
            acc += (c as f64).powf(0.75);
            cumulative.push(acc);
        }
        NegativeSampler { cumulative }
    }

    /// Sample `k` indices, skipping draws that hit the positive context.
    fn draw(&self, k: usize, context: usize, rng: &mut impl Rng) -> Vec<usize> {
        let total = *self.cumulative.last().expect("non-empty vocab");
        let mut drawn = Vec::with_capacity(k);
        while drawn.len() < k {
            let x = rng.random::<f64>() * total;
            let idx = self.cumulative.partition_point(|&c| c <= x);
            let idx = idx.min(self.cumulative.len() - 1);
            if idx != context {
                drawn.push(idx);
            } else if self.cumulative.len() == 1 {
                break;
            }
        }
        drawn
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// ln(1 + e^x) without overflow for large |x|.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenStream;

    fn stream(id: usize, tokens: &[&str]) -> TokenStream {
        TokenStream {
            class_id: id,
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
    }

    #[test]
    fn gradients_match_central_differences() {
        // 5-word vocabulary, dim 4: perturb every coordinate of every
        // vector that enters the loss.
        let mut rng = stream_rng(42, "sgns-gradcheck");
        let dim = 4;
        let mut randv = |scale: f64| -> Vec<f64> {
            (0..dim).map(|_| (rng.random::<f64>() - 0.5) * scale).collect()
        };
        let v_center = randv(2.0);
        let u_context = randv(2.0);
        let u_negatives: Vec<Vec<f64>> = (0..3).map(|_| randv(2.0)).collect();

        let (g_center, g_context, g_negatives) =
            pair_gradients(&v_center, &u_context, &u_negatives);

        let h = 1e-5;
        let rel_err = |analytic: f64, numeric: f64| {
            (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
        };
        for j in 0..dim {
            let mut lo = v_center.clone();
            let mut hi = v_center.clone();
            lo[j] -= h;
            hi[j] += h;
            let num = (pair_loss(&hi, &u_context, &u_negatives)
                - pair_loss(&lo, &u_context, &u_negatives))
                / (2.0 * h);
            assert!(rel_err(g_center[j], num) < 1e-4, "center[{j}]");

            let mut lo = u_context.clone();
            let mut hi = u_context.clone();
            lo[j] -= h;
            hi[j] += h;
            let num = (pair_loss(&v_center, &hi, &u_negatives)
                - pair_loss(&v_center, &lo, &u_negatives))
                / (2.0 * h);
            assert!(rel_err(g_context[j], num) < 1e-4, "context[{j}]");
        }
        for (n, grads) in g_negatives.iter().enumerate() {
            for j in 0..dim {
                let mut lo = u_negatives.clone();
                let mut hi = u_negatives.clone();
                lo[n][j] -= h;
                hi[n][j] += h;
                let num = (pair_loss(&v_center, &u_context, &hi)
                    - pair_loss(&v_center, &u_context, &lo))
                    / (2.0 * h);
                assert!(rel_err(grads[j], num) < 1e-4, "negative {n}[{j}]");
            }
        }
    }

    #[test]
    fn rejects_empty_corpus() {
        let err = train_sgns(&[], &SgnsConfig::default()).unwrap_err();
        assert!(err.to_string().contains("no tokens"), "{err}");
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let cfg = SgnsConfig {
            dim: 0,
            ..SgnsConfig::default()
        };
        assert!(train_sgns(&[stream(0, &["a", "b"])], &cfg).is_err());
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let cfg = SgnsConfig {
            dim: 4,
            epochs: 0,
            seed: 3,
            ..SgnsConfig::default()
        };
        let out = train_sgns(&[stream(0, &["a", "b", "a", "b"])], &cfg).unwrap();
        assert!(out.epoch_losses.is_empty());
        // Initialization is bounded by ±0.5/dim.
        for word in out.embeddings.words() {
            for v in out.embeddings.vector(word).unwrap() {
                assert!(v.abs() <= 0.5 / 4.0);
            }
        }
    }

    #[test]
    fn epoch_loss_is_finite_and_non_increasing_early() {
        let tokens: Vec<&str> = ["a", "b"].iter().cycle().take(400).cloned().collect();
        let cfg = SgnsConfig {
            dim: 8,
            window: 1,
            negatives: 2,
            epochs: 3,
            lr: 0.05,
            min_count: 1,
            seed: 11,
        };
        let out = train_sgns(&[stream(0, &tokens)], &cfg).unwrap();
        assert_eq!(out.epoch_losses.len(), 3);
        assert!(out.epoch_losses.iter().all(|l| l.is_finite()));
        assert!(out.epoch_losses[1] <= out.epoch_losses[0]);
        assert!(out.epoch_losses[2] <= out.epoch_losses[1]);
    }

    #[test]
    fn two_word_corpus_predicts_partner() {
        // "a b a b ..." of length 1000: b is trivially a's nearest
        // neighbour in the two-word vocabulary; the run must stay finite.
        let ab: Vec<&str> = ["a", "b"].iter().cycle().take(1000).cloned().collect();
        let cfg = SgnsConfig {
            dim: 8,
            window: 1,
            negatives: 2,
            epochs: 5,
            lr: 0.05,
            min_count: 1,
            seed: 7,
        };
        let out = train_sgns(&[stream(0, &ab)], &cfg).unwrap();
        let emb = &out.embeddings;
        let a = emb.vector("a").unwrap().to_vec();
        let b = emb.vector("b").unwrap().to_vec();
        assert!(cosine(&a, &b).is_finite());
        assert_eq!(emb.vocab_size(), 2);
    }

    #[test]
    fn shared_contexts_make_words_neighbours() {
        // a and b always appear between x and y; c and d between p and q.
        // Words sharing contexts must end up closer to each other than to
        // the other family.
        let fam1: Vec<&str> = ["x", "a", "y", "x", "b", "y"]
            .iter()
            .cycle()
            .take(600)
            .cloned()
            .collect();
        let fam2: Vec<&str> = ["p", "c", "q", "p", "d", "q"]
            .iter()
            .cycle()
            .take(600)
            .cloned()
            .collect();
        let cfg = SgnsConfig {
            dim: 8,
            window: 1,
            negatives: 3,
            epochs: 10,
            lr: 0.05,
            min_count: 1,
            seed: 7,
        };
        let out = train_sgns(&[stream(0, &fam1), stream(1, &fam2)], &cfg).unwrap();
        let emb = &out.embeddings;
        for (word, partner) in [("a", "b"), ("c", "d")] {
            let wv = emb.vector(word).unwrap().to_vec();
            let mut best: Option<(&str, f64)> = None;
            for other in ["a", "b", "c", "d"] {
                if other == word {
                    continue;
                }
                let ov = emb.vector(other).unwrap().to_vec();
                let sim = cosine(&wv, &ov);
                if best.is_none_or(|(_, s)| sim > s) {
                    best = Some((other, sim));
                }
            }
            assert_eq!(best.unwrap().0, partner, "nearest neighbour of {word}");
        }
    }
}
