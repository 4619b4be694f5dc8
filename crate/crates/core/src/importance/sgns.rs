//! Skip-gram with negative sampling over answer records.
//!
//! Every record of an examinee is a token `(question, answer)`. A record is a
//! center and the examinee's other records are its contexts. The center
//! vector is the input projection of the record's sparse encoding, so a
//! correct answer adds an answer-specific row on top of the question row.
//! Context vectors are built the same way from a base row and an answer row.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cdm::sigmoid;
use crate::environment::{ExamineeId, QuestionId, Record};
use crate::error::{MaatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgnsConfig {
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Cap on contexts drawn per center record.
    pub max_context: usize,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        Self {
            dim: 20,
            negatives: 10,
            epochs: 5,
            learning_rate: 0.025,
            max_context: 100,
            seed: 42,
        }
    }
}

/// Trained SGNS parameters. All matrices are row-major with `dim` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestEffectEmbedding {
    pub dim: usize,
    pub n_questions: usize,
    /// Input projection: rows `0..n` for the question part of the encoding,
    /// rows `n..2n` for the correct-answer part.
    pub input: Vec<f64>,
    pub context_base: Vec<f64>,
    pub context_answer: Vec<f64>,
    /// Mean per-pair objective of every epoch.
    pub epoch_objectives: Vec<f64>,
    pub config: SgnsConfig,
}

#[inline]
fn row(m: &[f64], i: usize, d: usize) -> &[f64] {
    &m[i * d..(i + 1) * d]
}

#[inline]
fn row_mut(m: &mut [f64], i: usize, d: usize) -> &mut [f64] {
    &mut m[i * d..(i + 1) * d]
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

impl TestEffectEmbedding {
    /// Embedding of `question`: how a correct answer shifts its context vector.
    pub fn vector(&self, question: QuestionId) -> Result<&[f64]> {
        if question.0 >= self.n_questions {
            return Err(MaatError::Lookup {
                kind: "question",
                id: question.0,
            });
        }
        Ok(row(&self.context_answer, question.0, self.dim))
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.context_answer.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    fn center(&self, token: (usize, bool), out: &mut [f64]) {
        let (q, a) = token;
        out.copy_from_slice(row(&self.input, q, self.dim));
        if a {
            let plus = row(&self.input, self.n_questions + q, self.dim);
            out.iter_mut().zip(plus).for_each(|(o, p)| *o += p);
        }
    }

    fn context(&self, token: (usize, bool), out: &mut [f64]) {
        let (q, a) = token;
        out.copy_from_slice(row(&self.context_base, q, self.dim));
        if a {
            let plus = row(&self.context_answer, q, self.dim);
            out.iter_mut().zip(plus).for_each(|(o, p)| *o += p);
        }
    }
}

fn token_index((q, a): (usize, bool)) -> usize {
    2 * q + usize::from(a)
}

fn token_of(i: usize) -> (usize, bool) {
    (i / 2, i % 2 == 1)
}

/// Trains embeddings on `historical` records over a pool of `n_questions`.
pub fn train_embeddings(historical: &[Record], n_questions: usize, cfg: &SgnsConfig) -> Result<TestEffectEmbedding> {
    if cfg.dim < 2 {
        return Err(MaatError::Training {
            hyperparameter: "dim",
            value: cfg.dim as f64,
            message: "embedding dimension must be at least 2".into(),
        });
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(MaatError::Training {
            hyperparameter: "learning_rate",
            value: cfg.learning_rate,
            message: "learning rate must be positive".into(),
        });
    }
    let mut by_examinee: BTreeMap<ExamineeId, Vec<(usize, bool)>> = BTreeMap::new();
    for r in historical {
        if r.question.0 >= n_questions {
            return Err(MaatError::Lookup {
                kind: "question",
                id: r.question.0,
            });
        }
        by_examinee
            .entry(r.examinee)
            .or_default()
            .push((r.question.0, r.correct));
    }
    let skipped = by_examinee.values().filter(|v| v.len() < 2).count();
    if skipped > 0 {
        log::warn!("skipping {skipped} examinees with fewer than 2 records");
    }
    let sequences: Vec<Vec<(usize, bool)>> = by_examinee.into_values().filter(|v| v.len() >= 2).collect();
    if sequences.is_empty() {
        return Err(MaatError::Training {
            hyperparameter: "historical",
            value: 0.0,
            message: "no examinee has two or more records".into(),
        });
    }

    let mut counts = vec![0.0_f64; 2 * n_questions];
    for s in &sequences {
        for &t in s {
            counts[token_index(t)] += 1.0;
        }
    }
    let noise = WeightedIndex::new(counts.iter().map(|c| c.powf(0.75)))
        .map_err(|e| MaatError::contract(format!("negative sampling table: {e}")))?;

    let d = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut emb = TestEffectEmbedding {
        dim: d,
        n_questions,
        input: (0..2 * n_questions * d)
            .map(|_| rng.random_range(-0.5..0.5) / d as f64)
            .collect(),
        context_base: vec![0.0; n_questions * d],
        context_answer: vec![0.0; n_questions * d],
        epoch_objectives: Vec::with_capacity(cfg.epochs),
        config: *cfg,
    };

    let centers_per_epoch: usize = sequences.iter().map(Vec::len).sum();
    let total = (centers_per_epoch * cfg.epochs).max(1) as f64;
    let mut done = 0usize;
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    let mut center = vec![0.0; d];
    let mut ctx = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut targets: Vec<(usize, bool)> = Vec::with_capacity(cfg.negatives + 1);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut objective, mut pairs) = (0.0, 0usize);
        for &s in &order {
            let seq = &sequences[s];
            let n = seq.len();
            for (i, &tok) in seq.iter().enumerate() {
                let lr = cfg.learning_rate * (1.0 - done as f64 / total).max(1e-4);
                done += 1;
                let others: Vec<usize> = if n - 1 > cfg.max_context {
                    let mut picked = index::sample(&mut rng, n - 1, cfg.max_context).into_vec();
                    picked.sort_unstable();
                    picked
                } else {
                    (0..n - 1).collect()
                };
                let (q, a) = tok;
                for j in others {
                    let pos = seq[if j >= i { j + 1 } else { j }];
                    targets.clear();
                    targets.push(pos);
                    let pos_index = token_index(pos);
                    for _ in 0..cfg.negatives {
                        let neg = noise.sample(&mut rng);
                        if neg != pos_index {
                            targets.push(token_of(neg));
                        }
                    }
                    emb.center(tok, &mut center);
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for (k, &target) in targets.iter().enumerate() {
                        let label = if k == 0 { 1.0 } else { 0.0 };
                        emb.context(target, &mut ctx);
                        let score = dot(&center, &ctx);
                        objective += if k == 0 {
                            log_sigmoid(score)
                        } else {
                            log_sigmoid(-score)
                        };
                        let g = lr * (label - sigmoid(score));
                        grad.iter_mut().zip(&ctx).for_each(|(acc, c)| *acc += g * c);
                        let (tq, ta) = target;
                        row_mut(&mut emb.context_base, tq, d)
                            .iter_mut()
                            .zip(&center)
                            .for_each(|(v, c)| *v += g * c);
                        if ta {
                            row_mut(&mut emb.context_answer, tq, d)
                                .iter_mut()
                                .zip(&center)
                                .for_each(|(v, c)| *v += g * c);
                        }
                    }
                    row_mut(&mut emb.input, q, d)
                        .iter_mut()
                        .zip(&grad)
                        .for_each(|(w, g)| *w += g);
                    if a {
                        row_mut(&mut emb.input, n_questions + q, d)
                            .iter_mut()
                            .zip(&grad)
                            .for_each(|(w, g)| *w += g);
                    }
                    pairs += 1;
                }
            }
        }
        let mean = objective / pairs.max(1) as f64;
        if !mean.is_finite() {
            return Err(MaatError::Training {
                hyperparameter: "learning_rate",
                value: cfg.learning_rate,
                message: format!("objective became non-finite in epoch {epoch}"),
            });
        }
        emb.epoch_objectives.push(mean);
    }
    Ok(emb)
}
