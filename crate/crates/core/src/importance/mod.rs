//! Per-concept importance weights from Test-Effect embeddings.
//!
//! Questions are embedded by SGNS over answer records ([`sgns`]). A question
//! is dense when its nearest neighbours in that space are close, and a
//! concept's weight is the mean density of its questions.

pub mod sgns;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::environment::{ConceptGraph, ConceptId, IdMaps, QuestionId, Record};
use crate::error::{MaatError, Result};

pub use sgns::{train_embeddings, SgnsConfig, TestEffectEmbedding};

pub const DEFAULT_GAMMA: f64 = 0.1;
pub const DEFAULT_NEIGHBORS: usize = 10;
pub const IMPORTANCE_FILE: &str = "importance.json";

/// Sparse form of the `2|Q|` record encoding: a one-hot question block
/// followed by the same one-hot block when the answer is correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResponseEncoding {
    pub question: QuestionId,
    pub correct: bool,
}

pub fn encode_record(record: &Record) -> ResponseEncoding {
    ResponseEncoding {
        question: record.question,
        correct: record.correct,
    }
}

impl ResponseEncoding {
    pub fn nonzeros(&self, n_questions: usize) -> Vec<usize> {
        let q = self.question.0;
        if self.correct {
            vec![q, n_questions + q]
        } else {
            vec![q]
        }
    }

    pub fn dense(&self, n_questions: usize) -> Vec<f64> {
        let mut x = vec![0.0; 2 * n_questions];
        for i in self.nonzeros(n_questions) {
            x[i] = 1.0;
        }
        x
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(MaatError::contract(format!("gamma must be positive, got {gamma}")))
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn test_effect_similarity(emb: &TestEffectEmbedding, qi: QuestionId, qj: QuestionId, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok((-gamma * distance(emb.vector(qi)?, emb.vector(qj)?)).exp())
}

/// Mean similarity of each vector to its `k_n` nearest other vectors, ties
/// in distance going to the smaller index.
pub fn densities(vectors: &[Vec<f64>], k_n: usize, gamma: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    if k_n == 0 || vectors.len() < k_n + 1 {
        return Err(MaatError::contract(format!(
            "{} questions cannot supply {k_n} neighbours each",
            vectors.len()
        )));
    }
    let mut neighbours: Vec<(f64, usize)> = Vec::with_capacity(vectors.len());
    Ok(vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            neighbours.clear();
            neighbours.extend(
                vectors
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(j, u)| (distance(v, u), j)),
            );
            neighbours.select_nth_unstable_by(k_n - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            neighbours[..k_n]
                .iter()
                .map(|&(dist, _)| (-gamma * dist).exp())
                .sum::<f64>()
                / k_n as f64
        })
        .collect())
}

pub fn test_effect_density(emb: &TestEffectEmbedding, question: QuestionId, k_n: usize, gamma: f64) -> Result<f64> {
    emb.vector(question)?;
    // one row against all others; same rule as `densities`
    let vectors = emb.vectors();
    check_gamma(gamma)?;
    if k_n == 0 || vectors.len() < k_n + 1 {
        return Err(MaatError::contract(format!(
            "{} questions cannot supply {k_n} neighbours",
            vectors.len()
        )));
    }
    let v = &vectors[question.0];
    let mut neighbours: Vec<(f64, usize)> = vectors
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != question.0)
        .map(|(j, u)| (distance(v, u), j))
        .collect();
    neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(neighbours[..k_n]
        .iter()
        .map(|&(dist, _)| (-gamma * dist).exp())
        .sum::<f64>()
        / k_n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceConfig {
    pub gamma: f64,
    pub neighbors: usize,
    pub dim: usize,
    pub seed: u64,
}

/// Weight `w_k > 0` for every concept, indexed by dense concept id.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceTable {
    pub weights: Vec<f64>,
    pub config: ImportanceConfig,
}

#[derive(Serialize, Deserialize)]
struct ImportanceFile {
    config: ImportanceConfig,
    /// Keyed by the concept id of the source dataset.
    weights: BTreeMap<u64, f64>,
}

/// Concept weights as the mean of per-question densities.
pub fn weights_from_densities(graph: &ConceptGraph, density: &[f64]) -> Result<Vec<f64>> {
    if density.len() != graph.n_questions() {
        return Err(MaatError::contract("one density per question is required"));
    }
    graph
        .concepts()
        .map(|k| {
            let qs = graph.questions_of(k);
            if qs.is_empty() {
                return Err(MaatError::contract(format!("concept {k} has no question")));
            }
            let w = qs.iter().map(|q| density[q.0]).sum::<f64>() / qs.len() as f64;
            if w > 0.0 && w.is_finite() {
                Ok(w)
            } else {
                Err(MaatError::contract(format!("weight of concept {k} is {w}")))
            }
        })
        .collect()
}

pub fn compute_importance(
    emb: &TestEffectEmbedding,
    graph: &ConceptGraph,
    k_n: usize,
    gamma: f64,
) -> Result<ImportanceTable> {
    if emb.n_questions != graph.n_questions() {
        return Err(MaatError::contract(format!(
            "embedding covers {} questions, graph has {}",
            emb.n_questions,
            graph.n_questions()
        )));
    }
    let density = densities(&emb.vectors(), k_n, gamma)?;
    Ok(ImportanceTable {
        weights: weights_from_densities(graph, &density)?,
        config: ImportanceConfig {
            gamma,
            neighbors: k_n,
            dim: emb.dim,
            seed: emb.config.seed,
        },
    })
}

impl ImportanceTable {
    /// Equal weights, i.e. plain averaged coverage.
    pub fn uniform(n_concepts: usize) -> Self {
        Self {
            weights: vec![1.0; n_concepts],
            config: ImportanceConfig {
                gamma: DEFAULT_GAMMA,
                neighbors: DEFAULT_NEIGHBORS,
                dim: 0,
                seed: 0,
            },
        }
    }

    pub fn weight(&self, concept: ConceptId) -> Result<f64> {
        self.weights.get(concept.0).copied().ok_or(MaatError::Lookup {
            kind: "concept",
            id: concept.0,
        })
    }

    pub fn save(&self, path: &Path, ids: &IdMaps) -> Result<()> {
        if ids.concepts.len() != self.weights.len() {
            return Err(MaatError::contract("id map does not match the table"));
        }
        let file = ImportanceFile {
            config: self.config,
            weights: ids.concepts.iter().copied().zip(self.weights.iter().copied()).collect(),
        };
        fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path, ids: &IdMaps) -> Result<Self> {
        let file: ImportanceFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        let weights = ids
            .concepts
            .iter()
            .map(|orig| match file.weights.get(orig) {
                Some(&w) if w > 0.0 && w.is_finite() => Ok(w),
                Some(&w) => Err(MaatError::validation(format!("concept {orig} has weight {w}"))),
                None => Err(MaatError::validation(format!(
                    "{} has no weight for concept {orig}",
                    path.display()
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            weights,
            config: file.config,
        })
    }
}
