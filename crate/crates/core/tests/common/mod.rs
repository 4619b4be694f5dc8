#![allow(dead_code)]

use maat_core::environment::{ConceptGraph, ConceptId, QuestionId};
use rand::seq::index;
use rand::Rng;

/// Random valid graph: every question links 1–3 concepts and every concept
/// has at least one question.
pub fn random_graph(rng: &mut impl Rng, n_q: usize, n_k: usize) -> ConceptGraph {
    let mut links = Vec::new();
    let mut used = vec![false; n_k];
    for q in 0..n_q {
        let degree = rng.random_range(1..=3.min(n_k));
        for k in index::sample(rng, n_k, degree) {
            used[k] = true;
            links.push((QuestionId(q), ConceptId(k)));
        }
    }
    for k in (0..n_k).filter(|&k| !used[k]) {
        links.push((QuestionId(rng.random_range(0..n_q)), ConceptId(k)));
    }
    ConceptGraph::new(n_q, n_k, links).unwrap()
}

pub fn random_weights(rng: &mut impl Rng, n_k: usize) -> Vec<f64> {
    (0..n_k).map(|_| rng.random_range(0.05..2.0)).collect()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            r[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
