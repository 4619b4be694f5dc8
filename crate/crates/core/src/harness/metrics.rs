//! Evaluation metrics: prediction AUC, concept coverage and squared
//! estimation error.

use crate::cdm::DiagnosisModel;
use crate::diversity::nkc;
use crate::environment::{ConceptGraph, QuestionId, Record};
use crate::error::{MaatError, Result};

/// Rank-based (Mann–Whitney) AUC. Tied scores share their average rank, so
/// a tied positive/negative pair counts one half. `None` when the labels are
/// all of one class.
pub fn auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len(), "one label per score");
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mean_rank = (i + j + 2) as f64 / 2.0;
        rank_sum += mean_rank * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// AUC of the model's predictions at `theta` against `eval` answers.
pub fn auc_informativeness(model: &dyn DiagnosisModel, theta: &[f64], eval: &[Record]) -> Result<Option<f64>> {
    let scores = eval
        .iter()
        .map(|r| model.predict(theta, r.question))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<bool> = eval.iter().map(|r| r.correct).collect();
    Ok(auc(&scores, &labels))
}

/// Share of concepts touched by the tested questions.
pub fn coverage_metric(tested: &[QuestionId], graph: &ConceptGraph) -> f64 {
    nkc(tested, graph)
}

/// Squared L2 error of one examinee.
pub fn squared_error(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    if estimate.len() != reference.len() {
        return Err(MaatError::contract(format!(
            "state of dimension {} compared with reference of dimension {}",
            estimate.len(),
            reference.len()
        )));
    }
    Ok(estimate.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Mean squared L2 error over examinees.
pub fn see_metric(estimates: &[Vec<f64>], references: &[Vec<f64>]) -> Result<f64> {
    if estimates.len() != references.len() || estimates.is_empty() {
        return Err(MaatError::contract("one reference per estimate is required"));
    }
    let total = estimates
        .iter()
        .zip(references)
        .map(|(e, r)| squared_error(e, r))
        .sum::<Result<f64>>()?;
    Ok(total / estimates.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::ConceptId;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairwise(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] && !labels[j] {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_extremes() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]), Some(1.0));
        assert_eq!(auc(&[0.9, 0.8, 0.2], &[false, false, true]), Some(0.0));
        assert_eq!(auc(&[0.5; 6], &[true, false, true, false, false, true]), Some(0.5));
        assert_eq!(auc(&[0.1, 0.2], &[true, true]), None);
    }

    #[test]
    fn auc_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..300 {
            let n = rng.random_range(2..80);
            // coarse scores so ties are common
            let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..8)) / 8.0).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
            match auc(&scores, &labels) {
                Some(v) => assert!((v - pairwise(&scores, &labels)).abs() < 1e-12),
                None => assert!(labels.iter().all(|&l| l) || labels.iter().all(|&l| !l)),
            }
        }
    }

    #[test]
    fn coverage_delegates_to_nkc() {
        let g = ConceptGraph::new(
            4,
            4,
            [(0, 0), (1, 1), (2, 2), (3, 3)].map(|(q, k)| (QuestionId(q), ConceptId(k))),
        )
        .unwrap();
        assert_eq!(coverage_metric(&[QuestionId(1), QuestionId(2)], &g), 0.5);
        assert_eq!(coverage_metric(&[], &g), 0.0);
    }

    #[test]
    fn see_examples() {
        assert_eq!(see_metric(&[vec![0.3]], &[vec![0.3]]).unwrap(), 0.0);
        assert_eq!(
            see_metric(&[vec![1.0], vec![-1.0]], &[vec![0.0], vec![0.0]]).unwrap(),
            1.0
        );
        let v = see_metric(&[vec![1.0, 2.0], vec![0.0, 0.5]], &[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!((v - ((1.0 + 4.0) + (1.0 + 0.25)) / 2.0).abs() < 1e-15);
        assert!(see_metric(&[vec![1.0, 2.0]], &[vec![1.0]]).is_err());
    }
}
