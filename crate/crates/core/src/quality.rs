//! Question quality by Expected Model Change.
//!
//! The change a record would cause in the examinee state is approximated by
//! the L2 norm of the loss gradient it induces at the current state, and the
//! expectation is taken under the model's own prediction:
//!
//! ```text
//! EMC(q) = p * ||grad(q, 1)|| + (1 - p) * ||grad(q, 0)||,   p = predict(theta, q)
//! ```

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::cdm::DiagnosisModel;
use crate::environment::QuestionId;
use crate::error::{MaatError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmcScore {
    pub question: QuestionId,
    pub score: f64,
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn expected_model_change(model: &dyn DiagnosisModel, theta: &[f64], question: QuestionId) -> Result<EmcScore> {
    let p = model.predict(theta, question)?;
    let g1 = l2(&model.loss_gradient(theta, question, true)?);
    let g0 = l2(&model.loss_gradient(theta, question, false)?);
    let score = p * g1 + (1.0 - p) * g0;
    if !score.is_finite() {
        return Err(MaatError::contract(format!(
            "non-finite expected model change for question {question}"
        )));
    }
    Ok(EmcScore { question, score })
}

/// Descending score, ascending id on ties.
pub(crate) fn by_score_then_id(a: &EmcScore, b: &EmcScore) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.question.cmp(&b.question))
}

/// EMC of every untested question, sorted by descending score then id.
pub fn rank_by_emc(
    model: &dyn DiagnosisModel,
    theta: &[f64],
    untested: &BTreeSet<QuestionId>,
) -> Result<Vec<EmcScore>> {
    let mut scores = untested
        .iter()
        .map(|&q| expected_model_change(model, theta, q))
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(by_score_then_id);
    Ok(scores)
}

/// The `k_c` untested questions with the largest EMC, best first.
pub fn select_candidates(
    model: &dyn DiagnosisModel,
    theta: &[f64],
    untested: &BTreeSet<QuestionId>,
    k_c: usize,
) -> Result<Vec<QuestionId>> {
    if k_c == 0 {
        return Err(MaatError::contract("candidate set size must be at least 1"));
    }
    if untested.is_empty() {
        return Err(MaatError::contract("no untested question to score"));
    }
    let mut ranked = rank_by_emc(model, theta, untested)?;
    ranked.truncate(k_c);
    Ok(ranked.into_iter().map(|s| s.question).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdm::IrtModel;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn half_at_difficulty_with_unit_discrimination() {
        let m = IrtModel::new(vec![1.0], vec![0.7]).unwrap();
        let s = expected_model_change(&m, &[0.7], QuestionId(0)).unwrap();
        assert_relative_eq!(s.score, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn certain_prediction_scores_zero() {
        let m = IrtModel::new(vec![1.0], vec![0.0]).unwrap();
        let s = expected_model_change(&m, &[60.0], QuestionId(0)).unwrap();
        assert!(s.score < 1e-20);
    }

    fn irt_pool(n: usize, seed: u64) -> IrtModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        IrtModel::new(
            (0..n).map(|_| rng.random_range(0.3..2.5)).collect(),
            (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn top_k_matches_full_sort_of_closed_form() {
        let m = irt_pool(10, 1);
        let theta = [0.25];
        // closed form for 2PL: EMC = 2 a p (1 - p)
        let mut oracle: Vec<(f64, usize)> = (0..10)
            .map(|j| {
                let p = m.prob(theta[0], QuestionId(j)).unwrap();
                (2.0 * m.discrimination[j] * p * (1.0 - p), j)
            })
            .collect();
        oracle.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let pool: BTreeSet<_> = (0..10).map(QuestionId).collect();
        let top = select_candidates(&m, &theta, &pool, 3).unwrap();
        let expect: Vec<_> = oracle[..3].iter().map(|&(_, j)| QuestionId(j)).collect();
        assert_eq!(top, expect);
        assert_eq!(select_candidates(&m, &theta, &pool, 1).unwrap(), vec![expect[0]]);
    }

    #[test]
    fn saturated_candidate_size_returns_whole_pool() {
        let m = irt_pool(7, 2);
        let pool: BTreeSet<_> = [1, 3, 4, 6].into_iter().map(QuestionId).collect();
        let all = select_candidates(&m, &[0.0], &pool, 100).unwrap();
        assert_eq!(all.len(), 4);
        let set: BTreeSet<_> = all.iter().copied().collect();
        assert_eq!(set, pool);
        let scores: Vec<f64> = all
            .iter()
            .map(|&q| expected_model_change(&m, &[0.0], q).unwrap().score)
            .collect();
        assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let m = IrtModel::new(vec![1.0; 4], vec![0.5, -1.0, 0.5, -1.0]).unwrap();
        let pool: BTreeSet<_> = (0..4).map(QuestionId).collect();
        let out = select_candidates(&m, &[0.0], &pool, 4).unwrap();
        assert_eq!(out, vec![QuestionId(0), QuestionId(2), QuestionId(1), QuestionId(3)]);
    }

    #[test]
    fn invalid_inputs() {
        let m = irt_pool(3, 3);
        let pool: BTreeSet<_> = (0..3).map(QuestionId).collect();
        assert!(select_candidates(&m, &[0.0], &pool, 0).is_err());
        assert!(select_candidates(&m, &[0.0], &BTreeSet::new(), 2).is_err());
    }

    #[test]
    fn peaks_near_even_odds_for_equal_discrimination() {
        // questions sharing a = 1.3 at a grid of difficulties; best is closest to theta
        let bs: Vec<f64> = (-20..=20).map(|i| f64::from(i) * 0.1).collect();
        let m = IrtModel::new(vec![1.3; bs.len()], bs.clone()).unwrap();
        let pool: BTreeSet<_> = (0..bs.len()).map(QuestionId).collect();
        for theta in [-1.5, -0.3, 0.0, 0.8] {
            let best = select_candidates(&m, &[theta], &pool, 1).unwrap()[0];
            let nearest = (0..bs.len())
                .min_by(|&a, &b| (bs[a] - theta).abs().total_cmp(&(bs[b] - theta).abs()))
                .unwrap();
            assert_eq!(best, QuestionId(nearest));
        }
    }
}
