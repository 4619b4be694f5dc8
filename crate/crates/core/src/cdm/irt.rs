use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bce, check_epoch_loss, sigmoid, DiagnosisModel, ModelKind, PretrainConfig, TrainingSet};
use crate::environment::QuestionId;
use crate::error::{MaatError, Result};

pub const MIN_DISCRIMINATION: f64 = 0.1;
pub const MAX_DISCRIMINATION: f64 = 4.0;

/// Two-parameter logistic IRT: `P(correct) = sigmoid(a_j * (theta - b_j))`
/// with a scalar ability `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrtModel {
    pub discrimination: Vec<f64>,
    pub difficulty: Vec<f64>,
}

impl IrtModel {
    pub fn new(discrimination: Vec<f64>, difficulty: Vec<f64>) -> Result<Self> {
        if discrimination.len() != difficulty.len() {
            return Err(MaatError::validation("parameter lengths differ"));
        }
        if discrimination.iter().any(|&a| !(a > 0.0)) {
            return Err(MaatError::validation("discrimination must be positive"));
        }
        Ok(Self {
            discrimination,
            difficulty,
        })
    }

    #[inline]
    pub fn params(&self, q: QuestionId) -> Result<(f64, f64)> {
        match (self.discrimination.get(q.0), self.difficulty.get(q.0)) {
            (Some(&a), Some(&b)) => Ok((a, b)),
            _ => Err(MaatError::Lookup {
                kind: "question",
                id: q.0,
            }),
        }
    }

    /// Response probability at scalar ability `theta`.
    #[inline]
    pub fn prob(&self, theta: f64, q: QuestionId) -> Result<f64> {
        let (a, b) = self.params(q)?;
        Ok(sigmoid(a * (theta - b)))
    }

    pub(super) fn fit(data: &TrainingSet, n_questions: usize, cfg: &PretrainConfig) -> Result<(Self, Vec<f64>)> {
        let mut a = vec![1.0; n_questions];
        let mut b = vec![0.0; n_questions];
        let mut theta = vec![0.0; data.n_examinees];
        let mut order: Vec<usize> = (0..data.rows.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let lr = cfg.learning_rate;
        let mut losses = Vec::with_capacity(cfg.epochs);

        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let (e, q, y) = data.rows[i];
                let (aj, bj, t) = (a[q.0], b[q.0], theta[e]);
                let err = sigmoid(aj * (t - bj)) - f64::from(u8::from(y));
                theta[e] -= lr * err * aj;
                b[q.0] += lr * err * aj;
                a[q.0] = (aj - lr * err * (t - bj)).clamp(MIN_DISCRIMINATION, MAX_DISCRIMINATION);
            }
            let loss = data
                .rows
                .iter()
                .map(|&(e, q, y)| bce(sigmoid(a[q.0] * (theta[e] - b[q.0])), y))
                .sum::<f64>()
                / data.rows.len() as f64;
            check_epoch_loss(loss, cfg)?;
            losses.push(loss);
        }
        Ok((
            Self {
                discrimination: a,
                difficulty: b,
            },
            losses,
        ))
    }
}

impl DiagnosisModel for IrtModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Irt
    }

    fn n_questions(&self) -> usize {
        self.difficulty.len()
    }

    fn theta_dim(&self) -> usize {
        1
    }

    fn initial_theta(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn predict(&self, theta: &[f64], question: QuestionId) -> Result<f64> {
        self.prob(theta[0], question)
    }

    fn loss_gradient(&self, theta: &[f64], question: QuestionId, correct: bool) -> Result<Vec<f64>> {
        let (a, b) = self.params(question)?;
        let p = sigmoid(a * (theta[0] - b));
        Ok(vec![(p - f64::from(u8::from(correct))) * a])
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{numeric_gradient, relative_error};
    use super::super::UpdateConfig;
    use super::*;
    use crate::environment::{ExamineeId, Record};
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn half_probability_at_difficulty() {
        let m = IrtModel::new(vec![1.7], vec![0.3]).unwrap();
        assert_relative_eq!(m.predict(&[0.3], QuestionId(0)).unwrap(), 0.5);
    }

    #[test]
    fn monotone_in_ability() {
        let m = IrtModel::new(vec![1.0], vec![0.0]).unwrap();
        let mut prev = 0.0;
        for i in -40..=40 {
            let p = m.predict(&[f64::from(i) * 0.5], QuestionId(0)).unwrap();
            assert!(p > prev);
            prev = p;
        }
        assert!(prev > 0.999_999);
    }

    #[test]
    fn gradient_at_difficulty_is_minus_half_a() {
        let a = 1.6;
        let m = IrtModel::new(vec![a], vec![0.4]).unwrap();
        let g = m.loss_gradient(&[0.4], QuestionId(0), true).unwrap();
        let fd = numeric_gradient(&m, &[0.4], QuestionId(0), true);
        assert_relative_eq!(fd[0], -a / 2.0, max_relative = 1e-8);
        assert_relative_eq!(g[0], -a / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn gradient_vanishes_when_prediction_is_certain() {
        let m = IrtModel::new(vec![1.0], vec![0.0]).unwrap();
        assert!(m.loss_gradient(&[40.0], QuestionId(0), true).unwrap()[0].abs() < 1e-15);
        assert!(m.loss_gradient(&[-40.0], QuestionId(0), false).unwrap()[0].abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let m = IrtModel::new(vec![rng.random_range(0.2..3.0)], vec![rng.random_range(-2.0..2.0)]).unwrap();
            let theta = [rng.random_range(-3.0..3.0)];
            let y = rng.random_bool(0.5);
            let g = m.loss_gradient(&theta, QuestionId(0), y).unwrap();
            let fd = numeric_gradient(&m, &theta, QuestionId(0), y);
            assert!(relative_error(&g, &fd) < 1e-4);
        }
    }

    #[test]
    fn correct_answer_raises_ability() {
        let m = IrtModel::new(vec![1.2, 0.8], vec![0.5, -0.2]).unwrap();
        let r = [Record::new(ExamineeId(0), QuestionId(0), true)];
        // oracle: the loss gradient at the start is negative, so descent increases theta
        assert!(m.loss_gradient(&[0.0], QuestionId(0), true).unwrap()[0] < 0.0);
        let t = m.update(&[0.0], &r, &UpdateConfig::default()).unwrap();
        assert!(t[0] > 0.0);
    }

    #[test]
    fn unknown_question_is_lookup_error() {
        let m = IrtModel::new(vec![1.0], vec![0.0]).unwrap();
        assert!(matches!(
            m.predict(&[0.0], QuestionId(1)),
            Err(MaatError::Lookup { .. })
        ));
    }
}
