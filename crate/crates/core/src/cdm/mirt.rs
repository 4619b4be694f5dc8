use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bce, check_epoch_loss, sigmoid, DiagnosisModel, ModelKind, PretrainConfig, TrainingSet};
use crate::environment::QuestionId;
use crate::error::{MaatError, Result};

const MAX_LOADING: f64 = 4.0;

/// Compensatory multidimensional 2PL: `P(correct) = sigmoid(a_j . theta + d_j)`
/// with non-negative loadings `a_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirtModel {
    pub dims: usize,
    pub discrimination: Vec<Vec<f64>>,
    pub intercept: Vec<f64>,
}

impl MirtModel {
    pub fn new(discrimination: Vec<Vec<f64>>, intercept: Vec<f64>) -> Result<Self> {
        let dims = discrimination.first().map_or(0, Vec::len);
        if dims == 0 || discrimination.len() != intercept.len() {
            return Err(MaatError::validation("inconsistent MIRT parameter shapes"));
        }
        if discrimination
            .iter()
            .any(|a| a.len() != dims || a.iter().any(|&v| !(v >= 0.0)))
        {
            return Err(MaatError::validation(
                "MIRT loadings must be non-negative with a common dimension",
            ));
        }
        Ok(Self {
            dims,
            discrimination,
            intercept,
        })
    }

    pub fn params(&self, q: QuestionId) -> Result<(&[f64], f64)> {
        match (self.discrimination.get(q.0), self.intercept.get(q.0)) {
            (Some(a), Some(&d)) => Ok((a, d)),
            _ => Err(MaatError::Lookup {
                kind: "question",
                id: q.0,
            }),
        }
    }

    #[inline]
    pub fn prob(&self, theta: &[f64], q: QuestionId) -> Result<f64> {
        let (a, d) = self.params(q)?;
        Ok(sigmoid(dot(a, theta) + d))
    }

    pub(super) fn fit(data: &TrainingSet, n_questions: usize, cfg: &PretrainConfig) -> Result<(Self, Vec<f64>)> {
        let dims = cfg.mirt_dims.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut a: Vec<Vec<f64>> = (0..n_questions)
            .map(|_| (0..dims).map(|_| rng.random_range(0.5..1.5)).collect())
            .collect();
        let mut d = vec![0.0; n_questions];
        let mut theta: Vec<Vec<f64>> = (0..data.n_examinees)
            .map(|_| (0..dims).map(|_| rng.random_range(-0.1..0.1)).collect())
            .collect();
        let mut order: Vec<usize> = (0..data.rows.len()).collect();
        let lr = cfg.learning_rate;
        let mut losses = Vec::with_capacity(cfg.epochs);

        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let (e, q, y) = data.rows[i];
                let err = sigmoid(dot(&a[q.0], &theta[e]) + d[q.0]) - f64::from(u8::from(y));
                for k in 0..dims {
                    let (ak, tk) = (a[q.0][k], theta[e][k]);
                    theta[e][k] = tk - lr * err * ak;
                    a[q.0][k] = (ak - lr * err * tk).clamp(0.0, MAX_LOADING);
                }
                d[q.0] -= lr * err;
            }
            let loss = data
                .rows
                .iter()
                .map(|&(e, q, y)| bce(sigmoid(dot(&a[q.0], &theta[e]) + d[q.0]), y))
                .sum::<f64>()
                / data.rows.len() as f64;
            check_epoch_loss(loss, cfg)?;
            losses.push(loss);
        }
        Ok((
            Self {
                dims,
                discrimination: a,
                intercept: d,
            },
            losses,
        ))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl DiagnosisModel for MirtModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Mirt
    }

    fn n_questions(&self) -> usize {
        self.intercept.len()
    }

    fn theta_dim(&self) -> usize {
        self.dims
    }

    fn initial_theta(&self) -> Vec<f64> {
        vec![0.0; self.dims]
    }

    fn predict(&self, theta: &[f64], question: QuestionId) -> Result<f64> {
        self.prob(theta, question)
    }

    fn loss_gradient(&self, theta: &[f64], question: QuestionId, correct: bool) -> Result<Vec<f64>> {
        let (a, d) = self.params(question)?;
        let err = sigmoid(dot(a, theta) + d) - f64::from(u8::from(correct));
        Ok(a.iter().map(|&ak| err * ak).collect())
    }
}
