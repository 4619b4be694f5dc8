use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bce, check_epoch_loss, sigmoid, DiagnosisModel, ModelKind, PretrainConfig, TrainingSet};
use crate::environment::{ConceptGraph, QuestionId};
use crate::error::{MaatError, Result};

/// Discrimination is `DISC_SCALE * sigmoid(raw)`.
const DISC_SCALE: f64 = 10.0;

/// A small neural cognitive diagnosis model.
///
/// The examinee state is a mastery vector in `[0, 1]^|K|`. For question `q`
/// the interaction input is `mask_q * disc_q * (mastery - difficulty_q)`,
/// fed through a sigmoid hidden layer and a sigmoid output. Both weight
/// matrices are kept non-negative, so raising any mastery component never
/// lowers the prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralCdmLite {
    pub n_concepts: usize,
    pub hidden: usize,
    /// Concepts of each question (the mask), ascending.
    pub concepts_of: Vec<Vec<usize>>,
    /// Raw difficulty per linked concept, aligned with `concepts_of`.
    pub difficulty_raw: Vec<Vec<f64>>,
    pub discrimination_raw: Vec<f64>,
    /// Hidden x concept weights, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

struct Forward {
    /// (concept, interaction input, mastery - difficulty)
    inputs: Vec<(usize, f64, f64)>,
    hidden: Vec<f64>,
    prob: f64,
    disc: f64,
}

impl NeuralCdmLite {
    /// Random initialization with the output bias centred so that predictions
    /// start near 0.5.
    pub fn init(graph: &ConceptGraph, hidden: usize, rng: &mut impl Rng) -> Self {
        let n_concepts = graph.n_concepts();
        let concepts_of: Vec<Vec<usize>> = graph
            .questions()
            .map(|q| graph.concepts_of(q).iter().map(|k| k.0).collect())
            .collect();
        let difficulty_raw = concepts_of.iter().map(|c| vec![0.0; c.len()]).collect();
        let w1 = (0..hidden * n_concepts).map(|_| rng.random_range(0.0..0.2)).collect();
        let w2: Vec<f64> = (0..hidden).map(|_| rng.random_range(0.0..0.2)).collect();
        let b2 = -0.5 * w2.iter().sum::<f64>();
        Self {
            n_concepts,
            hidden,
            concepts_of,
            difficulty_raw,
            discrimination_raw: vec![-2.0; graph.n_questions()],
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2,
        }
    }

    fn check(&self, q: QuestionId) -> Result<()> {
        if q.0 < self.concepts_of.len() {
            Ok(())
        } else {
            Err(MaatError::Lookup {
                kind: "question",
                id: q.0,
            })
        }
    }

    fn forward(&self, mastery: &[f64], q: usize) -> Forward {
        let disc = DISC_SCALE * sigmoid(self.discrimination_raw[q]);
        let inputs: Vec<(usize, f64, f64)> = self.concepts_of[q]
            .iter()
            .zip(&self.difficulty_raw[q])
            .map(|(&k, &raw)| {
                let gap = mastery[k] - sigmoid(raw);
                (k, disc * gap, gap)
            })
            .collect();
        let hidden: Vec<f64> = (0..self.hidden)
            .map(|h| {
                let row = &self.w1[h * self.n_concepts..(h + 1) * self.n_concepts];
                let u = self.b1[h] + inputs.iter().map(|&(k, x, _)| row[k] * x).sum::<f64>();
                sigmoid(u)
            })
            .collect();
        let z = self.b2 + self.w2.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>();
        Forward {
            inputs,
            hidden,
            prob: sigmoid(z),
            disc,
        }
    }

    /// `d loss / d u_h` for each hidden unit, given `err = p - y`.
    fn hidden_delta(&self, fwd: &Forward, err: f64) -> Vec<f64> {
        fwd.hidden
            .iter()
            .zip(&self.w2)
            .map(|(&h, &w)| err * w * h * (1.0 - h))
            .collect()
    }

    /// `d loss / d x_k` for each linked concept.
    fn input_delta(&self, fwd: &Forward, delta: &[f64]) -> Vec<f64> {
        fwd.inputs
            .iter()
            .map(|&(k, _, _)| {
                delta
                    .iter()
                    .enumerate()
                    .map(|(h, d)| d * self.w1[h * self.n_concepts + k])
                    .sum()
            })
            .collect()
    }

    pub(super) fn fit(data: &TrainingSet, graph: &ConceptGraph, cfg: &PretrainConfig) -> Result<(Self, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut m = Self::init(graph, cfg.ncdm_hidden.max(1), &mut rng);
        let mut mastery = vec![vec![0.5; m.n_concepts]; data.n_examinees];
        let mut order: Vec<usize> = (0..data.rows.len()).collect();
        let lr = cfg.learning_rate;
        let mut losses = Vec::with_capacity(cfg.epochs);

        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let (e, q, y) = data.rows[i];
                m.sgd_step(&mut mastery[e], q.0, y, lr);
            }
            let loss = data
                .rows
                .iter()
                .map(|&(e, q, y)| bce(m.forward(&mastery[e], q.0).prob, y))
                .sum::<f64>()
                / data.rows.len() as f64;
            check_epoch_loss(loss, cfg)?;
            losses.push(loss);
        }
        Ok((m, losses))
    }

    fn sgd_step(&mut self, mastery: &mut [f64], q: usize, y: bool, lr: f64) {
        let fwd = self.forward(mastery, q);
        let err = fwd.prob - f64::from(u8::from(y));
        let delta = self.hidden_delta(&fwd, err);
        let dx = self.input_delta(&fwd, &delta);

        for (h, &hv) in fwd.hidden.iter().enumerate() {
            self.w2[h] = (self.w2[h] - lr * err * hv).max(0.0);
        }
        self.b2 -= lr * err;
        for (h, &d) in delta.iter().enumerate() {
            let row = &mut self.w1[h * self.n_concepts..(h + 1) * self.n_concepts];
            for &(k, x, _) in &fwd.inputs {
                row[k] = (row[k] - lr * d * x).max(0.0);
            }
            self.b1[h] -= lr * d;
        }

        let mut d_disc = 0.0;
        for (j, (&(k, _, gap), &g)) in fwd.inputs.iter().zip(&dx).enumerate() {
            d_disc += g * gap;
            let diff = sigmoid(self.difficulty_raw[q][j]);
            self.difficulty_raw[q][j] += lr * g * fwd.disc * diff * (1.0 - diff);
            mastery[k] = (mastery[k] - lr * g * fwd.disc).clamp(0.0, 1.0);
        }
        let s = sigmoid(self.discrimination_raw[q]);
        self.discrimination_raw[q] -= lr * d_disc * DISC_SCALE * s * (1.0 - s);
    }
}

impl DiagnosisModel for NeuralCdmLite {
    fn kind(&self) -> ModelKind {
        ModelKind::Ncdm
    }

    fn n_questions(&self) -> usize {
        self.concepts_of.len()
    }

    fn theta_dim(&self) -> usize {
        self.n_concepts
    }

    fn initial_theta(&self) -> Vec<f64> {
        vec![0.5; self.n_concepts]
    }

    fn predict(&self, theta: &[f64], question: QuestionId) -> Result<f64> {
        self.check(question)?;
        Ok(self.forward(theta, question.0).prob)
    }

    fn loss_gradient(&self, theta: &[f64], question: QuestionId, correct: bool) -> Result<Vec<f64>> {
        self.check(question)?;
        let fwd = self.forward(theta, question.0);
        let err = fwd.prob - f64::from(u8::from(correct));
        let delta = self.hidden_delta(&fwd, err);
        let dx = self.input_delta(&fwd, &delta);
        let mut grad = vec![0.0; self.n_concepts];
        for (&(k, _, _), g) in fwd.inputs.iter().zip(dx) {
            grad[k] = g * fwd.disc;
        }
        Ok(grad)
    }

    fn project(&self, theta: &mut [f64]) {
        theta.iter_mut().for_each(|t| *t = t.clamp(0.0, 1.0));
    }
}
