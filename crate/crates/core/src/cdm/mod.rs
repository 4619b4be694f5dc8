//! Cognitive diagnosis models.
//!
//! Selection strategies only talk to a model through [`DiagnosisModel`]:
//! a correctness prediction, the gradient of the per-record binary
//! cross-entropy with respect to the examinee state, and a refit of the
//! examinee state on accumulated records. Question-side parameters are fit
//! once on historical data by [`pretrain`] and frozen afterwards.

mod irt;
mod mirt;
mod ncdm;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::environment::{ConceptGraph, ExamineeId, QuestionId, Record};
use crate::error::{MaatError, Result};

pub use irt::IrtModel;
pub(crate) use mirt::dot;
pub use mirt::MirtModel;
pub use ncdm::NeuralCdmLite;

/// Probabilities are clipped to `[EPS, 1 - EPS]` inside the loss.
const EPS: f64 = 1e-12;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of one prediction.
#[inline]
pub fn bce(p: f64, correct: bool) -> f64 {
    let p = p.clamp(EPS, 1.0 - EPS);
    if correct {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Irt,
    Mirt,
    Ncdm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Irt, ModelKind::Mirt, ModelKind::Ncdm];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Irt => "irt",
            ModelKind::Mirt => "mirt",
            ModelKind::Ncdm => "ncdm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = MaatError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "irt" => Ok(ModelKind::Irt),
            "mirt" => Ok(ModelKind::Mirt),
            "ncdm" | "neuralcdm" | "neural" => Ok(ModelKind::Ncdm),
            other => Err(MaatError::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Refit schedule for the examinee state during a test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UpdateConfig {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 5,
        }
    }
}

/// The abstract diagnosis model used by every selection strategy.
///
/// `theta` is the flat examinee state. Implementations must keep
/// `predict` inside `[0, 1]` and must not mutate question-side parameters.
pub trait DiagnosisModel: Send + Sync {
    fn kind(&self) -> ModelKind;

    fn n_questions(&self) -> usize;

    /// Length of the examinee state vector.
    fn theta_dim(&self) -> usize;

    /// State of an examinee before any evidence.
    fn initial_theta(&self) -> Vec<f64>;

    fn predict(&self, theta: &[f64], question: QuestionId) -> Result<f64>;

    /// Gradient of `bce(predict(theta, question), correct)` with respect to `theta`.
    fn loss_gradient(&self, theta: &[f64], question: QuestionId, correct: bool) -> Result<Vec<f64>>;

    /// Maps a raw state back into the feasible region after a gradient step.
    fn project(&self, _theta: &mut [f64]) {}

    /// Mean binary cross-entropy over `records`.
    fn mean_loss(&self, theta: &[f64], records: &[Record]) -> Result<f64> {
        if records.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for r in records {
            total += bce(self.predict(theta, r.question)?, r.correct);
        }
        Ok(total / records.len() as f64)
    }

    /// Full-batch gradient descent on the mean loss of `records`, starting
    /// from `theta` (warm start). Question-side parameters stay fixed.
    fn update(&self, theta: &[f64], records: &[Record], cfg: &UpdateConfig) -> Result<Vec<f64>> {
        let mut current = theta.to_vec();
        if records.is_empty() {
            return Ok(current);
        }
        let scale = cfg.learning_rate / records.len() as f64;
        for _ in 0..cfg.epochs {
            let mut grad = vec![0.0; current.len()];
            for r in records {
                let g = self.loss_gradient(&current, r.question, r.correct)?;
                grad.iter_mut().zip(&g).for_each(|(acc, v)| *acc += v);
            }
            current.iter_mut().zip(&grad).for_each(|(t, g)| *t -= scale * g);
            self.project(&mut current);
            if current.iter().any(|v| !v.is_finite()) {
                return Err(MaatError::Training {
                    hyperparameter: "learning_rate",
                    value: cfg.learning_rate,
                    message: "examinee state became non-finite".into(),
                });
            }
        }
        Ok(current)
    }
}

/// A pretrained model of any supported kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Irt(IrtModel),
    Mirt(MirtModel),
    Ncdm(NeuralCdmLite),
}

impl Model {
    fn inner(&self) -> &dyn DiagnosisModel {
        match self {
            Model::Irt(m) => m,
            Model::Mirt(m) => m,
            Model::Ncdm(m) => m,
        }
    }

    pub fn as_irt(&self) -> Option<&IrtModel> {
        match self {
            Model::Irt(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_mirt(&self) -> Option<&MirtModel> {
        match self {
            Model::Mirt(m) => Some(m),
            _ => None,
        }
    }
}

impl DiagnosisModel for Model {
    fn kind(&self) -> ModelKind {
        self.inner().kind()
    }
    fn n_questions(&self) -> usize {
        self.inner().n_questions()
    }
    fn theta_dim(&self) -> usize {
        self.inner().theta_dim()
    }
    fn initial_theta(&self) -> Vec<f64> {
        self.inner().initial_theta()
    }
    fn predict(&self, theta: &[f64], question: QuestionId) -> Result<f64> {
        self.inner().predict(theta, question)
    }
    fn loss_gradient(&self, theta: &[f64], question: QuestionId, correct: bool) -> Result<Vec<f64>> {
        self.inner().loss_gradient(theta, question, correct)
    }
    fn project(&self, theta: &mut [f64]) {
        self.inner().project(theta)
    }
}

/// Hyperparameters for fitting question-side parameters on historical data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Latent dimensions of MIRT.
    pub mirt_dims: usize,
    /// Hidden width of the neural model.
    pub ncdm_hidden: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            learning_rate: 0.05,
            seed: 42,
            mirt_dims: 3,
            ncdm_hidden: 64,
        }
    }
}

/// Historical records re-indexed so each examinee owns a dense row.
pub(crate) struct TrainingSet {
    pub rows: Vec<(usize, QuestionId, bool)>,
    pub n_examinees: usize,
}

impl TrainingSet {
    pub fn new(records: &[Record]) -> Self {
        let mut index: HashMap<ExamineeId, usize> = HashMap::new();
        let rows = records
            .iter()
            .map(|r| {
                let next = index.len();
                let e = *index.entry(r.examinee).or_insert(next);
                (e, r.question, r.correct)
            })
            .collect();
        Self {
            rows,
            n_examinees: index.len(),
        }
    }
}

pub(crate) fn check_epoch_loss(loss: f64, cfg: &PretrainConfig) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(MaatError::Training {
            hyperparameter: "learning_rate",
            value: cfg.learning_rate,
            message: "training loss is not finite".into(),
        })
    }
}

/// Result of pretraining: the frozen model and the mean training loss after
/// every epoch.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub model: Model,
    pub epoch_losses: Vec<f64>,
}

/// Fits question-side parameters of a `kind` model on historical records by
/// stochastic gradient descent on binary cross-entropy.
pub fn pretrain(
    kind: ModelKind,
    historical: &[Record],
    graph: &ConceptGraph,
    cfg: &PretrainConfig,
) -> Result<Pretrained> {
    if historical.is_empty() {
        return Err(MaatError::Training {
            hyperparameter: "historical",
            value: 0.0,
            message: "no historical records to pretrain on".into(),
        });
    }
    for r in historical {
        graph.check_question(r.question)?;
    }
    let data = TrainingSet::new(historical);
    let (model, epoch_losses) = match kind {
        ModelKind::Irt => {
            let (m, l) = IrtModel::fit(&data, graph.n_questions(), cfg)?;
            (Model::Irt(m), l)
        }
        ModelKind::Mirt => {
            let (m, l) = MirtModel::fit(&data, graph.n_questions(), cfg)?;
            (Model::Mirt(m), l)
        }
        ModelKind::Ncdm => {
            let (m, l) = NeuralCdmLite::fit(&data, graph, cfg)?;
            (Model::Ncdm(m), l)
        }
    };
    Ok(Pretrained { model, epoch_losses })
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk form of a pretrained model (`model.<kind>.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub version: u32,
    /// Original question id of every dense question index.
    pub question_ids: Vec<u64>,
    pub config: PretrainConfig,
    pub model: Model,
}

impl ModelCheckpoint {
    pub fn file_name(kind: ModelKind) -> String {
        format!("model.{kind}.json")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let ckpt: Self = serde_json::from_reader(std::io::BufReader::new(file))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(MaatError::Config(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        if ckpt.question_ids.len() != ckpt.model.n_questions() {
            return Err(MaatError::validation(
                "checkpoint question map does not match the model",
            ));
        }
        Ok(ckpt)
    }
}
