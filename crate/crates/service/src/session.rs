//! Live sessions: the selection loop driven one answer at a time.

use std::collections::BTreeMap;

use maat_core::baselines::{build_strategy, CandidateSize, SelectionContext, StrategyKind, StrategyParams};
use maat_core::cdm::{sigmoid, DiagnosisModel, Model, ModelKind, UpdateConfig};
use maat_core::environment::{ExamineeId, QuestionId, Record};
use maat_core::harness::metrics::{auc, coverage_metric};
use maat_core::session::SessionState;
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionPayload {
    /// Position in the model's question pool.
    pub index: usize,
    /// Question id of the source dataset.
    pub id: u64,
    pub concepts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: usize,
    pub question: QuestionPayload,
    /// Prediction for a correct answer just before it was given.
    pub predicted: f64,
    pub answer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptMastery {
    pub concept: u64,
    pub mastery: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub session_id: String,
    pub status: Status,
    pub model: ModelKind,
    pub strategy: StrategyKind,
    pub answered: usize,
    pub test_length: usize,
    pub theta: Vec<f64>,
    /// Display projection of the state onto concepts, not a calibrated score.
    pub mastery: Vec<ConceptMastery>,
    pub history: Vec<HistoryEntry>,
    /// Share of concepts touched by the administered questions.
    pub coverage: f64,
    /// AUC of current predictions on the answers so far; absent while the
    /// answers are all of one kind.
    pub informativeness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRequest {
    pub model: String,
    pub strategy: String,
    pub test_length: Option<usize>,
    pub candidates: Option<CandidateSize>,
    pub seed: Option<u64>,
    pub examinee: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartResponse {
    pub session_id: String,
    pub status: Status,
    /// Step of the pending question.
    pub step: usize,
    pub test_length: usize,
    pub question: QuestionPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRequest {
    /// `0`/`1` or `false`/`true`.
    pub answer: serde_json::Value,
    pub idempotency_token: Option<String>,
    /// Step being answered; rejects stale submits when present.
    pub step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub session_id: String,
    pub status: Status,
    pub answered: usize,
    pub test_length: usize,
    pub theta: Vec<f64>,
    /// Next question while the session is active.
    pub question: Option<QuestionPayload>,
    /// Final report once the session is finished.
    pub report: Option<DiagnosisReport>,
}

/// Knobs that are fixed per service instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionDefaults {
    pub test_length: usize,
    pub candidates: CandidateSize,
    pub seed: u64,
    pub update: UpdateConfig,
}

impl Default for SessionDefaults {
    fn default() -> Self {
        Self {
            test_length: 50,
            candidates: CandidateSize::default(),
            seed: 42,
            update: UpdateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveSession {
    pub id: String,
    pub model: ModelKind,
    pub strategy: StrategyKind,
    pub test_length: usize,
    pub candidates: CandidateSize,
    pub seed: u64,
    pub update: UpdateConfig,
    pub state: SessionState,
    pub theta: Vec<f64>,
    pub pending: Option<QuestionId>,
    pub history: Vec<HistoryEntry>,
    pub status: Status,
    pub created: u64,
    pub last_active: u64,
    /// Response bodies by idempotency token.
    pub responses: BTreeMap<String, AnswerResponse>,
}

fn parse_answer(v: &serde_json::Value) -> Result<bool, ServiceError> {
    match v {
        serde_json::Value::Bool(b) => Ok(*b),
        serde_json::Value::Number(n) if n.as_u64() == Some(0) => Ok(false),
        serde_json::Value::Number(n) if n.as_u64() == Some(1) => Ok(true),
        other => Err(ServiceError::BadRequest(format!("answer must be 0 or 1, got {other}"))),
    }
}

impl LiveSession {
    pub fn start(
        engine: &Engine,
        req: &StartRequest,
        defaults: &SessionDefaults,
        id: String,
        now: u64,
    ) -> Result<(Self, StartResponse), ServiceError> {
        let model: ModelKind = req.model.parse()?;
        let strategy: StrategyKind = req.strategy.parse()?;
        strategy.check(model)?;
        let m = engine.model(model)?;
        let test_length = req.test_length.unwrap_or(defaults.test_length);
        if test_length == 0 || test_length > m.n_questions() {
            return Err(ServiceError::BadRequest(format!(
                "test_length must be within 1..={}",
                m.n_questions()
            )));
        }
        let candidates = req.candidates.unwrap_or(defaults.candidates);
        if candidates == CandidateSize::Fixed(0) {
            return Err(ServiceError::BadRequest("candidates must be at least 1".into()));
        }
        let mut session = Self {
            id,
            model,
            strategy,
            test_length,
            candidates,
            seed: req.seed.unwrap_or(defaults.seed),
            update: defaults.update,
            state: SessionState::new(
                ExamineeId(req.examinee.unwrap_or(0)),
                (0..m.n_questions()).map(QuestionId),
            ),
            theta: m.initial_theta(),
            pending: None,
            history: Vec::new(),
            status: Status::Active,
            created: now,
            last_active: now,
            responses: BTreeMap::new(),
        };
        let q = session.select(engine)?;
        session.pending = Some(q);
        let response = StartResponse {
            session_id: session.id.clone(),
            status: Status::Active,
            step: 1,
            test_length,
            question: payload(engine, q),
        };
        Ok((session, response))
    }

    fn select(&self, engine: &Engine) -> Result<QuestionId, ServiceError> {
        let strategy = build_strategy(
            self.strategy,
            &StrategyParams {
                candidates: self.candidates,
                seed: self.seed,
                graph: engine.graph.clone(),
                weights: engine.weights.clone(),
            },
        );
        Ok(strategy.select(&SelectionContext {
            session: &self.state,
            pool: self.state.untested(),
            model: engine.model(self.model)?,
            theta: &self.theta,
        })?)
    }

    /// Records the answer to the pending question, refits the state and
    /// either selects the next question or finishes.
    pub fn submit(&mut self, engine: &Engine, req: &AnswerRequest, now: u64) -> Result<AnswerResponse, ServiceError> {
        let token = req.idempotency_token.as_deref().ok_or(ServiceError::TokenRequired)?;
        if let Some(stored) = self.responses.get(token) {
            return Ok(stored.clone());
        }
        if self.status == Status::Finished {
            return Err(ServiceError::Finished(self.id.clone()));
        }
        let expected = self.state.step() + 1;
        if let Some(got) = req.step.filter(|&s| s != expected) {
            return Err(ServiceError::StepMismatch { expected, got });
        }
        let correct = parse_answer(&req.answer)?;
        let question = self
            .pending
            .ok_or_else(|| ServiceError::Store(format!("session {} has no pending question", self.id)))?;
        let model = engine.model(self.model)?;
        let predicted = model.predict(&self.theta, question)?;
        self.state.administer(question, correct)?;
        self.theta = model.update(&self.theta, self.state.records(), &self.update)?;
        self.history.push(HistoryEntry {
            step: self.state.step(),
            question: payload(engine, question),
            predicted,
            answer: correct,
        });
        self.last_active = now;
        let (question, report) = if self.state.step() >= self.test_length {
            self.status = Status::Finished;
            self.pending = None;
            (None, Some(self.report(engine)?))
        } else {
            let next = self.select(engine)?;
            self.pending = Some(next);
            (Some(payload(engine, next)), None)
        };
        let response = AnswerResponse {
            session_id: self.id.clone(),
            status: self.status,
            answered: self.state.step(),
            test_length: self.test_length,
            theta: self.theta.clone(),
            question,
            report,
        };
        self.responses.insert(token.to_string(), response.clone());
        Ok(response)
    }

    pub fn report(&self, engine: &Engine) -> Result<DiagnosisReport, ServiceError> {
        let model = engine.model(self.model)?;
        let records: &[Record] = self.state.records();
        let scores = records
            .iter()
            .map(|r| model.predict(&self.theta, r.question))
            .collect::<maat_core::Result<Vec<_>>>()?;
        let labels: Vec<bool> = records.iter().map(|r| r.correct).collect();
        Ok(DiagnosisReport {
            session_id: self.id.clone(),
            status: self.status,
            model: self.model,
            strategy: self.strategy,
            answered: self.state.step(),
            test_length: self.test_length,
            theta: self.theta.clone(),
            mastery: mastery(model, &self.theta, &engine.ids.concepts),
            history: self.history.clone(),
            coverage: coverage_metric(self.state.tested(), &engine.graph),
            informativeness: auc(&scores, &labels),
        })
    }
}

fn payload(engine: &Engine, q: QuestionId) -> QuestionPayload {
    QuestionPayload {
        index: q.0,
        id: engine.ids.questions[q.0],
        concepts: engine
            .graph
            .concepts_of(q)
            .iter()
            .map(|k| engine.ids.concepts[k.0])
            .collect(),
    }
}

/// Per-concept display mastery: the sigmoid of the scalar ability for IRT,
/// of dimension `k mod d` for MIRT, and the mastery vector itself for the
/// neural model.
pub fn mastery(model: &Model, theta: &[f64], concepts: &[u64]) -> Vec<ConceptMastery> {
    concepts
        .iter()
        .enumerate()
        .map(|(k, &concept)| ConceptMastery {
            concept,
            mastery: match model.kind() {
                ModelKind::Irt => sigmoid(theta[0]),
                ModelKind::Mirt => sigmoid(theta[k % theta.len()]),
                ModelKind::Ncdm => theta[k],
            },
        })
        .collect()
}
