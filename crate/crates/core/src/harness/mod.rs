//! Simulated adaptive tests: the per-examinee selection loop, generated
//! populations, metrics and batch experiments.

pub mod experiment;
pub mod metrics;
pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet};

use crate::baselines::{SelectionContext, Strategy};
use crate::cdm::{DiagnosisModel, Model, UpdateConfig};
use crate::environment::{ExamineeId, QuestionId};
use crate::error::{MaatError, Result};
use crate::session::SessionState;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentOutcome, ExperimentReport};
pub use synthetic::{generate_synthetic, SyntheticSpec};

/// Source of the examinee's answers.
pub trait AnswerOracle {
    /// Whether the oracle can answer `question` at all.
    fn knows(&self, question: QuestionId) -> bool;
    fn answer(&mut self, question: QuestionId) -> Option<bool>;
}

/// Answers recorded in a dataset.
#[derive(Debug, Clone)]
pub struct RecordedAnswers(pub BTreeMap<QuestionId, bool>);

impl AnswerOracle for RecordedAnswers {
    fn knows(&self, question: QuestionId) -> bool {
        self.0.contains_key(&question)
    }

    fn answer(&mut self, question: QuestionId) -> Option<bool> {
        self.0.get(&question).copied()
    }
}

/// Answers handed out in a fixed order, whatever the question.
#[derive(Debug, Clone)]
pub struct ScriptedAnswers {
    answers: Vec<bool>,
    next: usize,
}

impl ScriptedAnswers {
    pub fn new(answers: Vec<bool>) -> Self {
        Self { answers, next: 0 }
    }
}

impl AnswerOracle for ScriptedAnswers {
    fn knows(&self, _question: QuestionId) -> bool {
        true
    }

    fn answer(&mut self, _question: QuestionId) -> Option<bool> {
        let a = self.answers.get(self.next).copied();
        self.next += 1;
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub test_length: usize,
    pub update: UpdateConfig,
    /// Only offer questions the oracle can answer.
    pub replay: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            test_length: 50,
            update: UpdateConfig::default(),
            replay: true,
        }
    }
}

/// A finished session and the examinee state after every step.
#[derive(Debug, Clone)]
pub struct SessionTrace {
    pub state: SessionState,
    pub thetas: Vec<Vec<f64>>,
}

/// One step of the loop: choose from the selectable pool, observe the
/// answer, refit the examinee state.
pub fn step_session(
    strategy: &dyn Strategy,
    model: &Model,
    state: &mut SessionState,
    theta: &[f64],
    oracle: &mut dyn AnswerOracle,
    cfg: &SessionConfig,
) -> Result<Vec<f64>> {
    let pool: BTreeSet<QuestionId> = if cfg.replay {
        state.untested().iter().copied().filter(|&q| oracle.knows(q)).collect()
    } else {
        state.untested().clone()
    };
    if pool.is_empty() {
        return Err(MaatError::PoolExhausted {
            examinee: state.examinee().0,
            step: state.step(),
        });
    }
    let question = strategy.select(&SelectionContext {
        session: state,
        pool: &pool,
        model,
        theta,
    })?;
    if !pool.contains(&question) {
        return Err(MaatError::contract(format!(
            "{} selected question {question} outside the pool",
            strategy.kind()
        )));
    }
    let correct = oracle
        .answer(question)
        .ok_or_else(|| MaatError::contract(format!("no answer available for question {question}")))?;
    state.administer(question, correct)?;
    model.update(theta, state.records(), &cfg.update)
}

/// Runs a full test of `cfg.test_length` steps for one examinee.
pub fn run_session(
    strategy: &dyn Strategy,
    model: &Model,
    examinee: ExamineeId,
    oracle: &mut dyn AnswerOracle,
    cfg: &SessionConfig,
) -> Result<SessionTrace> {
    if cfg.test_length == 0 {
        return Err(MaatError::Config("test length must be at least 1".into()));
    }
    let mut state = SessionState::new(examinee, (0..model.n_questions()).map(QuestionId));
    let mut theta = model.initial_theta();
    let mut thetas = Vec::with_capacity(cfg.test_length);
    for _ in 0..cfg.test_length {
        theta = step_session(strategy, model, &mut state, &theta, oracle, cfg)?;
        thetas.push(theta.clone());
    }
    Ok(SessionTrace { state, thetas })
}
