//! Generated populations with known parameters.
//!
//! A generated environment has two kinds of examinees. Testing examinees
//! answer every question, so any selection can be replayed against them.
//! Historical examinees answer a random subset of bounded size, small enough
//! that a record-count threshold separates the two groups.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::cdm::{DiagnosisModel, IrtModel, MirtModel, Model, ModelKind};
use crate::environment::{ConceptGraph, ConceptId, Environment, ExamineeId, IdMaps, QuestionId, Record};
use crate::error::{MaatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase")]
pub enum Dist {
    Const { value: f64 },
    Normal { mean: f64, std: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Uniform { low: f64, high: f64 },
}

/// A distribution with an optional clamp applied to every draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamDist {
    #[serde(flatten)]
    pub dist: Dist,
    #[serde(default)]
    pub clamp: Option<[f64; 2]>,
}

impl ParamDist {
    pub fn constant(value: f64) -> Self {
        Self {
            dist: Dist::Const { value },
            clamp: None,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self.dist {
            Dist::Const { value } => value.is_finite(),
            Dist::Normal { mean, std } => mean.is_finite() && std >= 0.0 && std.is_finite(),
            Dist::LogNormal { mu, sigma } => mu.is_finite() && sigma >= 0.0 && sigma.is_finite(),
            Dist::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
        } && self.clamp.is_none_or(|[lo, hi]| lo <= hi);
        if ok {
            Ok(())
        } else {
            Err(MaatError::Config(format!("invalid distribution for {name}: {self:?}")))
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let x = match self.dist {
            Dist::Const { value } => value,
            Dist::Normal { mean, std } => Normal::new(mean, std).expect("validated").sample(rng),
            Dist::LogNormal { mu, sigma } => LogNormal::new(mu, sigma).expect("validated").sample(rng),
            Dist::Uniform { low, high } => rng.random_range(low..high),
        };
        match self.clamp {
            Some([lo, hi]) => x.clamp(lo, hi),
            None => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_examinees: usize,
    pub n_questions: usize,
    pub n_concepts: usize,
    /// Inclusive range of concepts linked to each question.
    pub concepts_per_question: [usize; 2],
    /// Exponent of the Zipf law over concept popularity.
    pub zipf_exponent: f64,
    /// `irt` or `mirt`.
    pub generator: ModelKind,
    pub mirt_dims: usize,
    pub discrimination: ParamDist,
    pub difficulty: ParamDist,
    pub ability: ParamDist,
    /// Share of examinees who answer the whole pool.
    pub testing_fraction: f64,
    /// Inclusive range of answers given by each historical examinee.
    pub historical_answers: [usize; 2],
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_examinees: 200,
            n_questions: 300,
            n_concepts: 20,
            concepts_per_question: [1, 3],
            zipf_exponent: 1.0,
            generator: ModelKind::Irt,
            mirt_dims: 3,
            discrimination: ParamDist {
                dist: Dist::LogNormal { mu: 0.0, sigma: 0.3 },
                clamp: Some([0.5, 2.5]),
            },
            difficulty: ParamDist {
                dist: Dist::Normal { mean: 0.0, std: 1.0 },
                clamp: None,
            },
            ability: ParamDist {
                dist: Dist::Normal { mean: 0.0, std: 1.0 },
                clamp: None,
            },
            testing_fraction: 0.5,
            historical_answers: [50, 99],
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    /// Record count that puts every testing examinee, and no historical one,
    /// on the testing side of a split.
    pub fn testing_threshold(&self) -> usize {
        (self.historical_answers[1] + 1).min(self.n_questions)
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.concepts_per_question;
        let [h_lo, h_hi] = self.historical_answers;
        let problems = [
            (self.n_examinees == 0, "n_examinees must be at least 1"),
            (self.n_questions == 0, "n_questions must be at least 1"),
            (self.n_concepts == 0, "n_concepts must be at least 1"),
            (
                lo == 0 || lo > hi,
                "concepts_per_question must be a range starting at 1 or more",
            ),
            (hi > self.n_concepts, "concepts_per_question exceeds n_concepts"),
            (
                !(0.0..=1.0).contains(&self.testing_fraction),
                "testing_fraction must lie in [0, 1]",
            ),
            (
                h_lo > h_hi || h_hi > self.n_questions,
                "historical_answers must be a range within the pool",
            ),
            (self.generator == ModelKind::Ncdm, "generator must be irt or mirt"),
            (self.mirt_dims == 0, "mirt_dims must be at least 1"),
            (!(self.zipf_exponent >= 0.0), "zipf_exponent must be non-negative"),
        ];
        if let Some((_, msg)) = problems.iter().find(|(bad, _)| *bad) {
            return Err(MaatError::Config((*msg).into()));
        }
        self.discrimination.validate("discrimination")?;
        self.difficulty.validate("difficulty")?;
        self.ability.validate("ability")
    }
}

/// Generator parameters behind a synthetic environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub model: Model,
    /// True examinee state, indexed by examinee.
    pub abilities: Vec<Vec<f64>>,
    pub testing: Vec<ExamineeId>,
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub env: Environment,
    pub truth: GroundTruth,
}

fn build_graph(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<ConceptGraph> {
    let popularity: Vec<f64> = (1..=spec.n_concepts)
        .map(|r| (r as f64).powf(-spec.zipf_exponent))
        .collect();
    let mut links = Vec::new();
    let mut used = vec![false; spec.n_concepts];
    for q in 0..spec.n_questions {
        let [lo, hi] = spec.concepts_per_question;
        let degree = rng.random_range(lo..=hi);
        let mut weights = popularity.clone();
        for _ in 0..degree {
            let k = WeightedIndex::new(&weights)
                .map_err(|e| MaatError::contract(format!("concept sampling: {e}")))?
                .sample(rng);
            weights[k] = 0.0;
            used[k] = true;
            links.push((QuestionId(q), ConceptId(k)));
        }
    }
    // every concept needs a question; attach leftovers to random questions
    for (k, _) in used.iter().enumerate().filter(|(_, u)| !**u) {
        links.push((QuestionId(rng.random_range(0..spec.n_questions)), ConceptId(k)));
    }
    ConceptGraph::new(spec.n_questions, spec.n_concepts, links)
}

fn build_truth(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<(Model, Vec<Vec<f64>>)> {
    let n = spec.n_questions;
    let model = match spec.generator {
        ModelKind::Irt => {
            let a = (0..n).map(|_| spec.discrimination.sample(rng)).collect();
            let b = (0..n).map(|_| spec.difficulty.sample(rng)).collect();
            Model::Irt(IrtModel::new(a, b)?)
        }
        ModelKind::Mirt => {
            let d = spec.mirt_dims;
            let a: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| spec.discrimination.sample(rng).max(0.0)).collect())
                .collect();
            let c = a
                .iter()
                .map(|aj: &Vec<f64>| -spec.difficulty.sample(rng) * aj.iter().sum::<f64>() / d as f64)
                .collect();
            Model::Mirt(MirtModel::new(a, c)?)
        }
        ModelKind::Ncdm => return Err(MaatError::Config("generator must be irt or mirt".into())),
    };
    let dims = model.theta_dim();
    let abilities = (0..spec.n_examinees)
        .map(|_| (0..dims).map(|_| spec.ability.sample(rng)).collect())
        .collect();
    Ok((model, abilities))
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let graph = build_graph(spec, &mut rng)?;
    let (model, abilities) = build_truth(spec, &mut rng)?;

    let n_testing = (spec.testing_fraction * spec.n_examinees as f64).round() as usize;
    let mut examinees: Vec<usize> = (0..spec.n_examinees).collect();
    examinees.shuffle(&mut rng);
    let mut is_testing = vec![false; spec.n_examinees];
    examinees[..n_testing].iter().for_each(|&e| is_testing[e] = true);

    let mut records = Vec::new();
    for e in 0..spec.n_examinees {
        let questions: Vec<usize> = if is_testing[e] {
            (0..spec.n_questions).collect()
        } else {
            let [lo, hi] = spec.historical_answers;
            let count = rng.random_range(lo..=hi);
            let mut picked = index::sample(&mut rng, spec.n_questions, count).into_vec();
            picked.sort_unstable();
            picked
        };
        for q in questions {
            let p = model.predict(&abilities[e], QuestionId(q))?;
            records.push(Record::new(ExamineeId(e), QuestionId(q), rng.random_bool(p)));
        }
    }
    let ids = IdMaps::identity(spec.n_examinees, spec.n_questions, spec.n_concepts);
    let env = Environment::new(graph, records, spec.n_examinees, ids)?;
    Ok(Synthetic {
        env,
        truth: GroundTruth {
            model,
            abilities,
            testing: (0..spec.n_examinees)
                .filter(|&e| is_testing[e])
                .map(ExamineeId)
                .collect(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::split_dataset;

    fn correct_rate(env: &Environment) -> f64 {
        env.records().iter().filter(|r| r.correct).count() as f64 / env.records().len() as f64
    }

    #[test]
    fn even_odds_population() {
        let spec = SyntheticSpec {
            discrimination: ParamDist::constant(1.0),
            difficulty: ParamDist::constant(0.0),
            ability: ParamDist::constant(0.0),
            ..SyntheticSpec::default()
        };
        let s = generate_synthetic(&spec).unwrap();
        assert!(s.env.records().len() >= 10_000);
        assert!((correct_rate(&s.env) - 0.5).abs() <= 0.02);
    }

    #[test]
    fn strong_population_mostly_correct() {
        let spec = SyntheticSpec {
            discrimination: ParamDist::constant(1.0),
            difficulty: ParamDist::constant(0.0),
            ability: ParamDist::constant(5.0),
            ..SyntheticSpec::default()
        };
        assert!(correct_rate(&generate_synthetic(&spec).unwrap().env) > 0.95);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_synthetic(&SyntheticSpec::default()).unwrap();
        let b = generate_synthetic(&SyntheticSpec::default()).unwrap();
        assert_eq!(a.env.records(), b.env.records());
        assert_eq!(a.env.graph(), b.env.graph());
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn threshold_split_recovers_testing_examinees() {
        let spec = SyntheticSpec::default();
        let s = generate_synthetic(&spec).unwrap();
        let mut counts = vec![0usize; spec.n_examinees];
        for r in s.env.records() {
            counts[r.examinee.0] += 1;
        }
        let expected: Vec<ExamineeId> = (0..spec.n_examinees)
            .filter(|&e| counts[e] >= 100)
            .map(ExamineeId)
            .collect();
        let split = split_dataset(&s.env, spec.testing_threshold(), 1).unwrap();
        let mut got = split.testing.clone();
        got.sort();
        assert_eq!(got, expected);
        assert_eq!(got, s.truth.testing);
        assert_eq!(got.len(), 100);
    }

    #[test]
    fn graph_shape() {
        let spec = SyntheticSpec::default();
        let g = generate_synthetic(&spec).unwrap().env.graph().clone();
        assert!(g.questions().all(|q| !g.concepts_of(q).is_empty()));
        // only leftover concepts can push a question past three links
        let over = g.questions().filter(|&q| g.concepts_of(q).len() > 3).count();
        assert!(over <= spec.n_concepts);
        // popular concepts get more questions than the tail
        assert!(g.questions_of(ConceptId(0)).len() > g.questions_of(ConceptId(19)).len());
    }

    #[test]
    fn mirt_generator() {
        let spec = SyntheticSpec {
            generator: ModelKind::Mirt,
            n_examinees: 20,
            n_questions: 120,
            historical_answers: [10, 20],
            ..SyntheticSpec::default()
        };
        let s = generate_synthetic(&spec).unwrap();
        assert_eq!(s.truth.abilities[0].len(), 3);
        assert!(matches!(s.truth.model, Model::Mirt(_)));
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            SyntheticSpec {
                n_questions: 0,
                ..Default::default()
            },
            SyntheticSpec {
                concepts_per_question: [0, 2],
                ..Default::default()
            },
            SyntheticSpec {
                generator: ModelKind::Ncdm,
                ..Default::default()
            },
        ] {
            assert!(matches!(generate_synthetic(&spec), Err(MaatError::Config(_))));
        }
    }
}
