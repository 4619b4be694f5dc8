//! Batch experiments: every (strategy, model) run over all testing
//! examinees, aggregated into per-step curves.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{auc_informativeness, coverage_metric, squared_error};
use super::synthetic::{generate_synthetic, GroundTruth, SyntheticSpec};
use super::{run_session, RecordedAnswers, SessionConfig};
use crate::baselines::{build_strategy, CandidateSize, StrategyKind, StrategyParams};
use crate::cdm::{pretrain, DiagnosisModel, Model, ModelKind, PretrainConfig, UpdateConfig};
use crate::environment::{load_dataset, split_dataset, DatasetFormat, DatasetSplit, Environment, ExamineeId, Record};
use crate::error::{MaatError, Result};
use crate::importance::{
    compute_importance, train_embeddings, ImportanceTable, SgnsConfig, DEFAULT_GAMMA, DEFAULT_NEIGHBORS,
};

pub const REPORT_FILE: &str = "report.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const RUNS_FILE: &str = "runs.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
pub enum DatasetSource {
    /// Directory holding `records.csv` and `concepts.csv`.
    Path(PathBuf),
    Synthetic(SyntheticSpec),
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic(SyntheticSpec::default())
    }
}

/// Where the reference state for the estimate error comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeeReference {
    /// Generator truth when the model matches a one-dimensional synthetic
    /// generator, otherwise a refit on the full record set.
    #[default]
    Auto,
    Truth,
    Refit,
}

/// One (strategy, model) pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSpec {
    pub strategy: StrategyKind,
    pub model: ModelKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub strategies: Vec<StrategyKind>,
    pub models: Vec<ModelKind>,
    /// Explicit pairings; replaces the strategies × models product.
    pub runs: Option<Vec<RunSpec>>,
    pub test_length: usize,
    /// MAAT candidate set sizes; more than one runs the ablation.
    pub candidate_sizes: Vec<CandidateSize>,
    pub seeds: Vec<u64>,
    pub dataset: DatasetSource,
    /// Examinees with at least this many records are tested. Defaults to
    /// the synthetic threshold, or twice the test length on real data.
    pub min_testing_records: Option<usize>,
    pub max_examinees: Option<usize>,
    /// Leave administered questions out of the AUC evaluation set.
    pub exclude_administered: bool,
    pub auc_steps: Vec<usize>,
    pub see_reference: SeeReference,
    /// Schedule of the full-record refit used as SEE reference.
    pub reference_update: UpdateConfig,
    pub update: UpdateConfig,
    pub pretrain: PretrainConfig,
    pub sgns: SgnsConfig,
    pub gamma: f64,
    pub neighbors: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            strategies: vec![StrategyKind::Maat, StrategyKind::Rand],
            models: vec![ModelKind::Irt],
            runs: None,
            test_length: 50,
            candidate_sizes: vec![CandidateSize::default()],
            seeds: vec![42],
            dataset: DatasetSource::default(),
            min_testing_records: None,
            max_examinees: None,
            exclude_administered: true,
            auc_steps: vec![5, 10, 15, 20, 25, 50],
            see_reference: SeeReference::Auto,
            reference_update: UpdateConfig {
                learning_rate: 0.1,
                epochs: 500,
            },
            update: UpdateConfig::default(),
            pretrain: PretrainConfig::default(),
            sgns: SgnsConfig::default(),
            gamma: DEFAULT_GAMMA,
            neighbors: DEFAULT_NEIGHBORS,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| MaatError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// The pairings to run, in configuration order.
    pub fn run_specs(&self) -> Vec<RunSpec> {
        match &self.runs {
            Some(runs) => runs.clone(),
            None => self
                .strategies
                .iter()
                .flat_map(|&strategy| self.models.iter().map(move |&model| RunSpec { strategy, model }))
                .collect(),
        }
    }

    pub fn min_records(&self) -> usize {
        self.min_testing_records.unwrap_or(match &self.dataset {
            DatasetSource::Synthetic(spec) => spec.testing_threshold(),
            DatasetSource::Path(_) => 2 * self.test_length,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.test_length == 0 {
            return Err(MaatError::Config("test_length must be at least 1".into()));
        }
        let specs = self.run_specs();
        if specs.is_empty() {
            return Err(MaatError::Config("no (strategy, model) pair to run".into()));
        }
        let incompatible: Vec<String> = specs
            .iter()
            .filter(|s| !s.strategy.supports(s.model))
            .map(|s| format!("({}, {})", s.strategy, s.model))
            .collect();
        if !incompatible.is_empty() {
            return Err(MaatError::Config(format!(
                "incompatible strategy/model pairs: {}",
                incompatible.join(", ")
            )));
        }
        if self.candidate_sizes.is_empty() || self.candidate_sizes.contains(&CandidateSize::Fixed(0)) {
            return Err(MaatError::Config("candidate sizes must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(MaatError::Config("at least one seed is required".into()));
        }
        if let Some(&t) = self.auc_steps.iter().find(|&&t| t == 0 || t > self.test_length) {
            return Err(MaatError::Config(format!(
                "AUC step {t} outside 1..={}",
                self.test_length
            )));
        }
        if self.min_records() < self.test_length {
            return Err(MaatError::Config(format!(
                "min_testing_records {} is below the test length {}",
                self.min_records(),
                self.test_length
            )));
        }
        if !(self.gamma > 0.0) || self.neighbors == 0 {
            return Err(MaatError::Config(
                "gamma must be positive and neighbors at least 1".into(),
            ));
        }
        if let DatasetSource::Synthetic(spec) = &self.dataset {
            spec.validate()?;
        }
        Ok(())
    }

    /// Run labels for one pairing: MAAT gets one label per candidate size
    /// when the ablation has more than one.
    fn labels(&self, spec: RunSpec) -> Vec<(String, CandidateSize)> {
        let multi = self.candidate_sizes.len() > 1;
        if spec.strategy == StrategyKind::Maat {
            self.candidate_sizes
                .iter()
                .map(|&kc| {
                    let label = if multi {
                        format!("maat[kc={kc}]")
                    } else {
                        "maat".to_string()
                    };
                    (label, kc)
                })
                .collect()
        } else {
            vec![(spec.strategy.to_string(), self.candidate_sizes[0])]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Auc,
    Cov,
    See,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Auc => "auc",
            Metric::Cov => "cov",
            Metric::See => "see",
        })
    }
}

/// One administered step of one examinee, as written to `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub strategy: String,
    pub model: ModelKind,
    pub seed: u64,
    pub examinee: usize,
    pub step: usize,
    pub question: usize,
    pub correct: bool,
    pub coverage: f64,
    pub see: f64,
    /// Only on AUC grid steps, and empty when the evaluation set is single-class.
    pub auc: Option<f64>,
}

/// One aggregated point, as written to `curves.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub strategy: String,
    pub model: ModelKind,
    pub step: usize,
    pub metric: Metric,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UndefinedAuc {
    pub strategy: String,
    pub model: ModelKind,
    pub step: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub version: String,
    pub config: ExperimentConfig,
    pub n_examinees: usize,
    pub n_questions: usize,
    pub n_concepts: usize,
    /// Testing examinees per seed.
    pub n_testing: usize,
    pub see_reference: BTreeMap<ModelKind, SeeReference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metadata: ReportMetadata,
    pub undefined_auc: Vec<UndefinedAuc>,
    pub curves: Vec<CurveRow>,
}

impl ExperimentReport {
    /// The aggregated point for one run label, model, metric and step.
    pub fn point(&self, strategy: &str, model: ModelKind, metric: Metric, step: usize) -> Option<&CurveRow> {
        self.curves
            .iter()
            .find(|c| c.strategy == strategy && c.model == model && c.metric == metric && c.step == step)
    }

    /// Mean curve over steps `1..=N` for a per-step metric.
    pub fn curve(&self, strategy: &str, model: ModelKind, metric: Metric) -> Vec<f64> {
        self.curves
            .iter()
            .filter(|c| c.strategy == strategy && c.model == model && c.metric == metric)
            .map(|c| c.mean)
            .collect()
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join(REPORT_FILE))?)?)
    }
}

/// Report plus the raw per-step rows it was aggregated from.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub runs: Vec<RunRow>,
}

impl ExperimentOutcome {
    /// Writes `report.json`, `curves.csv` and `runs.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(REPORT_FILE), serde_json::to_string_pretty(&self.report)?)?;
        write_csv(&dir.join(CURVES_FILE), &self.report.curves)?;
        write_csv(&dir.join(RUNS_FILE), &self.runs)
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| Ok(row?)).collect()
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

// coverage, SEE and defined AUC values, undefined-AUC count, AUC evaluated at this step
type StepAccumulator = (Vec<f64>, Vec<f64>, Vec<f64>, usize, bool);

/// Aggregates per-step rows into curves. Values are summed in row order,
/// so re-aggregating rows read back from `runs.csv` reproduces the report.
pub fn aggregate(runs: &[RunRow]) -> (Vec<CurveRow>, Vec<UndefinedAuc>) {
    // (label, model) in first-appearance order, then step
    let mut order: Vec<(String, ModelKind)> = Vec::new();
    let mut groups: BTreeMap<(usize, usize), StepAccumulator> = BTreeMap::new();
    for row in runs {
        let key = (row.strategy.clone(), row.model);
        let idx = match order.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                order.push(key);
                order.len() - 1
            }
        };
        let g = groups.entry((idx, row.step)).or_default();
        g.0.push(row.coverage);
        g.1.push(row.see);
        match row.auc {
            Some(a) => g.2.push(a),
            None => g.3 += 1,
        }
        g.4 |= row.auc.is_some();
    }
    let auc_steps: BTreeSet<(usize, usize)> = groups.iter().filter(|(_, g)| g.4).map(|(k, _)| *k).collect();
    let mut curves = Vec::new();
    let mut undefined = Vec::new();
    for ((idx, step), (cov, see, auc, missing, _)) in groups {
        let (strategy, model) = order[idx].clone();
        let mut push = |metric, values: &[f64]| {
            if values.is_empty() {
                return;
            }
            let (mean, stderr) = mean_stderr(values);
            curves.push(CurveRow {
                strategy: strategy.clone(),
                model,
                step,
                metric,
                mean,
                stderr,
                n: values.len(),
            });
        };
        push(Metric::Cov, &cov);
        push(Metric::See, &see);
        push(Metric::Auc, &auc);
        if missing > 0 && auc_steps.contains(&(idx, step)) {
            undefined.push(UndefinedAuc {
                strategy,
                model,
                step,
                count: missing,
            });
        }
    }
    curves.sort_by(|a, b| {
        let ia = order.iter().position(|k| k.0 == a.strategy && k.1 == a.model);
        let ib = order.iter().position(|k| k.0 == b.strategy && k.1 == b.model);
        (ia, a.metric, a.step).cmp(&(ib, b.metric, b.step))
    });
    (curves, undefined)
}

/// Dataset, split and everything fitted on the historical side for one seed.
pub struct Prepared {
    pub env: Environment,
    pub truth: Option<GroundTruth>,
    pub split: DatasetSplit,
    pub models: BTreeMap<ModelKind, Model>,
    pub importance: ImportanceTable,
    pub graph: Arc<crate::environment::ConceptGraph>,
}

pub fn load_source(source: &DatasetSource) -> Result<(Environment, Option<GroundTruth>)> {
    match source {
        DatasetSource::Path(dir) => {
            let (env, report) = load_dataset(dir, DatasetFormat::Csv)?;
            if report.dropped_records > 0 || report.duplicate_records > 0 {
                log::warn!("dataset load dropped records: {report:?}");
            }
            Ok((env, None))
        }
        DatasetSource::Synthetic(spec) => {
            let s = generate_synthetic(spec)?;
            Ok((s.env, Some(s.truth)))
        }
    }
}

/// Splits the data and fits every requested model plus the concept
/// importance table on the historical examinees.
pub fn prepare(
    env: Environment,
    truth: Option<GroundTruth>,
    kinds: &BTreeSet<ModelKind>,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Prepared> {
    let mut split = split_dataset(&env, cfg.min_records(), seed)?;
    if let Some(max) = cfg.max_examinees {
        split.testing.truncate(max);
    }
    let pretrain_cfg = PretrainConfig {
        seed,
        ..cfg.pretrain.clone()
    };
    let models = kinds
        .iter()
        .map(|&kind| {
            log::info!("pretraining {kind} on {} records", split.historical_records.len());
            Ok((
                kind,
                pretrain(kind, &split.historical_records, env.graph(), &pretrain_cfg)?.model,
            ))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    let sgns = SgnsConfig { seed, ..cfg.sgns };
    let emb = train_embeddings(&split.historical_records, env.n_questions(), &sgns)?;
    let importance = compute_importance(&emb, env.graph(), cfg.neighbors, cfg.gamma)?;
    let graph = Arc::new(env.graph().clone());
    Ok(Prepared {
        env,
        truth,
        split,
        models,
        importance,
        graph,
    })
}

fn resolve_reference(cfg: &ExperimentConfig, truth: Option<&GroundTruth>, model: &Model) -> Result<SeeReference> {
    let usable = truth.is_some_and(|t| t.model.kind() == model.kind() && t.model.theta_dim() == model.theta_dim());
    match cfg.see_reference {
        SeeReference::Auto if usable && model.kind() == ModelKind::Irt => Ok(SeeReference::Truth),
        SeeReference::Auto => Ok(SeeReference::Refit),
        SeeReference::Truth if !usable => Err(MaatError::Config(format!(
            "no generator truth matches the {} examinee state",
            model.kind()
        ))),
        other => Ok(other),
    }
}

/// Reference state of every testing examinee, in split order.
fn references(
    prepared: &Prepared,
    model: &Model,
    rule: SeeReference,
    by_examinee: &BTreeMap<ExamineeId, Vec<Record>>,
    cfg: &ExperimentConfig,
) -> Result<Vec<Vec<f64>>> {
    prepared
        .split
        .testing
        .par_iter()
        .map(|e| match (rule, &prepared.truth) {
            (SeeReference::Truth, Some(t)) => Ok(t.abilities[e.0].clone()),
            _ => model.update(&model.initial_theta(), &by_examinee[e], &cfg.reference_update),
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn examinee_rows(
    label: &str,
    strategy: &dyn crate::baselines::Strategy,
    model: &Model,
    examinee: ExamineeId,
    records: &[Record],
    reference: &[f64],
    prepared: &Prepared,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<RunRow>> {
    let answers: BTreeMap<_, _> = records.iter().map(|r| (r.question, r.correct)).collect();
    let session_cfg = SessionConfig {
        test_length: cfg.test_length,
        update: cfg.update,
        replay: true,
    };
    let trace = run_session(strategy, model, examinee, &mut RecordedAnswers(answers), &session_cfg)?;
    let tested = trace.state.tested();
    let mut rows = Vec::with_capacity(cfg.test_length);
    for t in 1..=cfg.test_length {
        let theta = &trace.thetas[t - 1];
        let auc = if cfg.auc_steps.contains(&t) {
            let administered: BTreeSet<_> = tested[..t].iter().collect();
            let eval: Vec<Record> = records
                .iter()
                .filter(|r| !cfg.exclude_administered || !administered.contains(&r.question))
                .copied()
                .collect();
            auc_informativeness(model, theta, &eval)?
        } else {
            None
        };
        let record = trace.state.records()[t - 1];
        rows.push(RunRow {
            strategy: label.to_string(),
            model: model.kind(),
            seed,
            examinee: examinee.0,
            step: t,
            question: record.question.0,
            correct: record.correct,
            coverage: coverage_metric(&tested[..t], &prepared.graph),
            see: squared_error(theta, reference)?,
            auc,
        });
    }
    Ok(rows)
}

/// Runs every configured pairing for every seed and aggregates the curves.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let specs = cfg.run_specs();
    let kinds: BTreeSet<ModelKind> = specs.iter().map(|s| s.model).collect();
    let (env, truth) = load_source(&cfg.dataset)?;
    let (n_examinees, n_questions, n_concepts) = (env.n_examinees(), env.n_questions(), env.n_concepts());

    let mut runs = Vec::new();
    let mut n_testing = 0;
    let mut see_reference = BTreeMap::new();
    for &seed in &cfg.seeds {
        let prepared = prepare(env.clone(), truth.clone(), &kinds, cfg, seed)?;
        n_testing = prepared.split.testing.len();
        let mut by_examinee: BTreeMap<ExamineeId, Vec<Record>> = BTreeMap::new();
        for r in &prepared.split.testing_records {
            by_examinee.entry(r.examinee).or_default().push(*r);
        }
        let mut refs = BTreeMap::new();
        for (&kind, model) in &prepared.models {
            let rule = resolve_reference(cfg, prepared.truth.as_ref(), model)?;
            see_reference.insert(kind, rule);
            refs.insert(kind, references(&prepared, model, rule, &by_examinee, cfg)?);
        }
        let weights = Arc::new(prepared.importance.weights.clone());
        for spec in &specs {
            let model = &prepared.models[&spec.model];
            for (label, kc) in cfg.labels(*spec) {
                log::info!("running {label}/{} (seed {seed})", spec.model);
                let strategy = build_strategy(
                    spec.strategy,
                    &StrategyParams {
                        candidates: kc,
                        seed,
                        graph: Arc::clone(&prepared.graph),
                        weights: Arc::clone(&weights),
                    },
                );
                let per_examinee = prepared
                    .split
                    .testing
                    .par_iter()
                    .zip(refs[&spec.model].par_iter())
                    .map(|(&e, reference)| {
                        examinee_rows(
                            &label,
                            strategy.as_ref(),
                            model,
                            e,
                            &by_examinee[&e],
                            reference,
                            &prepared,
                            cfg,
                            seed,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                runs.extend(per_examinee.into_iter().flatten());
            }
        }
    }
    let (curves, undefined_auc) = aggregate(&runs);
    Ok(ExperimentOutcome {
        report: ExperimentReport {
            metadata: ReportMetadata {
                version: env!("CARGO_PKG_VERSION").to_string(),
                config: cfg.clone(),
                n_examinees,
                n_questions,
                n_concepts,
                n_testing,
                see_reference,
            },
            undefined_auc,
            curves,
        },
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            test_length: 2,
            auc_steps: vec![1, 2],
            max_examinees: Some(1),
            strategies: vec![StrategyKind::Rand],
            dataset: DatasetSource::Synthetic(SyntheticSpec {
                n_examinees: 40,
                n_questions: 30,
                n_concepts: 5,
                historical_answers: [10, 20],
                ..SyntheticSpec::default()
            }),
            pretrain: PretrainConfig {
                epochs: 5,
                ..PretrainConfig::default()
            },
            sgns: SgnsConfig {
                epochs: 1,
                ..SgnsConfig::default()
            },
            neighbors: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_examinee_two_steps() {
        let out = run_experiment(&small()).unwrap();
        assert_eq!(out.runs.len(), 2);
        let cov = out.report.curve("rand", ModelKind::Irt, Metric::Cov);
        assert_eq!(cov.len(), 2);
        assert!(cov[0] <= cov[1]);
    }

    #[test]
    fn incompatible_pair_is_listed() {
        let cfg = ExperimentConfig {
            strategies: vec![StrategyKind::Mfi, StrategyKind::Maat],
            models: vec![ModelKind::Mirt],
            ..ExperimentConfig::default()
        };
        match cfg.validate() {
            Err(MaatError::Config(msg)) => assert!(msg.contains("(mfi, mirt)") && !msg.contains("maat"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_parses_from_toml() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            strategies = ["maat", "rand"]
            models = ["irt", "ncdm"]
            candidate_sizes = [1, 10, "all"]
            test_length = 20
            auc_steps = [10, 20]

            [dataset.synthetic]
            n_examinees = 50
            generator = "irt"
            difficulty = { dist = "normal", mean = 0.0, std = 1.0 }
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(
            cfg.candidate_sizes,
            vec![CandidateSize::Fixed(1), CandidateSize::Fixed(10), CandidateSize::ALL]
        );
        assert_eq!(
            cfg.labels(RunSpec {
                strategy: StrategyKind::Maat,
                model: ModelKind::Irt
            })[2]
                .0,
            "maat[kc=all]"
        );
        assert!(ExperimentConfig::from_toml("test_lenght = 3").is_err());
    }

    #[test]
    fn stderr_uses_sample_variance() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[4.0]), (4.0, 0.0));
    }
}
