//! Static testing environment: examinees, questions, knowledge concepts, the
//! question–concept relation and the answer records.
//!
//! All identifiers are dense indices. The original identifiers found on disk
//! are kept in [`IdMaps`] so reports and persisted artifacts can refer back to
//! them.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MaatError, Result};

macro_rules! dense_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub usize);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

dense_id!(
    /// Dense question index in `[0, |Q|)`.
    QuestionId
);
dense_id!(
    /// Dense knowledge-concept index in `[0, |K|)`.
    ConceptId
);
dense_id!(
    /// Dense examinee index in `[0, |E|)`.
    ExamineeId
);

/// One answer: examinee `examinee` answered `question`, correctly or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Record {
    pub examinee: ExamineeId,
    pub question: QuestionId,
    pub correct: bool,
}

impl Record {
    pub fn new(examinee: ExamineeId, question: QuestionId, correct: bool) -> Self {
        Self {
            examinee,
            question,
            correct,
        }
    }
}

/// The binary relation between questions and knowledge concepts.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptGraph {
    concepts_of: Vec<Vec<ConceptId>>,
    questions_of: Vec<Vec<QuestionId>>,
    links: HashSet<(QuestionId, ConceptId)>,
}

impl ConceptGraph {
    /// Builds the relation and checks that every question and every concept
    /// has at least one link.
    pub fn new(
        n_questions: usize,
        n_concepts: usize,
        links: impl IntoIterator<Item = (QuestionId, ConceptId)>,
    ) -> Result<Self> {
        let graph = Self::new_unchecked(n_questions, n_concepts, links)?;
        if let Some(q) = graph.concepts_of.iter().position(Vec::is_empty) {
            return Err(MaatError::validation(format!("question {q} has no related concept")));
        }
        if let Some(k) = graph.questions_of.iter().position(Vec::is_empty) {
            return Err(MaatError::validation(format!("concept {k} has no related question")));
        }
        Ok(graph)
    }

    /// Builds the relation without the at-least-one-link checks. Ids must
    /// still be in range.
    pub fn new_unchecked(
        n_questions: usize,
        n_concepts: usize,
        links: impl IntoIterator<Item = (QuestionId, ConceptId)>,
    ) -> Result<Self> {
        let mut concepts_of = vec![Vec::new(); n_questions];
        let mut questions_of = vec![Vec::new(); n_concepts];
        let mut set = HashSet::new();
        for (q, k) in links {
            if q.0 >= n_questions {
                return Err(MaatError::Lookup {
                    kind: "question",
                    id: q.0,
                });
            }
            if k.0 >= n_concepts {
                return Err(MaatError::Lookup {
                    kind: "concept",
                    id: k.0,
                });
            }
            if set.insert((q, k)) {
                concepts_of[q.0].push(k);
                questions_of[k.0].push(q);
            }
        }
        concepts_of.iter_mut().for_each(|v| v.sort_unstable());
        questions_of.iter_mut().for_each(|v| v.sort_unstable());
        Ok(Self {
            concepts_of,
            questions_of,
            links: set,
        })
    }

    pub fn n_questions(&self) -> usize {
        self.concepts_of.len()
    }

    pub fn n_concepts(&self) -> usize {
        self.questions_of.len()
    }

    #[inline]
    pub fn contains(&self, question: QuestionId, concept: ConceptId) -> bool {
        self.links.contains(&(question, concept))
    }

    /// Concepts linked to `question`, ascending. Panics on an out-of-range id.
    #[inline]
    pub fn concepts_of(&self, question: QuestionId) -> &[ConceptId] {
        &self.concepts_of[question.0]
    }

    pub fn questions_of(&self, concept: ConceptId) -> &[QuestionId] {
        &self.questions_of[concept.0]
    }

    pub fn questions(&self) -> impl Iterator<Item = QuestionId> {
        (0..self.n_questions()).map(QuestionId)
    }

    pub fn concepts(&self) -> impl Iterator<Item = ConceptId> {
        (0..self.n_concepts()).map(ConceptId)
    }

    /// All links sorted by (question, concept).
    pub fn links(&self) -> Vec<(QuestionId, ConceptId)> {
        let mut out: Vec<_> = self.links.iter().copied().collect();
        out.sort_unstable();
        out
    }

    pub fn check_question(&self, question: QuestionId) -> Result<()> {
        if question.0 < self.n_questions() {
            Ok(())
        } else {
            Err(MaatError::Lookup {
                kind: "question",
                id: question.0,
            })
        }
    }
}

/// Original (on-disk) identifiers for every dense id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdMaps {
    pub examinees: Vec<u64>,
    pub questions: Vec<u64>,
    pub concepts: Vec<u64>,
}

impl IdMaps {
    /// Identity maps, used for generated data.
    pub fn identity(n_examinees: usize, n_questions: usize, n_concepts: usize) -> Self {
        Self {
            examinees: (0..n_examinees as u64).collect(),
            questions: (0..n_questions as u64).collect(),
            concepts: (0..n_concepts as u64).collect(),
        }
    }

    pub fn concept_by_original(&self) -> HashMap<u64, ConceptId> {
        self.concepts
            .iter()
            .enumerate()
            .map(|(i, &o)| (o, ConceptId(i)))
            .collect()
    }
}

/// Immutable testing environment.
#[derive(Debug, Clone)]
pub struct Environment {
    graph: ConceptGraph,
    records: Vec<Record>,
    n_examinees: usize,
    ids: IdMaps,
}

impl Environment {
    pub fn new(graph: ConceptGraph, records: Vec<Record>, n_examinees: usize, ids: IdMaps) -> Result<Self> {
        if ids.examinees.len() != n_examinees
            || ids.questions.len() != graph.n_questions()
            || ids.concepts.len() != graph.n_concepts()
        {
            return Err(MaatError::validation("id maps do not match entity counts"));
        }
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.examinee.0 >= n_examinees {
                return Err(MaatError::Lookup {
                    kind: "examinee",
                    id: r.examinee.0,
                });
            }
            graph.check_question(r.question)?;
            if !seen.insert((r.examinee, r.question)) {
                return Err(MaatError::validation(format!(
                    "duplicate record for examinee {} and question {}",
                    r.examinee, r.question
                )));
            }
        }
        Ok(Self {
            graph,
            records,
            n_examinees,
            ids,
        })
    }

    pub fn graph(&self) -> &ConceptGraph {
        &self.graph
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn ids(&self) -> &IdMaps {
        &self.ids
    }

    pub fn n_examinees(&self) -> usize {
        self.n_examinees
    }

    pub fn n_questions(&self) -> usize {
        self.graph.n_questions()
    }

    pub fn n_concepts(&self) -> usize {
        self.graph.n_concepts()
    }

    /// Records grouped by examinee, in file order within each examinee.
    pub fn records_by_examinee(&self) -> Vec<Vec<Record>> {
        group_by_examinee(&self.records, self.n_examinees)
    }
}

pub(crate) fn group_by_examinee(records: &[Record], n_examinees: usize) -> Vec<Vec<Record>> {
    let mut out = vec![Vec::new(); n_examinees];
    for r in records {
        out[r.examinee.0].push(*r);
    }
    out
}

/// What `load_dataset` had to drop to restore the environment invariants.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub dropped_questions: usize,
    pub dropped_records: usize,
    pub duplicate_records: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetFormat {
    #[default]
    Csv,
}

pub const RECORDS_FILE: &str = "records.csv";
pub const CONCEPTS_FILE: &str = "concepts.csv";

fn parse_field<T: std::str::FromStr>(row: &csv::StringRecord, idx: usize, name: &str, path: &Path) -> Result<T> {
    let line = row.position().map_or(0, |p| p.line());
    let raw = row.get(idx).ok_or_else(|| MaatError::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("missing column {name}"),
    })?;
    raw.trim().parse().map_err(|_| MaatError::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("invalid {name}: {raw:?}"),
    })
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?)
}

/// Loads `records.csv` and `concepts.csv` from `dir`.
///
/// Questions without any related concept are dropped together with their
/// records; the counts end up in the returned [`LoadReport`].
pub fn load_dataset(dir: &Path, format: DatasetFormat) -> Result<(Environment, LoadReport)> {
    let DatasetFormat::Csv = format;
    let records_path = dir.join(RECORDS_FILE);
    let concepts_path = dir.join(CONCEPTS_FILE);

    let mut raw_records = Vec::new();
    let mut reader = open_csv(&records_path)?;
    for row in reader.records() {
        let row = row?;
        let e: u64 = parse_field(&row, 0, "examinee_id", &records_path)?;
        let q: u64 = parse_field(&row, 1, "question_id", &records_path)?;
        let a: u8 = parse_field(&row, 2, "answer", &records_path)?;
        if a > 1 {
            return Err(MaatError::Parse {
                path: records_path.clone(),
                line: row.position().map_or(0, |p| p.line()),
                message: format!("answer must be 0 or 1, got {a}"),
            });
        }
        raw_records.push((e, q, a == 1));
    }

    let mut raw_links = Vec::new();
    let mut reader = open_csv(&concepts_path)?;
    for row in reader.records() {
        let row = row?;
        let q: u64 = parse_field(&row, 0, "question_id", &concepts_path)?;
        let k: u64 = parse_field(&row, 1, "concept_id", &concepts_path)?;
        raw_links.push((q, k));
    }

    if raw_records.is_empty() || raw_links.is_empty() {
        return Err(MaatError::validation(format!("empty dataset in {}", dir.display())));
    }

    let linked: BTreeSet<u64> = raw_links.iter().map(|&(q, _)| q).collect();
    let all_questions: BTreeSet<u64> = raw_records
        .iter()
        .map(|&(_, q, _)| q)
        .chain(linked.iter().copied())
        .collect();
    let mut report = LoadReport {
        dropped_questions: all_questions.len() - linked.len(),
        ..Default::default()
    };

    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(raw_records.len());
    for (e, q, a) in raw_records {
        if !linked.contains(&q) {
            report.dropped_records += 1;
        } else if !seen.insert((e, q)) {
            report.duplicate_records += 1;
        } else {
            kept.push((e, q, a));
        }
    }
    if report.dropped_questions > 0 || report.duplicate_records > 0 {
        log::warn!(
            "{}: dropped {} unlinked questions ({} records) and {} duplicate records",
            dir.display(),
            report.dropped_questions,
            report.dropped_records,
            report.duplicate_records
        );
    }
    if kept.is_empty() {
        return Err(MaatError::validation("no record refers to a linked question"));
    }

    let env = build_from_original(&kept, &raw_links)?;
    Ok((env, report))
}

/// Dense re-indexing of original ids, ascending.
fn build_from_original(records: &[(u64, u64, bool)], links: &[(u64, u64)]) -> Result<Environment> {
    let examinees: BTreeSet<u64> = records.iter().map(|r| r.0).collect();
    let questions: BTreeSet<u64> = links.iter().map(|l| l.0).collect();
    let concepts: BTreeSet<u64> = links.iter().map(|l| l.1).collect();
    let index = |s: &BTreeSet<u64>| -> HashMap<u64, usize> { s.iter().enumerate().map(|(i, &o)| (o, i)).collect() };
    let (ei, qi, ki) = (index(&examinees), index(&questions), index(&concepts));

    let graph = ConceptGraph::new(
        questions.len(),
        concepts.len(),
        links.iter().map(|(q, k)| (QuestionId(qi[q]), ConceptId(ki[k]))),
    )?;
    let recs = records
        .iter()
        .map(|&(e, q, a)| Record::new(ExamineeId(ei[&e]), QuestionId(qi[&q]), a))
        .collect();
    Environment::new(
        graph,
        recs,
        examinees.len(),
        IdMaps {
            examinees: examinees.into_iter().collect(),
            questions: questions.into_iter().collect(),
            concepts: concepts.into_iter().collect(),
        },
    )
}

/// Writes the environment as `records.csv` and `concepts.csv` under `dir`,
/// using the original identifiers.
pub fn save_dataset(env: &Environment, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let ids = env.ids();
    let mut w = csv::Writer::from_path(dir.join(RECORDS_FILE))?;
    w.write_record(["examinee_id", "question_id", "answer"])?;
    for r in env.records() {
        w.write_record(&[
            ids.examinees[r.examinee.0].to_string(),
            ids.questions[r.question.0].to_string(),
            u8::from(r.correct).to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join(CONCEPTS_FILE))?;
    w.write_record(["question_id", "concept_id"])?;
    for (q, k) in env.graph().links() {
        w.write_record(&[ids.questions[q.0].to_string(), ids.concepts[k.0].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterThresholds {
    pub min_questions_per_concept: usize,
    pub min_records_per_question: usize,
    pub min_records_per_examinee: usize,
}

/// Removes concepts, questions and examinees below the thresholds, repeating
/// until nothing else can be removed, then re-indexes densely.
pub fn filter_dataset(env: &Environment, t: FilterThresholds) -> Result<Environment> {
    let g = env.graph();
    let mut q_alive = vec![true; env.n_questions()];
    let mut k_alive = vec![true; env.n_concepts()];
    let mut e_alive = vec![true; env.n_examinees()];

    loop {
        let mut changed = false;

        for k in g.concepts() {
            if k_alive[k.0] {
                let n = g.questions_of(k).iter().filter(|q| q_alive[q.0]).count();
                if n < t.min_questions_per_concept || n == 0 {
                    k_alive[k.0] = false;
                    changed = true;
                }
            }
        }

        let mut per_question = vec![0usize; env.n_questions()];
        let mut per_examinee = vec![0usize; env.n_examinees()];
        for r in env.records() {
            if q_alive[r.question.0] && e_alive[r.examinee.0] {
                per_question[r.question.0] += 1;
                per_examinee[r.examinee.0] += 1;
            }
        }

        for q in g.questions() {
            if q_alive[q.0] {
                let linked = g.concepts_of(q).iter().any(|k| k_alive[k.0]);
                if !linked || per_question[q.0] < t.min_records_per_question {
                    q_alive[q.0] = false;
                    changed = true;
                }
            }
        }
        for (e, alive) in e_alive.iter_mut().enumerate() {
            if *alive && (per_examinee[e] < t.min_records_per_examinee || per_examinee[e] == 0) {
                *alive = false;
                changed = true;
            }
        }

        if !changed {
            break;
        }
    }

    let ids = env.ids();
    let links: Vec<(u64, u64)> = g
        .links()
        .into_iter()
        .filter(|(q, k)| q_alive[q.0] && k_alive[k.0])
        .map(|(q, k)| (ids.questions[q.0], ids.concepts[k.0]))
        .collect();
    let records: Vec<(u64, u64, bool)> = env
        .records()
        .iter()
        .filter(|r| q_alive[r.question.0] && e_alive[r.examinee.0])
        .map(|r| (ids.examinees[r.examinee.0], ids.questions[r.question.0], r.correct))
        .collect();
    if records.is_empty() || links.is_empty() {
        return Err(MaatError::validation("filtering removed every record"));
    }
    build_from_original(&records, &links)
}

/// Partition of examinees into historical data (used for pretraining and
/// importance weights) and testing examinees (simulated test takers).
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub historical: Vec<ExamineeId>,
    pub historical_records: Vec<Record>,
    /// Testing examinees in seeded evaluation order.
    pub testing: Vec<ExamineeId>,
    pub testing_records: Vec<Record>,
}

impl DatasetSplit {
    /// Answers of each testing examinee, keyed by question.
    pub fn testing_answers(&self) -> BTreeMap<ExamineeId, BTreeMap<QuestionId, bool>> {
        let mut out: BTreeMap<ExamineeId, BTreeMap<QuestionId, bool>> = BTreeMap::new();
        for r in &self.testing_records {
            out.entry(r.examinee).or_default().insert(r.question, r.correct);
        }
        out
    }
}

/// Examinees with at least `min_testing_records` records become testing
/// examinees; everyone else is historical. The seed fixes the order in which
/// testing examinees are listed.
pub fn split_dataset(env: &Environment, min_testing_records: usize, seed: u64) -> Result<DatasetSplit> {
    let mut counts = vec![0usize; env.n_examinees()];
    for r in env.records() {
        counts[r.examinee.0] += 1;
    }
    let is_testing: Vec<bool> = counts.iter().map(|&c| c >= min_testing_records).collect();
    let mut testing: Vec<ExamineeId> = (0..env.n_examinees())
        .filter(|&e| is_testing[e])
        .map(ExamineeId)
        .collect();
    if testing.is_empty() {
        return Err(MaatError::validation(format!(
            "no examinee has at least {min_testing_records} records"
        )));
    }
    let historical = (0..env.n_examinees())
        .filter(|&e| !is_testing[e])
        .map(ExamineeId)
        .collect();
    testing.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let (testing_records, historical_records) = env.records().iter().partition(|r| is_testing[r.examinee.0]);
    Ok(DatasetSplit {
        historical,
        historical_records,
        testing,
        testing_records,
    })
}
