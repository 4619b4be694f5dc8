//! Knowledge-concept coverage of a tested question set and greedy
//! marginal-gain selection.
//!
//! Coverage of concept `k` saturates softly with the number of tested
//! questions linked to it, `cnt / (cnt + 1)`, and concepts are combined with
//! importance weights into a normalized score in `[0, 1)`. The score is
//! monotone submodular, so picking the largest marginal gain at each step is
//! within `1 - 1/e` of the best set of the same size.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use itertools::Itertools;

use crate::environment::{ConceptGraph, ConceptId, QuestionId};
use crate::error::{MaatError, Result};

/// Largest number of subsets `brute_force_optimum` will enumerate.
pub const MAX_ENUMERATION: u128 = 1_000_000;

/// Soft coverage of a concept linked to `count` tested questions.
#[inline]
pub fn inc_cov(count: usize) -> f64 {
    let c = count as f64;
    c / (c + 1.0)
}

/// `inc_cov(count + 1) - inc_cov(count)`.
#[inline]
fn inc_cov_step(count: usize) -> f64 {
    let c = count as f64;
    1.0 / ((c + 1.0) * (c + 2.0))
}

/// Share of concepts linked to at least one question of `tested`.
pub fn nkc(tested: &[QuestionId], graph: &ConceptGraph) -> f64 {
    if graph.n_concepts() == 0 {
        return 0.0;
    }
    let covered: BTreeSet<ConceptId> = tested
        .iter()
        .flat_map(|&q| graph.concepts_of(q).iter().copied())
        .collect();
    covered.len() as f64 / graph.n_concepts() as f64
}

fn check_weights(graph: &ConceptGraph, weights: &[f64]) -> Result<f64> {
    if weights.len() != graph.n_concepts() {
        return Err(MaatError::contract(format!(
            "{} weights for {} concepts",
            weights.len(),
            graph.n_concepts()
        )));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(MaatError::contract("concept weights must be positive and finite"));
    }
    Ok(weights.iter().sum())
}

/// Importance-weighted coverage of an arbitrary question set, recomputed from
/// scratch.
pub fn iwkc_of(graph: &ConceptGraph, weights: &[f64], set: &[QuestionId]) -> Result<f64> {
    let mut state = CoverageState::new(graph, weights)?;
    for &q in set {
        state.add(q)?;
    }
    Ok(state.iwkc())
}

/// Running per-concept counts for one tested set.
#[derive(Debug, Clone)]
pub struct CoverageState<'a> {
    graph: &'a ConceptGraph,
    weights: &'a [f64],
    weight_sum: f64,
    counts: Vec<usize>,
    tested: Vec<bool>,
}

impl<'a> CoverageState<'a> {
    pub fn new(graph: &'a ConceptGraph, weights: &'a [f64]) -> Result<Self> {
        let weight_sum = check_weights(graph, weights)?;
        Ok(Self {
            graph,
            weights,
            weight_sum,
            counts: vec![0; graph.n_concepts()],
            tested: vec![false; graph.n_questions()],
        })
    }

    pub fn with_tested(graph: &'a ConceptGraph, weights: &'a [f64], tested: &[QuestionId]) -> Result<Self> {
        let mut s = Self::new(graph, weights)?;
        for &q in tested {
            s.add(q)?;
        }
        Ok(s)
    }

    pub fn cnt(&self, concept: ConceptId) -> Result<usize> {
        self.counts.get(concept.0).copied().ok_or(MaatError::Lookup {
            kind: "concept",
            id: concept.0,
        })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn is_tested(&self, q: QuestionId) -> bool {
        self.tested.get(q.0).copied().unwrap_or(false)
    }

    pub fn iwkc(&self) -> f64 {
        self.counts
            .iter()
            .zip(self.weights)
            .map(|(&c, &w)| w * inc_cov(c))
            .sum::<f64>()
            / self.weight_sum
    }

    /// Gain in IWKC from adding `question`, touching only its own concepts.
    pub fn marginal_gain(&self, question: QuestionId) -> Result<f64> {
        self.graph.check_question(question)?;
        if self.tested[question.0] {
            return Err(MaatError::contract(format!("question {question} is already tested")));
        }
        Ok(self.gain_unchecked(question))
    }

    #[inline]
    fn gain_unchecked(&self, question: QuestionId) -> f64 {
        self.graph
            .concepts_of(question)
            .iter()
            .map(|k| self.weights[k.0] * inc_cov_step(self.counts[k.0]))
            .sum::<f64>()
            / self.weight_sum
    }

    pub fn add(&mut self, question: QuestionId) -> Result<()> {
        self.graph.check_question(question)?;
        if std::mem::replace(&mut self.tested[question.0], true) {
            return Err(MaatError::contract(format!("question {question} is already tested")));
        }
        for k in self.graph.concepts_of(question) {
            self.counts[k.0] += 1;
        }
        Ok(())
    }

    /// Candidate with the largest marginal gain. Ties go to the earlier
    /// candidate, so the order of `candidates` acts as the tie-breaker.
    pub fn select_diverse(&self, candidates: &[QuestionId]) -> Result<QuestionId> {
        let mut best: Option<(QuestionId, f64)> = None;
        for &q in candidates {
            let g = self.marginal_gain(q)?;
            if best.is_none_or(|(_, bg)| g > bg) {
                best = Some((q, g));
            }
        }
        best.map(|(q, _)| q)
            .ok_or_else(|| MaatError::contract("no candidate to choose from"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GreedyMode {
    #[default]
    Eager,
    /// Re-evaluates stale upper bounds from a max-heap only when they reach
    /// the top. Produces the same sequence as `Eager`.
    Lazy,
}

/// Greedy maximization of IWKC over `pool` with eager evaluation.
pub fn greedy_maximize(
    graph: &ConceptGraph,
    weights: &[f64],
    pool: &BTreeSet<QuestionId>,
    n: usize,
) -> Result<Vec<QuestionId>> {
    greedy_maximize_with(graph, weights, pool, n, GreedyMode::Eager)
}

/// `n` greedy picks over `pool`, each the largest marginal gain with ties to
/// the smallest id.
pub fn greedy_maximize_with(
    graph: &ConceptGraph,
    weights: &[f64],
    pool: &BTreeSet<QuestionId>,
    n: usize,
    mode: GreedyMode,
) -> Result<Vec<QuestionId>> {
    if n > pool.len() {
        return Err(MaatError::contract(format!(
            "cannot pick {n} questions from a pool of {}",
            pool.len()
        )));
    }
    let mut state = CoverageState::new(graph, weights)?;
    for &q in pool {
        graph.check_question(q)?;
    }
    match mode {
        GreedyMode::Eager => {
            let mut left: Vec<QuestionId> = pool.iter().copied().collect();
            let mut picks = Vec::with_capacity(n);
            for _ in 0..n {
                let (i, _) = left
                    .iter()
                    .enumerate()
                    .map(|(i, &q)| (i, state.gain_unchecked(q)))
                    .fold(None, |best: Option<(usize, f64)>, (i, g)| match best {
                        Some((_, bg)) if g <= bg => best,
                        _ => Some((i, g)),
                    })
                    .expect("pool is non-empty while picks remain");
                let q = left.remove(i);
                state.add(q)?;
                picks.push(q);
            }
            Ok(picks)
        }
        GreedyMode::Lazy => lazy_greedy(state, pool, n),
    }
}

#[derive(Debug, PartialEq)]
struct HeapEntry {
    gain: f64,
    question: QuestionId,
    /// Number of picks made when `gain` was computed.
    round: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.question.cmp(&self.question))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn lazy_greedy(mut state: CoverageState<'_>, pool: &BTreeSet<QuestionId>, n: usize) -> Result<Vec<QuestionId>> {
    let mut heap: BinaryHeap<HeapEntry> = pool
        .iter()
        .map(|&q| HeapEntry {
            gain: state.gain_unchecked(q),
            question: q,
            round: 0,
        })
        .collect();
    let mut picks = Vec::with_capacity(n);
    while picks.len() < n {
        let top = heap.pop().expect("pool is non-empty while picks remain");
        if top.round == picks.len() {
            state.add(top.question)?;
            picks.push(top.question);
        } else {
            heap.push(HeapEntry {
                gain: state.gain_unchecked(top.question),
                question: top.question,
                round: picks.len(),
            });
        }
    }
    Ok(picks)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > MAX_ENUMERATION {
            return acc;
        }
    }
    acc
}

/// Best `n`-subset of `pool` by exhaustive enumeration. The first best subset
/// in lexicographic order of ids is returned.
pub fn brute_force_optimum(
    graph: &ConceptGraph,
    weights: &[f64],
    pool: &BTreeSet<QuestionId>,
    n: usize,
) -> Result<(Vec<QuestionId>, f64)> {
    if n > pool.len() {
        return Err(MaatError::contract(format!(
            "cannot pick {n} questions from a pool of {}",
            pool.len()
        )));
    }
    let count = binomial(pool.len(), n);
    if count > MAX_ENUMERATION {
        return Err(MaatError::Capacity(format!(
            "C({}, {n}) subsets exceed the enumeration limit of {MAX_ENUMERATION}",
            pool.len()
        )));
    }
    check_weights(graph, weights)?;
    let mut best: Option<(Vec<QuestionId>, f64)> = None;
    for subset in pool.iter().copied().combinations(n) {
        let value = iwkc_of(graph, weights, &subset)?;
        if best.as_ref().is_none_or(|(_, bv)| value > *bv) {
            best = Some((subset, value));
        }
    }
    Ok(best.unwrap_or((Vec::new(), 0.0)))
}
