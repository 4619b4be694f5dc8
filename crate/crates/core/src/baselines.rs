//! Selection strategies behind one interface: MAAT itself and the classic
//! baselines (random, Fisher information, Kullback–Leibler information and
//! their multidimensional versions).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cdm::{dot, sigmoid, DiagnosisModel, IrtModel, MirtModel, Model, ModelKind};
use crate::diversity::CoverageState;
use crate::environment::{ConceptGraph, QuestionId};
use crate::error::{MaatError, Result};
use crate::quality::select_candidates;
use crate::session::SessionState;

/// Ridge added to the accumulated information matrix.
pub const DOPT_RIDGE: f64 = 1e-6;
pub const KLI_POINTS: usize = 64;
pub const MKLI_POINTS: usize = 16;
pub const MKLI_MAX_DIMS: usize = 3;

/// Everything a strategy may look at when choosing the next question.
pub struct SelectionContext<'a> {
    pub session: &'a SessionState,
    /// Selectable questions; a subset of `session.untested()`.
    pub pool: &'a BTreeSet<QuestionId>,
    pub model: &'a Model,
    pub theta: &'a [f64],
}

pub trait Strategy: Send + Sync {
    fn kind(&self) -> StrategyKind;
    fn select(&self, ctx: &SelectionContext<'_>) -> Result<QuestionId>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Maat,
    Rand,
    Mfi,
    Kli,
    Dopt,
    Mkli,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Maat,
        StrategyKind::Rand,
        StrategyKind::Mfi,
        StrategyKind::Kli,
        StrategyKind::Dopt,
        StrategyKind::Mkli,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Maat => "maat",
            StrategyKind::Rand => "rand",
            StrategyKind::Mfi => "mfi",
            StrategyKind::Kli => "kli",
            StrategyKind::Dopt => "dopt",
            StrategyKind::Mkli => "mkli",
        }
    }

    pub fn supports(self, model: ModelKind) -> bool {
        match self {
            StrategyKind::Maat | StrategyKind::Rand => true,
            StrategyKind::Mfi | StrategyKind::Kli => model == ModelKind::Irt,
            StrategyKind::Dopt | StrategyKind::Mkli => model == ModelKind::Mirt,
        }
    }

    pub fn check(self, model: ModelKind) -> Result<()> {
        if self.supports(model) {
            Ok(())
        } else {
            Err(MaatError::Capability {
                strategy: self.name().into(),
                model: model.name().into(),
            })
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = MaatError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| MaatError::Config(format!("unknown strategy {s:?}")))
    }
}

/// Candidate set size for MAAT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CandidateSize {
    Fixed(usize),
    /// The whole selectable pool, i.e. coverage alone decides.
    All(AllMarker),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllMarker {
    All,
}

impl CandidateSize {
    pub const ALL: CandidateSize = CandidateSize::All(AllMarker::All);

    pub fn resolve(self, pool: usize) -> usize {
        match self {
            CandidateSize::Fixed(k) => k,
            CandidateSize::All(_) => pool.max(1),
        }
    }
}

impl Default for CandidateSize {
    fn default() -> Self {
        CandidateSize::Fixed(10)
    }
}

impl fmt::Display for CandidateSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateSize::Fixed(k) => write!(f, "{k}"),
            CandidateSize::All(_) => f.write_str("all"),
        }
    }
}

impl FromStr for CandidateSize {
    type Err = MaatError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Self::ALL);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(CandidateSize::Fixed(k)),
            _ => Err(MaatError::Config(format!("invalid candidate size {s:?}"))),
        }
    }
}

fn check_pool(ctx: &SelectionContext<'_>) -> Result<()> {
    if ctx.pool.is_empty() {
        return Err(MaatError::contract("no selectable question left"));
    }
    Ok(())
}

/// First question with the largest score, scanning the pool in id order.
fn argmax_by(pool: &BTreeSet<QuestionId>, mut score: impl FnMut(QuestionId) -> Result<f64>) -> Result<QuestionId> {
    let mut best: Option<(QuestionId, f64)> = None;
    for &q in pool {
        let s = score(q)?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((q, s));
        }
    }
    best.map(|(q, _)| q)
        .ok_or_else(|| MaatError::contract("no selectable question left"))
}

fn need_irt(model: &Model, kind: StrategyKind) -> Result<&IrtModel> {
    model.as_irt().ok_or_else(|| MaatError::Capability {
        strategy: kind.name().into(),
        model: model.kind().name().into(),
    })
}

fn need_mirt(model: &Model, kind: StrategyKind) -> Result<&MirtModel> {
    model.as_mirt().ok_or_else(|| MaatError::Capability {
        strategy: kind.name().into(),
        model: model.kind().name().into(),
    })
}

/// Quality filter by expected model change, then the best coverage gain.
pub struct Maat {
    pub candidates: CandidateSize,
    pub graph: Arc<ConceptGraph>,
    pub weights: Arc<Vec<f64>>,
}

impl Strategy for Maat {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Maat
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<QuestionId> {
        check_pool(ctx)?;
        let k_c = self.candidates.resolve(ctx.pool.len());
        let candidates = select_candidates(ctx.model, ctx.theta, ctx.pool, k_c)?;
        let coverage = CoverageState::with_tested(&self.graph, &self.weights, ctx.session.tested())?;
        coverage.select_diverse(&candidates)
    }
}

/// Uniform draw, reproducible from (seed, examinee, step).
pub struct Random {
    pub seed: u64,
}

impl Random {
    fn rng(&self, examinee: usize, step: usize) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&(examinee as u64).to_le_bytes());
        key[16..24].copy_from_slice(&(step as u64).to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

impl Strategy for Random {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Rand
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<QuestionId> {
        check_pool(ctx)?;
        let mut rng = self.rng(ctx.session.examinee().0, ctx.session.step());
        let i = rng.random_range(0..ctx.pool.len());
        Ok(*ctx.pool.iter().nth(i).expect("index within pool"))
    }
}

/// 2PL Fisher information `a^2 P (1 - P)`.
pub fn fisher_information(model: &IrtModel, theta: f64, q: QuestionId) -> Result<f64> {
    let (a, _) = model.params(q)?;
    let p = model.prob(theta, q)?;
    Ok(a * a * p * (1.0 - p))
}

pub struct MaxFisher;

impl Strategy for MaxFisher {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Mfi
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<QuestionId> {
        let irt = need_irt(ctx.model, self.kind())?;
        check_pool(ctx)?;
        argmax_by(ctx.pool, |q| fisher_information(irt, ctx.theta[0], q))
    }
}

fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let term = |x: f64, y: f64| if x > 0.0 { x * (x / y).ln() } else { 0.0 };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// Integration half-width after `step` answered questions.
pub fn kl_radius(step: usize) -> f64 {
    3.0 / (step as f64).sqrt()
}

/// Trapezoid nodes and weights on `[lo, hi]`.
fn trapezoid(lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
    let h = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            let w = if i == 0 || i == points - 1 { h / 2.0 } else { h };
            (lo + h * i as f64, w)
        })
        .collect()
}

/// `∫ KL(P(θ̂) ‖ P(θ)) dθ` over `θ̂ ± delta` by the trapezoid rule.
pub fn kl_information(model: &IrtModel, theta_hat: f64, delta: f64, q: QuestionId, points: usize) -> Result<f64> {
    if points < 2 {
        return Err(MaatError::contract("quadrature needs at least two points"));
    }
    let p_hat = model.prob(theta_hat, q)?;
    trapezoid(theta_hat - delta, theta_hat + delta, points)
        .into_iter()
        .map(|(t, w)| Ok(w * bernoulli_kl(p_hat, model.prob(t, q)?)))
        .sum()
}

/// KL information with a shrinking window; Fisher information before any
/// answer exists.
pub struct KlInformation {
    pub points: usize,
}

impl Default for KlInformation {
    fn default() -> Self {
        Self { points: KLI_POINTS }
    }
}

impl Strategy for KlInformation {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Kli
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<QuestionId> {
        let irt = need_irt(ctx.model, self.kind())?;
        check_pool(ctx)?;
        let t = ctx.session.step();
        if t == 0 {
            return MaxFisher.select(ctx);
        }
        let delta = kl_radius(t);
        argmax_by(ctx.pool, |q| kl_information(irt, ctx.theta[0], delta, q, self.points))
    }
}

/// Information matrix `P (1 - P) a aᵀ` of one question at `theta`.
pub fn information_matrix(model: &MirtModel, theta: &[f64], q: QuestionId) -> Result<DMatrix<f64>> {
    let (a, _) = model.params(q)?;
    let p = model.prob(theta, q)?;
    let a = nalgebra::DVector::from_column_slice(a);
    Ok(&a * a.transpose() * (p * (1.0 - p)))
}

/// Accumulated information of the administered questions plus a small ridge.
pub fn tested_information(model: &MirtModel, theta: &[f64], tested: &[QuestionId]) -> Result<DMatrix<f64>> {
    let mut f = DMatrix::identity(model.dims, model.dims) * DOPT_RIDGE;
    for &q in tested {
        f += information_matrix(model, theta, q)?;
    }
    Ok(f)
}

pub struct DOptimality;

impl Strategy for DOptimality {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Dopt
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<QuestionId> {
        let mirt = need_mirt(ctx.model, self.kind())?;
        check_pool(ctx)?;
        let f_t = tested_information(mirt, ctx.theta, ctx.session.tested())?;
        argmax_by(ctx.pool, |q| {
            Ok((&f_t + information_matrix(mirt, ctx.theta, q)?).determinant())
        })
    }
}

/// KL information integrated over the cube `θ̂ ± delta` by a tensor-product
/// trapezoid rule.
pub fn multivariate_kl_information(
    model: &MirtModel,
    theta_hat: &[f64],
    delta: f64,
    q: QuestionId,
    points: usize,
) -> Result<f64> {
    let d = model.dims;
    if d > MKLI_MAX_DIMS {
        return Err(MaatError::Capacity(format!(
            "multivariate KL quadrature supports at most {MKLI_MAX_DIMS} dimensions, model has {d}"
        )));
    }
    if points < 2 {
        return Err(MaatError::contract("quadrature needs at least two points"));
    }
    let (a, c) = model.params(q)?;
    let p_hat = sigmoid(dot(a, theta_hat) + c);
    let axes: Vec<Vec<(f64, f64)>> = theta_hat
        .iter()
        .map(|&t| trapezoid(t - delta, t + delta, points))
        .collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; d];
    let mut node = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for k in 0..d {
            let (x, wk) = axes[k][idx[k]];
            node[k] = x;
            w *= wk;
        }
        total += w * bernoulli_kl(p_hat, sigmoid(dot(a, &node) + c));
        // odometer increment
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < points {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    Ok(total)
}

/// Multivariate KL information; D-optimality before any answer exists.
pub struct MultiKlInformation {
    pub points: usize,
}

impl Default for MultiKlInformation {
    fn default() -> Self {
        Self { points: MKLI_POINTS }
    }
}

impl Strategy for MultiKlInformation {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Mkli
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<QuestionId> {
        let mirt = need_mirt(ctx.model, self.kind())?;
        if mirt.dims > MKLI_MAX_DIMS {
            return Err(MaatError::Capacity(format!(
                "multivariate KL quadrature supports at most {MKLI_MAX_DIMS} dimensions, model has {}",
                mirt.dims
            )));
        }
        check_pool(ctx)?;
        let t = ctx.session.step();
        if t == 0 {
            return DOptimality.select(ctx);
        }
        let delta = kl_radius(t);
        argmax_by(ctx.pool, |q| {
            multivariate_kl_information(mirt, ctx.theta, delta, q, self.points)
        })
    }
}

/// What a strategy needs beyond the model.
#[derive(Clone)]
pub struct StrategyParams {
    pub candidates: CandidateSize,
    pub seed: u64,
    pub graph: Arc<ConceptGraph>,
    pub weights: Arc<Vec<f64>>,
}

pub fn build_strategy(kind: StrategyKind, params: &StrategyParams) -> Box<dyn Strategy> {
    match kind {
        StrategyKind::Maat => Box::new(Maat {
            candidates: params.candidates,
            graph: Arc::clone(&params.graph),
            weights: Arc::clone(&params.weights),
        }),
        StrategyKind::Rand => Box::new(Random { seed: params.seed }),
        StrategyKind::Mfi => Box::new(MaxFisher),
        StrategyKind::Kli => Box::new(KlInformation::default()),
        StrategyKind::Dopt => Box::new(DOptimality),
        StrategyKind::Mkli => Box::new(MultiKlInformation::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::ExamineeId;
    use approx::assert_relative_eq;

    fn pool(n: usize) -> BTreeSet<QuestionId> {
        (0..n).map(QuestionId).collect()
    }

    fn run(strategy: &dyn Strategy, model: &Model, theta: &[f64], session: &SessionState) -> Result<QuestionId> {
        strategy.select(&SelectionContext {
            session,
            pool: session.untested(),
            model,
            theta,
        })
    }

    fn random_irt(rng: &mut ChaCha8Rng, n: usize) -> IrtModel {
        IrtModel::new(
            (0..n).map(|_| rng.random_range(0.3..2.5)).collect(),
            (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn compatibility_matrix() {
        assert!(StrategyKind::Dopt.check(ModelKind::Irt).is_err());
        assert!(StrategyKind::Mfi.check(ModelKind::Ncdm).is_err());
        for m in ModelKind::ALL {
            assert!(StrategyKind::Maat.supports(m) && StrategyKind::Rand.supports(m));
        }
        assert_eq!("MKLI".parse::<StrategyKind>().unwrap(), StrategyKind::Mkli);
        assert!("foo".parse::<StrategyKind>().is_err());
        assert_eq!("all".parse::<CandidateSize>().unwrap(), CandidateSize::ALL);
        assert!("0".parse::<CandidateSize>().is_err());
    }

    #[test]
    fn random_is_deterministic_and_single_pool() {
        let m = Model::Irt(IrtModel::new(vec![1.0; 5], vec![0.0; 5]).unwrap());
        let r = Random { seed: 9 };
        let s = SessionState::new(ExamineeId(3), pool(5));
        assert_eq!(run(&r, &m, &[0.0], &s).unwrap(), run(&r, &m, &[0.0], &s).unwrap());
        let mut one = SessionState::new(ExamineeId(3), pool(5));
        for q in 0..4 {
            one.administer(QuestionId(q), true).unwrap();
        }
        assert_eq!(run(&r, &m, &[0.0], &one).unwrap(), QuestionId(4));
        let empty = BTreeSet::new();
        let ctx = SelectionContext {
            session: &s,
            pool: &empty,
            model: &m,
            theta: &[0.0],
        };
        assert!(r.select(&ctx).is_err());
    }

    #[test]
    fn random_is_uniform() {
        // chi-square over 10 cells, 10k draws; critical value at p = 0.01 is 21.67
        let m = Model::Irt(IrtModel::new(vec![1.0; 10], vec![0.0; 10]).unwrap());
        let mut counts = [0usize; 10];
        for e in 0..10_000 {
            let s = SessionState::new(ExamineeId(e), pool(10));
            counts[run(&Random { seed: 1 }, &m, &[0.0], &s).unwrap().0] += 1;
        }
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 1000.0).powi(2) / 1000.0).sum();
        assert!(chi2 < 21.67, "chi2 = {chi2}");
    }

    #[test]
    fn fisher_values_and_argmax() {
        let irt = IrtModel::new(vec![2.0], vec![0.4]).unwrap();
        assert_relative_eq!(
            fisher_information(&irt, 0.4, QuestionId(0)).unwrap(),
            1.0,
            epsilon = 1e-15
        );

        let bs = vec![-1.0, -0.3, 0.6, 1.2];
        let m = Model::Irt(IrtModel::new(vec![1.1; 4], bs).unwrap());
        let s = SessionState::new(ExamineeId(0), pool(4));
        assert_eq!(run(&MaxFisher, &m, &[0.6], &s).unwrap(), QuestionId(2));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let irt = random_irt(&mut rng, 25);
            let theta = rng.random_range(-2.0..2.0);
            let oracle = (0..25)
                .map(|j| {
                    let (a, b) = (irt.discrimination[j], irt.difficulty[j]);
                    let p = 1.0 / (1.0 + (-a * (theta - b)).exp());
                    (a * a * p * (1.0 - p), j)
                })
                .fold((f64::MIN, 0), |best, x| if x.0 > best.0 { x } else { best });
            let m = Model::Irt(irt);
            assert_eq!(run(&MaxFisher, &m, &[theta], &s_all(25)).unwrap(), QuestionId(oracle.1));
        }
    }

    fn s_all(n: usize) -> SessionState {
        SessionState::new(ExamineeId(0), pool(n))
    }

    #[test]
    fn capability_errors() {
        let irt = Model::Irt(IrtModel::new(vec![1.0], vec![0.0]).unwrap());
        let mirt = Model::Mirt(MirtModel::new(vec![vec![1.0, 1.0]], vec![0.0]).unwrap());
        let s = s_all(1);
        for st in [&DOptimality as &dyn Strategy, &MultiKlInformation::default()] {
            assert!(matches!(run(st, &irt, &[0.0], &s), Err(MaatError::Capability { .. })));
        }
        for st in [&MaxFisher as &dyn Strategy, &KlInformation::default()] {
            assert!(matches!(
                run(st, &mirt, &[0.0, 0.0], &s),
                Err(MaatError::Capability { .. })
            ));
        }
        let wide = Model::Mirt(MirtModel::new(vec![vec![1.0; 4]], vec![0.0]).unwrap());
        assert!(matches!(
            run(&MultiKlInformation::default(), &wide, &[0.0; 4], &s),
            Err(MaatError::Capacity(_))
        ));
    }

    #[test]
    fn kl_flat_curve_and_zero_integrand() {
        assert_eq!(bernoulli_kl(0.3, 0.3), 0.0);
        let irt = IrtModel::new(vec![1e-9, 0.8], vec![0.0, 1.0]).unwrap();
        let flat = kl_information(&irt, 0.2, 1.0, QuestionId(0), KLI_POINTS).unwrap();
        let steep = kl_information(&irt, 0.2, 1.0, QuestionId(1), KLI_POINTS).unwrap();
        assert!(flat < 1e-15 && steep > flat);
        let m = Model::Irt(irt);
        let mut s = SessionState::new(ExamineeId(0), pool(3));
        s.administer(QuestionId(2), true).unwrap();
        let pool01: BTreeSet<_> = [QuestionId(0), QuestionId(1)].into();
        let ctx = SelectionContext {
            session: &s,
            pool: &pool01,
            model: &m,
            theta: &[0.2],
        };
        assert_eq!(KlInformation::default().select(&ctx).unwrap(), QuestionId(1));
    }

    #[test]
    fn kl_trapezoid_matches_fine_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let irt = random_irt(&mut rng, 1);
            let theta = rng.random_range(-2.0..2.0);
            let delta = kl_radius(rng.random_range(1..50));
            let coarse = kl_information(&irt, theta, delta, QuestionId(0), KLI_POINTS).unwrap();
            let fine = kl_information(&irt, theta, delta, QuestionId(0), 10_000).unwrap();
            assert!((coarse - fine).abs() / fine < 1e-3);
        }
    }

    #[test]
    fn dopt_collapses_to_mfi_in_one_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let irt = random_irt(&mut rng, 30);
            let mirt = MirtModel::new(
                irt.discrimination.iter().map(|&a| vec![a]).collect(),
                irt.discrimination
                    .iter()
                    .zip(&irt.difficulty)
                    .map(|(a, b)| -a * b)
                    .collect(),
            )
            .unwrap();
            let theta = rng.random_range(-2.0..2.0);
            let mut s = s_all(30);
            for _ in 0..rng.random_range(0..5) {
                let q = *s.untested().iter().next().unwrap();
                s.administer(q, rng.random_bool(0.5)).unwrap();
            }
            let a = run(&MaxFisher, &Model::Irt(irt), &[theta], &s).unwrap();
            let b = run(&DOptimality, &Model::Mirt(mirt), &[theta], &s).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn dopt_determinant_lemma() {
        // F_T is 0.25 I from three axis-aligned unit loadings at p = 0.5; the
        // candidates add rank-one terms of trace 1 and 0.5 along axis 1 and 2
        let m = MirtModel::new(
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![0.0, 2.0, 0.0],
                vec![0.0, 0.0, 2f64.sqrt()],
            ],
            vec![0.0; 5],
        )
        .unwrap();
        let f_t = tested_information(&m, &[0.0; 3], &[QuestionId(0), QuestionId(1), QuestionId(2)]).unwrap();
        let base = f_t.determinant();
        let d3 = (&f_t + information_matrix(&m, &[0.0; 3], QuestionId(3)).unwrap()).determinant();
        let d4 = (&f_t + information_matrix(&m, &[0.0; 3], QuestionId(4)).unwrap()).determinant();
        assert!(d3 > d4 && d4 > base);
        let mut s = SessionState::new(ExamineeId(0), pool(5));
        for q in 0..3 {
            s.administer(QuestionId(q), true).unwrap();
        }
        assert_eq!(
            run(&DOptimality, &Model::Mirt(m), &[0.0; 3], &s).unwrap(),
            QuestionId(3)
        );
    }

    #[test]
    fn dopt_determinant_never_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let a: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..3).map(|_| rng.random_range(0.0..2.0)).collect())
                .collect();
            let m = MirtModel::new(a, (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let theta: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f_t = tested_information(&m, &theta, &[QuestionId(0), QuestionId(1)]).unwrap();
            for q in 2..6 {
                let up = (&f_t + information_matrix(&m, &theta, QuestionId(q)).unwrap()).determinant();
                assert!(up >= f_t.determinant() * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn mkli_collapses_to_kli_in_one_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let irt = random_irt(&mut rng, 20);
            let mirt = MirtModel::new(
                irt.discrimination.iter().map(|&a| vec![a]).collect(),
                irt.discrimination
                    .iter()
                    .zip(&irt.difficulty)
                    .map(|(a, b)| -a * b)
                    .collect(),
            )
            .unwrap();
            let theta = rng.random_range(-2.0..2.0);
            let mut s = s_all(20);
            for _ in 0..rng.random_range(0..5) {
                let q = *s.untested().iter().next_back().unwrap();
                s.administer(q, true).unwrap();
            }
            let kli = run(&KlInformation::default(), &Model::Irt(irt), &[theta], &s).unwrap();
            let mkli = run(
                &MultiKlInformation { points: KLI_POINTS },
                &Model::Mirt(mirt),
                &[theta],
                &s,
            )
            .unwrap();
            assert_eq!(kli, mkli);
        }
    }

    #[test]
    fn mkli_zero_loading_and_refinement() {
        let m = MirtModel::new(vec![vec![0.0, 0.0, 0.0]], vec![0.4]).unwrap();
        assert_eq!(
            multivariate_kl_information(&m, &[0.1, 0.2, 0.3], 1.0, QuestionId(0), 16).unwrap(),
            0.0
        );

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let a: Vec<f64> = (0..3).map(|_| rng.random_range(0.2..2.0)).collect();
            let m = MirtModel::new(vec![a], vec![rng.random_range(-1.0..1.0)]).unwrap();
            let theta: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let delta = kl_radius(rng.random_range(1..50));
            let coarse = multivariate_kl_information(&m, &theta, delta, QuestionId(0), MKLI_POINTS).unwrap();
            let fine = multivariate_kl_information(&m, &theta, delta, QuestionId(0), 64).unwrap();
            assert!((coarse - fine).abs() / fine < 1e-2);
        }
    }

    #[test]
    fn rankings_ignore_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let irt = random_irt(&mut rng, 12);
            let perm: Vec<usize> = {
                let mut p: Vec<usize> = (0..12).collect();
                rand::seq::SliceRandom::shuffle(p.as_mut_slice(), &mut rng);
                p
            };
            let permuted = IrtModel::new(
                perm.iter().map(|&j| irt.discrimination[j]).collect(),
                perm.iter().map(|&j| irt.difficulty[j]).collect(),
            )
            .unwrap();
            let theta = rng.random_range(-2.0..2.0);
            let mut s = s_all(12);
            s.administer(QuestionId(perm[0]), true).unwrap();
            let mut sp = s_all(12);
            sp.administer(QuestionId(0), true).unwrap();
            for st in [&MaxFisher as &dyn Strategy, &KlInformation::default()] {
                let a = run(st, &Model::Irt(irt.clone()), &[theta], &s).unwrap();
                let b = run(st, &Model::Irt(permuted.clone()), &[theta], &sp).unwrap();
                assert_eq!(a.0, perm[b.0]);
            }
        }
    }
}
