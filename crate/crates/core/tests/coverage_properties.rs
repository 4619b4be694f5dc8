//! Set-function properties of importance-weighted coverage.

mod common;

use std::collections::BTreeSet;

use common::{random_graph, random_weights};
use maat_core::diversity::{
    brute_force_optimum, greedy_maximize, greedy_maximize_with, iwkc_of, CoverageState, GreedyMode,
};
use maat_core::environment::QuestionId;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn diminishing_returns_on_random_nested_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = 0;
    for _ in 0..10_000 {
        let n_q = rng.random_range(3..16);
        let n_k = rng.random_range(1..7);
        let g = random_graph(&mut rng, n_q, n_k);
        let w = random_weights(&mut rng, n_k);
        let mut qs: Vec<QuestionId> = (0..n_q).map(QuestionId).collect();
        qs.shuffle(&mut rng);
        let q = qs.pop().unwrap();
        let b_len = rng.random_range(0..=qs.len());
        let a_len = rng.random_range(0..=b_len);
        let a = CoverageState::with_tested(&g, &w, &qs[..a_len]).unwrap();
        let b = CoverageState::with_tested(&g, &w, &qs[..b_len]).unwrap();
        let (ga, gb) = (a.marginal_gain(q).unwrap(), b.marginal_gain(q).unwrap());
        if ga + 1e-12 < gb {
            violations += 1;
        }
        assert!(gb >= 0.0);
        assert!(a.iwkc() <= b.iwkc() + 1e-12);
        assert!((0.0..1.0).contains(&b.iwkc()));
    }
    assert_eq!(violations, 0);
}

#[test]
fn scaling_weights_leaves_coverage_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..500 {
        let g = random_graph(&mut rng, 10, 5);
        let w = random_weights(&mut rng, 5);
        let scaled: Vec<f64> = w.iter().map(|x| x * 7.5).collect();
        let set: Vec<QuestionId> = (0..10).filter(|_| rng.random_bool(0.4)).map(QuestionId).collect();
        let (a, b) = (iwkc_of(&g, &w, &set).unwrap(), iwkc_of(&g, &scaled, &set).unwrap());
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn greedy_reaches_the_approximation_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bound = 1.0 - (-1.0f64).exp();
    for _ in 0..500 {
        let n_q = rng.random_range(2..=12);
        let n_k = rng.random_range(1..=6);
        let g = random_graph(&mut rng, n_q, n_k);
        let w = random_weights(&mut rng, n_k);
        let pool: BTreeSet<QuestionId> = (0..n_q).map(QuestionId).collect();
        let n = rng.random_range(1..=4.min(n_q));
        let greedy = greedy_maximize(&g, &w, &pool, n).unwrap();
        let lazy = greedy_maximize_with(&g, &w, &pool, n, GreedyMode::Lazy).unwrap();
        assert_eq!(greedy, lazy);
        let (_, opt) = brute_force_optimum(&g, &w, &pool, n).unwrap();
        let value = iwkc_of(&g, &w, &greedy).unwrap();
        assert!(value >= bound * opt - 1e-12, "greedy {value} vs optimum {opt}");
        assert!(value <= opt + 1e-12);
    }
}
