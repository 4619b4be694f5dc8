//! Diagnosis models against generator truth and retraining.

mod common;

use common::spearman;
use maat_core::cdm::{pretrain, DiagnosisModel, IrtModel, ModelKind, PretrainConfig, UpdateConfig};
use maat_core::environment::{split_dataset, ExamineeId, QuestionId, Record};
use maat_core::harness::synthetic::{generate_synthetic, SyntheticSpec};
use maat_core::quality::expected_model_change;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn irt_pretraining_recovers_difficulty_order() {
    let spec = SyntheticSpec::default();
    let s = generate_synthetic(&spec).unwrap();
    let split = split_dataset(&s.env, spec.testing_threshold(), 42).unwrap();
    let fit = pretrain(
        ModelKind::Irt,
        &split.historical_records,
        s.env.graph(),
        &PretrainConfig::default(),
    )
    .unwrap();
    let (truth, fitted) = (s.truth.model.as_irt().unwrap(), fit.model.as_irt().unwrap());
    let b = |m: &IrtModel| -> Vec<f64> {
        (0..spec.n_questions)
            .map(|q| m.params(QuestionId(q)).unwrap().1)
            .collect()
    };
    let rho = spearman(&b(truth), &b(fitted));
    assert!(rho >= 0.8, "spearman {rho}");
    let l = &fit.epoch_losses;
    let half = l.len() / 2;
    assert!(l[half..].iter().sum::<f64>() / (l.len() - half) as f64 <= l[..half].iter().sum::<f64>() / half as f64);
}

/// Converged refit of the examinee state.
fn refit(model: &IrtModel, start: &[f64], records: &[Record]) -> Vec<f64> {
    let cfg = UpdateConfig {
        learning_rate: 0.5,
        epochs: 3000,
    };
    model.update(start, records, &cfg).unwrap()
}

#[test]
fn emc_ranks_like_retraining_displacement() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // 10 anchor questions supply the existing records, 50 are scored
    let n = 60;
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.5)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let m = IrtModel::new(a, b).unwrap();
    for _ in 0..5 {
        let ability = rng.random_range(-2.0..2.0);
        let records: Vec<Record> = (0..10)
            .map(|q| {
                let p = m.prob(ability, QuestionId(q)).unwrap();
                Record::new(ExamineeId(0), QuestionId(q), rng.random_bool(p))
            })
            .collect();
        let theta = refit(&m, &[0.0], &records);
        let mut emc = Vec::new();
        let mut displacement = Vec::new();
        for q in (10..n).map(QuestionId) {
            emc.push(expected_model_change(&m, &theta, q).unwrap().score);
            let p = m.predict(&theta, q).unwrap();
            let shift = |correct| {
                let mut with = records.clone();
                with.push(Record::new(ExamineeId(0), q, correct));
                (refit(&m, &theta, &with)[0] - theta[0]).abs()
            };
            displacement.push(p * shift(true) + (1.0 - p) * shift(false));
        }
        let rho = spearman(&emc, &displacement);
        assert!(rho >= 0.8, "ability {ability}: spearman {rho}");
    }
}
