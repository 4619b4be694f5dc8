//! Dataset persistence and filtering on generated data.

use std::collections::BTreeSet;

use maat_core::environment::{filter_dataset, load_dataset, save_dataset, DatasetFormat, FilterThresholds};
use maat_core::harness::synthetic::{generate_synthetic, SyntheticSpec};

fn small() -> SyntheticSpec {
    SyntheticSpec {
        n_examinees: 60,
        n_questions: 40,
        n_concepts: 8,
        historical_answers: [5, 30],
        ..SyntheticSpec::default()
    }
}

#[test]
fn save_then_load_round_trips() {
    let env = generate_synthetic(&small()).unwrap().env;
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&env, dir.path()).unwrap();
    let (back, report) = load_dataset(dir.path(), DatasetFormat::Csv).unwrap();
    assert_eq!(report.dropped_records + report.duplicate_records, 0);
    assert_eq!(back.graph(), env.graph());
    assert_eq!(back.ids(), env.ids());
    let set = |e: &maat_core::environment::Environment| {
        e.records()
            .iter()
            .map(|r| (r.examinee, r.question, r.correct))
            .collect::<BTreeSet<_>>()
    };
    assert_eq!(set(&back), set(&env));
    assert_eq!(back.records().len(), env.records().len());
}

#[test]
fn filtering_twice_equals_filtering_once() {
    let env = generate_synthetic(&small()).unwrap().env;
    let t = FilterThresholds {
        min_questions_per_concept: 4,
        min_records_per_question: 25,
        min_records_per_examinee: 10,
    };
    let once = filter_dataset(&env, t).unwrap();
    let twice = filter_dataset(&once, t).unwrap();
    assert_eq!(once.graph(), twice.graph());
    assert_eq!(once.records(), twice.records());
    assert_eq!(once.ids(), twice.ids());
}
