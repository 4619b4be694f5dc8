//! Per-examinee test status: the tested/untested partition of the pool and
//! the records gathered so far.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::environment::{ExamineeId, QuestionId, Record};
use crate::error::{MaatError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    examinee: ExamineeId,
    tested: Vec<QuestionId>,
    untested: BTreeSet<QuestionId>,
    records: Vec<Record>,
}

impl SessionState {
    /// Fresh session where every question of `pool` is untested.
    pub fn new(examinee: ExamineeId, pool: impl IntoIterator<Item = QuestionId>) -> Self {
        Self {
            examinee,
            tested: Vec::new(),
            untested: pool.into_iter().collect(),
            records: Vec::new(),
        }
    }

    /// Rebuilds a session by administering `records` in order.
    pub fn replay(
        examinee: ExamineeId,
        pool: impl IntoIterator<Item = QuestionId>,
        records: &[Record],
    ) -> Result<Self> {
        let mut s = Self::new(examinee, pool);
        for r in records {
            s.administer(r.question, r.correct)?;
        }
        Ok(s)
    }

    pub fn examinee(&self) -> ExamineeId {
        self.examinee
    }

    /// Administered questions in order.
    pub fn tested(&self) -> &[QuestionId] {
        &self.tested
    }

    pub fn untested(&self) -> &BTreeSet<QuestionId> {
        &self.untested
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn step(&self) -> usize {
        self.tested.len()
    }

    pub fn is_untested(&self, q: QuestionId) -> bool {
        self.untested.contains(&q)
    }

    /// Moves `question` from untested to tested and stores the answer.
    pub fn administer(&mut self, question: QuestionId, correct: bool) -> Result<()> {
        if !self.untested.remove(&question) {
            return Err(MaatError::contract(format!(
                "question {question} is not in the untested pool"
            )));
        }
        self.tested.push(question);
        self.records.push(Record::new(self.examinee, question, correct));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cannot_administer_twice() {
        let mut s = SessionState::new(ExamineeId(0), (0..3).map(QuestionId));
        s.administer(QuestionId(1), true).unwrap();
        assert!(s.administer(QuestionId(1), false).is_err());
        assert!(s.administer(QuestionId(9), false).is_err());
    }

    proptest! {
        #[test]
        fn partition_and_replay(order in Just((0..20usize).collect::<Vec<_>>()).prop_shuffle(),
                                k in 0usize..20,
                                answers in proptest::collection::vec(any::<bool>(), 20)) {
            let pool: Vec<_> = (0..20).map(QuestionId).collect();
            let mut s = SessionState::new(ExamineeId(3), pool.clone());
            for (i, &q) in order.iter().take(k).enumerate() {
                s.administer(QuestionId(q), answers[i]).unwrap();
            }
            prop_assert_eq!(s.step(), k);
            prop_assert_eq!(s.tested().len(), k);
            prop_assert_eq!(s.untested().len(), 20 - k);
            for q in s.tested() {
                prop_assert!(!s.untested().contains(q));
            }
            for (r, q) in s.records().iter().zip(s.tested()) {
                prop_assert_eq!(r.question, *q);
            }
            let again = SessionState::replay(ExamineeId(3), pool, s.records()).unwrap();
            prop_assert_eq!(again, s);
        }
    }
}
