//! Check records shared by all verifications.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::vertexcore::FieldState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

/// One verified statement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub inputs: Value,
    pub status: Status,
    /// Offending expressions in the term grammar; empty on success.
    pub witness: Vec<String>,
    /// Weights and levels involved, printed as exact scalars.
    pub ledger: BTreeMap<String, String>,
}

impl CheckRecord {
    pub fn new(check: impl Into<String>, inputs: Value, status: Status) -> Self {
        CheckRecord { check: check.into(), inputs, status, witness: Vec::new(), ledger: BTreeMap::new() }
    }

    pub fn from_bool(check: impl Into<String>, inputs: Value, ok: bool) -> Self {
        Self::new(check, inputs, if ok { Status::Pass } else { Status::Fail })
    }

    pub fn with_witness(mut self, w: impl Into<String>) -> Self {
        self.witness.push(w.into());
        self
    }

    pub fn with_ledger(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.ledger.insert(key.into(), value.to_string());
        self
    }

    /// Passes when `lhs == rhs`; the witness is `lhs - rhs` otherwise.
    pub fn equality(check: impl Into<String>, inputs: Value, lhs: &FieldState, rhs: &FieldState) -> Self {
        match lhs.try_sub(rhs) {
            Ok(d) if d.is_zero() => Self::new(check, inputs, Status::Pass),
            Ok(d) => Self::new(check, inputs, Status::Fail).with_witness(d.to_string()),
            Err(e) => Self::new(check, inputs, Status::Fail).with_witness(e.to_string()),
        }
    }

    /// Passes when `x` vanishes.
    pub fn vanishing(check: impl Into<String>, inputs: Value, x: &FieldState) -> Self {
        if x.is_zero() {
            Self::new(check, inputs, Status::Pass)
        } else {
            Self::new(check, inputs, Status::Fail).with_witness(x.to_string())
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub records: Vec<CheckRecord>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }

    pub fn extend(&mut self, o: Report) {
        self.records.extend(o.records);
    }

    /// True when no record failed; not-applicable records do not fail.
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.passed())
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.records.iter().filter(|r| !r.passed()).collect()
    }

    pub fn find(&self, check: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.check == check)
    }

    /// Records sorted by check id (stable for equal ids).
    pub fn sorted(mut self) -> Self {
        self.records.sort_by(|a, b| a.check.cmp(&b.check));
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

impl FromIterator<CheckRecord> for Report {
    fn from_iter<I: IntoIterator<Item = CheckRecord>>(it: I) -> Self {
        Report { records: it.into_iter().collect() }
    }
}

/// Folds many boolean cases into one record, keeping a few witnesses.
pub struct Collect {
    check: String,
    inputs: Value,
    witness: Vec<String>,
    failed: usize,
    count: usize,
}

impl Collect {
    pub fn new(check: impl Into<String>, inputs: Value) -> Self {
        Collect { check: check.into(), inputs, witness: Vec::new(), failed: 0, count: 0 }
    }

    pub fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.count += 1;
        if !ok {
            self.failed += 1;
            if self.witness.len() < 8 {
                self.witness.push(what());
            }
        }
    }

    pub fn finish(self) -> CheckRecord {
        let mut r = CheckRecord::from_bool(self.check, self.inputs, self.failed == 0);
        r.witness = self.witness;
        r.with_ledger("cases", self.count).with_ledger("failures", self.failed)
    }
}
