//! Index-provenance log.
//!
//! Every forest fit and evaluation performed during tuning can be recorded
//! here by original row id, so callers can prove after the fact that no
//! technique ever trained or evaluated on rows it was not allowed to see.

use std::sync::Mutex;

use crate::validation::TechniqueId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// One split of a validation technique.
    Technique(TechniqueId),
    /// Actual performance: fit on the frame's train, score on its test.
    Actual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessRecord {
    /// Free-form frame label, e.g. `tuning` or `meta 75/25 inner`.
    pub scope: String,
    pub stage: Stage,
    /// Original row ids used for fitting, sorted and deduplicated.
    pub train: Vec<usize>,
    /// Original row ids scored, sorted and deduplicated.
    pub eval: Vec<usize>,
}

#[derive(Debug, Default)]
pub struct AccessLog {
    records: Mutex<Vec<AccessRecord>>,
}

impl AccessLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, scope: &str, stage: Stage, train: &[usize], eval: &[usize]) {
        let norm = |ids: &[usize]| {
            let mut v = ids.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        };
        self.records
            .lock()
            .expect("access log poisoned")
            .push(AccessRecord {
                scope: scope.to_string(),
                stage,
                train: norm(train),
                eval: norm(eval),
            });
    }

    pub fn records(&self) -> Vec<AccessRecord> {
        self.records.lock().expect("access log poisoned").clone()
    }
}

/// Where (if anywhere) accesses are logged, and under which scope label.
#[derive(Debug, Clone, Copy, Default)]
pub struct Probe<'a> {
    log: Option<&'a AccessLog>,
    scope: &'a str,
}

impl<'a> Probe<'a> {
    pub fn new(log: &'a AccessLog, scope: &'a str) -> Self {
        Self {
            log: Some(log),
            scope,
        }
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn with_scope(self, scope: &'a str) -> Self {
        Self { scope, ..self }
    }

    pub fn record(&self, stage: Stage, train: &[usize], eval: &[usize]) {
        if let Some(log) = self.log {
            log.record(self.scope, stage, train, eval);
        }
    }
}
