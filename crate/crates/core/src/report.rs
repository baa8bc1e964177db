use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of a grid scan or a random sampling check.
///
/// `min_value`/`max_value` track the monitored quantity (φ for the grid
/// scans, the inequality margin for the sampled inequalities, |ξ₁₁| for the
/// ξ-sampler). `violations` counts points that break the asserted bound;
/// zero means the check passed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub lemma: String,
    pub params: BTreeMap<String, f64>,
    pub samples: u64,
    pub min_value: f64,
    pub argmin: Vec<f64>,
    pub max_value: f64,
    pub argmax: Vec<f64>,
    pub violations: u64,
    pub seed: Option<u64>,
    /// First violating point, if any.
    pub witness: Option<Vec<f64>>,
    pub notes: BTreeMap<String, f64>,
}

impl ScanReport {
    pub(crate) fn empty(lemma: &str, seed: Option<u64>) -> Self {
        Self {
            lemma: lemma.to_string(),
            params: BTreeMap::new(),
            samples: 0,
            min_value: f64::INFINITY,
            argmin: Vec::new(),
            max_value: f64::NEG_INFINITY,
            argmax: Vec::new(),
            violations: 0,
            seed,
            witness: None,
            notes: BTreeMap::new(),
        }
    }

    pub(crate) fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Records one evaluation; ties keep the earliest point.
    pub(crate) fn observe(&mut self, value: f64, point: &[f64], violating: bool) {
        self.samples += 1;
        if value < self.min_value {
            self.min_value = value;
            self.argmin = point.to_vec();
        }
        if value > self.max_value {
            self.max_value = value;
            self.argmax = point.to_vec();
        }
        if violating {
            self.violations += 1;
            if self.witness.is_none() {
                self.witness = Some(point.to_vec());
            }
        }
    }

    /// Folds a later partial report into this one, preserving first-seen
    /// order for ties and witnesses.
    pub(crate) fn merge(&mut self, other: ScanReport) {
        self.samples += other.samples;
        if other.min_value < self.min_value {
            self.min_value = other.min_value;
            self.argmin = other.argmin;
        }
        if other.max_value > self.max_value {
            self.max_value = other.max_value;
            self.argmax = other.argmax;
        }
        self.violations += other.violations;
        if self.witness.is_none() {
            self.witness = other.witness;
        }
        for (k, v) in other.notes {
            self.notes.insert(k, v);
        }
    }
}
