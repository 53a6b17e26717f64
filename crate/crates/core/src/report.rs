//! Verification report emitted by the sweeps and the command-line tool.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// `{"check", "residual", "worst_sample", "pass", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub residual: f64,
    pub worst_sample: BTreeMap<String, f64>,
    pub pass: bool,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl VerificationReport {
    /// Report passing iff `residual <= tol`.
    pub fn new(
        check: impl Into<String>,
        residual: f64,
        worst_sample: impl IntoIterator<Item = (&'static str, f64)>,
        tol: f64,
    ) -> Self {
        Self {
            check: check.into(),
            residual,
            worst_sample: worst_sample
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            pass: residual <= tol,
            tol,
            seed: None,
        }
    }

    /// Report with an explicit verdict, for checks whose pass condition is
    /// not `residual <= tol`.
    pub fn with_verdict(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// Running maximum of a residual along with the sample that produced it.
#[derive(Debug, Clone, Default)]
pub(crate) struct Worst {
    pub residual: f64,
    pub sample: Vec<(&'static str, f64)>,
}

impl Worst {
    pub fn offer(&mut self, residual: f64, sample: &[(&'static str, f64)]) {
        if residual > self.residual || residual.is_nan() || self.sample.is_empty() {
            self.residual = if residual.is_nan() { f64::INFINITY } else { residual };
            self.sample = sample.to_vec();
        }
    }

    pub fn into_report(self, check: &str, tol: f64) -> VerificationReport {
        VerificationReport::new(check, self.residual, self.sample, tol)
    }
}
