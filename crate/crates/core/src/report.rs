//! Uniform result type for the lemma verifiers.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Hypotheses held and the inequality was confirmed on every case.
    Holds,
    /// The bound is trivially satisfied (e.g. a right-hand side <= 0).
    Vacuous,
    /// The instance does not satisfy the statement's hypotheses.
    HypothesisViolated,
    /// Hypotheses held and the inequality failed.
    Counterexample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub verdict: Verdict,
    /// Number of individual cases (subsets, instances, characters) examined.
    pub cases: u64,
    /// Smallest observed slack `bound side - value side`; negative on failure.
    pub margin: Option<f64>,
    /// Set when a verdict depends on floating point comparisons.
    pub tolerance_dependent: bool,
    pub counterexamples: Vec<Value>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

/// Cap on stored counterexamples; the count in `cases` is still exact.
const MAX_STORED: usize = 32;

impl VerificationReport {
    pub fn new(check: impl Into<String>) -> Self {
        VerificationReport {
            check: check.into(),
            verdict: Verdict::Holds,
            cases: 0,
            margin: None,
            tolerance_dependent: false,
            counterexamples: Vec::new(),
            details: Value::Null,
        }
    }

    pub fn with_verdict(check: impl Into<String>, verdict: Verdict) -> Self {
        VerificationReport { verdict, ..Self::new(check) }
    }

    pub fn hypothesis_violated(check: impl Into<String>, reason: impl Into<String>) -> Self {
        let mut r = Self::with_verdict(check, Verdict::HypothesisViolated);
        r.details = serde_json::json!({ "reason": reason.into() });
        r
    }

    pub fn observe_margin(&mut self, slack: f64) {
        self.margin = Some(self.margin.map_or(slack, |m| m.min(slack)));
    }

    pub fn counterexample(&mut self, witness: Value) {
        self.verdict = Verdict::Counterexample;
        if self.counterexamples.len() < MAX_STORED {
            self.counterexamples.push(witness);
        }
    }

    pub fn is_ok(&self) -> bool {
        self.verdict != Verdict::Counterexample
    }

    pub fn has_counterexample(&self) -> bool {
        self.verdict == Verdict::Counterexample
    }

    /// Folds another report for the same check into this one.
    pub fn merge(&mut self, other: VerificationReport) {
        use Verdict::*;
        self.verdict = match (self.verdict, other.verdict) {
            (Counterexample, _) | (_, Counterexample) => Counterexample,
            (Holds, _) | (_, Holds) => Holds,
            (Vacuous, _) | (_, Vacuous) => Vacuous,
            _ => HypothesisViolated,
        };
        self.cases += other.cases;
        if let Some(m) = other.margin {
            self.observe_margin(m);
        }
        self.tolerance_dependent |= other.tolerance_dependent;
        for c in other.counterexamples {
            if self.counterexamples.len() < MAX_STORED {
                self.counterexamples.push(c);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_prefers_counterexample_then_holds() {
        let mut a = VerificationReport::with_verdict("x", Verdict::Vacuous);
        a.merge(VerificationReport::hypothesis_violated("x", "no"));
        assert_eq!(a.verdict, Verdict::Vacuous);
        a.merge(VerificationReport::new("x"));
        assert_eq!(a.verdict, Verdict::Holds);
        let mut bad = VerificationReport::new("x");
        bad.counterexample(serde_json::json!([1]));
        a.merge(bad);
        assert!(a.has_counterexample());
        assert_eq!(a.counterexamples.len(), 1);
    }

    #[test]
    fn margin_tracks_minimum() {
        let mut r = VerificationReport::new("x");
        r.observe_margin(3.0);
        r.observe_margin(-1.0);
        r.observe_margin(2.0);
        assert_eq!(r.margin, Some(-1.0));
    }
}
