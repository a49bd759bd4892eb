//! Shared data model: observation records, the threshold rule, bandwidth
//! windows and estimate containers.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("treatment must be 0 or 1, got {0}")]
    InvalidTreatment(u8),
    #[error("{field} must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("record {index} has covariates {found:?}, expected {expected:?}")]
    CovariateMismatch {
        index: usize,
        expected: Vec<String>,
        found: Vec<String>,
    },
}

/// One subject: outcome `Y`, assignment score `X`, treatment `T` and
/// named covariates `C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub outcome: f64,
    pub assignment: f64,
    pub treatment: u8,
    #[serde(default)]
    pub covariates: BTreeMap<String, f64>,
}

impl ObservationRecord {
    pub fn new(outcome: f64, assignment: f64, treatment: u8) -> Result<Self, ModelError> {
        Self::with_covariates(outcome, assignment, treatment, BTreeMap::new())
    }

    pub fn with_covariates(
        outcome: f64,
        assignment: f64,
        treatment: u8,
        covariates: BTreeMap<String, f64>,
    ) -> Result<Self, ModelError> {
        if treatment > 1 {
            return Err(ModelError::InvalidTreatment(treatment));
        }
        if !outcome.is_finite() {
            return Err(ModelError::NonFinite {
                field: "outcome",
                value: outcome,
            });
        }
        if !assignment.is_finite() {
            return Err(ModelError::NonFinite {
                field: "assignment",
                value: assignment,
            });
        }
        Ok(Self {
            outcome,
            assignment,
            treatment,
            covariates,
        })
    }

    pub fn is_treated(&self) -> bool {
        self.treatment == 1
    }

    pub fn covariate(&self, name: &str) -> Option<f64> {
        self.covariates.get(name).copied()
    }
}

/// Checks that every record carries the same covariate names.
pub fn check_covariate_names(records: &[ObservationRecord]) -> Result<(), ModelError> {
    let Some(first) = records.first() else {
        return Ok(());
    };
    let expected: Vec<&String> = first.covariates.keys().collect();
    for (index, r) in records.iter().enumerate().skip(1) {
        if !r.covariates.keys().eq(expected.iter().copied()) {
            return Err(ModelError::CovariateMismatch {
                index,
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found: r.covariates.keys().cloned().collect(),
            });
        }
    }
    Ok(())
}

/// The policy threshold `x0`: treatment is recommended when `X >= x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    x0: f64,
}

impl ThresholdSpec {
    pub fn new(x0: f64) -> Result<Self, ModelError> {
        if !x0.is_finite() {
            return Err(ModelError::NonFinite {
                field: "threshold",
                value: x0,
            });
        }
        Ok(Self { x0 })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Threshold indicator for a raw assignment value.
    pub fn indicator(&self, assignment: f64) -> u8 {
        u8::from(assignment >= self.x0)
    }
}

/// Threshold indicator `Z`: 1 iff the assignment is at or above `x0`.
pub fn derive_z(record: &ObservationRecord, threshold: &ThresholdSpec) -> u8 {
    threshold.indicator(record.assignment)
}

/// Symmetric window `(x0 - bandwidth, x0 + bandwidth)` around the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    x0: f64,
    bandwidth: f64,
}

impl Window {
    pub fn new(x0: f64, bandwidth: f64) -> Result<Self, ModelError> {
        if !x0.is_finite() {
            return Err(ModelError::NonFinite {
                field: "threshold",
                value: x0,
            });
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(ModelError::InvalidBandwidth(bandwidth));
        }
        Ok(Self { x0, bandwidth })
    }

    pub fn around(threshold: &ThresholdSpec, bandwidth: f64) -> Result<Self, ModelError> {
        Self::new(threshold.x0(), bandwidth)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `x0 <= x < x0 + bandwidth`
    pub fn is_above(&self, x: f64) -> bool {
        x >= self.x0 && x < self.x0 + self.bandwidth
    }

    /// `x0 - bandwidth < x < x0`
    pub fn is_below(&self, x: f64) -> bool {
        x < self.x0 && x > self.x0 - self.bandwidth
    }

    pub fn contains(&self, x: f64) -> bool {
        self.is_above(x) || self.is_below(x)
    }
}

/// Splits records into the above and below sides of the window, preserving
/// input order. Records outside the open interval are dropped.
pub fn partition_window<'a>(
    records: &'a [ObservationRecord],
    window: &Window,
) -> (Vec<&'a ObservationRecord>, Vec<&'a ObservationRecord>) {
    let mut above = Vec::new();
    let mut below = Vec::new();
    for r in records {
        if window.is_above(r.assignment) {
            above.push(r);
        } else if window.is_below(r.assignment) {
            below.push(r);
        }
    }
    (above, below)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    Sharp,
    Fuzzy,
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Design::Sharp => "sharp",
            Design::Fuzzy => "fuzzy",
        })
    }
}

impl std::str::FromStr for Design {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sharp" => Ok(Design::Sharp),
            "fuzzy" => Ok(Design::Fuzzy),
            other => Err(format!("unknown design '{other}' (expected sharp or fuzzy)")),
        }
    }
}

/// Operating regime `Σ`. Interventional regimes force the treatment value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeTag {
    InterveneControl,
    InterveneTreat,
    ObservationalSharp,
    ObservationalFuzzy,
}

impl RegimeTag {
    pub const ALL: [RegimeTag; 4] = [
        RegimeTag::InterveneControl,
        RegimeTag::InterveneTreat,
        RegimeTag::ObservationalSharp,
        RegimeTag::ObservationalFuzzy,
    ];

    /// Treatment value forced by an interventional regime.
    pub fn forced_treatment(&self) -> Option<u8> {
        match self {
            RegimeTag::InterveneControl => Some(0),
            RegimeTag::InterveneTreat => Some(1),
            _ => None,
        }
    }

    pub fn is_observational(&self) -> bool {
        self.forced_treatment().is_none()
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::InterveneControl => "intervene_control",
            RegimeTag::InterveneTreat => "intervene_treat",
            RegimeTag::ObservationalSharp => "observational_sharp",
            RegimeTag::ObservationalFuzzy => "observational_fuzzy",
        }
    }
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegimeTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegimeTag::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown regime '{s}'"))
    }
}

/// Estimate of the average causal effect at the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AceEstimate {
    pub point: f64,
    pub std_error: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub design: Design,
    pub n_above: usize,
    pub n_below: usize,
    pub bandwidth: f64,
    /// `pi_above - pi_below`; fuzzy designs only.
    pub compliance_gap: Option<f64>,
}

impl AceEstimate {
    pub fn with_interval(mut self, std_error: f64, ci_low: f64, ci_high: f64) -> Self {
        self.std_error = Some(std_error);
        self.ci_low = Some(ci_low);
        self.ci_high = Some(ci_high);
        self
    }

    pub fn covers(&self, value: f64) -> Option<bool> {
        match (self.ci_low, self.ci_high) {
            (Some(lo), Some(hi)) => Some(lo <= value && value <= hi),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(x: f64) -> ObservationRecord {
        ObservationRecord::new(0.0, x, 0).unwrap()
    }

    #[test]
    fn derive_z_boundary_goes_above() {
        let t = ThresholdSpec::new(0.20).unwrap();
        assert_eq!(derive_z(&rec(0.25), &t), 1);
        assert_eq!(derive_z(&rec(0.20), &t), 1);
        assert_eq!(derive_z(&rec(0.1999), &t), 0);
    }

    #[test]
    fn partition_basic() {
        let recs: Vec<_> = [0.18, 0.20, 0.22, 0.30].into_iter().map(rec).collect();
        let w = Window::new(0.20, 0.05).unwrap();
        let (above, below) = partition_window(&recs, &w);
        let a: Vec<f64> = above.iter().map(|r| r.assignment).collect();
        let b: Vec<f64> = below.iter().map(|r| r.assignment).collect();
        assert_eq!(a, vec![0.20, 0.22]);
        assert_eq!(b, vec![0.18]);
    }

    #[test]
    fn partition_empty_input() {
        let w = Window::new(0.20, 0.05).unwrap();
        let (above, below) = partition_window(&[], &w);
        assert!(above.is_empty() && below.is_empty());
    }

    #[test]
    fn partition_outer_bounds_are_open() {
        // brute-force filter with the strict inequalities, computed independently
        let xs = [0.15, 0.25];
        let (x0, bw) = (0.20, 0.05);
        let brute_above: Vec<f64> = xs.iter().copied().filter(|&x| x0 <= x && x < x0 + bw).collect();
        let brute_below: Vec<f64> = xs.iter().copied().filter(|&x| x0 - bw < x && x < x0).collect();
        assert!(brute_above.is_empty() && brute_below.is_empty());

        let recs: Vec<_> = xs.into_iter().map(rec).collect();
        let (above, below) = partition_window(&recs, &Window::new(x0, bw).unwrap());
        assert!(above.is_empty());
        assert!(below.is_empty());
    }

    #[test]
    fn rejects_bad_values() {
        assert_eq!(
            ObservationRecord::new(1.0, 0.1, 2),
            Err(ModelError::InvalidTreatment(2))
        );
        assert!(ObservationRecord::new(f64::NAN, 0.1, 0).is_err());
        assert!(ObservationRecord::new(1.0, f64::INFINITY, 0).is_err());
        assert!(Window::new(0.2, 0.0).is_err());
        assert!(Window::new(0.2, -1.0).is_err());
        assert!(ThresholdSpec::new(f64::NAN).is_err());
    }

    #[test]
    fn covariate_names_must_agree() {
        let mut a = BTreeMap::new();
        a.insert("age".to_string(), 50.0);
        let mut b = BTreeMap::new();
        b.insert("sbp".to_string(), 120.0);
        let recs = vec![
            ObservationRecord::with_covariates(1.0, 0.1, 0, a.clone()).unwrap(),
            ObservationRecord::with_covariates(1.0, 0.1, 0, a).unwrap(),
            ObservationRecord::with_covariates(1.0, 0.1, 0, b).unwrap(),
        ];
        assert!(check_covariate_names(&recs[..2]).is_ok());
        assert!(matches!(
            check_covariate_names(&recs),
            Err(ModelError::CovariateMismatch { index: 2, .. })
        ));
    }

    #[test]
    fn regime_forced_treatment() {
        assert_eq!(RegimeTag::InterveneControl.forced_treatment(), Some(0));
        assert_eq!(RegimeTag::InterveneTreat.forced_treatment(), Some(1));
        assert!(RegimeTag::ObservationalFuzzy.is_observational());
        for r in RegimeTag::ALL {
            assert_eq!(r.as_str().parse::<RegimeTag>().unwrap(), r);
        }
    }

    proptest! {
        #[test]
        fn partition_is_exhaustive(
            xs in proptest::collection::vec(-1.0f64..1.0, 0..60),
            x0 in -0.5f64..0.5,
            bw in 0.01f64..1.0,
        ) {
            let recs: Vec<_> = xs.iter().copied().map(rec).collect();
            let w = Window::new(x0, bw).unwrap();
            let t = ThresholdSpec::new(x0).unwrap();
            let (above, below) = partition_window(&recs, &w);
            let excluded = recs.iter().filter(|r| !w.contains(r.assignment)).count();
            prop_assert_eq!(above.len() + below.len() + excluded, recs.len());
            prop_assert!(above.iter().all(|r| derive_z(r, &t) == 1));
            prop_assert!(below.iter().all(|r| derive_z(r, &t) == 0));
            // order preserved
            let idx = |r: &ObservationRecord| recs.iter().position(|q| std::ptr::eq(q, r)).unwrap();
            prop_assert!(above.windows(2).all(|p| idx(p[0]) < idx(p[1])));
            prop_assert!(below.windows(2).all(|p| idx(p[0]) < idx(p[1])));
        }

        #[test]
        fn derive_z_is_pure(x in -10.0f64..10.0, x0 in -10.0f64..10.0) {
            let t = ThresholdSpec::new(x0).unwrap();
            let r = rec(x);
            let z = derive_z(&r, &t);
            prop_assert_eq!(z, derive_z(&r, &t));
            prop_assert_eq!(z == 1, x >= x0);
        }
    }
}
