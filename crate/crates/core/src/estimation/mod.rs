//! Sharp and fuzzy estimators of the average causal effect at the threshold.
//!
//! Both designs fit a separate least-squares line on each side of the
//! threshold within the bandwidth window; the jump in intercepts is the
//! numerator. The fuzzy design divides by the jump in observed treatment
//! rates (a Wald ratio).

mod bootstrap;
mod ols;
mod rdd;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AceEstimate, Design, ModelError, ObservationRecord, ThresholdSpec, Window};

pub use bootstrap::{bootstrap_uncertainty, BootstrapSummary};
pub use ols::{fit_local_linear, LinearFit};
pub use rdd::{
    compliance_rates, delta_method_se, estimate_fuzzy, estimate_sharp, side_fits,
    ComplianceRates, SideFits,
};

/// Two-sided 95% standard normal quantile.
pub const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("too few points: {n} (need at least {needed})")]
    TooFewPoints { n: usize, needed: usize },
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("design is not sharp: {violations} window record(s) have treatment != Z (first at assignment {first_assignment})")]
    NotSharp {
        violations: usize,
        first_assignment: f64,
    },
    #[error("empty side: {0}")]
    EmptySide(&'static str),
    #[error("weak discontinuity: compliance gap {gap} is below the minimum {min_gap}")]
    WeakDiscontinuity { gap: f64, min_gap: f64 },
    #[error("bootstrap degenerate: {failed} of {replications} replicates failed")]
    BootstrapDegenerate { failed: usize, replications: usize },
    #[error("unknown covariate '{0}'")]
    UnknownCovariate(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl EstimationError {
    /// Stable machine-readable name.
    pub fn name(&self) -> &'static str {
        match self {
            EstimationError::TooFewPoints { .. } => "TooFewPoints",
            EstimationError::DegenerateDesign(_) => "DegenerateDesign",
            EstimationError::NotSharp { .. } => "NotSharp",
            EstimationError::EmptySide(_) => "EmptySide",
            EstimationError::WeakDiscontinuity { .. } => "WeakDiscontinuity",
            EstimationError::BootstrapDegenerate { .. } => "BootstrapDegenerate",
            EstimationError::UnknownCovariate(_) => "UnknownCovariate",
            EstimationError::InvalidConfig(_) => "InvalidConfig",
            EstimationError::Model(_) => "InvalidInput",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Uncertainty {
    None,
    /// Analytic: OLS intercept SEs, plus the first-order ratio expansion for fuzzy designs.
    Delta,
    Bootstrap { replications: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub design: Design,
    pub uncertainty: Uncertainty,
    pub min_gap: f64,
    /// Covariates entered linearly in both side regressions.
    pub adjust: Vec<String>,
}

impl EstimatorConfig {
    pub fn new(design: Design) -> Self {
        Self {
            design,
            uncertainty: Uncertainty::Bootstrap {
                replications: 2000,
                seed: 0,
            },
            min_gap: 0.05,
            adjust: Vec::new(),
        }
    }

    pub fn with_uncertainty(mut self, uncertainty: Uncertainty) -> Self {
        self.uncertainty = uncertainty;
        self
    }

    pub fn with_min_gap(mut self, min_gap: f64) -> Self {
        self.min_gap = min_gap;
        self
    }

    pub fn with_adjustment(mut self, covariates: Vec<String>) -> Self {
        self.adjust = covariates;
        self
    }
}

/// Estimates the effect for one bandwidth with the configured uncertainty method.
pub fn estimate(
    records: &[ObservationRecord],
    threshold: &ThresholdSpec,
    bandwidth: f64,
    config: &EstimatorConfig,
) -> Result<AceEstimate, EstimationError> {
    let window = Window::around(threshold, bandwidth)?;
    if !(config.min_gap >= 0.0) {
        return Err(EstimationError::InvalidConfig(format!(
            "min_gap must be non-negative, got {}",
            config.min_gap
        )));
    }
    let base = match config.design {
        Design::Sharp => estimate_sharp(records, &window, &config.adjust)?,
        Design::Fuzzy => estimate_fuzzy(records, &window, config.min_gap, &config.adjust)?,
    };
    Ok(match config.uncertainty {
        Uncertainty::None => AceEstimate {
            std_error: None,
            ci_low: None,
            ci_high: None,
            ..base
        },
        Uncertainty::Delta => base,
        Uncertainty::Bootstrap { replications, seed } => {
            let b = bootstrap_uncertainty(
                records,
                &window,
                config.design,
                config.min_gap,
                &config.adjust,
                replications,
                seed,
                base.point,
            )?;
            base.with_interval(b.std_error, b.ci_low, b.ci_high)
        }
    })
}

/// One estimate per bandwidth, in input order; failures are kept per entry.
pub fn bandwidth_sweep(
    records: &[ObservationRecord],
    threshold: &ThresholdSpec,
    bandwidths: &[f64],
    config: &EstimatorConfig,
) -> Vec<Result<AceEstimate, EstimationError>> {
    bandwidths
        .iter()
        .map(|&bw| estimate(records, threshold, bw, config))
        .collect()
}
