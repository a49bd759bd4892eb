//! Synthetic regression-discontinuity data with a known effect at the
//! threshold, in observational and interventional regimes.
//!
//! Every random quantity has its own ChaCha8 stream per record: stream
//! `(variable << 32) | index` under the scenario seed. The confounder `C`,
//! the assignment `X`, the treatment uniform and the outcome noise are
//! therefore shared across regimes (common random numbers), and records
//! can be generated in any order or in parallel with identical results.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{estimate, EstimatorConfig, Uncertainty};
use crate::model::{Design, ObservationRecord, RegimeTag, ThresholdSpec};

/// Name of the emitted confounder column.
pub const CONFOUNDER: &str = "C";

/// Relative slack when checking interval coverage, so a zero-width interval
/// from noiseless data still covers the truth despite rounding.
pub const COVERAGE_SLACK: f64 = 1e-9;

const STREAM_C: u64 = 0;
const STREAM_X: u64 = 1;
const STREAM_T: u64 = 2;
const STREAM_Y: u64 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulatorError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("scenario line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("all {0} repetitions failed")]
    AllRepetitionsFailed(usize),
}

impl SimulatorError {
    pub fn name(&self) -> &'static str {
        match self {
            SimulatorError::InvalidConfig(_) => "InvalidConfig",
            SimulatorError::Syntax { .. } => "ScenarioSyntax",
            SimulatorError::AllRepetitionsFailed(_) => "AllRepetitionsFailed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum AssignmentLaw {
    Uniform,
    Beta { a: f64, b: f64 },
}

impl fmt::Display for AssignmentLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssignmentLaw::Uniform => write!(f, "uniform"),
            AssignmentLaw::Beta { a, b } => write!(f, "beta({a},{b})"),
        }
    }
}

impl FromStr for AssignmentLaw {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "uniform" {
            return Ok(AssignmentLaw::Uniform);
        }
        let inner = s
            .strip_prefix("beta(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| format!("expected 'uniform' or 'beta(a,b)', got '{s}'"))?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(format!("beta needs two parameters, got '{s}'"));
        }
        let parse = |p: &str| p.parse::<f64>().map_err(|e| format!("bad beta parameter '{p}': {e}"));
        Ok(AssignmentLaw::Beta {
            a: parse(parts[0])?,
            b: parse(parts[1])?,
        })
    }
}

/// Recipe for a synthetic dataset.
///
/// Outcome: `Y = g(X) + tau * T + confounder_effect * C + noise`, with
/// `g(x) = sum baseline[k] * (x - x0)^k`. Fuzzy treatment is
/// `Bernoulli(logistic(compliance_steepness * (2Z - 1) + confounder_effect * C))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    pub x0: f64,
    pub tau: f64,
    pub baseline: Vec<f64>,
    pub confounder_effect: f64,
    pub compliance_steepness: f64,
    pub noise_sd: f64,
    pub design: Design,
    pub assignment_law: AssignmentLaw,
    pub seed: u64,
    /// Jump added to `g` at the threshold. Nonzero values break the
    /// continuity assumption and bias every estimator by this amount.
    #[serde(default)]
    pub violate_continuity: f64,
    /// Omit `C` from the emitted covariates.
    #[serde(default)]
    pub censor_confounder: bool,
}

impl ScenarioConfig {
    /// Statins-like fuzzy scenario: risk score threshold 0.2, effect -0.9.
    pub fn statins_like() -> Self {
        Self {
            n: 5000,
            x0: 0.2,
            tau: -0.9,
            baseline: vec![3.5, 1.0, -2.0],
            confounder_effect: 0.3,
            compliance_steepness: 2.5,
            noise_sd: 0.25,
            design: Design::Fuzzy,
            assignment_law: AssignmentLaw::Uniform,
            seed: 20_240_101,
            violate_continuity: 0.0,
            censor_confounder: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimulatorError> {
        let bad = |m: String| Err(SimulatorError::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.n as u64 >= 1 << 32 {
            return bad(format!("n must be below 2^32, got {}", self.n));
        }
        for (name, v) in [
            ("x0", self.x0),
            ("tau", self.tau),
            ("confounder_effect", self.confounder_effect),
            ("violate_continuity", self.violate_continuity),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        if self.baseline.iter().any(|c| !c.is_finite()) {
            return bad("baseline coefficients must be finite".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd must be finite and >= 0, got {}", self.noise_sd));
        }
        if self.design == Design::Fuzzy
            && !(self.compliance_steepness > 0.0 && self.compliance_steepness.is_finite())
        {
            return bad(format!(
                "fuzzy design needs a finite compliance_steepness > 0, got {}",
                self.compliance_steepness
            ));
        }
        if let AssignmentLaw::Beta { a, b } = self.assignment_law {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return bad(format!("beta parameters must be positive, got ({a}, {b})"));
            }
        }
        Ok(())
    }

    /// Continuous baseline surface, plus the optional jump at `x0`.
    pub fn baseline_at(&self, x: f64) -> f64 {
        let d = x - self.x0;
        let g = self.baseline.iter().rev().fold(0.0, |acc, c| acc * d + c);
        if x >= self.x0 {
            g + self.violate_continuity
        } else {
            g
        }
    }

    /// Regime matching the configured observational design.
    pub fn observational_regime(&self) -> RegimeTag {
        match self.design {
            Design::Sharp => RegimeTag::ObservationalSharp,
            Design::Fuzzy => RegimeTag::ObservationalFuzzy,
        }
    }

    /// Flat `key = value` text, one field per line.
    pub fn to_text(&self) -> String {
        let baseline: Vec<String> = self.baseline.iter().map(|c| c.to_string()).collect();
        format!(
            "n = {}\nx0 = {}\ntau = {}\nbaseline = {}\nconfounder_effect = {}\n\
             compliance_steepness = {}\nnoise_sd = {}\ndesign = {}\nassignment_law = {}\n\
             seed = {}\nviolate_continuity = {}\ncensor_confounder = {}\n",
            self.n,
            self.x0,
            self.tau,
            baseline.join(", "),
            self.confounder_effect,
            self.compliance_steepness,
            self.noise_sd,
            self.design,
            self.assignment_law,
            self.seed,
            self.violate_continuity,
            self.censor_confounder,
        )
    }

    /// Parses the `key = value` format. Missing keys keep the values of
    /// [`ScenarioConfig::statins_like`]; unknown keys are errors.
    pub fn from_text(text: &str) -> Result<Self, SimulatorError> {
        let mut cfg = Self::statins_like();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| SimulatorError::Syntax {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: FromStr>(v: &str) -> Result<T, String>
            where
                T::Err: fmt::Display,
            {
                v.parse::<T>().map_err(|e| format!("bad value '{v}': {e}"))
            }
            let result: Result<(), String> = match key {
                "n" => num(value).map(|v| cfg.n = v),
                "x0" => num(value).map(|v| cfg.x0 = v),
                "tau" => num(value).map(|v| cfg.tau = v),
                "baseline" if value.is_empty() => {
                    cfg.baseline.clear();
                    Ok(())
                }
                "baseline" => value
                    .split(',')
                    .map(|p| num::<f64>(p.trim()))
                    .collect::<Result<Vec<_>, _>>()
                    .map(|v| cfg.baseline = v),
                "confounder_effect" => num(value).map(|v| cfg.confounder_effect = v),
                "compliance_steepness" => num(value).map(|v| cfg.compliance_steepness = v),
                "noise_sd" => num(value).map(|v| cfg.noise_sd = v),
                "design" => value.parse().map(|v| cfg.design = v),
                "assignment_law" => value.parse().map(|v| cfg.assignment_law = v),
                "seed" => num(value).map(|v| cfg.seed = v),
                "violate_continuity" => num(value).map(|v| cfg.violate_continuity = v),
                "censor_confounder" => num(value).map(|v| cfg.censor_confounder = v),
                other => Err(format!("unknown key '{other}'")),
            };
            result.map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn stream(seed: u64, variable: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((variable << 32) | index as u64);
    rng
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn record(config: &ScenarioConfig, regime: RegimeTag, i: usize) -> ObservationRecord {
    let seed = config.seed;
    let c: f64 = stream(seed, STREAM_C, i).sample(StandardNormal);
    let mut rx = stream(seed, STREAM_X, i);
    let x: f64 = match config.assignment_law {
        AssignmentLaw::Uniform => rx.random::<f64>(),
        AssignmentLaw::Beta { a, b } => Beta::new(a, b).expect("validated").sample(&mut rx),
    };
    let z = u8::from(x >= config.x0);
    let u: f64 = stream(seed, STREAM_T, i).random();
    let t = match regime {
        RegimeTag::InterveneControl => 0,
        RegimeTag::InterveneTreat => 1,
        RegimeTag::ObservationalSharp => z,
        RegimeTag::ObservationalFuzzy => {
            let sign = if z == 1 { 1.0 } else { -1.0 };
            let p = logistic(config.compliance_steepness * sign + config.confounder_effect * c);
            u8::from(u < p)
        }
    };
    let e: f64 = stream(seed, STREAM_Y, i).sample(StandardNormal);
    let y = config.baseline_at(x)
        + config.tau * t as f64
        + config.confounder_effect * c
        + config.noise_sd * e;
    let mut covariates = BTreeMap::new();
    if !config.censor_confounder {
        covariates.insert(CONFOUNDER.to_string(), c);
    }
    ObservationRecord {
        outcome: y,
        assignment: x,
        treatment: t,
        covariates,
    }
}

/// Draws `config.n` records under `regime`.
pub fn generate(
    config: &ScenarioConfig,
    regime: RegimeTag,
) -> Result<Vec<ObservationRecord>, SimulatorError> {
    config.validate()?;
    Ok((0..config.n)
        .into_par_iter()
        .map(|i| record(config, regime, i))
        .collect())
}

/// Difference of the interventional mean outcomes at the threshold. By
/// construction the baseline and the confounder cancel, leaving `tau`.
pub fn true_ace(config: &ScenarioConfig) -> f64 {
    config.tau
}

/// Seed of repetition `rep` (SplitMix64 finalizer over `base_seed + rep`).
pub fn repetition_seed(base_seed: u64, rep: usize) -> u64 {
    let mut z = base_seed.wrapping_add((rep as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    pub rep: usize,
    pub seed: u64,
    pub point: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub true_ace: f64,
    pub repetitions: usize,
    pub succeeded: usize,
    pub bias: f64,
    pub rmse: f64,
    /// Share of intervals covering the true effect; absent without intervals.
    pub coverage: Option<f64>,
    pub runs: Vec<Repetition>,
}

/// Repeats generate-then-estimate on the observational regime of `config`.
///
/// Repetition `r` uses the scenario seed `repetition_seed(base_seed, r)`;
/// a bootstrap seed in `estimator` is offset the same way.
pub fn monte_carlo_study(
    config: &ScenarioConfig,
    estimator: &EstimatorConfig,
    repetitions: usize,
    bandwidth: f64,
    base_seed: u64,
) -> Result<StudyReport, SimulatorError> {
    if repetitions < 10 {
        return Err(SimulatorError::InvalidConfig(format!(
            "a study needs at least 10 repetitions, got {repetitions}"
        )));
    }
    config.validate()?;
    let threshold = ThresholdSpec::new(config.x0)
        .map_err(|e| SimulatorError::InvalidConfig(e.to_string()))?;
    let truth = true_ace(config);
    let regime = config.observational_regime();
    let runs: Vec<Repetition> = (0..repetitions)
        .into_par_iter()
        .map(|rep| {
            let seed = repetition_seed(base_seed, rep);
            let scenario = ScenarioConfig {
                seed,
                ..config.clone()
            };
            let data = generate(&scenario, regime).expect("validated");
            let mut est_cfg = estimator.clone();
            if let Uncertainty::Bootstrap { replications, seed } = est_cfg.uncertainty {
                est_cfg.uncertainty = Uncertainty::Bootstrap {
                    replications,
                    seed: repetition_seed(seed, rep),
                };
            }
            match estimate(&data, &threshold, bandwidth, &est_cfg) {
                Ok(e) => Repetition {
                    rep,
                    seed,
                    point: Some(e.point),
                    ci_low: e.ci_low,
                    ci_high: e.ci_high,
                    error: None,
                },
                Err(err) => Repetition {
                    rep,
                    seed,
                    point: None,
                    ci_low: None,
                    ci_high: None,
                    error: Some(err.name().to_string()),
                },
            }
        })
        .collect();
    let points: Vec<f64> = runs.iter().filter_map(|r| r.point).collect();
    if points.is_empty() {
        return Err(SimulatorError::AllRepetitionsFailed(repetitions));
    }
    let m = points.len() as f64;
    let bias = points.iter().map(|p| p - truth).sum::<f64>() / m;
    let rmse = (points.iter().map(|p| (p - truth).powi(2)).sum::<f64>() / m).sqrt();
    let intervals: Vec<(f64, f64)> = runs
        .iter()
        .filter_map(|r| Some((r.ci_low?, r.ci_high?)))
        .collect();
    let slack = COVERAGE_SLACK * truth.abs().max(1.0);
    let coverage = (!intervals.is_empty()).then(|| {
        intervals
            .iter()
            .filter(|(lo, hi)| *lo - slack <= truth && truth <= *hi + slack)
            .count() as f64
            / intervals.len() as f64
    });
    Ok(StudyReport {
        true_ace: truth,
        repetitions,
        succeeded: points.len(),
        bias,
        rmse,
        coverage,
        runs,
    })
}
