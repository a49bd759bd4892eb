//! Covariate summaries on each side of the threshold, per bandwidth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{partition_window, ModelError, ObservationRecord, ThresholdSpec, Window};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BalanceError {
    #[error("unknown covariate '{0}'")]
    UnknownCovariate(String),
    #[error("no records with z = {z} within bandwidth {bandwidth}")]
    EmptyCell { bandwidth: f64, z: u8 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl BalanceError {
    pub fn name(&self) -> &'static str {
        match self {
            BalanceError::UnknownCovariate(_) => "UnknownCovariate",
            BalanceError::EmptyCell { .. } => "EmptyCell",
            BalanceError::Model(_) => "InvalidInput",
        }
    }
}

/// Summary of one covariate within one side of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub bandwidth: f64,
    pub covariate: String,
    /// Threshold indicator of the group: 0 below, 1 above.
    pub z: u8,
    pub mean: f64,
    /// Mean of the two middle order statistics when `n` is even.
    pub median: f64,
    /// Sample standard deviation (n - 1 denominator); 0 when `n == 1`.
    pub std_dev: f64,
    pub sd_undefined: bool,
    pub minimum: f64,
    pub maximum: f64,
    pub n: usize,
}

fn summarize(values: &mut [f64]) -> (f64, f64, f64, f64, f64) {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    };
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, median, sd, values[0], values[n - 1])
}

/// Rows are ordered by bandwidth (input order), covariate (input order),
/// then group z = 0 before z = 1.
pub fn summarize_balance(
    records: &[ObservationRecord],
    threshold: &ThresholdSpec,
    bandwidths: &[f64],
    covariates: &[String],
) -> Result<Vec<BalanceRow>, BalanceError> {
    for name in covariates {
        if records.iter().any(|r| r.covariate(name).is_none()) || records.is_empty() {
            return Err(BalanceError::UnknownCovariate(name.clone()));
        }
    }
    let mut rows = Vec::with_capacity(bandwidths.len() * covariates.len() * 2);
    for &bw in bandwidths {
        let window = Window::around(threshold, bw)?;
        let (above, below) = partition_window(records, &window);
        for (z, side) in [(0u8, &below), (1u8, &above)] {
            if side.is_empty() {
                return Err(BalanceError::EmptyCell { bandwidth: bw, z });
            }
        }
        for name in covariates {
            for (z, side) in [(0u8, &below), (1u8, &above)] {
                let mut values: Vec<f64> = side
                    .iter()
                    .map(|r| r.covariate(name).expect("checked above"))
                    .collect();
                let (mean, median, std_dev, minimum, maximum) = summarize(&mut values);
                rows.push(BalanceRow {
                    bandwidth: bw,
                    covariate: name.clone(),
                    z,
                    mean,
                    median,
                    std_dev,
                    sd_undefined: values.len() == 1,
                    minimum,
                    maximum,
                    n: values.len(),
                });
            }
        }
    }
    Ok(rows)
}
