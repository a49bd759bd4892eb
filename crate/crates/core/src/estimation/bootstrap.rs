use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rdd::point_from_sides;
use super::EstimationError;
use crate::model::{Design, ObservationRecord, Window};

/// Largest tolerated share of failed replicates.
const MAX_FAILED_SHARE: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replications: usize,
    pub failed: usize,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Case-resampling bootstrap within the window.
///
/// Replicate `i` draws from its own ChaCha8 stream (`seed`, stream `i`), so
/// results do not depend on the number of worker threads. Replicates whose
/// estimator fails are dropped and counted. The percentile interval is
/// widened to contain `point` when resampling skew pushes it outside.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_uncertainty(
    records: &[ObservationRecord],
    window: &Window,
    design: Design,
    min_gap: f64,
    adjust: &[String],
    replications: usize,
    seed: u64,
    point: f64,
) -> Result<BootstrapSummary, EstimationError> {
    if replications < 100 {
        return Err(EstimationError::InvalidConfig(format!(
            "bootstrap needs at least 100 replications, got {replications}"
        )));
    }
    let pool: Vec<&ObservationRecord> = records
        .iter()
        .filter(|r| window.contains(r.assignment))
        .collect();
    if pool.is_empty() {
        return Err(EstimationError::EmptySide("window"));
    }
    let x0 = window.x0();
    let draws: Vec<Option<f64>> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut above = Vec::with_capacity(pool.len());
            let mut below = Vec::with_capacity(pool.len());
            for _ in 0..pool.len() {
                let r = pool[rng.random_range(0..pool.len())];
                if r.assignment >= x0 {
                    above.push(r);
                } else {
                    below.push(r);
                }
            }
            match point_from_sides(&above, &below, x0, design, min_gap, adjust) {
                Ok(p) => Ok(Some(p)),
                Err(
                    EstimationError::TooFewPoints { .. }
                    | EstimationError::WeakDiscontinuity { .. }
                    | EstimationError::DegenerateDesign(_)
                    | EstimationError::EmptySide(_),
                ) => Ok(None),
                Err(other) => Err(other),
            }
        })
        .collect::<Result<_, _>>()?;
    let mut values: Vec<f64> = draws.iter().flatten().copied().collect();
    let failed = replications - values.len();
    if failed as f64 > MAX_FAILED_SHARE * replications as f64 || values.len() < 2 {
        return Err(EstimationError::BootstrapDegenerate {
            failed,
            replications,
        });
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    values.sort_by(f64::total_cmp);
    let ci_low = quantile(&values, 0.025).min(point);
    let ci_high = quantile(&values, 0.975).max(point);
    Ok(BootstrapSummary {
        std_error: var.sqrt(),
        ci_low,
        ci_high,
        replications,
        failed,
    })
}
