use serde::{Deserialize, Serialize};

use super::ols::{fit_adjusted, LinearFit};
use super::{EstimationError, Z_975};
use crate::model::{partition_window, AceEstimate, Design, ObservationRecord, Window};

/// Observed treatment rates just above and below the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplianceRates {
    pub pi_above: f64,
    pub pi_below: f64,
}

impl ComplianceRates {
    pub fn gap(&self) -> f64 {
        self.pi_above - self.pi_below
    }
}

fn treated_share(side: &[&ObservationRecord]) -> f64 {
    side.iter().filter(|r| r.is_treated()).count() as f64 / side.len() as f64
}

pub fn compliance_rates(
    above: &[&ObservationRecord],
    below: &[&ObservationRecord],
) -> Result<ComplianceRates, EstimationError> {
    if above.is_empty() {
        return Err(EstimationError::EmptySide("above"));
    }
    if below.is_empty() {
        return Err(EstimationError::EmptySide("below"));
    }
    Ok(ComplianceRates {
        pi_above: treated_share(above),
        pi_below: treated_share(below),
    })
}

/// Per-side local linear fits within one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideFits {
    pub above: LinearFit,
    pub below: LinearFit,
}

impl SideFits {
    pub fn jump(&self) -> f64 {
        self.above.intercept - self.below.intercept
    }

    pub fn jump_se(&self) -> f64 {
        self.above.intercept_se.hypot(self.below.intercept_se)
    }
}

fn covariate_centers(
    above: &[&ObservationRecord],
    below: &[&ObservationRecord],
    adjust: &[String],
) -> Result<Vec<f64>, EstimationError> {
    let n = (above.len() + below.len()) as f64;
    adjust
        .iter()
        .map(|name| {
            let mut total = 0.0;
            for r in above.iter().chain(below) {
                total += r
                    .covariate(name)
                    .ok_or_else(|| EstimationError::UnknownCovariate(name.clone()))?;
            }
            Ok(total / n)
        })
        .collect()
}

pub(crate) fn fit_sides(
    above: &[&ObservationRecord],
    below: &[&ObservationRecord],
    x0: f64,
    adjust: &[String],
) -> Result<SideFits, EstimationError> {
    let centers = covariate_centers(above, below, adjust)?;
    Ok(SideFits {
        above: fit_adjusted(above, x0, adjust, &centers)?,
        below: fit_adjusted(below, x0, adjust, &centers)?,
    })
}

/// Local linear fits on both sides of the window.
pub fn side_fits(
    records: &[ObservationRecord],
    window: &Window,
    adjust: &[String],
) -> Result<SideFits, EstimationError> {
    let (above, below) = partition_window(records, window);
    fit_sides(&above, &below, window.x0(), adjust)
}

/// Point estimate from already partitioned sides; shared with the bootstrap.
pub(crate) fn point_from_sides(
    above: &[&ObservationRecord],
    below: &[&ObservationRecord],
    x0: f64,
    design: Design,
    min_gap: f64,
    adjust: &[String],
) -> Result<f64, EstimationError> {
    let fits = fit_sides(above, below, x0, adjust)?;
    match design {
        Design::Sharp => Ok(fits.jump()),
        Design::Fuzzy => {
            let rates = compliance_rates(above, below)?;
            let gap = rates.gap();
            if gap.abs() < min_gap {
                return Err(EstimationError::WeakDiscontinuity { gap, min_gap });
            }
            Ok(fits.jump() / gap)
        }
    }
}

/// Sharp design: difference of the two side intercepts, with the analytic
/// standard error `sqrt(se_above^2 + se_below^2)` and a normal 95% interval.
pub fn estimate_sharp(
    records: &[ObservationRecord],
    window: &Window,
    adjust: &[String],
) -> Result<AceEstimate, EstimationError> {
    let (above, below) = partition_window(records, window);
    let violations: Vec<&&ObservationRecord> = above
        .iter()
        .filter(|r| r.treatment != 1)
        .chain(below.iter().filter(|r| r.treatment != 0))
        .collect();
    if let Some(first) = violations.first() {
        return Err(EstimationError::NotSharp {
            violations: violations.len(),
            first_assignment: first.assignment,
        });
    }
    let fits = fit_sides(&above, &below, window.x0(), adjust)?;
    let point = fits.jump();
    let se = fits.jump_se();
    Ok(AceEstimate {
        point,
        std_error: Some(se),
        ci_low: Some(point - Z_975 * se),
        ci_high: Some(point + Z_975 * se),
        design: Design::Sharp,
        n_above: above.len(),
        n_below: below.len(),
        bandwidth: window.bandwidth(),
        compliance_gap: None,
    })
}

/// First-order standard error of the Wald ratio `jump / gap`, treating the
/// numerator and the two treatment rates as independent.
pub fn delta_method_se(fits: &SideFits, rates: &ComplianceRates, n_above: usize, n_below: usize) -> f64 {
    let num = fits.jump();
    let gap = rates.gap();
    let var_num = fits.above.intercept_se.powi(2) + fits.below.intercept_se.powi(2);
    let var_gap = rates.pi_above * (1.0 - rates.pi_above) / n_above as f64
        + rates.pi_below * (1.0 - rates.pi_below) / n_below as f64;
    (var_num / gap.powi(2) + num.powi(2) * var_gap / gap.powi(4)).sqrt()
}

/// Fuzzy design: Wald ratio of the intercept jump over the compliance gap.
/// The attached uncertainty is the delta-method approximation.
pub fn estimate_fuzzy(
    records: &[ObservationRecord],
    window: &Window,
    min_gap: f64,
    adjust: &[String],
) -> Result<AceEstimate, EstimationError> {
    let (above, below) = partition_window(records, window);
    let fits = fit_sides(&above, &below, window.x0(), adjust)?;
    let rates = compliance_rates(&above, &below)?;
    let gap = rates.gap();
    if gap.abs() < min_gap {
        return Err(EstimationError::WeakDiscontinuity { gap, min_gap });
    }
    let point = fits.jump() / gap;
    let se = delta_method_se(&fits, &rates, above.len(), below.len());
    Ok(AceEstimate {
        point,
        std_error: Some(se),
        ci_low: Some(point - Z_975 * se),
        ci_high: Some(point + Z_975 * se),
        design: Design::Fuzzy,
        n_above: above.len(),
        n_below: below.len(),
        bandwidth: window.bandwidth(),
        compliance_gap: Some(gap),
    })
}
