use serde::{Deserialize, Serialize};

use super::EstimationError;
use crate::model::ObservationRecord;

/// Least-squares line `outcome = intercept + slope * (assignment - x0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub n: usize,
    pub residual_variance: f64,
    pub intercept_se: f64,
}

/// Simple regression on `(centered x, y)` pairs.
pub(crate) fn fit_points(points: &[(f64, f64)]) -> Result<LinearFit, EstimationError> {
    let n = points.len();
    if n < 2 {
        return Err(EstimationError::TooFewPoints { n, needed: 2 });
    }
    let first_x = points[0].0;
    if points.iter().all(|p| p.0 == first_x) {
        return Err(EstimationError::DegenerateDesign(
            "all assignment values are equal".into(),
        ));
    }
    let nf = n as f64;
    let x_mean = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        let dx = x - x_mean;
        sxx += dx * dx;
        sxy += dx * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let residual_variance = if n > 2 {
        let rss: f64 = points
            .iter()
            .map(|&(x, y)| {
                let e = y - intercept - slope * x;
                e * e
            })
            .sum();
        rss / (nf - 2.0)
    } else {
        0.0
    };
    let intercept_se = (residual_variance * (1.0 / nf + x_mean * x_mean / sxx)).sqrt();
    Ok(LinearFit {
        intercept,
        slope,
        n,
        residual_variance,
        intercept_se,
    })
}

/// Ordinary least squares of outcome on the centered assignment `X - x0`.
pub fn fit_local_linear<'a, I>(records: I, x0: f64) -> Result<LinearFit, EstimationError>
where
    I: IntoIterator<Item = &'a ObservationRecord>,
{
    let points: Vec<(f64, f64)> = records
        .into_iter()
        .map(|r| (r.assignment - x0, r.outcome))
        .collect();
    fit_points(&points)
}

/// Solves the symmetric positive-definite system `a x = b` in place by
/// Cholesky factorization, returning `x` and the factor.
fn cholesky_solve(mut a: Vec<Vec<f64>>, b: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let p = b.len();
    for j in 0..p {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        if !(d > 1e-12 * a[j][j].abs().max(1e-300)) {
            return None;
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..p {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    let mut y = vec![0.0; p];
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i][k] * y[k];
        }
        y[i] = s / a[i][i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for k in i + 1..p {
            s -= a[k][i] * x[k];
        }
        x[i] = s / a[i][i];
    }
    Some((x, a))
}

/// Local linear fit with additional linear covariate terms. Covariates are
/// centered at `centers`, so the intercept is the fitted outcome at the
/// threshold for an average subject.
pub(crate) fn fit_adjusted(
    records: &[&ObservationRecord],
    x0: f64,
    covariates: &[String],
    centers: &[f64],
) -> Result<LinearFit, EstimationError> {
    if covariates.is_empty() {
        return fit_local_linear(records.iter().copied(), x0);
    }
    let n = records.len();
    let p = 2 + covariates.len();
    if n < p {
        return Err(EstimationError::TooFewPoints { n, needed: p });
    }
    let mut rows = Vec::with_capacity(n);
    for r in records {
        let mut row = Vec::with_capacity(p);
        row.push(1.0);
        row.push(r.assignment - x0);
        for (name, c) in covariates.iter().zip(centers) {
            let v = r
                .covariate(name)
                .ok_or_else(|| EstimationError::UnknownCovariate(name.clone()))?;
            row.push(v - c);
        }
        rows.push((row, r.outcome));
    }
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, y) in &rows {
        for i in 0..p {
            xty[i] += row[i] * y;
            for j in 0..=i {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..p {
        for j in i + 1..p {
            xtx[i][j] = xtx[j][i];
        }
    }
    let (beta, factor) = cholesky_solve(xtx, &xty).ok_or_else(|| {
        EstimationError::DegenerateDesign("singular design matrix with covariates".into())
    })?;
    let residual_variance = if n > p {
        let rss: f64 = rows
            .iter()
            .map(|(row, y)| {
                let fit: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
                (y - fit).powi(2)
            })
            .sum();
        rss / (n - p) as f64
    } else {
        0.0
    };
    // [(X'X)^-1]_00 = ||L^-1 e0||^2
    let mut v = vec![0.0; p];
    for i in 0..p {
        let mut s = if i == 0 { 1.0 } else { 0.0 };
        for k in 0..i {
            s -= factor[i][k] * v[k];
        }
        v[i] = s / factor[i][i];
    }
    let inv00: f64 = v.iter().map(|x| x * x).sum();
    Ok(LinearFit {
        intercept: beta[0],
        slope: beta[1],
        n,
        residual_variance,
        intercept_se: (residual_variance * inv00).sqrt(),
    })
}
