//! Sample statistics used by the estimators and experiments.

use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{CrnError, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    covariance(xs, xs)
}

/// Unbiased sample covariance, two-pass.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "covariance of samples of different length");
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the sample mean.
pub fn std_error_of_mean(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Large-sample standard error of the sample variance, `sqrt((m4 - s^4) / n)`.
pub fn std_error_of_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    ((m4 - m2 * m2).max(0.0) / n).sqrt()
}

/// One-sided Clopper-Pearson upper confidence bound for a binomial proportion.
pub fn clopper_pearson_upper(hits: u64, n: u64, confidence: f64) -> Result<f64> {
    if n == 0 || hits > n {
        return Err(CrnError::Argument(format!("invalid binomial sample {hits}/{n}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(CrnError::Argument(format!("confidence {confidence} outside (0, 1)")));
    }
    if hits == n {
        return Ok(1.0);
    }
    let beta = Beta::new(hits as f64 + 1.0, (n - hits) as f64)
        .map_err(|e| CrnError::Argument(e.to_string()))?;
    Ok(beta.inverse_cdf(confidence))
}

/// Half-width of the Dvoretzky-Kiefer-Wolfowitz band at level `1 - alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Empirical CDF of `sample` at `t` (fraction of values `<= t`).
pub fn ecdf(sample: &[f64], t: f64) -> f64 {
    sample.iter().filter(|&&x| x <= t).count() as f64 / sample.len() as f64
}

/// Fitted line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

/// Weighted least squares with weights `1 / var_y`.
pub fn weighted_line_fit(x: &[f64], y: &[f64], var_y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n || var_y.len() != n {
        return Err(CrnError::Argument("line fit needs at least two matching points".into()));
    }
    if var_y.iter().any(|v| !(v.is_finite() && *v > 0.0)) || x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(CrnError::Degenerate("line fit needs finite points and positive variances".into()));
    }
    let w: Vec<f64> = var_y.iter().map(|v| 1.0 / v).collect();
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - xm).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(CrnError::Degenerate("line fit needs distinct abscissae".into()));
    }
    let sxy: f64 = w.iter().zip(x.iter().zip(y)).map(|(w, (x, y))| w * (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: ym - slope * xm,
        slope_se: (1.0 / sxx).sqrt(),
    })
}

/// Log-log fit of `v` against `x` where `v` has standard errors `se`
/// (delta method: `Var(log v) ~ (se / v)^2`).
pub fn log_log_fit(x: &[f64], v: &[f64], se: &[f64]) -> Result<LineFit> {
    if v.iter().any(|&v| !(v > 0.0)) || x.iter().any(|&x| !(x > 0.0)) {
        return Err(CrnError::Degenerate("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = v.iter().map(|v| v.ln()).collect();
    let var: Vec<f64> = v.iter().zip(se).map(|(v, s)| (s / v).powi(2)).collect();
    weighted_line_fit(&lx, &ly, &var)
}
