//! Predictive regressions with a persistent regressor.
//!
//! The system is
//!
//! ```text
//! y_t = alpha + beta  x_{t-1} + u_t          t = 1..n
//! x_t = theta + rho   x_{t-1} + v_t
//! ```
//!
//! OLS on the first equation is biased in small samples when `rho` is close
//! to one and `u` and `v` are correlated. The augmented regression replaces
//! it with `y_t = alpha_c + beta_c x_{t-1} + phi_c v^c_t + e_t`, where
//! `v^c_t` is the AR(1) residual built from the second-order bias-corrected
//! `rho_c`.

use alloc::vec::Vec;

use crate::linalg::least_squares;
use crate::stats;
use crate::{Error, Result};

/// Smallest sample accepted by the AR(1) bias correction.
pub const MIN_CORRECTION_SAMPLE: usize = 10;

/// Ordinary least squares result.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Intercept first when the fit has one, then regressors in order.
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `SSR / (n - k)`.
    pub residual_variance: f64,
    pub standard_errors: Vec<f64>,
    pub r_squared: f64,
    pub n_observations: usize,
    pub has_intercept: bool,
}

impl OlsFit {
    pub fn slope(&self, regressor: usize) -> f64 {
        self.coefficients[regressor + usize::from(self.has_intercept)]
    }

    pub fn slope_standard_error(&self, regressor: usize) -> f64 {
        self.standard_errors[regressor + usize::from(self.has_intercept)]
    }
}

/// OLS of `y` on an intercept plus `regressors`.
pub fn ols(y: &[f64], regressors: &[&[f64]]) -> Result<OlsFit> {
    let ones = alloc::vec![1.0; y.len()];
    let mut columns: Vec<&[f64]> = Vec::with_capacity(regressors.len() + 1);
    columns.push(&ones);
    columns.extend_from_slice(regressors);
    fit(y, &columns, true)
}

/// OLS of `y` on `regressors` with no intercept.
pub fn ols_through_origin(y: &[f64], regressors: &[&[f64]]) -> Result<OlsFit> {
    fit(y, regressors, false)
}

fn fit(y: &[f64], columns: &[&[f64]], has_intercept: bool) -> Result<OlsFit> {
    let ls = least_squares(y, columns)?;
    let n = y.len();
    let k = columns.len();
    let ssr: f64 = ls.residuals.iter().map(|r| r * r).sum();
    let residual_variance = ssr / (n - k) as f64;
    let standard_errors = (0..k)
        .map(|j| libm::sqrt(residual_variance * ls.xtx_inverse[j * k + j]))
        .collect();
    let sst: f64 = if has_intercept {
        let m = stats::mean(y);
        y.iter().map(|v| (v - m) * (v - m)).sum()
    } else {
        y.iter().map(|v| v * v).sum()
    };
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    Ok(OlsFit {
        coefficients: ls.coefficients,
        residuals: ls.residuals,
        residual_variance,
        standard_errors,
        r_squared,
        n_observations: n,
        has_intercept,
    })
}

/// OLS fit of `x_t = theta + rho x_{t-1} + v_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ar1Fit {
    pub theta_ar: f64,
    pub rho: f64,
    /// `v_t`, `t = 1..n`.
    pub residuals: Vec<f64>,
    pub innovation_variance: f64,
    /// OLS sampling variance of `rho`.
    pub rho_variance: f64,
    /// Number of transitions `n` (the series has `n + 1` points).
    pub n: usize,
}

pub fn fit_ar1(x: &[f64]) -> Result<Ar1Fit> {
    if x.len() < 3 {
        return Err(Error::InsufficientData {
            what: "AR(1) fit",
            needed: 3,
            available: x.len(),
        });
    }
    let fit = ols(&x[1..], &[&x[..x.len() - 1]])?;
    Ok(Ar1Fit {
        theta_ar: fit.coefficients[0],
        rho: fit.coefficients[1],
        innovation_variance: fit.residual_variance,
        rho_variance: fit.standard_errors[1] * fit.standard_errors[1],
        n: fit.n_observations,
        residuals: fit.residuals,
    })
}

/// `rho + (1 + 3 rho)/n + 3 (1 + 3 rho)/n^2`.
pub fn corrected_rho(rho_ols: f64, n: usize) -> f64 {
    let n = n as f64;
    let slope = 1.0 + 3.0 * rho_ols;
    rho_ols + slope / n + 3.0 * slope / (n * n)
}

/// Variance inflation of the corrected coefficient, `(1 + 3/n + 9/n^2)^2`.
pub fn corrected_rho_variance_factor(n: usize) -> f64 {
    let n = n as f64;
    let f = 1.0 + 3.0 / n + 9.0 / (n * n);
    f * f
}

/// Reduced-bias AR(1) coefficients and the residual proxy `v^c_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasCorrectedAr1 {
    pub rho_c: f64,
    pub theta_c: f64,
    /// `v^c_t = x_t - theta_c - rho_c x_{t-1}`, `t = 1..n`.
    pub proxy_residuals: Vec<f64>,
    pub n: usize,
}

/// Applies the second-order correction to `ar1`, which must have been fitted
/// on `x`. `n` is the number of AR(1) transitions; `theta_c` uses the mean of
/// the lagged values `x_0..x_{n-1}`.
pub fn bias_correct(ar1: &Ar1Fit, x: &[f64]) -> Result<BiasCorrectedAr1> {
    let n = x.len().saturating_sub(1);
    if n != ar1.n {
        return Err(Error::Alignment {
            what: "AR(1) fit vs series",
            expected: ar1.n + 1,
            found: x.len(),
        });
    }
    if n < MIN_CORRECTION_SAMPLE {
        return Err(Error::InsufficientData {
            what: "bias correction",
            needed: MIN_CORRECTION_SAMPLE + 1,
            available: x.len(),
        });
    }
    let rho_c = corrected_rho(ar1.rho, n);
    let theta_c = (1.0 - rho_c) * stats::mean(&x[..n]);
    let proxy_residuals = x
        .windows(2)
        .map(|w| w[1] - theta_c - rho_c * w[0])
        .collect();
    Ok(BiasCorrectedAr1 {
        rho_c,
        theta_c,
        proxy_residuals,
        n,
    })
}

/// Result of the augmented predictive regression.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedFit {
    pub alpha_c: f64,
    pub beta_c: f64,
    pub phi_c: f64,
    /// OLS standard error of `beta_c` inflated by `phi_c^2 Var(rho_c)`.
    pub beta_c_standard_error: f64,
    pub t_statistic: f64,
    /// `e_t`.
    pub residuals: Vec<f64>,
    /// Sample covariance of `(u_t, v_t)` from the plain two-equation OLS.
    pub error_covariance: [[f64; 2]; 2],
    /// Plain OLS slope of `y_t` on `x_{t-1}`, for comparison.
    pub beta_ols: f64,
    pub ar1: Ar1Fit,
    pub corrected: BiasCorrectedAr1,
}

/// Augmented regression of `y_t` (`t = 1..n`, length `n`) on `x_{t-1}`
/// and `v^c_t`; `x` holds `x_0..x_n` (length `n + 1`).
pub fn augmented_regression(y: &[f64], x: &[f64]) -> Result<AugmentedFit> {
    if x.len() != y.len() + 1 {
        return Err(Error::Alignment {
            what: "regressor must have one more point than the regressand",
            expected: y.len() + 1,
            found: x.len(),
        });
    }
    let ar1 = fit_ar1(x)?;
    let corrected = bias_correct(&ar1, x)?;
    let lagged = &x[..y.len()];
    let aug = ols(y, &[lagged, &corrected.proxy_residuals])?;
    let plain = ols(y, &[lagged])?;

    let (alpha_c, beta_c, phi_c) = (
        aug.coefficients[0],
        aug.coefficients[1],
        aug.coefficients[2],
    );
    let rho_c_variance = corrected_rho_variance_factor(corrected.n) * ar1.rho_variance;
    let se_ols = aug.standard_errors[1];
    let beta_c_standard_error = libm::sqrt(se_ols * se_ols + phi_c * phi_c * rho_c_variance);

    let u = &plain.residuals;
    let v = &ar1.residuals;
    let cov_uv = stats::sample_covariance(u, v);
    let error_covariance = [
        [stats::sample_covariance(u, u), cov_uv],
        [cov_uv, stats::sample_covariance(v, v)],
    ];

    Ok(AugmentedFit {
        alpha_c,
        beta_c,
        phi_c,
        beta_c_standard_error,
        t_statistic: beta_c / beta_c_standard_error,
        residuals: aug.residuals,
        error_covariance,
        beta_ols: plain.coefficients[1],
        ar1,
        corrected,
    })
}
