//! Plain-text tables of the predictive regressions and the calibrated
//! parameters.

use std::fmt::Write;

use cape_core::calibration::{CalibrationReport, PredictiveCoefficients, PredictiveFit};
use cape_core::dynamics::ModelParams;
use cape_core::stats::RollingEstimate;

use crate::formats::mode_name;

fn predictive_row(out: &mut String, label: &str, fit: &PredictiveFit, p_value: Option<f64>) {
    let (a, b, se) = fit.yearly_bp();
    let p = p_value
        .map(|p| format!("{p:.4}"))
        .unwrap_or_else(|| "-".into());
    let _ = writeln!(
        out,
        "{label:<10} {a:>10.1} {b:>10.1} {se:>10.1} {:>8.2} {:>7.4} {p:>8} {:>6}",
        fit.fit.t_statistic, fit.fit.corrected.rho_c, fit.n_observations,
    );
}

/// Yearly coefficients of the three yield regressions in units of 1e-4.
pub fn predictive_table(coeffs: &PredictiveCoefficients, gross_p_value: Option<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Predictive regressions, horizon {} months, {} sampling (yearly, x1e-4)",
        coeffs.horizon,
        mode_name(coeffs.mode)
    );
    let _ = writeln!(
        out,
        "{:<10} {:>10} {:>10} {:>10} {:>8} {:>7} {:>8} {:>6}",
        "yield", "alpha_c", "beta_c", "se(beta)", "t", "rho_c", "p(boot)", "n"
    );
    predictive_row(&mut out, "gross", &coeffs.gross, gross_p_value);
    predictive_row(&mut out, "price", &coeffs.price, None);
    predictive_row(&mut out, "dividend", &coeffs.dividend, None);
    out
}

struct Row<'a> {
    name: &'a str,
    value: f64,
    ci: Option<(f64, f64)>,
    reference: f64,
}

fn rolling<'a>(name: &'a str, est: &RollingEstimate, scale: f64, reference: f64) -> Row<'a> {
    Row {
        name,
        value: est.mean * scale,
        ci: Some((est.ci68.0 * scale, est.ci68.1 * scale)),
        reference,
    }
}

/// Calibrated parameters next to a reference set. Rates and variances are
/// per month in units of 1e-4; `F` and `G` coefficients are yearly in units
/// of 1e-4.
pub fn calibration_table(report: &CalibrationReport, reference: &ModelParams) -> String {
    let bp = 1e4;
    let yearly = 12.0 * 1e4;
    let m = &report.momentum;
    let price = report.price_linear();
    let dividend = report.dividend_linear();
    let rows = [
        rolling("gamma", &m.gamma, 1.0, reference.gamma),
        rolling("kappa", &m.kappa, bp, reference.kappa * bp),
        rolling(
            "sigma_mu^2",
            &m.sigma_mu2,
            bp,
            reference.sigma_mu.powi(2) * bp,
        ),
        Row {
            name: "sigma_p^2",
            value: report.sigma_p.sigma_p2 * bp,
            ci: None,
            reference: reference.sigma_p.powi(2) * bp,
        },
        rolling("g", &report.g.estimate, bp, reference.g * bp),
        rolling(
            "theta_d",
            &report.dividend.theta_div.estimate,
            bp,
            reference.theta_div * bp,
        ),
        rolling(
            "sigma_d^2",
            &report.dividend.sigma_d2,
            bp,
            reference.sigma_d.powi(2) * bp,
        ),
        Row {
            name: "alpha_F",
            value: price.alpha * yearly,
            ci: None,
            reference: reference.price_drift.alpha * yearly,
        },
        Row {
            name: "beta_F",
            value: price.beta * yearly,
            ci: None,
            reference: reference.price_drift.beta * yearly,
        },
        Row {
            name: "alpha_G",
            value: dividend.alpha * yearly,
            ci: None,
            reference: reference.dividend_level.alpha * yearly,
        },
        Row {
            name: "beta_G",
            value: dividend.beta * yearly,
            ci: None,
            reference: reference.dividend_level.beta * yearly,
        },
        Row {
            name: "alpha_H",
            value: m.drift_offset.alpha,
            ci: None,
            reference: reference.drift_offset.alpha,
        },
        Row {
            name: "beta_H",
            value: m.drift_offset.beta,
            ci: None,
            reference: reference.drift_offset.beta,
        },
    ];
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Calibrated parameters (rates per month x1e-4; F, G yearly x1e-4)"
    );
    let _ = writeln!(
        out,
        "{:<12} {:>12} {:>25} {:>12}",
        "parameter", "estimate", "68% interval", "reference"
    );
    for r in rows {
        let ci =
            r.ci.map(|(lo, hi)| format!("[{lo:.4}, {hi:.4}]"))
                .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<12} {:>12.4} {:>25} {:>12.4}",
            r.name, r.value, ci, r.reference
        );
    }
    let _ = writeln!(
        out,
        "momentum point ({:.4}, {:.6}){}, offset iterations {}{}",
        m.gamma_point,
        m.kappa_point,
        if m.projected { " projected" } else { "" },
        m.iterations,
        if m.converged { "" } else { " (not converged)" },
    );
    let _ = writeln!(
        out,
        "leading correction at mean state {:.3e}",
        m.leading_correction
    );
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
