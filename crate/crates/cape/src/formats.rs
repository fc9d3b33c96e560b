//! On-disk formats: derived series, parameter and fit records, bootstrap
//! samples, scenarios and bands.

use std::fs::File;
use std::path::Path;

use cape_core::bootstrap::BootstrapResult;
use cape_core::calibration::{PredictiveFit, SamplingMode};
use cape_core::dynamics::{Affine, ModelParams};
use cape_core::market::{MarketSeries, RawMonthlyRecord};
use cape_core::scenario::{ConfidenceBand, ScenarioSet};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> AppError + '_ {
    move |source| AppError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}

/// Nominal records with the default column names, readable by
/// [`crate::input::parse_market_csv`].
pub fn write_records(path: &Path, records: &[RawMonthlyRecord]) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(["Date", "P", "D", "E", "CPI"])
        .map_err(&err)?;
    for r in records {
        w.write_record([
            r.date.to_string(),
            r.nominal_price.to_string(),
            cell(r.nominal_dividend),
            cell(r.nominal_earnings),
            r.cpi.to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// `date,P,D,E,CAPE,logEP,logDP,H` with real values; undefined entries are
/// empty.
pub fn write_derived(path: &Path, series: &MarketSeries) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(["date", "P", "D", "E", "CAPE", "logEP", "logDP", "H"])
        .map_err(&err)?;
    for t in 0..series.len() {
        w.write_record([
            series.dates()[t].to_string(),
            series.real_price()[t].to_string(),
            cell(series.real_dividend()[t]),
            cell(series.real_earnings()[t]),
            cell(series.cape()[t].map(|e| series.real_price()[t] / e)),
            cell(series.log_ep()[t]),
            cell(series.log_dp()[t]),
            cell(series.log_gross_returns()[t]),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Plain monthly rates and variances.
    Monthly,
    /// Rates and variances in 1e-4 per month; the price-drift and dividend
    /// coefficients in 1e-4 per year.
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub alpha: f64,
    pub beta: f64,
}

/// Key-value parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub units: Units,
    pub gamma: f64,
    pub kappa: f64,
    pub sigma_mu2: f64,
    pub sigma_p2: f64,
    pub g: f64,
    pub theta_div: f64,
    pub sigma_d2: f64,
    pub price_drift: Linear,
    pub dividend_level: Linear,
    pub drift_offset: Linear,
}

impl ParamFile {
    pub fn from_params(p: &ModelParams, units: Units) -> Self {
        let (rate, yearly) = match units {
            Units::Monthly => (1.0, 1.0),
            Units::Table => (1e4, 12.0 * 1e4),
        };
        let lin = |a: Affine, s: f64| Linear {
            alpha: a.alpha * s,
            beta: a.beta * s,
        };
        ParamFile {
            units,
            gamma: p.gamma,
            kappa: p.kappa * rate,
            sigma_mu2: p.sigma_mu * p.sigma_mu * rate,
            sigma_p2: p.sigma_p * p.sigma_p * rate,
            g: p.g * rate,
            theta_div: p.theta_div * rate,
            sigma_d2: p.sigma_d * p.sigma_d * rate,
            price_drift: lin(p.price_drift, yearly),
            dividend_level: lin(p.dividend_level, yearly),
            drift_offset: lin(p.drift_offset, 1.0),
        }
    }

    pub fn to_params(&self) -> Result<ModelParams> {
        let (rate, yearly) = match self.units {
            Units::Monthly => (1.0, 1.0),
            Units::Table => (1e-4, 1e-4 / 12.0),
        };
        let variances = [self.sigma_mu2, self.sigma_p2, self.sigma_d2];
        if variances.iter().any(|v| *v < 0.0) {
            return Err(AppError::Config("variances must be non-negative".into()));
        }
        let lin = |l: Linear, s: f64| Affine::new(l.alpha * s, l.beta * s);
        let params = ModelParams {
            gamma: self.gamma,
            kappa: self.kappa * rate,
            sigma_mu: (self.sigma_mu2 * rate).sqrt(),
            sigma_p: (self.sigma_p2 * rate).sqrt(),
            g: self.g * rate,
            price_drift: lin(self.price_drift, yearly),
            dividend_level: lin(self.dividend_level, yearly),
            drift_offset: lin(self.drift_offset, 1.0),
            theta_div: self.theta_div * rate,
            sigma_d: (self.sigma_d2 * rate).sqrt(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        toml::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| AppError::Config(e.to_string()))?;
        write_text(path, &text)
    }
}

pub fn mode_name(mode: SamplingMode) -> &'static str {
    match mode {
        SamplingMode::Overlapping => "overlapping",
        SamplingMode::NonOverlapping => "nonoverlapping",
    }
}

/// One augmented regression in the fit record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub n: usize,
    pub alpha_c: f64,
    pub beta_c: f64,
    pub phi_c: f64,
    pub beta_c_se: f64,
    pub t_statistic: f64,
    pub beta_ols: f64,
    pub rho_ols: f64,
    pub rho_c: f64,
    /// Yearly coefficients in units of 1e-4.
    pub alpha_yearly_bp: f64,
    pub beta_yearly_bp: f64,
    pub beta_se_yearly_bp: f64,
}

impl From<&PredictiveFit> for FitEntry {
    fn from(f: &PredictiveFit) -> Self {
        let (a, b, se) = f.yearly_bp();
        FitEntry {
            n: f.n_observations,
            alpha_c: f.fit.alpha_c,
            beta_c: f.fit.beta_c,
            phi_c: f.fit.phi_c,
            beta_c_se: f.fit.beta_c_standard_error,
            t_statistic: f.fit.t_statistic,
            beta_ols: f.fit.beta_ols,
            rho_ols: f.fit.ar1.rho,
            rho_c: f.fit.corrected.rho_c,
            alpha_yearly_bp: a,
            beta_yearly_bp: b,
            beta_se_yearly_bp: se,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub horizon: usize,
    pub mode: String,
    pub first_month: String,
    pub gross: FitEntry,
    pub price: FitEntry,
    pub dividend: FitEntry,
}

impl FitRecord {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| AppError::Config(e.to_string()))?;
        write_text(path, &text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRecord {
    pub replications: usize,
    pub seed: u64,
    pub horizon: usize,
    pub mode: String,
    pub observed_beta_c: f64,
    pub p_value: f64,
    pub mirrored: bool,
    pub degenerate: bool,
    pub null_alpha: f64,
    pub null_theta: f64,
    pub null_rho: f64,
}

/// `replica,beta_c`.
pub fn write_bootstrap_samples(path: &Path, result: &BootstrapResult) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(["replica", "beta_c"]).map_err(&err)?;
    for (i, b) in result.beta_c_samples.iter().enumerate() {
        w.write_record([i.to_string(), b.to_string()])
            .map_err(&err)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Long format: one row per path and horizon.
pub fn write_scenarios(path: &Path, set: &ScenarioSet) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record([
        "path",
        "scenario",
        "start",
        "horizon",
        "logEP0",
        "yield",
        "price_yield",
    ])
    .map_err(&err)?;
    let horizons = set.horizons.as_slice();
    for p in 0..set.n_paths() {
        let s = set.path_start[p];
        let start = &set.starts[s];
        let date = start.date.map(|d| d.to_string()).unwrap_or_default();
        for (k, h) in horizons.iter().enumerate() {
            w.write_record([
                p.to_string(),
                s.to_string(),
                date.clone(),
                h.to_string(),
                start.log_ep0.to_string(),
                set.gross_yield(p, k).to_string(),
                set.price_yield(p, k).to_string(),
            ])
            .map_err(&err)?;
        }
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// `horizon,center,low,high`.
pub fn write_band(path: &Path, band: &ConfidenceBand) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(["horizon", "center", "low", "high"])
        .map_err(&err)?;
    for (k, h) in band.horizons.iter().enumerate() {
        w.write_record([
            h.to_string(),
            band.center[k].to_string(),
            band.low(k).to_string(),
            band.high(k).to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_units_round_trip() {
        let p = ModelParams::sp_reference();
        let file = ParamFile::from_params(&p, Units::Table);
        assert!((file.kappa - 323.0).abs() < 1e-9);
        assert!((file.price_drift.alpha - 2531.0).abs() < 1e-9);
        assert!((file.sigma_p2 - 18.2).abs() < 1e-9);
        let back = file.to_params().unwrap();
        assert!((back.kappa - p.kappa).abs() < 1e-15);
        assert!((back.sigma_d - p.sigma_d).abs() < 1e-15);
        assert!((back.dividend_level.beta - p.dividend_level.beta).abs() < 1e-15);

        let text = toml::to_string(&file).unwrap();
        assert!(text.contains("units = \"table\""));
        let parsed: ParamFile = toml::from_str(&text).unwrap();
        assert_eq!(parsed, file);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut file = ParamFile::from_params(&ModelParams::sp_reference(), Units::Monthly);
        file.theta_div = 2.5;
        let err = file.to_params().unwrap_err();
        assert_eq!(err.exit_code(), 4);
        file.theta_div = 0.02;
        file.sigma_p2 = -1.0;
        assert_eq!(file.to_params().unwrap_err().exit_code(), 2);
    }
}
