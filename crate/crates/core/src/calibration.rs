//! Estimation of the model coefficients from a market history.
//!
//! Rolling quantities use windows of 192 months advanced one month at a
//! time. Each rolling sample is summarized by its mean and the empirical
//! 16th/84th percentiles.

use alloc::string::String;
use alloc::vec::Vec;

use crate::dynamics::{check_momentum_constraint, Affine, ModelParams};
use crate::market::MarketSeries;
use crate::regression::{augmented_regression, ols_through_origin, AugmentedFit};
use crate::stats::{self, RollingEstimate};
use crate::{Error, Result};

pub const DEFAULT_WINDOW: usize = 192;

/// How regression samples are spaced in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// One observation per month; consecutive yields share `h - 1` months.
    Overlapping,
    /// One observation every `h` months.
    #[default]
    NonOverlapping,
}

impl SamplingMode {
    fn step(self, horizon: usize) -> usize {
        match self {
            SamplingMode::Overlapping => 1,
            SamplingMode::NonOverlapping => horizon,
        }
    }
}

/// Which part of the gross yield is the regressand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YieldComponent {
    Gross,
    Price,
    Dividend,
}

/// Regressand and regressor of a predictive regression. `x` has one more
/// point than `y`; `y[k]` is the yield starting at the date of `x[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSample {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    /// Series index of `x[0]`.
    pub first_index: usize,
    /// Months between consecutive observations.
    pub step: usize,
    pub horizon: usize,
}

/// Builds the longest contiguous sample starting at the first month with a
/// defined log EP.
pub fn predictive_sample(
    series: &MarketSeries,
    horizon: usize,
    mode: SamplingMode,
    component: YieldComponent,
) -> Result<PredictiveSample> {
    if horizon == 0 {
        return Err(Error::Config("regression horizon must be positive".into()));
    }
    let log_ep = series.log_ep();
    let first = log_ep
        .iter()
        .position(Option::is_some)
        .ok_or_else(|| Error::out_of_range("log EP (never defined)"))?;
    let step = mode.step(horizon);
    let mut x = alloc::vec![log_ep[first].unwrap_or_default()];
    let mut y = Vec::new();
    let mut t = first;
    loop {
        let next = t + step;
        let (Some(x_next), Ok(parts)) = (
            log_ep.get(next).copied().flatten(),
            series.gross_yield(t, horizon),
        ) else {
            break;
        };
        y.push(match component {
            YieldComponent::Gross => parts.total,
            YieldComponent::Price => parts.price_part,
            YieldComponent::Dividend => parts.dividend_part,
        });
        x.push(x_next);
        t = next;
    }
    // the last regressor value needs no matching yield, but every `y[k]`
    // needs the next `x` for the AR(1) transition
    let needed = crate::regression::MIN_CORRECTION_SAMPLE + 1;
    if x.len() < needed {
        return Err(Error::InsufficientData {
            what: "predictive regression sample",
            needed,
            available: x.len(),
        });
    }
    Ok(PredictiveSample {
        y,
        x,
        first_index: first,
        step,
        horizon,
    })
}

/// One augmented regression of a yield component on log EP.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveFit {
    pub component: YieldComponent,
    pub fit: AugmentedFit,
    pub n_observations: usize,
}

impl PredictiveFit {
    /// Coefficients of the monthly yield.
    pub fn affine(&self) -> Affine {
        Affine::new(self.fit.alpha_c, self.fit.beta_c)
    }

    /// `(alpha, beta, se(beta))` of the yearly yield in units of 1e-4.
    pub fn yearly_bp(&self) -> (f64, f64, f64) {
        let s = 12.0 * 1e4;
        (
            self.fit.alpha_c * s,
            self.fit.beta_c * s,
            self.fit.beta_c_standard_error * s,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveCoefficients {
    pub horizon: usize,
    pub mode: SamplingMode,
    pub gross: PredictiveFit,
    /// Price-only part: `g (1 + F)`.
    pub price: PredictiveFit,
    /// Dividend part: `G`.
    pub dividend: PredictiveFit,
}

pub fn estimate_predictive_coefficients(
    series: &MarketSeries,
    horizon: usize,
    mode: SamplingMode,
) -> Result<PredictiveCoefficients> {
    let run = |component| -> Result<PredictiveFit> {
        let sample = predictive_sample(series, horizon, mode, component)?;
        Ok(PredictiveFit {
            component,
            n_observations: sample.y.len(),
            fit: augmented_regression(&sample.y, &sample.x)?,
        })
    };
    Ok(PredictiveCoefficients {
        horizon,
        mode,
        gross: run(YieldComponent::Gross)?,
        price: run(YieldComponent::Price)?,
        dividend: run(YieldComponent::Dividend)?,
    })
}

/// Rolling-window sample together with the windows that had to be dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingFit {
    pub estimate: RollingEstimate,
    /// Start indices of candidate windows containing unusable months.
    pub skipped: Vec<usize>,
}

/// Start indices `s` in `from..=n - window` split into those whose window
/// is entirely usable and those that are not.
fn window_starts(usable: &[bool], from: usize, window: usize) -> (Vec<usize>, Vec<usize>) {
    let mut good = Vec::new();
    let mut bad = Vec::new();
    if window == 0 || usable.len() < window {
        return (good, bad);
    }
    for s in from..=usable.len() - window {
        if usable[s..s + window].iter().all(|u| *u) {
            good.push(s);
        } else {
            bad.push(s);
        }
    }
    (good, bad)
}

fn rolling(values: Vec<f64>, window: usize, what: &'static str) -> Result<RollingEstimate> {
    if values.is_empty() {
        return Err(Error::InsufficientData {
            what,
            needed: 1,
            available: 0,
        });
    }
    Ok(RollingEstimate::from_values(values, window, 1))
}

/// Growth rate of the ten-year earnings average: slope of
/// `log <e>_t` on `t` in each window.
pub fn estimate_g(series: &MarketSeries, window: usize) -> Result<RollingFit> {
    if window < 2 {
        return Err(Error::Config(
            "growth window must span at least two months".into(),
        ));
    }
    let cape = series.cape();
    let from = cape
        .iter()
        .position(Option::is_some)
        .ok_or_else(|| Error::out_of_range("earnings average (never defined)"))?;
    let usable: Vec<bool> = cape.iter().map(|c| c.is_some_and(|c| c > 0.0)).collect();
    let (starts, skipped) = window_starts(&usable, from, window);
    let time: Vec<f64> = (0..window).map(|t| t as f64).collect();
    let t_mean = stats::mean(&time);
    let t_ss: f64 = time.iter().map(|t| (t - t_mean) * (t - t_mean)).sum();
    let values = starts
        .iter()
        .map(|&s| {
            let log_e: Vec<f64> = cape[s..s + window]
                .iter()
                .map(|c| libm::log(c.unwrap_or(1.0)))
                .collect();
            let e_mean = stats::mean(&log_e);
            let cross: f64 = time
                .iter()
                .zip(&log_e)
                .map(|(t, e)| (t - t_mean) * (e - e_mean))
                .sum();
            cross / t_ss
        })
        .collect();
    Ok(RollingFit {
        estimate: rolling(values, window, "growth windows")?,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DividendProcessFit {
    pub theta_div: RollingFit,
    pub sigma_d2: RollingEstimate,
}

/// Rolling regression through the origin of `z_{t+1} - z_t` on
/// `z_t - log G`, with `G` evaluated at the log EP of each window start.
/// `theta_d` is minus the slope; `sigma_d^2` the residual variance.
pub fn estimate_dividend_process(
    series: &MarketSeries,
    dividend_level: &Affine,
    window: usize,
) -> Result<DividendProcessFit> {
    if window < 3 {
        return Err(Error::Config(
            "dividend window must span at least three months".into(),
        ));
    }
    let z = series.log_dp();
    let x = series.log_ep();
    let usable: Vec<bool> = z.iter().map(Option::is_some).collect();
    let from = x
        .iter()
        .position(Option::is_some)
        .ok_or_else(|| Error::out_of_range("log EP (never defined)"))?;
    let (candidates, mut skipped) = window_starts(&usable, from, window);

    let mut thetas = Vec::new();
    let mut variances = Vec::new();
    for s in candidates {
        let level = x[s].map(|x0| dividend_level.eval(x0)).filter(|g| *g > 0.0);
        let Some(level) = level else {
            skipped.push(s);
            continue;
        };
        let log_level = libm::log(level);
        let zs: Vec<f64> = z[s..s + window]
            .iter()
            .map(|v| v.unwrap_or_default())
            .collect();
        let dz: Vec<f64> = zs.windows(2).map(|w| w[1] - w[0]).collect();
        let gap: Vec<f64> = zs[..window - 1].iter().map(|v| v - log_level).collect();
        let fit = ols_through_origin(&dz, &[&gap])?;
        thetas.push(-fit.coefficients[0]);
        variances.push(fit.residual_variance);
    }
    skipped.sort_unstable();
    Ok(DividendProcessFit {
        theta_div: RollingFit {
            estimate: rolling(thetas, window, "dividend windows")?,
            skipped,
        },
        sigma_d2: rolling(variances, window, "dividend windows")?,
    })
}

/// Settings of the momentum fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumOptions {
    pub window: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the change of mean `gamma` and `kappa`.
    pub tolerance: f64,
    /// Re-fit `H` after each regression pass; otherwise `H` stays at its
    /// initial value and a single pass is made.
    pub update_offset: bool,
}

impl Default for MomentumOptions {
    fn default() -> Self {
        MomentumOptions {
            window: DEFAULT_WINDOW,
            max_iterations: 50,
            tolerance: 1e-6,
            update_offset: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumFit {
    pub gamma: RollingEstimate,
    pub kappa: RollingEstimate,
    pub sigma_mu2: RollingEstimate,
    /// Rolling means, moved into the admissible region if necessary.
    pub gamma_point: f64,
    pub kappa_point: f64,
    /// The rolling means violated the momentum constraint.
    pub projected: bool,
    pub drift_offset: Affine,
    pub iterations: usize,
    pub converged: bool,
    /// Leading `1/h` coefficient at the sample-mean start.
    pub leading_correction: f64,
    /// Sample-mean log EP and log DP at the window starts.
    pub mean_log_ep: f64,
    pub mean_log_dp: f64,
    pub skipped: Vec<usize>,
}

/// Moves `(gamma, kappa)` to the closest point strictly inside
/// `0 < gamma < 1`, `0 < kappa < (1 - gamma)^2 / 4`. Returns the point and
/// whether it moved.
pub fn project_momentum(gamma: f64, kappa: f64) -> (f64, f64, bool) {
    const EPS: f64 = 1e-6;
    let g = gamma.clamp(EPS, 1.0 - EPS);
    let bound = (1.0 - g) * (1.0 - g) / 4.0 * (1.0 - EPS);
    let k = kappa.clamp(EPS.min(bound / 2.0), bound);
    let moved = g != gamma || k != kappa;
    (g, k, moved)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if libm::fabs(b - a) <= tol * (1.0 + libm::fabs(a) + libm::fabs(b)) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Estimates `gamma`, `kappa`, `sigma_mu^2` with the proxy
/// `mu_t = p_t - p_{t-1}` by regressing `mu_{t+1}` on `mu_t` and
/// `x_t + H + (c - g)(t - s)` through the origin in each window starting at
/// `s`, then re-fits `H` so that the leading `1/h` correction vanishes at
/// the sample-mean start. The two steps alternate until the mean `gamma`
/// and `kappa` settle.
///
/// `base` supplies `g`, `c`, `G`, `theta_d` and the volatilities; its
/// `gamma`, `kappa` and `H` are ignored.
pub fn estimate_momentum(
    series: &MarketSeries,
    base: &ModelParams,
    offset_init: Affine,
    options: &MomentumOptions,
) -> Result<MomentumFit> {
    let w = options.window;
    if w < 4 {
        return Err(Error::Config(
            "momentum window must span at least four months".into(),
        ));
    }
    let x = series.log_ep();
    let z = series.log_dp();
    let p = series.log_price();
    let usable: Vec<bool> = x.iter().map(Option::is_some).collect();
    let from = usable
        .iter()
        .position(|u| *u)
        .ok_or_else(|| Error::out_of_range("log EP (never defined)"))?
        .max(1);
    let (starts, skipped) = window_starts(&usable, from, w);
    if starts.is_empty() {
        return Err(Error::InsufficientData {
            what: "momentum windows",
            needed: w + 1,
            available: series.len(),
        });
    }
    let mean_log_ep = stats::mean(
        &starts
            .iter()
            .map(|&s| x[s].unwrap_or_default())
            .collect::<Vec<_>>(),
    );
    let dp_starts: Vec<f64> = starts.iter().filter_map(|&s| z[s]).collect();
    if dp_starts.is_empty() {
        return Err(Error::out_of_range("log DP at window starts"));
    }
    let mean_log_dp = stats::mean(&dp_starts);

    let fit_windows = |offset: Affine| -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let mut gammas = Vec::with_capacity(starts.len());
        let mut kappas = Vec::with_capacity(starts.len());
        let mut sigmas = Vec::with_capacity(starts.len());
        for &s in &starts {
            let x0 = x[s].unwrap_or_default();
            let h = offset.eval(x0);
            let drift = base.price_drift.eval(x0) - base.g;
            let obs = w - 1;
            let mut next = Vec::with_capacity(obs);
            let mut lagged = Vec::with_capacity(obs);
            let mut bracket = Vec::with_capacity(obs);
            for t in s..s + obs {
                next.push(p[t + 1] - p[t]);
                lagged.push(p[t] - p[t - 1]);
                bracket.push(x[t].unwrap_or_default() + h + drift * (t - s) as f64);
            }
            let fit = ols_through_origin(&next, &[&lagged, &bracket])?;
            gammas.push(fit.coefficients[0]);
            kappas.push(fit.coefficients[1]);
            sigmas.push(fit.residual_variance);
        }
        Ok((gammas, kappas, sigmas))
    };

    let correction = |gamma: f64, kappa: f64, offset: Affine| -> Result<f64> {
        let mut params = *base;
        params.gamma = gamma;
        params.kappa = kappa;
        params.drift_offset = offset;
        params.freeze(mean_log_ep)?.leading_correction(mean_log_dp)
    };

    let mut offset = offset_init;
    let mut previous: Option<(f64, f64)> = None;
    let mut iterations = 0;
    let mut last = fit_windows(offset)?;
    let converged = loop {
        iterations += 1;
        let gamma_mean = stats::mean(&last.0);
        let kappa_mean = stats::mean(&last.1);
        if !(gamma_mean.is_finite() && kappa_mean.is_finite()) {
            return Err(Error::NonFinite("momentum estimates"));
        }
        if let Some((g0, k0)) = previous {
            if libm::fabs(gamma_mean - g0) < options.tolerance
                && libm::fabs(kappa_mean - k0) < options.tolerance
            {
                break true;
            }
        }
        if !options.update_offset || iterations >= options.max_iterations {
            break !options.update_offset;
        }
        previous = Some((gamma_mean, kappa_mean));

        let (g, k, _) = project_momentum(gamma_mean, kappa_mean);
        offset = minimize_correction(|o| correction(g, k, o), offset, mean_log_ep)?;
        last = fit_windows(offset)?;
    };

    let (gammas, kappas, sigmas) = last;
    let gamma = RollingEstimate::from_values(gammas, w, 1);
    let kappa = RollingEstimate::from_values(kappas, w, 1);
    let (gamma_point, kappa_point, projected) = project_momentum(gamma.mean, kappa.mean);
    check_momentum_constraint(gamma_point, kappa_point)?;
    let leading_correction = correction(gamma_point, kappa_point, offset)?;
    Ok(MomentumFit {
        gamma,
        kappa,
        sigma_mu2: RollingEstimate::from_values(sigmas, w, 1),
        gamma_point,
        kappa_point,
        projected,
        drift_offset: offset,
        iterations,
        converged,
        leading_correction,
        mean_log_ep,
        mean_log_dp,
        skipped,
    })
}

/// Alternating golden-section search on `alpha` and `beta` of `|L(H)|`.
fn minimize_correction(
    correction: impl Fn(Affine) -> Result<f64>,
    start: Affine,
    mean_log_ep: f64,
) -> Result<Affine> {
    let mut h = start;
    for _ in 0..4 {
        let l = correction(h)?;
        let span = 2.0 * libm::fabs(l) + 1.0;
        let base = h;
        let objective =
            |a: f64| correction(Affine::new(a, base.beta)).map_or(f64::INFINITY, libm::fabs);
        h.alpha = golden_section(objective, base.alpha - span, base.alpha + span, 1e-14);

        if libm::fabs(mean_log_ep) > 1e-12 {
            let l = correction(h)?;
            let span = 2.0 * libm::fabs(l / mean_log_ep) + 1e-3;
            let base = h;
            let objective =
                |b: f64| correction(Affine::new(base.alpha, b)).map_or(f64::INFINITY, libm::fabs);
            h.beta = golden_section(objective, base.beta - span, base.beta + span, 1e-14);
        }
        if libm::fabs(correction(h)?) < 1e-12 {
            break;
        }
    }
    Ok(h)
}

/// Variance of `(p_{t+h} - p_t) / h` across start dates for each horizon,
/// and the through-origin fit `Var = sigma_p^2 / h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPFit {
    pub sigma_p2: f64,
    pub horizons: Vec<u32>,
    pub variances: Vec<f64>,
    pub counts: Vec<usize>,
    pub mode: SamplingMode,
}

pub fn estimate_sigma_p(
    series: &MarketSeries,
    horizons: &[u32],
    mode: SamplingMode,
) -> Result<SigmaPFit> {
    if horizons.len() < 3 {
        return Err(Error::InsufficientData {
            what: "price variance horizons",
            needed: 3,
            available: horizons.len(),
        });
    }
    let p = series.log_price();
    let mut variances = Vec::with_capacity(horizons.len());
    let mut counts = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let h = h as usize;
        if h == 0 {
            return Err(Error::Config("horizons must be positive".into()));
        }
        let yields: Vec<f64> = (0..p.len().saturating_sub(h))
            .step_by(mode.step(h))
            .map(|t| (p[t + h] - p[t]) / h as f64)
            .collect();
        if yields.len() < 2 {
            return Err(Error::InsufficientData {
                what: "price yields at the longest horizon",
                needed: 2,
                available: yields.len(),
            });
        }
        variances.push(stats::sample_variance(&yields));
        counts.push(yields.len());
    }
    // minimize sum (v_h - s / h)^2
    let (num, den) = horizons
        .iter()
        .zip(&variances)
        .fold((0.0, 0.0), |(n, d), (&h, v)| {
            let inv = 1.0 / f64::from(h);
            (n + v * inv, d + inv * inv)
        });
    Ok(SigmaPFit {
        sigma_p2: num / den,
        horizons: horizons.to_vec(),
        variances,
        counts,
        mode,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub horizon: usize,
    pub regression_mode: SamplingMode,
    pub window: usize,
    pub offset_init: Affine,
    pub momentum: MomentumOptions,
    pub variance_horizons: Vec<u32>,
    pub variance_mode: SamplingMode,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            horizon: 12,
            regression_mode: SamplingMode::NonOverlapping,
            window: DEFAULT_WINDOW,
            offset_init: Affine::new(0.85, -0.85),
            momentum: MomentumOptions::default(),
            variance_horizons: (24..=192).collect(),
            variance_mode: SamplingMode::Overlapping,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub predictive: PredictiveCoefficients,
    pub g: RollingFit,
    pub dividend: DividendProcessFit,
    pub momentum: MomentumFit,
    pub sigma_p: SigmaPFit,
    pub theta_div_point: f64,
    pub warnings: Vec<String>,
}

impl CalibrationReport {
    pub fn gross_linear(&self) -> Affine {
        self.predictive.gross.affine()
    }

    pub fn price_linear(&self) -> Affine {
        self.predictive.price.affine()
    }

    pub fn dividend_linear(&self) -> Affine {
        self.predictive.dividend.affine()
    }

    /// Point values (rolling means) as model parameters.
    pub fn to_model_params(&self) -> Result<ModelParams> {
        let params = ModelParams {
            gamma: self.momentum.gamma_point,
            kappa: self.momentum.kappa_point,
            sigma_mu: libm::sqrt(self.momentum.sigma_mu2.mean.max(0.0)),
            sigma_p: libm::sqrt(self.sigma_p.sigma_p2.max(0.0)),
            g: self.g.estimate.mean,
            price_drift: self.price_linear(),
            dividend_level: self.dividend_linear(),
            drift_offset: self.momentum.drift_offset,
            theta_div: self.theta_div_point,
            sigma_d: libm::sqrt(self.dividend.sigma_d2.mean.max(0.0)),
        };
        params.validate()?;
        Ok(params)
    }
}

/// Moves `theta_d` strictly inside `(0, 2)`.
pub fn project_theta(theta: f64) -> (f64, bool) {
    const EPS: f64 = 1e-6;
    let t = theta.clamp(EPS, 2.0 - EPS);
    (t, t != theta)
}

/// Runs every estimation step in dependency order.
pub fn calibrate(series: &MarketSeries, options: &CalibrationOptions) -> Result<CalibrationReport> {
    let mut warnings = Vec::new();
    let predictive =
        estimate_predictive_coefficients(series, options.horizon, options.regression_mode)?;
    let g = estimate_g(series, options.window)?;
    if !g.skipped.is_empty() {
        warnings.push(alloc::format!(
            "{} growth windows skipped (non-positive earnings average)",
            g.skipped.len()
        ));
    }
    let dividend =
        estimate_dividend_process(series, &predictive.dividend.affine(), options.window)?;
    let (theta_div_point, moved) = project_theta(dividend.theta_div.estimate.mean);
    if moved {
        warnings.push(alloc::format!(
            "theta_d = {} moved into (0, 2)",
            dividend.theta_div.estimate.mean
        ));
    }
    let sigma_p = estimate_sigma_p(series, &options.variance_horizons, options.variance_mode)?;

    let base = ModelParams {
        gamma: 0.25,
        kappa: 0.03,
        sigma_mu: 0.0,
        sigma_p: libm::sqrt(sigma_p.sigma_p2.max(0.0)),
        g: g.estimate.mean,
        price_drift: predictive.price.affine(),
        dividend_level: predictive.dividend.affine(),
        drift_offset: options.offset_init,
        theta_div: theta_div_point,
        sigma_d: libm::sqrt(dividend.sigma_d2.mean.max(0.0)),
    };
    let mut momentum_options = options.momentum;
    momentum_options.window = options.window;
    let momentum = estimate_momentum(series, &base, options.offset_init, &momentum_options)?;
    if momentum.projected {
        warnings.push(alloc::format!(
            "(gamma, kappa) = ({}, {}) moved into the admissible region",
            momentum.gamma.mean,
            momentum.kappa.mean
        ));
    }
    if !momentum.converged {
        warnings.push(alloc::format!(
            "momentum iteration stopped after {} passes without converging",
            momentum.iterations
        ));
    }
    Ok(CalibrationReport {
        predictive,
        g,
        dividend,
        momentum,
        sigma_p,
        theta_div_point,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{RawMonthlyRecord, YearMonth};
    use crate::rng::{stream_rng, GaussianNoise, NoiseSource};

    fn series_from(prices: &[f64], dividends: &[f64], earnings: &[f64]) -> MarketSeries {
        let start = YearMonth::new(1900, 1).unwrap();
        let records: Vec<RawMonthlyRecord> = (0..prices.len())
            .map(|i| RawMonthlyRecord {
                date: start.offset(i as i64),
                nominal_price: prices[i],
                nominal_dividend: Some(12.0 * dividends[i]),
                nominal_earnings: Some(earnings[i]),
                cpi: 1.0,
            })
            .collect();
        MarketSeries::deflate(&records, start).unwrap()
    }

    #[test]
    fn exponential_earnings_give_exact_growth() {
        let n = 400;
        let g0 = 0.0017;
        let earnings: Vec<f64> = (0..n).map(|t| 3.0 * libm::exp(g0 * t as f64)).collect();
        let prices: Vec<f64> = (0..n).map(|t| 50.0 + libm::sin(t as f64)).collect();
        let series = series_from(&prices, &alloc::vec![0.1; n], &earnings);
        let fit = estimate_g(&series, 192).unwrap();
        // CAPE defined from index 119; starts 119..=208
        assert_eq!(fit.estimate.values.len(), n - 119 - 192 + 1);
        assert!(fit.skipped.is_empty());
        assert!(fit.estimate.values.iter().all(|v| (v - g0).abs() < 1e-12));
    }

    #[test]
    fn negative_earnings_windows_are_skipped() {
        let n = 700;
        let mut earnings: Vec<f64> = (0..n).map(|t| 1.0 + 0.001 * t as f64).collect();
        for e in earnings.iter_mut().take(160).skip(150) {
            *e = -20.0;
        }
        let series = series_from(&alloc::vec![40.0; n], &alloc::vec![0.1; n], &earnings);
        let fit = estimate_g(&series, 192).unwrap();
        assert!(!fit.skipped.is_empty());
        assert_eq!(
            fit.skipped.len() + fit.estimate.values.len(),
            n - 119 - 192 + 1
        );
    }

    #[test]
    fn window_start_arithmetic() {
        let usable = [false, true, true, true, false, true, true, true];
        let (good, bad) = window_starts(&usable, 1, 3);
        assert_eq!(good, alloc::vec![1, 5]);
        assert_eq!(bad, alloc::vec![2, 3, 4]);
    }

    #[test]
    fn sigma_p_of_random_walk() {
        let s = 0.04;
        let n = 6000;
        let mut noise = GaussianNoise::new(stream_rng(17, 0));
        let mut p = alloc::vec![0.0];
        for _ in 1..n {
            let last = *p.last().unwrap();
            p.push(last + s * noise.next_shock());
        }
        let prices: Vec<f64> = p.iter().map(|v| 100.0 * libm::exp(*v)).collect();
        let series = series_from(&prices, &alloc::vec![0.1; n], &alloc::vec![1.0; n]);
        let horizons: Vec<u32> = (24..=192).step_by(24).collect();
        let fit = estimate_sigma_p(&series, &horizons, SamplingMode::Overlapping).unwrap();
        assert!(
            (fit.sigma_p2 / (s * s) - 1.0).abs() < 0.15,
            "{}",
            fit.sigma_p2
        );
        assert!(estimate_sigma_p(&series, &[24, 48], SamplingMode::Overlapping).is_err());
    }

    #[test]
    fn projection_lands_inside() {
        let (g, k, moved) = project_momentum(0.5, 0.2);
        assert!(moved);
        assert!(check_momentum_constraint(g, k).is_ok());
        assert!(k < (1.0 - g) * (1.0 - g) / 4.0);
        let (g, k, moved) = project_momentum(0.25, 0.03);
        assert!(!moved);
        assert_eq!((g, k), (0.25, 0.03));
        assert!(project_momentum(-0.1, -1.0).2);
        assert!(project_theta(2.5).1);
        assert!(project_theta(2.5).0 < 2.0);
    }

    #[test]
    fn golden_section_finds_minimum() {
        let m = golden_section(|v| (v - 1.234).abs(), -10.0, 10.0, 1e-14);
        assert!((m - 1.234).abs() < 1e-10);
    }

    #[test]
    fn predictive_sample_alignment() {
        let n = 400;
        let earnings: Vec<f64> = (0..n).map(|t| 1.0 + 0.001 * t as f64).collect();
        let prices: Vec<f64> = (0..n).map(|t| 20.0 + 0.05 * t as f64).collect();
        let series = series_from(&prices, &alloc::vec![0.05; n], &earnings);
        let s = predictive_sample(
            &series,
            12,
            SamplingMode::NonOverlapping,
            YieldComponent::Gross,
        )
        .unwrap();
        assert_eq!(s.first_index, 119);
        assert_eq!(s.x.len(), s.y.len() + 1);
        // last start t with t + 12 <= n - 1: 119 + 12 k <= 387
        assert_eq!(s.y.len(), (n - 1 - 119) / 12);
        assert_eq!(s.y[1], series.gross_yield(131, 12).unwrap().total);
        assert_eq!(s.x[2], series.log_ep()[143].unwrap());

        let o = predictive_sample(
            &series,
            12,
            SamplingMode::Overlapping,
            YieldComponent::Price,
        )
        .unwrap();
        assert_eq!(o.y.len(), n - 1 - 119 - 12 + 1);
        assert_eq!(o.step, 1);
    }
}
