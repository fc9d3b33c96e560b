//! Monte Carlo yield scenarios and analytical confidence bands.

use alloc::vec::Vec;

use crate::dynamics::{FrozenModel, ModelParams, ModelState, Shocks};
use crate::market::{MarketSeries, YearMonth};
use crate::rng::{stream_rng, GaussianNoise};
use crate::{Error, Result};

/// Sorted, de-duplicated positive horizons in months.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HorizonGrid(Vec<u32>);

impl HorizonGrid {
    pub fn new(mut horizons: Vec<u32>) -> Result<Self> {
        horizons.sort_unstable();
        horizons.dedup();
        if horizons.is_empty() || horizons[0] == 0 {
            return Err(Error::Config(
                "horizon grid must be non-empty and positive".into(),
            ));
        }
        Ok(HorizonGrid(horizons))
    }

    /// `start..=end` in steps of `step`.
    pub fn range(start: u32, end: u32, step: u32) -> Result<Self> {
        if step == 0 || start > end {
            return Err(Error::Config("invalid horizon range".into()));
        }
        Self::new((start..=end).step_by(step as usize).collect())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn max(&self) -> u32 {
        *self.0.last().unwrap_or(&0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for HorizonGrid {
    fn default() -> Self {
        HorizonGrid((24..=192).collect())
    }
}

/// Starting point of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialConditions {
    pub log_ep0: f64,
    pub mu0: f64,
    pub log_dp0: f64,
    pub date: Option<YearMonth>,
}

impl InitialConditions {
    pub fn new(log_ep0: f64, mu0: f64, log_dp0: f64) -> Self {
        InitialConditions {
            log_ep0,
            mu0,
            log_dp0,
            date: None,
        }
    }

    /// Empirical conditions at month `t`: log EP, `p_t - p_{t-1}` and log DP.
    pub fn from_series(series: &MarketSeries, t: usize) -> Option<Self> {
        Some(InitialConditions {
            log_ep0: series.log_ep().get(t).copied().flatten()?,
            mu0: series.momentum_proxy(t)?,
            log_dp0: series.log_dp().get(t).copied().flatten()?,
            date: Some(series.dates()[t]),
        })
    }

    /// Every month of `series` with complete initial conditions, in order.
    pub fn all_from_series(series: &MarketSeries) -> Vec<Self> {
        (0..series.len())
            .filter_map(|t| Self::from_series(series, t))
            .collect()
    }

    pub fn state(&self) -> ModelState {
        ModelState::initial(self.log_ep0, self.mu0, self.log_dp0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub horizons: HorizonGrid,
    pub paths_per_start: usize,
    pub master_seed: u64,
}

/// Simulated yields, stored path-major: entry `path * horizons.len() + k`
/// is horizon `horizons[k]` on `path`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub params: ModelParams,
    pub horizons: HorizonGrid,
    pub starts: Vec<InitialConditions>,
    /// Index into `starts` for each path.
    pub path_start: Vec<usize>,
    pub master_seed: u64,
    gross: Vec<f64>,
    price: Vec<f64>,
}

impl ScenarioSet {
    pub fn n_paths(&self) -> usize {
        self.path_start.len()
    }

    /// Gross yield `y_{0,h}` of `path` at horizon index `k`.
    pub fn gross_yield(&self, path: usize, k: usize) -> f64 {
        self.gross[path * self.horizons.len() + k]
    }

    /// `(p_h - p_0) / h` of `path` at horizon index `k`.
    pub fn price_yield(&self, path: usize, k: usize) -> f64 {
        self.price[path * self.horizons.len() + k]
    }

    /// All gross yields at horizon index `k`, one per path.
    pub fn gross_at(&self, k: usize) -> Vec<f64> {
        (0..self.n_paths())
            .map(|p| self.gross_yield(p, k))
            .collect()
    }

    pub fn price_at(&self, k: usize) -> Vec<f64> {
        (0..self.n_paths())
            .map(|p| self.price_yield(p, k))
            .collect()
    }
}

/// Runs `paths_per_start` paths from every start. Path `i` uses random
/// stream `i` of `master_seed`.
pub fn simulate(
    params: &ModelParams,
    starts: &[InitialConditions],
    config: &ScenarioConfig,
) -> Result<ScenarioSet> {
    if starts.is_empty() || config.paths_per_start == 0 {
        return Err(Error::Config("need at least one start and one path".into()));
    }
    let models: Vec<FrozenModel> = starts
        .iter()
        .map(|s| params.freeze(s.log_ep0))
        .collect::<Result<_>>()?;
    let n_paths = starts.len() * config.paths_per_start;
    let horizons = config.horizons.as_slice();

    let run = |path: usize| -> (Vec<f64>, Vec<f64>) {
        let start = path / config.paths_per_start;
        let mut noise = GaussianNoise::new(stream_rng(config.master_seed, path as u64));
        simulate_path(&models[start], &starts[start], horizons, &mut noise)
    };

    #[cfg(feature = "parallel")]
    let per_path: Vec<(Vec<f64>, Vec<f64>)> = {
        use rayon::prelude::*;
        (0..n_paths).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_path: Vec<(Vec<f64>, Vec<f64>)> = (0..n_paths).map(run).collect();

    let mut gross = Vec::with_capacity(n_paths * horizons.len());
    let mut price = Vec::with_capacity(n_paths * horizons.len());
    for (g, p) in per_path {
        gross.extend(g);
        price.extend(p);
    }
    if gross.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("simulated yields"));
    }
    Ok(ScenarioSet {
        params: *params,
        horizons: config.horizons.clone(),
        starts: starts.to_vec(),
        path_start: (0..n_paths).map(|p| p / config.paths_per_start).collect(),
        master_seed: config.master_seed,
        gross,
        price,
    })
}

/// Evolves one path and returns `(gross yields, price yields)` at each
/// horizon (`horizons` sorted ascending). The dividend term uses
/// `log(1 + D_i / P_{i+1})` exactly.
pub fn simulate_path<N: crate::rng::NoiseSource>(
    model: &FrozenModel,
    start: &InitialConditions,
    horizons: &[u32],
    noise: &mut N,
) -> (Vec<f64>, Vec<f64>) {
    let mut gross = Vec::with_capacity(horizons.len());
    let mut price = Vec::with_capacity(horizons.len());
    let mut state = start.state();
    let y0 = state.y;
    let mut dividend_sum = 0.0;
    let mut k = 0;
    for _ in 0..horizons.last().copied().unwrap_or(0) {
        state = model.step(&state, Shocks::draw(noise));
        dividend_sum += libm::log1p(libm::exp(state.log_dp));
        while k < horizons.len() && horizons[k] == state.t {
            let hf = f64::from(state.t);
            let price_yield = (state.y - y0) / hf;
            price.push(price_yield);
            gross.push(price_yield + dividend_sum / hf);
            k += 1;
        }
    }
    (gross, price)
}

/// Builds a month-by-month market history from one simulated path so that
/// empirical procedures can be run on model output.
///
/// The path starts at `start.offset(warm_up)` after `warm_up` months of
/// deterministic history (prices growing at `c`, log DP at `log G`), so the
/// ten-year earnings average is defined from the first simulated month when
/// `warm_up >= 119`. Earnings grow exactly at `g` and are scaled so that
/// `log <e>_0 = 0`; prices are `exp(Y_t)` and CPI is constant.
pub fn synthetic_market<N: crate::rng::NoiseSource>(
    params: &ModelParams,
    initial: &InitialConditions,
    start: YearMonth,
    warm_up: usize,
    months: usize,
    noise: &mut N,
) -> Result<MarketSeries> {
    use crate::market::{RawMonthlyRecord, CAPE_WINDOW};

    let model = params.freeze(initial.log_ep0)?;
    let g = params.g;
    let window_factor: f64 = (0..CAPE_WINDOW)
        .map(|j| libm::exp(-g * j as f64))
        .sum::<f64>()
        / CAPE_WINDOW as f64;
    let earnings_scale = 1.0 / window_factor;

    // log price and log DP for t = -warm_up ..= months
    let total = warm_up + months + 1;
    let mut log_price = Vec::with_capacity(total);
    let mut log_dp = Vec::with_capacity(total);
    let y0 = -initial.log_ep0;
    for i in 0..warm_up {
        let t = i as f64 - warm_up as f64;
        log_price.push(y0 + model.growth * t);
        log_dp.push(model.log_dividend_level);
    }
    let mut state = initial.state();
    log_price.push(state.y);
    log_dp.push(state.log_dp);
    for _ in 0..months {
        state = model.step(&state, Shocks::draw(noise));
        log_price.push(state.y);
        log_dp.push(state.log_dp);
    }

    let records: Vec<RawMonthlyRecord> = (0..total - 1)
        .map(|i| {
            let t = i as f64 - warm_up as f64;
            // D_t = exp(z_{t+1} + p_{t+1}), reported annualized
            let dividend = 12.0 * libm::exp(log_dp[i + 1] + log_price[i + 1]);
            RawMonthlyRecord {
                date: start.offset(i as i64),
                nominal_price: libm::exp(log_price[i]),
                nominal_dividend: Some(dividend),
                nominal_earnings: Some(earnings_scale * libm::exp(g * t)),
                cpi: 1.0,
            }
        })
        .collect();
    MarketSeries::deflate(&records, start)
}

/// Center line used for a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CenterMode {
    /// Long-run limit `g (1 + F) + G`.
    Asymptotic,
    /// Long-run limit plus the `1/h` correction.
    LeadingOrder,
    /// Exact finite-horizon expectation.
    #[default]
    Exact,
}

/// Which yield a band describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandTarget {
    #[default]
    Gross,
    /// Price-only return `(p_h - p_0) / h`.
    Price,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBand {
    pub horizons: Vec<u32>,
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
    pub z: f64,
}

impl ConfidenceBand {
    pub fn low(&self, k: usize) -> f64 {
        self.center[k] - self.half_width[k]
    }

    pub fn high(&self, k: usize) -> f64 {
        self.center[k] + self.half_width[k]
    }

    pub fn contains(&self, k: usize, value: f64) -> bool {
        self.low(k) <= value && value <= self.high(k)
    }
}

/// Analytical band for a scenario starting at `start`: center from the
/// chosen mode, half-width `z` times the closed-form standard deviation.
pub fn band(
    params: &ModelParams,
    horizons: &HorizonGrid,
    start: &InitialConditions,
    z: f64,
    center: CenterMode,
    target: BandTarget,
) -> Result<ConfidenceBand> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::Config("z must be non-negative".into()));
    }
    let model = params.freeze(start.log_ep0)?;
    let mut centers = Vec::with_capacity(horizons.len());
    let mut half_width = Vec::with_capacity(horizons.len());
    for &h in horizons.as_slice() {
        let hf = f64::from(h);
        let (c, var) = match target {
            BandTarget::Gross => {
                let c = match center {
                    CenterMode::Asymptotic => model.asymptotic_yield(),
                    CenterMode::LeadingOrder => {
                        model.asymptotic_yield() + model.leading_correction(start.log_dp0)? / hf
                    }
                    CenterMode::Exact => model.expected_yield(h, start.mu0, start.log_dp0)?,
                };
                (c, model.yield_variance(h, start.log_dp0)?)
            }
            BandTarget::Price => {
                let c = match center {
                    CenterMode::Asymptotic => model.growth,
                    CenterMode::LeadingOrder => {
                        // At log DP = log G the dividend term of the correction vanishes.
                        let price_correction =
                            model.leading_correction(model.log_dividend_level)?;
                        model.growth + price_correction / hf
                    }
                    CenterMode::Exact => model.expected_price_yield(h, start.mu0)?,
                };
                (c, model.price_yield_variance(h)?)
            }
        };
        centers.push(c);
        half_width.push(z * libm::sqrt(var.max(0.0)));
    }
    Ok(ConfidenceBand {
        horizons: horizons.as_slice().to_vec(),
        center: centers,
        half_width,
        z,
    })
}

/// Fraction of simulated points lying inside the band of their own start.
pub fn scenario_coverage(
    set: &ScenarioSet,
    z: f64,
    center: CenterMode,
    target: BandTarget,
) -> Result<f64> {
    let bands: Vec<ConfidenceBand> = set
        .starts
        .iter()
        .map(|s| band(&set.params, &set.horizons, s, z, center, target))
        .collect::<Result<_>>()?;
    let mut inside = 0usize;
    let mut total = 0usize;
    for path in 0..set.n_paths() {
        let b = &bands[set.path_start[path]];
        for k in 0..set.horizons.len() {
            let y = match target {
                BandTarget::Gross => set.gross_yield(path, k),
                BandTarget::Price => set.price_yield(path, k),
            };
            inside += usize::from(b.contains(k, y));
            total += 1;
        }
    }
    Ok(inside as f64 / total as f64)
}

/// Agreement between the model band and historical yields at one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonComparison {
    pub horizon: u32,
    pub n_points: usize,
    /// Share of historical points inside the band.
    pub coverage: f64,
    /// Mean of `y - center`.
    pub mean_residual: f64,
    pub mean_abs_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryComparison {
    pub horizons: Vec<HorizonComparison>,
    /// Horizons with no complete historical window.
    pub dropped: Vec<u32>,
}

/// Compares historical `(log EP_t, y_{t,h})` points to the band built from
/// each month's own initial conditions.
pub fn compare_to_history(
    series: &MarketSeries,
    params: &ModelParams,
    horizons: &HorizonGrid,
    z: f64,
    center: CenterMode,
    target: BandTarget,
) -> Result<HistoryComparison> {
    let starts: Vec<(usize, InitialConditions)> = (0..series.len())
        .filter_map(|t| InitialConditions::from_series(series, t).map(|s| (t, s)))
        .collect();
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    let mut sums: Vec<(usize, usize, f64, f64)> = alloc::vec![(0, 0, 0.0, 0.0); horizons.len()];
    for (t, start) in &starts {
        if t + (horizons.as_slice()[0] as usize) >= series.len() {
            continue;
        }
        let band = band(params, horizons, start, z, center, target)?;
        for (k, &h) in horizons.as_slice().iter().enumerate() {
            let Ok(y) = series.gross_yield(*t, h as usize) else {
                continue;
            };
            let value = match target {
                BandTarget::Gross => y.total,
                BandTarget::Price => y.price_part,
            };
            let resid = value - band.center[k];
            let s = &mut sums[k];
            s.0 += 1;
            s.1 += usize::from(band.contains(k, value));
            s.2 += resid;
            s.3 += libm::fabs(resid);
        }
    }
    for (k, &h) in horizons.as_slice().iter().enumerate() {
        let (n, inside, r, ar) = sums[k];
        if n == 0 {
            dropped.push(h);
            continue;
        }
        rows.push(HorizonComparison {
            horizon: h,
            n_points: n,
            coverage: inside as f64 / n as f64,
            mean_residual: r / n as f64,
            mean_abs_residual: ar / n as f64,
        });
    }
    Ok(HistoryComparison {
        horizons: rows,
        dropped,
    })
}
