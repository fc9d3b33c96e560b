//! Monthly market series: deflation to real terms and the derived ratios.
//!
//! Conventions:
//! * `P_t` is the real index level at the start of month `t`.
//! * `D_t` is the real dividend paid between `t` and `t + 1`, as a monthly
//!   flow (annualized source figures are divided by 12).
//! * Earnings stay an annualized rate, so that `log EP` has the usual
//!   magnitude (around -3 for the S&P composite).
//! * `log DP` at `t` is `d_{t-1} - p_t`.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

/// Default CAPE averaging window, in months.
pub const CAPE_WINDOW: usize = 120;

/// Calendar month; ordering is chronological.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Config("month must be in 1..=12".into()));
        }
        Ok(YearMonth { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    /// Months elapsed since January of year 0.
    pub fn ordinal(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        YearMonth {
            year: ordinal.div_euclid(12) as i32,
            month: (ordinal.rem_euclid(12) + 1) as u8,
        }
    }

    pub fn succ(self) -> Self {
        Self::from_ordinal(self.ordinal() + 1)
    }

    pub fn offset(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    /// Accepts `YYYY.MM`, `YYYY-MM` and `YYYY/MM`. Spreadsheet exports write
    /// October as `YYYY.1`, so a one-digit fraction after `.` means tenths.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(alloc::format!("unrecognized month `{s}`"));
        let (year, month, sep) = ['.', '-', '/']
            .iter()
            .find_map(|&sep| s.split_once(sep).map(|(y, m)| (y, m, sep)))
            .ok_or_else(bad)?;
        let year: i32 = year.parse().map_err(|_| bad())?;
        let month: u8 = match (sep, month.len()) {
            ('.', 1) => month.parse::<u8>().map_err(|_| bad())? * 10,
            (_, 1) | (_, 2) => month.parse().map_err(|_| bad())?,
            _ => return Err(bad()),
        };
        YearMonth::new(year, month).map_err(|_| bad())
    }
}

/// One row of nominal source data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawMonthlyRecord {
    pub date: YearMonth,
    pub nominal_price: f64,
    /// Annualized dividend, if reported.
    pub nominal_dividend: Option<f64>,
    /// Annualized earnings, if reported.
    pub nominal_earnings: Option<f64>,
    pub cpi: f64,
}

/// Sorts records by date and checks positivity and month continuity.
pub fn prepare_records(mut records: Vec<RawMonthlyRecord>) -> Result<Vec<RawMonthlyRecord>> {
    records.sort_by_key(|r| r.date);
    for r in &records {
        if !(r.nominal_price.is_finite() && r.nominal_price > 0.0) {
            return Err(Error::InvalidRecord {
                date: r.date,
                reason: "price must be positive",
            });
        }
        if !(r.cpi.is_finite() && r.cpi > 0.0) {
            return Err(Error::InvalidRecord {
                date: r.date,
                reason: "CPI must be positive",
            });
        }
        if r.nominal_dividend.is_some_and(|d| !d.is_finite())
            || r.nominal_earnings.is_some_and(|e| !e.is_finite())
        {
            return Err(Error::InvalidRecord {
                date: r.date,
                reason: "non-finite dividend or earnings",
            });
        }
    }
    for pair in records.windows(2) {
        let (prev, next) = (pair[0].date, pair[1].date);
        if next == prev {
            return Err(Error::DuplicateMonth(next));
        }
        if next != prev.succ() {
            return Err(Error::Continuity {
                missing: prev.succ(),
            });
        }
    }
    Ok(records)
}

/// Trailing arithmetic mean over `window` months ending at each `t`
/// (inclusive). Undefined until `window` observations are available or when
/// any value in the window is missing.
pub fn trailing_mean(values: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    let mut out = alloc::vec![None; values.len()];
    if window == 0 {
        return out;
    }
    for t in window.saturating_sub(1)..values.len() {
        let slice = &values[t + 1 - window..=t];
        if slice.iter().all(Option::is_some) {
            let sum: f64 = slice.iter().map(|v| v.unwrap_or(0.0)).sum();
            out[t] = Some(sum / window as f64);
        }
    }
    out
}

/// `y_{t,h}` split into its price and dividend contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YieldDecomposition {
    pub total: f64,
    /// `(p_{t+h} - p_t) / h`
    pub price_part: f64,
    /// `(1/h) sum log(1 + D_{t+i} / P_{t+1+i})`
    pub dividend_part: f64,
}

/// Real monthly series and everything derived from them. Immutable once
/// built.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSeries {
    dates: Vec<YearMonth>,
    base_month: YearMonth,
    real_price: Vec<f64>,
    real_dividend: Vec<Option<f64>>,
    real_earnings: Vec<Option<f64>>,
    cape: Vec<Option<f64>>,
    log_price: Vec<f64>,
    log_ep: Vec<Option<f64>>,
    log_dp: Vec<Option<f64>>,
    log_gross_return: Vec<Option<f64>>,
}

impl MarketSeries {
    /// Deflates `raw` to `base_month` prices and derives CAPE (120-month
    /// trailing window), log EP, log DP and log gross returns.
    pub fn deflate(raw: &[RawMonthlyRecord], base_month: YearMonth) -> Result<Self> {
        Self::deflate_with_window(raw, base_month, CAPE_WINDOW)
    }

    pub fn deflate_with_window(
        raw: &[RawMonthlyRecord],
        base_month: YearMonth,
        cape_window: usize,
    ) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InsufficientData {
                what: "market series",
                needed: 1,
                available: 0,
            });
        }
        let raw = prepare_records(raw.to_vec())?;
        let base_cpi = raw
            .iter()
            .find(|r| r.date == base_month)
            .map(|r| r.cpi)
            .ok_or_else(|| {
                Error::out_of_range(alloc::format!("base month {base_month} (not in sample)"))
            })?;

        let dates: Vec<YearMonth> = raw.iter().map(|r| r.date).collect();
        let deflator: Vec<f64> = raw.iter().map(|r| base_cpi / r.cpi).collect();
        let real_price: Vec<f64> = raw
            .iter()
            .zip(&deflator)
            .map(|(r, k)| r.nominal_price * k)
            .collect();
        let real_dividend: Vec<Option<f64>> = raw
            .iter()
            .zip(&deflator)
            .map(|(r, k)| r.nominal_dividend.map(|d| d * k / 12.0))
            .collect();
        let real_earnings: Vec<Option<f64>> = raw
            .iter()
            .zip(&deflator)
            .map(|(r, k)| r.nominal_earnings.map(|e| e * k))
            .collect();

        Ok(Self::assemble(
            dates,
            base_month,
            real_price,
            real_dividend,
            real_earnings,
            cape_window,
        ))
    }

    fn assemble(
        dates: Vec<YearMonth>,
        base_month: YearMonth,
        real_price: Vec<f64>,
        real_dividend: Vec<Option<f64>>,
        real_earnings: Vec<Option<f64>>,
        cape_window: usize,
    ) -> Self {
        let n = dates.len();
        let cape = trailing_mean(&real_earnings, cape_window);
        let log_price: Vec<f64> = real_price.iter().map(|p| libm::log(*p)).collect();
        let log_ep = cape
            .iter()
            .zip(&log_price)
            .map(|(c, p)| c.filter(|c| *c > 0.0).map(|c| libm::log(c) - p))
            .collect();
        let log_dp = (0..n)
            .map(|t| {
                if t == 0 {
                    return None;
                }
                real_dividend[t - 1]
                    .filter(|d| *d > 0.0)
                    .map(|d| libm::log(d) - log_price[t])
            })
            .collect();
        let log_gross_return = (0..n)
            .map(|t| {
                if t + 1 >= n {
                    return None;
                }
                real_dividend[t].and_then(|d| {
                    let total = real_price[t + 1] + d;
                    (total > 0.0).then(|| libm::log(total) - log_price[t])
                })
            })
            .collect();
        MarketSeries {
            dates,
            base_month,
            real_price,
            real_dividend,
            real_earnings,
            cape,
            log_price,
            log_ep,
            log_dp,
            log_gross_return,
        }
    }

    /// Fills months whose log EP is undefined (e.g. no earnings reported)
    /// from an external source keyed by month. Months with a computed value
    /// are left untouched.
    pub fn with_log_ep_source(mut self, source: &[(YearMonth, f64)]) -> Self {
        for (date, value) in source {
            if let Some(t) = self.index_of(*date) {
                if self.log_ep[t].is_none() && value.is_finite() {
                    self.log_ep[t] = Some(*value);
                }
            }
        }
        self
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[YearMonth] {
        &self.dates
    }

    pub fn base_month(&self) -> YearMonth {
        self.base_month
    }

    pub fn real_price(&self) -> &[f64] {
        &self.real_price
    }

    /// Monthly dividend flow `D_t`.
    pub fn real_dividend(&self) -> &[Option<f64>] {
        &self.real_dividend
    }

    /// Annualized real earnings.
    pub fn real_earnings(&self) -> &[Option<f64>] {
        &self.real_earnings
    }

    /// Ten-year trailing mean of real earnings.
    pub fn cape(&self) -> &[Option<f64>] {
        &self.cape
    }

    pub fn log_price(&self) -> &[f64] {
        &self.log_price
    }

    /// `x_t = log <e>_t - p_t`; `None` where the average is not positive.
    pub fn log_ep(&self) -> &[Option<f64>] {
        &self.log_ep
    }

    /// `d_{t-1} - p_t`.
    pub fn log_dp(&self) -> &[Option<f64>] {
        &self.log_dp
    }

    pub fn log_gross_returns(&self) -> &[Option<f64>] {
        &self.log_gross_return
    }

    pub fn index_of(&self, date: YearMonth) -> Option<usize> {
        let first = self.dates.first()?.ordinal();
        let offset = date.ordinal() - first;
        (0..self.dates.len() as i64)
            .contains(&offset)
            .then_some(offset as usize)
    }

    /// `H_t = log(P_{t+1} + D_t) - log P_t`.
    pub fn log_gross_return(&self, t: usize) -> Result<f64> {
        if t + 1 >= self.len() {
            return Err(Error::out_of_range(alloc::format!(
                "log gross return index {t} (series length {})",
                self.len()
            )));
        }
        self.log_gross_return[t].ok_or_else(|| {
            Error::out_of_range(alloc::format!(
                "log gross return at {} (no dividend)",
                self.dates[t]
            ))
        })
    }

    /// `y_{t,h} = (1/h) sum_{i<h} H_{t+i}` together with its price/dividend
    /// decomposition.
    pub fn gross_yield(&self, t: usize, h: usize) -> Result<YieldDecomposition> {
        if h == 0 {
            return Err(Error::Config("yield horizon must be positive".to_string()));
        }
        if t + h >= self.len() {
            return Err(Error::out_of_range(alloc::format!(
                "yield window t={t}, h={h} (series length {})",
                self.len()
            )));
        }
        let mut total = 0.0;
        let mut dividend = 0.0;
        for i in t..t + h {
            total += self.log_gross_return(i)?;
            let d = self.real_dividend[i].unwrap_or(0.0);
            dividend += libm::log1p(d / self.real_price[i + 1]);
        }
        let hf = h as f64;
        Ok(YieldDecomposition {
            total: total / hf,
            price_part: (self.log_price[t + h] - self.log_price[t]) / hf,
            dividend_part: dividend / hf,
        })
    }

    /// Empirical momentum proxy `p_t - p_{t-1}`.
    pub fn momentum_proxy(&self, t: usize) -> Option<f64> {
        (t >= 1 && t < self.len()).then(|| self.log_price[t] - self.log_price[t - 1])
    }
}
