//! Momentum/value dynamics of the log price and the log dividend-price ratio.
//!
//! With `Y_t = p_t - log <e>_0` the model is
//!
//! ```text
//! Y_{t+1}  = Y_t + mu_t + xi_t
//! mu_{t+1} = gamma mu_t + kappa (H + c t - Y_t) + sigma_mu W^mu_t
//! xi_{t+1} = xi_t + kappa sigma_p / (1 - gamma) W^p_t
//! z_{t+1}  = z_t - theta_d (z_t - log G) + sigma_d W^d_t
//! ```
//!
//! where `z_t = d_{t-1} - p_t`, `c = g (1 + F)` is the long-run price drift,
//! and `c`, `G`, `H` are affine in the log EP at the start of the scenario.
//! The bracket `H + c t - Y_t` is `log <e>_t - p_t + H + g F t` along the
//! deterministic earnings path `log <e>_t = log <e>_0 + g t`.

mod moments;
mod spectrum;

pub use moments::DividendMoments;
pub use spectrum::{check_momentum_constraint, spectrum, system_matrix, SystemSpectrum};

use crate::rng::NoiseSource;
use crate::{Error, Result};

/// `alpha + beta * log EP_0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Affine {
    pub alpha: f64,
    pub beta: f64,
}

impl Affine {
    pub const fn new(alpha: f64, beta: f64) -> Self {
        Affine { alpha, beta }
    }

    #[inline]
    pub fn eval(&self, log_ep0: f64) -> f64 {
        self.alpha + self.beta * log_ep0
    }
}

/// Model coefficients. Rates are per month; `sigma_*` are standard
/// deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Momentum sensitivity.
    pub gamma: f64,
    /// Mean-reversion rate towards the fundamental path.
    pub kappa: f64,
    pub sigma_mu: f64,
    /// Long-run return volatility.
    pub sigma_p: f64,
    /// Growth rate of the ten-year average of real earnings.
    pub g: f64,
    /// `g (1 + F)`.
    pub price_drift: Affine,
    /// `G`, the long-run dividend contribution to the monthly yield.
    pub dividend_level: Affine,
    /// `H`.
    pub drift_offset: Affine,
    /// Mean-reversion rate of log DP.
    pub theta_div: f64,
    pub sigma_d: f64,
}

impl ModelParams {
    /// S&P composite reference values (monthly units).
    pub fn sp_reference() -> Self {
        ModelParams {
            gamma: 0.25,
            kappa: 323e-4,
            sigma_mu: libm::sqrt(12e-4),
            sigma_p: libm::sqrt(18.2e-4),
            g: 12e-4,
            price_drift: Affine::new(2531e-4 / 12.0, 767e-4 / 12.0),
            dividend_level: Affine::new(1527e-4 / 12.0, 393e-4 / 12.0),
            drift_offset: Affine::new(0.85, -0.85),
            theta_div: 271e-4,
            sigma_d: libm::sqrt(13e-4),
        }
    }

    /// NYSE/AMEX value-weighted reference values (monthly units).
    pub fn nyse_reference() -> Self {
        ModelParams {
            gamma: 0.08,
            kappa: 304e-4,
            sigma_mu: libm::sqrt(17e-4),
            sigma_p: libm::sqrt(16.8e-4),
            g: 19e-4,
            price_drift: Affine::new(5681e-4 / 12.0, 1880e-4 / 12.0),
            dividend_level: Affine::new(1289e-4 / 12.0, 305e-4 / 12.0),
            drift_offset: Affine::new(2.62, -0.52),
            theta_div: 445e-4,
            sigma_d: libm::sqrt(19e-4),
        }
    }

    /// Same parameters with every volatility set to zero.
    pub fn noiseless(mut self) -> Self {
        self.sigma_mu = 0.0;
        self.sigma_p = 0.0;
        self.sigma_d = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gamma,
            self.kappa,
            self.sigma_mu,
            self.sigma_p,
            self.g,
            self.price_drift.alpha,
            self.price_drift.beta,
            self.dividend_level.alpha,
            self.dividend_level.beta,
            self.drift_offset.alpha,
            self.drift_offset.beta,
            self.theta_div,
            self.sigma_d,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model parameters"));
        }
        check_momentum_constraint(self.gamma, self.kappa)?;
        check_dividend_constraint(self.theta_div)?;
        if self.sigma_mu < 0.0 || self.sigma_p < 0.0 || self.sigma_d < 0.0 {
            return Err(Error::Constraint(
                "volatilities must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// `g (1 + F) + G`, the long-run expected monthly gross yield.
    pub fn asymptotic_yield(&self, log_ep0: f64) -> f64 {
        self.price_drift.eval(log_ep0) + self.dividend_level.eval(log_ep0)
    }

    /// `log G(log EP_0)`.
    pub fn log_dividend_level(&self, log_ep0: f64) -> Result<f64> {
        let level = self.dividend_level.eval(log_ep0);
        if level > 0.0 {
            Ok(libm::log(level))
        } else {
            Err(Error::Constraint(alloc::format!(
                "dividend level G = {level} is not positive at log EP {log_ep0}"
            )))
        }
    }

    pub fn spectrum(&self) -> Result<SystemSpectrum> {
        spectrum(self.gamma, self.kappa)
    }

    /// Evaluates the affine coefficients at `log_ep0` for one scenario.
    pub fn freeze(&self, log_ep0: f64) -> Result<FrozenModel> {
        self.validate()?;
        Ok(FrozenModel {
            params: *self,
            log_ep0,
            growth: self.price_drift.eval(log_ep0),
            offset: self.drift_offset.eval(log_ep0),
            dividend_level: self.dividend_level.eval(log_ep0),
            log_dividend_level: self.log_dividend_level(log_ep0)?,
            spectrum: self.spectrum()?,
        })
    }
}

pub fn check_dividend_constraint(theta_div: f64) -> Result<()> {
    if theta_div > 0.0 && theta_div < 2.0 {
        Ok(())
    } else {
        Err(Error::Constraint(alloc::format!(
            "theta_div = {theta_div} must lie in (0, 2)"
        )))
    }
}

/// Parameters with `F`, `G`, `H` fixed for a given initial log EP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenModel {
    pub params: ModelParams,
    pub log_ep0: f64,
    /// `c = g (1 + F)`.
    pub growth: f64,
    /// `H`.
    pub offset: f64,
    /// `G`.
    pub dividend_level: f64,
    /// `log G`.
    pub log_dividend_level: f64,
    pub spectrum: SystemSpectrum,
}

/// Model state at month `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelState {
    /// `Y_t = p_t - log <e>_0`.
    pub y: f64,
    pub mu: f64,
    pub xi: f64,
    /// `d_{t-1} - p_t`.
    pub log_dp: f64,
    pub t: u32,
}

impl ModelState {
    /// State at `t = 0`; `Y_0 = -log EP_0` and `xi_0 = 0`.
    pub fn initial(log_ep0: f64, mu0: f64, log_dp0: f64) -> Self {
        ModelState {
            y: -log_ep0,
            mu: mu0,
            xi: 0.0,
            log_dp: log_dp0,
            t: 0,
        }
    }
}

/// One month of shocks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Shocks {
    pub mu: f64,
    pub p: f64,
    pub d: f64,
}

impl Shocks {
    pub fn draw<N: NoiseSource + ?Sized>(noise: &mut N) -> Self {
        Shocks {
            mu: noise.next_shock(),
            p: noise.next_shock(),
            d: noise.next_shock(),
        }
    }
}

impl FrozenModel {
    /// Scale of the `xi` increments, `kappa sigma_p / (1 - gamma)`.
    pub fn xi_scale(&self) -> f64 {
        self.params.kappa * self.params.sigma_p / (1.0 - self.params.gamma)
    }

    /// Advances the state by one month.
    #[inline]
    pub fn step(&self, state: &ModelState, shocks: Shocks) -> ModelState {
        let p = &self.params;
        let bracket = self.offset + self.growth * f64::from(state.t) - state.y;
        ModelState {
            y: state.y + state.mu + state.xi,
            mu: p.gamma * state.mu + p.kappa * bracket + p.sigma_mu * shocks.mu,
            xi: state.xi + self.xi_scale() * shocks.p,
            log_dp: state.log_dp - p.theta_div * (state.log_dp - self.log_dividend_level)
                + p.sigma_d * shocks.d,
            t: state.t + 1,
        }
    }

    /// Log EP along the path: `log <e>_t - p_t = g t - Y_t`.
    pub fn log_ep(&self, state: &ModelState) -> f64 {
        self.params.g * f64::from(state.t) - state.y
    }
}
