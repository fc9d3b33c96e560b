//! Closed-form conditional moments of the model.

use super::FrozenModel;
use crate::{Error, Result};

/// Mean and variance of `(1/h) sum_{i<h} log(1 + D_i / P_{i+1})`, with the
/// summand linearized as `G (1 + z_{i+1} - log G)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DividendMoments {
    pub mean: f64,
    /// Exact variance of the linearized contribution, including the serial
    /// correlation of log DP.
    pub variance: f64,
    /// `G^2 sigma_d^2 / (theta (2 - theta) h)`: the stationary variance of a
    /// single log DP value divided by `h`. It ignores autocorrelation and
    /// understates the variance of the average by roughly
    /// `(2 - theta) / theta` for large `h`.
    pub uncorrelated_variance: f64,
}

impl FrozenModel {
    fn lambdas(&self) -> Result<(f64, f64)> {
        if self.spectrum.degenerate {
            return Err(Error::DegenerateSpectrum);
        }
        Ok((self.spectrum.lambda_plus, self.spectrum.lambda_minus))
    }

    /// `E_0[Y_h]` given `Y_0`, `mu_0` and `xi_0 = 0`.
    pub fn expected_y(&self, h: u32, y0: f64, mu0: f64) -> Result<f64> {
        let (lp, lm) = self.lambdas()?;
        let kappa = self.params.kappa;
        let c = self.growth;
        let big_h = self.offset;
        let hf = f64::from(h);
        let lp_h = libm::pow(lp, hf);
        let lm_h = libm::pow(lm, hf);
        let gap = lm - lp;

        let transient = (-lp_h * ((1.0 - lm) * y0 + mu0) + lm_h * ((1.0 - lp) * y0 + mu0)) / gap;
        let secular = c * (hf - 1.0) + big_h;
        let offset_decay = -(c - big_h) * kappa / gap * (lp_h / (1.0 - lp) - lm_h / (1.0 - lm));
        let ramp = -c * kappa / gap
            * (lm * (1.0 - lm_h) / ((1.0 - lm) * (1.0 - lm))
                - lp * (1.0 - lp_h) / ((1.0 - lp) * (1.0 - lp)));
        Ok(transient + secular + offset_decay + ramp)
    }

    /// `Var_0[Y_h]`.
    pub fn variance_y(&self, h: u32) -> Result<f64> {
        let (lp, lm) = self.lambdas()?;
        let p = &self.params;
        let gap = lm - lp;
        let s = p.kappa / (1.0 - p.gamma);
        let plus_weight = 1.0 - lm - s;
        let minus_weight = s - 1.0 + lp;
        let (mut lp_k, mut lm_k) = (1.0, 1.0);
        let (mut mu_sum, mut p_sum) = (0.0, 0.0);
        for _ in 0..h {
            let a = lm_k - lp_k;
            let b = gap + lp_k * plus_weight + lm_k * minus_weight;
            mu_sum += a * a;
            p_sum += b * b;
            lp_k *= lp;
            lm_k *= lm;
        }
        let sigma_mu2 = p.sigma_mu * p.sigma_mu;
        let sigma_p2 = p.sigma_p * p.sigma_p;
        Ok((sigma_mu2 * mu_sum + sigma_p2 * p_sum) / (gap * gap))
    }

    /// `E_0[z_t]` for `z = d_{t-1} - p_t`.
    pub fn expected_log_dp(&self, t: u32, log_dp0: f64) -> f64 {
        let decay = libm::pow(1.0 - self.params.theta_div, f64::from(t));
        decay * log_dp0 + self.log_dividend_level * (1.0 - decay)
    }

    pub fn dividend_contribution_moments(&self, h: u32, log_dp0: f64) -> Result<DividendMoments> {
        if h == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        let theta = self.params.theta_div;
        super::check_dividend_constraint(theta)?;
        let phi = 1.0 - theta;
        let hf = f64::from(h);
        let level = self.dividend_level;
        let phi_h = libm::pow(phi, hf);
        let mean = level
            + level * (phi / theta) * (log_dp0 - self.log_dividend_level) * (1.0 - phi_h) / hf;

        // sum_{m=1}^{h} (1 - phi^m)^2
        let squares = hf - 2.0 * phi * (1.0 - phi_h) / theta
            + phi * phi * (1.0 - phi_h * phi_h) / (1.0 - phi * phi);
        let sigma_d2 = self.params.sigma_d * self.params.sigma_d;
        let variance = level * level * sigma_d2 * squares / (theta * theta * hf * hf);
        let uncorrelated_variance = level * level * sigma_d2 / (theta * (2.0 - theta) * hf);
        Ok(DividendMoments {
            mean,
            variance,
            uncorrelated_variance,
        })
    }

    /// Expected `(p_h - p_0) / h` from `Y_0 = -log EP_0`.
    pub fn expected_price_yield(&self, h: u32, mu0: f64) -> Result<f64> {
        let y0 = -self.log_ep0;
        Ok((self.expected_y(h, y0, mu0)? - y0) / f64::from(h))
    }

    /// `Var_0[(p_h - p_0) / h]`.
    pub fn price_yield_variance(&self, h: u32) -> Result<f64> {
        let hf = f64::from(h);
        Ok(self.variance_y(h)? / (hf * hf))
    }

    /// Finite-horizon expected gross yield `E_0[y_{0,h}]`.
    pub fn expected_yield(&self, h: u32, mu0: f64, log_dp0: f64) -> Result<f64> {
        Ok(self.expected_price_yield(h, mu0)?
            + self.dividend_contribution_moments(h, log_dp0)?.mean)
    }

    /// Variance of the gross yield; the price and dividend shocks are
    /// independent, so the two variances add.
    pub fn yield_variance(&self, h: u32, log_dp0: f64) -> Result<f64> {
        Ok(
            self.price_yield_variance(h)?
                + self.dividend_contribution_moments(h, log_dp0)?.variance,
        )
    }

    /// Long-run expected gross yield `g (1 + F) + G`.
    pub fn asymptotic_yield(&self) -> f64 {
        self.growth + self.dividend_level
    }

    /// Coefficient `L` of the expansion `E_0[y_{0,h}] = g (1 + F) + G + L / h
    /// + o(1/h)` for a start at `log EP_0` and `log DP_0`.
    pub fn leading_correction(&self, log_dp0: f64) -> Result<f64> {
        let (lp, lm) = self.lambdas()?;
        if lp >= 1.0 || lm >= 1.0 {
            return Err(Error::Constraint(
                "unit eigenvalue in the transient block".into(),
            ));
        }
        let kappa = self.params.kappa;
        let theta = self.params.theta_div;
        let c = self.growth;
        let momentum =
            kappa * (1.0 - lm * lp) / ((1.0 - lm) * (1.0 - lm) * (1.0 - lp) * (1.0 - lp));
        Ok(self.offset - c * (1.0 + momentum)
            + self.log_ep0
            + self.dividend_level * (1.0 / theta - 1.0) * (log_dp0 - self.log_dividend_level))
    }

    /// `-1 / log(lambda_plus)` in months.
    pub fn damping_scale(&self) -> f64 {
        self.spectrum.damping_scale()
    }
}
