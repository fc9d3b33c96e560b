//! Residual bootstrap test of `H0: beta = 0`.
//!
//! 1. Fit the augmented regression on the data and keep `beta_c`.
//! 2. Fit `y_t = alpha + u_t` and `x_t = theta + rho x_{t-1} + v_t` by OLS
//!    (the null model) and keep the residual pairs `(u_t, v_t)`.
//! 3. For each replica draw `n` time indices with replacement; the `u` and
//!    `v` residuals at each index are taken together.
//! 4. Rebuild `y^b_t = alpha + u^b_t` and `x^b_t = theta + rho x^b_{t-1} +
//!    v^b_t`, starting from `x^b_0` drawn uniformly from `x_0..x_{n-1}`.
//! 5. Re-estimate `beta_c` on each replica.
//! 6. One-sided p-value: share of replica estimates `>= beta_c`.

use alloc::vec::Vec;

use rand::Rng;

use crate::regression::{augmented_regression, fit_ar1};
use crate::rng::stream_rng;
use crate::stats;
use crate::{Error, Result};

/// Default number of bootstrap replicas.
pub const DEFAULT_REPLICATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub master_seed: u64,
    /// Keep the resampled index sequences in the result.
    pub record_indices: bool,
}

impl BootstrapConfig {
    pub fn new(master_seed: u64) -> Self {
        BootstrapConfig {
            replications: DEFAULT_REPLICATIONS,
            master_seed,
            record_indices: false,
        }
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }
}

/// OLS estimates under `beta = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullFit {
    pub alpha: f64,
    pub theta: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub beta_c_samples: Vec<f64>,
    pub observed_beta_c: f64,
    pub p_value: f64,
    pub null_fit: NullFit,
    /// The observed `beta_c` was not positive; `p_value` counts replicas
    /// `<= beta_c` instead.
    pub mirrored: bool,
    /// The null residuals `u_t` are identically zero; `p_value` is 1.
    pub degenerate: bool,
    pub resampled_indices: Option<Vec<Vec<u32>>>,
}

pub fn run_bootstrap(y: &[f64], x: &[f64], config: &BootstrapConfig) -> Result<BootstrapResult> {
    if config.replications == 0 {
        return Err(Error::Config(
            "bootstrap needs at least one replication".into(),
        ));
    }
    let n = y.len();
    if n > u32::MAX as usize || config.replications.checked_mul(n).is_none() {
        return Err(Error::Config(alloc::format!(
            "{} replications of length {n} overflow the resampling index space",
            config.replications
        )));
    }

    // (i)
    let observed = augmented_regression(y, x)?;
    let observed_beta_c = observed.beta_c;

    // (ii)
    let alpha = stats::mean(y);
    let u: Vec<f64> = y.iter().map(|v| v - alpha).collect();
    let ar1 = fit_ar1(x)?;
    let v = &ar1.residuals;
    if u.iter().chain(v.iter()).any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("bootstrap residuals"));
    }
    let null_fit = NullFit {
        alpha,
        theta: ar1.theta_ar,
        rho: ar1.rho,
    };

    let scale = y
        .iter()
        .fold(0.0_f64, |m, v| m.max(libm::fabs(*v)))
        .max(1.0);
    if u.iter().all(|r| libm::fabs(*r) <= 1e-14 * scale) {
        return Ok(BootstrapResult {
            beta_c_samples: alloc::vec![observed_beta_c; config.replications],
            observed_beta_c,
            p_value: 1.0,
            null_fit,
            mirrored: false,
            degenerate: true,
            resampled_indices: None,
        });
    }

    let replica = |b: usize| -> Result<(f64, Option<Vec<u32>>)> {
        let mut rng = stream_rng(config.master_seed, b as u64);
        // (iii)
        let indices: Vec<u32> = (0..n).map(|_| rng.random_range(0..n as u32)).collect();
        // (iv)
        let mut xb = Vec::with_capacity(n + 1);
        xb.push(x[rng.random_range(0..n)]);
        let mut yb = Vec::with_capacity(n);
        for &s in &indices {
            let s = s as usize;
            yb.push(alpha + u[s]);
            let prev = *xb.last().unwrap_or(&0.0);
            xb.push(null_fit.theta + null_fit.rho * prev + v[s]);
        }
        // (v)
        let beta = augmented_regression(&yb, &xb)?.beta_c;
        Ok((beta, config.record_indices.then_some(indices)))
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<(f64, Option<Vec<u32>>)>> = {
        use rayon::prelude::*;
        (0..config.replications)
            .into_par_iter()
            .map(replica)
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<(f64, Option<Vec<u32>>)>> =
        (0..config.replications).map(replica).collect();

    let mut beta_c_samples = Vec::with_capacity(config.replications);
    let mut index_log = config.record_indices.then(Vec::new);
    for outcome in outcomes {
        let (beta, idx) = outcome?;
        beta_c_samples.push(beta);
        if let (Some(log), Some(idx)) = (index_log.as_mut(), idx) {
            log.push(idx);
        }
    }

    // (vi)
    let mirrored = observed_beta_c <= 0.0;
    let hits = if mirrored {
        beta_c_samples
            .iter()
            .filter(|b| **b <= observed_beta_c)
            .count()
    } else {
        beta_c_samples
            .iter()
            .filter(|b| **b >= observed_beta_c)
            .count()
    };

    Ok(BootstrapResult {
        p_value: hits as f64 / config.replications as f64,
        beta_c_samples,
        observed_beta_c,
        null_fit,
        mirrored,
        degenerate: false,
        resampled_indices: index_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{GaussianNoise, NoiseSource};

    fn synthetic(n: usize, beta: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut noise = GaussianNoise::new(stream_rng(seed, 0));
        let mut x = alloc::vec![0.0];
        let mut y = Vec::new();
        for _ in 0..n {
            let prev = *x.last().unwrap();
            let (e1, e2) = (noise.next_shock(), noise.next_shock());
            let v = 0.1 * e1;
            let u = 0.1 * (-0.8 * e1 + 0.6 * e2);
            y.push(beta * prev + u);
            x.push(0.9 * prev + v);
        }
        (y, x)
    }

    #[test]
    fn zero_noise_null_is_degenerate() {
        let (_, x) = synthetic(60, 0.0, 1);
        let y = alloc::vec![0.25; 60];
        let res = run_bootstrap(&y, &x, &BootstrapConfig::new(3).with_replications(50)).unwrap();
        assert!(res.degenerate);
        assert_eq!(res.p_value, 1.0);
        assert_eq!(res.beta_c_samples.len(), 50);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (y, x) = synthetic(80, 0.2, 5);
        let cfg = BootstrapConfig::new(11).with_replications(64);
        let a = run_bootstrap(&y, &x, &cfg).unwrap();
        let b = run_bootstrap(&y, &x, &cfg).unwrap();
        assert_eq!(a.beta_c_samples, b.beta_c_samples);
        assert!((0.0..=1.0).contains(&a.p_value));
        let hits = a
            .beta_c_samples
            .iter()
            .filter(|s| **s >= a.observed_beta_c)
            .count();
        if !a.mirrored {
            assert_eq!(a.p_value, hits as f64 / 64.0);
        }
    }

    #[test]
    fn strong_signal_rejects() {
        let (y, x) = synthetic(300, 0.5, 9);
        let res = run_bootstrap(&y, &x, &BootstrapConfig::new(2).with_replications(400)).unwrap();
        assert!(!res.mirrored);
        assert!(res.p_value < 0.01, "p = {}", res.p_value);
    }

    #[test]
    fn paired_indices_are_recorded() {
        let (y, x) = synthetic(40, 0.1, 4);
        let mut cfg = BootstrapConfig::new(8).with_replications(5);
        cfg.record_indices = true;
        let res = run_bootstrap(&y, &x, &cfg).unwrap();
        let log = res.resampled_indices.unwrap();
        assert_eq!(log.len(), 5);
        assert!(log
            .iter()
            .all(|idx| idx.len() == 40 && idx.iter().all(|&i| i < 40)));
    }

    #[test]
    fn zero_replications_is_config_error() {
        let (y, x) = synthetic(40, 0.1, 4);
        let cfg = BootstrapConfig::new(8).with_replications(0);
        assert!(matches!(run_bootstrap(&y, &x, &cfg), Err(Error::Config(_))));
    }
}
