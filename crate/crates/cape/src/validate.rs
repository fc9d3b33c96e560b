//! Self-checks of the numerical core: closed forms against recursions,
//! algebraic identities, constraint handling and, outside quick mode, a few
//! Monte Carlo consistency checks.

use std::time::{Duration, Instant};

use cape_core::bootstrap::{run_bootstrap, BootstrapConfig};
use cape_core::calibration::estimate_g;
use cape_core::dynamics::{spectrum, system_matrix, ModelParams, ModelState, Shocks};
use cape_core::linalg::{mat3_max_abs_diff, mat3_mul, Mat3};
use cape_core::market::{MarketSeries, RawMonthlyRecord, YearMonth};
use cape_core::regression::{corrected_rho, fit_ar1};
use cape_core::rng::{stream_rng, GaussianNoise, NoiseSource, ZeroNoise};
use cape_core::scenario::{simulate, HorizonGrid, InitialConditions, ScenarioConfig};
use cape_core::stats;
use rand::Rng;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{:<4}  {:<width$}  {:>8.2}s  {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.elapsed.as_secs_f64(),
                c.detail,
            ));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        out.push_str(&format!("{} checks, {failed} failed\n", self.checks.len()));
        out
    }
}

type CheckFn = fn(u64) -> Result<String, String>;

pub fn run(quick: bool, seed: u64) -> ValidationReport {
    let mut list: Vec<(&'static str, CheckFn)> = vec![
        ("closed-form mean vs recursion", mean_vs_recursion),
        ("spectral reconstruction", spectral_reconstruction),
        (
            "variance vs covariance propagation",
            variance_vs_propagation,
        ),
        ("dividend variance vs direct sum", dividend_variance_sum),
        (
            "leading correction vs numeric limit",
            leading_correction_limit,
        ),
        ("noiseless scenario vs closed form", noiseless_scenario),
        ("yield decomposition identity", decomposition_identity),
        ("CPI base invariance", cpi_invariance),
        ("bias-corrected rho example", corrected_rho_example),
        ("bootstrap reproducibility", bootstrap_reproducible),
        ("constraint rejection", constraint_rejection),
        ("growth of exponential earnings", exact_growth),
    ];
    if !quick {
        list.push(("diffusive variance scaling (MC)", diffusive_scaling));
        list.push(("AR(1) bias reduction (MC)", bias_reduction));
    }
    let checks = list
        .into_iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let outcome = f(seed);
            let elapsed = start.elapsed();
            let (passed, detail) = match outcome {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            Check {
                name,
                passed,
                detail,
                elapsed,
            }
        })
        .collect();
    ValidationReport { checks }
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn grid_params() -> Vec<ModelParams> {
    let mut out = Vec::new();
    for gamma in [0.05, 0.2, 0.4, 0.6, 0.8] {
        let bound = (1.0 - gamma) * (1.0 - gamma) / 4.0;
        for frac in [0.05, 0.25, 0.5, 0.75, 0.95] {
            let mut p = ModelParams::sp_reference().noiseless();
            p.gamma = gamma;
            p.kappa = frac * bound;
            out.push(p);
        }
    }
    out
}

fn mean_vs_recursion(_: u64) -> Result<String, String> {
    let mut worst = 0.0_f64;
    for p in grid_params() {
        let model = p.freeze(-2.9).map_err(|e| e.to_string())?;
        let mut state = ModelState::initial(-2.9, 0.004, -3.6);
        let (y0, mu0) = (state.y, state.mu);
        for h in 1..=240 {
            state = model.step(&state, Shocks::draw(&mut ZeroNoise));
            let closed = model.expected_y(h, y0, mu0).map_err(|e| e.to_string())?;
            worst = worst.max((closed - state.y).abs());
        }
    }
    ensure(worst <= 1e-10, format!("max abs error {worst:.2e}"))
}

/// The eigenvector matrix has condition number of order `(1 - gamma) / kappa`,
/// so the reconstruction error is checked against that scale.
fn spectral_reconstruction(seed: u64) -> Result<String, String> {
    let mut rng = stream_rng(seed, 1);
    let mut worst = 0.0_f64;
    let mut drawn = 0;
    while drawn < 1000 {
        let gamma: f64 = rng.random_range(0.0..1.0);
        let kappa: f64 = rng.random_range(0.0..0.25);
        let bound = (1.0 - gamma) * (1.0 - gamma) / 4.0;
        if gamma == 0.0 || kappa == 0.0 || kappa > bound {
            continue;
        }
        drawn += 1;
        let s = spectrum(gamma, kappa).map_err(|e| e.to_string())?;
        if !(s.lambda_plus < 1.0 && s.lambda_minus > 0.0) {
            return Err(format!(
                "eigenvalues outside (0,1) at gamma={gamma}, kappa={kappa}"
            ));
        }
        let rebuilt = s.power(1).ok_or("degenerate spectrum")?;
        let err = mat3_max_abs_diff(&rebuilt, &system_matrix(gamma, kappa));
        let scale = 1.0 + (1.0 - gamma) / kappa;
        worst = worst.max(err / (f64::EPSILON * scale));
    }
    ensure(
        worst <= 64.0,
        format!("max error {worst:.1} eps x condition"),
    )
}

fn transpose(m: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t[j][i] = *v;
        }
    }
    t
}

fn variance_vs_propagation(_: u64) -> Result<String, String> {
    let params = ModelParams::sp_reference();
    let model = params.freeze(-2.9).map_err(|e| e.to_string())?;
    let j = system_matrix(params.gamma, params.kappa);
    let jt = transpose(&j);
    let xi = model.xi_scale();
    let mut c: Mat3 = [[0.0; 3]; 3];
    let mut worst = 0.0_f64;
    for h in 1..=300 {
        c = mat3_mul(&mat3_mul(&j, &c), &jt);
        c[1][1] += params.sigma_mu * params.sigma_mu;
        c[2][2] += xi * xi;
        let closed = model.variance_y(h).map_err(|e| e.to_string())?;
        worst = worst.max((closed - c[0][0]).abs() / c[0][0].max(1e-300));
    }
    ensure(worst <= 1e-9, format!("max relative error {worst:.2e}"))
}

fn dividend_variance_sum(_: u64) -> Result<String, String> {
    let model = ModelParams::sp_reference()
        .freeze(-2.9)
        .map_err(|e| e.to_string())?;
    let theta = model.params.theta_div;
    let mut worst = 0.0_f64;
    for h in [1u32, 12, 120, 400] {
        let direct: f64 = (1..=h)
            .map(|k| ((1.0 - (1.0 - theta).powi(k as i32)) / theta).powi(2))
            .sum();
        let expected =
            (model.dividend_level * model.params.sigma_d).powi(2) * direct / f64::from(h * h);
        let got = model
            .dividend_contribution_moments(h, -3.5)
            .map_err(|e| e.to_string())?
            .variance;
        worst = worst.max((got - expected).abs() / expected);
    }
    ensure(worst <= 1e-10, format!("max relative error {worst:.2e}"))
}

fn leading_correction_limit(_: u64) -> Result<String, String> {
    let mut worst = 0.0_f64;
    for params in [ModelParams::sp_reference(), ModelParams::nyse_reference()] {
        let model = params.freeze(-2.9).map_err(|e| e.to_string())?;
        let l = model.leading_correction(-3.7).map_err(|e| e.to_string())?;
        let h = 20_000;
        let mean = model
            .expected_yield(h, 0.0, -3.7)
            .map_err(|e| e.to_string())?;
        let numeric = f64::from(h) * (mean - model.asymptotic_yield());
        worst = worst.max((numeric - l).abs() / (1.0 + l.abs()));
    }
    ensure(worst <= 1e-6, format!("max relative gap {worst:.2e}"))
}

fn noiseless_scenario(_: u64) -> Result<String, String> {
    let params = ModelParams::sp_reference().noiseless();
    let start = InitialConditions::new(-2.9, 0.003, -3.6);
    let grid = HorizonGrid::range(24, 192, 24).map_err(|e| e.to_string())?;
    let set = simulate(
        &params,
        &[start],
        &ScenarioConfig {
            horizons: grid.clone(),
            paths_per_start: 1,
            master_seed: 0,
        },
    )
    .map_err(|e| e.to_string())?;
    let model = params.freeze(-2.9).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    for (k, &h) in grid.as_slice().iter().enumerate() {
        let closed = model
            .expected_price_yield(h, 0.003)
            .map_err(|e| e.to_string())?;
        worst = worst.max((set.price_yield(0, k) - closed).abs());
    }
    ensure(worst <= 1e-9, format!("max abs error {worst:.2e}"))
}

fn synthetic_records(seed: u64, cpi_scale: f64) -> Vec<RawMonthlyRecord> {
    let mut noise = GaussianNoise::new(stream_rng(seed, 2));
    let start = YearMonth::new(1900, 1).expect("valid month");
    let mut p = 100.0_f64;
    let mut cpi = 10.0_f64;
    (0..300)
        .map(|i| {
            p *= (0.004 + 0.04 * noise.next_shock()).exp();
            cpi *= (0.002 + 0.005 * noise.next_shock()).exp();
            RawMonthlyRecord {
                date: start.offset(i),
                nominal_price: p,
                nominal_dividend: Some(0.04 * p * (0.1 * noise.next_shock()).exp()),
                nominal_earnings: Some(0.06 * p * (0.3 * noise.next_shock()).exp()),
                cpi: cpi * cpi_scale,
            }
        })
        .collect()
}

fn decomposition_identity(seed: u64) -> Result<String, String> {
    let raw = synthetic_records(seed, 1.0);
    let series = MarketSeries::deflate(&raw, raw[0].date).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    for t in (0..250).step_by(7) {
        for h in [1, 12, 36] {
            let y = series.gross_yield(t, h).map_err(|e| e.to_string())?;
            worst = worst.max((y.price_part + y.dividend_part - y.total).abs());
        }
    }
    ensure(worst <= 1e-12, format!("max abs error {worst:.2e}"))
}

fn cpi_invariance(seed: u64) -> Result<String, String> {
    let raw = synthetic_records(seed, 1.0);
    let scaled = synthetic_records(seed, 3.7);
    let a = MarketSeries::deflate(&raw, raw[0].date).map_err(|e| e.to_string())?;
    let b = MarketSeries::deflate(&raw, raw[200].date).map_err(|e| e.to_string())?;
    let c = MarketSeries::deflate(&scaled, raw[50].date).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    for t in 0..a.len() {
        for other in [&b, &c] {
            if let (Some(x), Some(y)) = (a.log_ep()[t], other.log_ep()[t]) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    ensure(
        worst <= 1e-12,
        format!("max abs log EP difference {worst:.2e}"),
    )
}

fn corrected_rho_example(_: u64) -> Result<String, String> {
    let v = corrected_rho(0.9, 100);
    ensure(
        (v - 0.93811).abs() < 1e-12,
        format!("rho_c(0.9, 100) = {v}"),
    )
}

fn bootstrap_reproducible(seed: u64) -> Result<String, String> {
    let mut noise = GaussianNoise::new(stream_rng(seed, 3));
    let mut x = vec![0.0];
    let mut y = Vec::new();
    for _ in 0..80 {
        let prev = *x.last().expect("non-empty");
        let e = noise.next_shock();
        y.push(0.1 * prev + 0.05 * (-0.9 * e + 0.4 * noise.next_shock()));
        x.push(0.9 * prev + 0.05 * e);
    }
    let cfg = BootstrapConfig::new(seed).with_replications(200);
    let a = run_bootstrap(&y, &x, &cfg).map_err(|e| e.to_string())?;
    let b = run_bootstrap(&y, &x, &cfg).map_err(|e| e.to_string())?;
    ensure(
        a.beta_c_samples == b.beta_c_samples && a.p_value == b.p_value,
        format!("p = {}", a.p_value),
    )
}

fn constraint_rejection(_: u64) -> Result<String, String> {
    let cases = [(0.5, 0.1), (1.0, 0.01), (0.3, 0.0), (-0.1, 0.01)];
    for (gamma, kappa) in cases {
        if spectrum(gamma, kappa).is_ok() {
            return Err(format!("accepted gamma={gamma}, kappa={kappa}"));
        }
    }
    let mut p = ModelParams::sp_reference();
    p.theta_div = 2.0;
    ensure(
        p.validate().is_err(),
        "4 momentum and 1 dividend violations rejected".into(),
    )
}

fn exact_growth(_: u64) -> Result<String, String> {
    let start = YearMonth::new(1900, 1).expect("valid month");
    let g0 = 0.0015;
    let raw: Vec<RawMonthlyRecord> = (0..420)
        .map(|i| RawMonthlyRecord {
            date: start.offset(i),
            nominal_price: 50.0,
            nominal_dividend: Some(1.0),
            nominal_earnings: Some((g0 * i as f64).exp()),
            cpi: 1.0,
        })
        .collect();
    let series = MarketSeries::deflate(&raw, start).map_err(|e| e.to_string())?;
    let fit = estimate_g(&series, 192).map_err(|e| e.to_string())?;
    let worst = fit
        .estimate
        .values
        .iter()
        .map(|v| (v - g0).abs())
        .fold(0.0, f64::max);
    ensure(
        worst <= 1e-12,
        format!(
            "{} windows, max error {worst:.2e}",
            fit.estimate.values.len()
        ),
    )
}

fn diffusive_scaling(seed: u64) -> Result<String, String> {
    let params = ModelParams::sp_reference();
    let h = 1000;
    let set = simulate(
        &params,
        &[InitialConditions::new(-2.9, 0.0, -3.6)],
        &ScenarioConfig {
            horizons: HorizonGrid::new(vec![h]).map_err(|e| e.to_string())?,
            paths_per_start: 20_000,
            master_seed: seed,
        },
    )
    .map_err(|e| e.to_string())?;
    let v = stats::sample_variance(&set.price_at(0)) * f64::from(h);
    let model = params.freeze(-2.9).map_err(|e| e.to_string())?;
    let closed = model.price_yield_variance(h).map_err(|e| e.to_string())? * f64::from(h);
    let rel = (v / closed - 1.0).abs();
    ensure(
        rel < 0.05,
        format!("h Var = {v:.3e}, closed form {closed:.3e}"),
    )
}

fn bias_reduction(seed: u64) -> Result<String, String> {
    let (rho, n) = (0.95, 200);
    let mut rng = GaussianNoise::new(stream_rng(seed, 4));
    let mut ols_bias = 0.0;
    let mut corrected_bias = 0.0;
    let reps = 2000;
    for _ in 0..reps {
        let mut x = vec![0.0];
        for _ in 0..n {
            let prev = *x.last().expect("non-empty");
            x.push(rho * prev + rng.next_shock());
        }
        let fit = fit_ar1(&x).map_err(|e| e.to_string())?;
        ols_bias += fit.rho - rho;
        corrected_bias += corrected_rho(fit.rho, n) - rho;
    }
    let (ob, cb) = (ols_bias / reps as f64, corrected_bias / reps as f64);
    ensure(
        cb.abs() < ob.abs(),
        format!("bias OLS {ob:.4}, corrected {cb:.4}"),
    )
}

#[cfg(test)]
mod tests {
    #[test]
    fn quick_suite_passes() {
        let report = super::run(true, 7);
        assert!(report.all_passed(), "{}", report.table());
    }
}
