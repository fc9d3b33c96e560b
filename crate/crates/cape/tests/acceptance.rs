//! Acceptance criteria 1-9. Each criterion prints one PASS/FAIL line. With
//! `CAPE_ACCEPTANCE_STRICT=1` the process exits non-zero when any criterion
//! fails; otherwise the run only reports, so the rest of the workspace tests
//! still run after it.
//!
//! Criteria 7 and 8 need the long-run monthly S&P file (`Date,P,D,E,CPI`
//! columns, or a column map given by `CAPE_COLUMNS`) at the path in
//! `CAPE_MARKET_CSV`. Set `CAPE_VINTAGE=mismatched` when the file is a later
//! vintage than the one the reference numbers were computed on. Criterion 9
//! uses the same file for its initial conditions and falls back to a
//! model-generated history when it is absent.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use cape::input::{parse_market_csv, ColumnMap};
use cape_core::bootstrap::{run_bootstrap, BootstrapConfig};
use cape_core::calibration::{
    calibrate, predictive_sample, CalibrationOptions, SamplingMode, YieldComponent,
};
use cape_core::dynamics::{spectrum, system_matrix, ModelParams, ModelState, Shocks};
use cape_core::linalg::{mat3_max_abs_diff, mat3_mul};
use cape_core::market::{MarketSeries, YearMonth};
use cape_core::regression::augmented_regression;
use cape_core::rng::{stream_rng, GaussianNoise, NoiseSource, ZeroNoise};
use cape_core::scenario::{
    scenario_coverage, simulate, synthetic_market, BandTarget, CenterMode, HorizonGrid,
    InitialConditions, ScenarioConfig,
};
use cape_core::stats::{mean, sample_variance};
use rand::Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn fail(detail: impl Into<String>) -> Verdict {
    verdict(false, detail.into())
}

struct Criterion {
    number: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Verdict,
}

fn main() {
    let criteria = [
        Criterion {
            number: 1,
            name: "closed form vs recursion",
            limit: Some(secs(5)),
            run: c1_closed_form,
        },
        Criterion {
            number: 2,
            name: "spectral reconstruction",
            limit: Some(secs(5)),
            run: c2_spectrum,
        },
        Criterion {
            number: 3,
            name: "diffusive scaling",
            limit: Some(secs(120)),
            run: c3_diffusive,
        },
        Criterion {
            number: 4,
            name: "dividend moments",
            limit: Some(secs(60)),
            run: c4_dividend,
        },
        Criterion {
            number: 5,
            name: "bias correction",
            limit: Some(secs(120)),
            run: c5_bias,
        },
        Criterion {
            number: 6,
            name: "bootstrap size",
            limit: Some(secs(600)),
            run: c6_bootstrap,
        },
        Criterion {
            number: 7,
            name: "reference estimates",
            limit: None,
            run: c7_reference,
        },
        Criterion {
            number: 8,
            name: "momentum calibration",
            limit: Some(secs(300)),
            run: c8_momentum,
        },
        Criterion {
            number: 9,
            name: "band coverage",
            limit: Some(secs(120)),
            run: c9_coverage,
        },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let mut v = (c.run)();
        let elapsed = start.elapsed();
        if let Some(limit) = c.limit {
            if elapsed > limit {
                v.passed = false;
                v.detail
                    .push_str(&format!("; runtime over {}s", limit.as_secs()));
            }
        }
        failures += usize::from(!v.passed);
        println!(
            "criterion {} {:<26} {}  {:>7.2}s  {}",
            c.number,
            c.name,
            if v.passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            v.detail
        );
    }
    println!("{} criteria, {failures} failed", criteria.len());
    let strict = std::env::var("CAPE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failures > 0 {
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn c1_closed_form() -> Verdict {
    let mut worst = 0.0_f64;
    for gamma in [0.05, 0.25, 0.45, 0.65, 0.85] {
        let bound = (1.0 - gamma) * (1.0 - gamma) / 4.0;
        for frac in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let mut params = ModelParams::sp_reference().noiseless();
            params.gamma = gamma;
            params.kappa = frac * bound;
            let model = params.freeze(-2.9).unwrap();
            let mut state = ModelState::initial(-2.9, 0.01, -3.6);
            let (y0, mu0) = (state.y, state.mu);
            for h in 1..=240 {
                state = model.step(&state, Shocks::draw(&mut ZeroNoise));
                let closed = model.expected_y(h, y0, mu0).unwrap();
                worst = worst.max((closed - state.y).abs());
            }
        }
    }
    verdict(
        worst <= 1e-10,
        format!("max |error| {worst:.2e} over 25 pairs, h <= 240"),
    )
}

/// `(gamma, kappa)` uniform on the admissible region.
fn c2_spectrum() -> Verdict {
    let mut rng = stream_rng(2, 0);
    let mut worst = 0.0_f64;
    let mut worst_at = (0.0, 0.0);
    let mut drawn = 0;
    while drawn < 1000 {
        let gamma: f64 = rng.random_range(0.0..1.0);
        let kappa: f64 = rng.random_range(0.0..0.25);
        if gamma == 0.0 || kappa == 0.0 || 4.0 * kappa > (1.0 - gamma) * (1.0 - gamma) {
            continue;
        }
        drawn += 1;
        let s = spectrum(gamma, kappa).unwrap();
        let inside = |l: f64| l > 0.0 && l < 1.0;
        if !(inside(s.lambda_plus) && inside(s.lambda_minus) && s.lambda_minus <= s.lambda_plus) {
            return fail(format!("eigenvalues outside (0,1) at ({gamma}, {kappa})"));
        }
        let Some(qi) = s.q_inverse else {
            return fail(format!("degenerate spectrum at ({gamma}, {kappa})"));
        };
        let mut q_lambda = s.q;
        for row in q_lambda.iter_mut() {
            for (c, v) in row.iter_mut().enumerate() {
                *v *= s.lambda[c];
            }
        }
        let err = mat3_max_abs_diff(&mat3_mul(&q_lambda, &qi), &system_matrix(gamma, kappa));
        if err > worst {
            worst = err;
            worst_at = (gamma, kappa);
        }
    }
    verdict(
        worst <= 1e-12,
        format!(
            "max |Q L Q^-1 - J| {worst:.2e} at gamma {:.4}, kappa {:.3e}",
            worst_at.0, worst_at.1
        ),
    )
}

fn c3_diffusive() -> Verdict {
    let params = ModelParams::sp_reference();
    let h = 2000;
    let start = InitialConditions::new(-2.9, 0.0, params.log_dividend_level(-2.9).unwrap());
    let set = simulate(
        &params,
        &[start],
        &ScenarioConfig {
            horizons: HorizonGrid::new(vec![h]).unwrap(),
            paths_per_start: 100_000,
            master_seed: 3,
        },
    )
    .unwrap();
    let scaled = f64::from(h) * sample_variance(&set.price_at(0));
    let target = params.sigma_p * params.sigma_p;
    let rel = scaled / target - 1.0;
    verdict(
        rel.abs() <= 0.03,
        format!(
            "h Var = {:.4}e-4 vs sigma_p^2 = {:.4}e-4 ({:+.2}%)",
            scaled * 1e4,
            target * 1e4,
            100.0 * rel
        ),
    )
}

/// Linearized dividend contribution `(1/h) sum_t G (1 + z_t - log G)`.
fn dividend_sample(params: &ModelParams, log_dp0: f64, h: u32, paths: u64, seed: u64) -> Vec<f64> {
    let model = params.freeze(-2.9).unwrap();
    (0..paths)
        .map(|i| {
            let mut noise = GaussianNoise::new(stream_rng(seed, i));
            let mut state = ModelState::initial(-2.9, 0.0, log_dp0);
            let mut sum = 0.0;
            for _ in 0..h {
                state = model.step(&state, Shocks::draw(&mut noise));
                sum += 1.0 + state.log_dp - model.log_dividend_level;
            }
            model.dividend_level * sum / f64::from(h)
        })
        .collect()
}

fn moments_with_errors(v: &[f64]) -> (f64, f64, f64, f64) {
    let n = v.len() as f64;
    let m = mean(v);
    let var = sample_variance(v);
    let m4 = v.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    (m, (var / n).sqrt(), var, ((m4 - var * var) / n).sqrt())
}

fn c4_dividend() -> Verdict {
    let params = ModelParams::sp_reference();
    let model = params.freeze(-2.9).unwrap();
    let h = 120;
    let level = model.log_dividend_level;
    let mut details = Vec::new();
    let mut passed = true;
    for (label, z0, stream) in [("off level", level + 0.4, 0), ("at level", level, 1)] {
        let sample = dividend_sample(&params, z0, h, 100_000, 4 + 1000 * stream);
        let (m, m_se, v, v_se) = moments_with_errors(&sample);
        let closed = model.dividend_contribution_moments(h, z0).unwrap();
        let zm = (m - closed.mean) / m_se;
        let zv = (v - closed.variance) / v_se;
        passed &= zm.abs() <= 3.0 && zv.abs() <= 3.0;
        if stream == 1 {
            let zg = (m - model.dividend_level) / m_se;
            passed &= zg.abs() <= 3.0;
        }
        details.push(format!("{label}: mean {zm:+.2} se, var {zv:+.2} se"));
    }
    verdict(passed, details.join("; "))
}

/// `x_{t+1} = rho x_t + v`, `y_{t+1} = beta x_t + u`, unit variances and
/// `corr(u, v) = corr`; `x_0` from the stationary law.
fn predictive_dgp<N: NoiseSource>(
    noise: &mut N,
    rho: f64,
    beta: f64,
    corr: f64,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(n + 1);
    x.push(noise.next_shock() / (1.0 - rho * rho).sqrt());
    let mut y = Vec::with_capacity(n);
    let orth = (1.0 - corr * corr).sqrt();
    for t in 0..n {
        let v = noise.next_shock();
        let u = corr * v + orth * noise.next_shock();
        y.push(beta * x[t] + u);
        x.push(rho * x[t] + v);
    }
    (y, x)
}

fn c5_bias() -> Verdict {
    let (rho, beta, corr, n, reps) = (0.95, 0.0, -0.9, 200, 10_000);
    let mut sums = [0.0_f64; 4];
    for r in 0..reps {
        let mut noise = GaussianNoise::new(stream_rng(5, r));
        let (y, x) = predictive_dgp(&mut noise, rho, beta, corr, n);
        let fit = augmented_regression(&y, &x).unwrap();
        sums[0] += fit.ar1.rho - rho;
        sums[1] += fit.corrected.rho_c - rho;
        sums[2] += fit.beta_ols - beta;
        sums[3] += fit.beta_c - beta;
    }
    let [rho_ols, rho_c, beta_ols, beta_c] = sums.map(|s| s / reps as f64);
    verdict(
        rho_c.abs() < rho_ols.abs() && beta_c.abs() < beta_ols.abs(),
        format!("bias rho: OLS {rho_ols:+.5}, corrected {rho_c:+.5}; beta: OLS {beta_ols:+.5}, corrected {beta_c:+.5}"),
    )
}

/// One-sided test of `beta = 0` against `beta > 0` at 5%: a replication
/// rejects when the slope is positive and its bootstrap p-value is at most
/// 0.05.
fn c6_bootstrap() -> Verdict {
    let (rho, corr, n, outer, inner) = (0.95, -0.9, 200, 200u64, 2000);
    let mut rejections = 0;
    for r in 0..outer {
        let mut noise = GaussianNoise::new(stream_rng(6, r));
        let (y, x) = predictive_dgp(&mut noise, rho, 0.0, corr, n);
        let cfg = BootstrapConfig::new(6_000_000 + r).with_replications(inner);
        let res = run_bootstrap(&y, &x, &cfg).unwrap();
        rejections += usize::from(!res.mirrored && res.p_value <= 0.05);
    }
    let rate = rejections as f64 / outer as f64;
    verdict(
        (0.03..=0.07).contains(&rate),
        format!("rejection rate {:.1}% ({rejections}/{outer})", 100.0 * rate),
    )
}

struct MarketFile {
    series: MarketSeries,
    mismatched: bool,
}

/// The S&P file restricted to 1871.01-2012.12 and deflated to its last
/// month.
fn market_file() -> Result<MarketFile, String> {
    let path = std::env::var_os("CAPE_MARKET_CSV")
        .map(PathBuf::from)
        .ok_or("market file unavailable (set CAPE_MARKET_CSV)")?;
    let columns = match std::env::var_os("CAPE_COLUMNS") {
        Some(p) => ColumnMap::from_file(&PathBuf::from(p)).map_err(|e| e.to_string())?,
        None => ColumnMap::default(),
    };
    let first = YearMonth::new(1871, 1).unwrap();
    let last = YearMonth::new(2012, 12).unwrap();
    let raw: Vec<_> = parse_market_csv(&path, &columns)
        .map_err(|e| e.to_string())?
        .into_iter()
        .filter(|r| r.date >= first && r.date <= last)
        .collect();
    let base = raw.last().ok_or("no rows in 1871.01-2012.12")?.date;
    let series = MarketSeries::deflate(&raw, base).map_err(|e| e.to_string())?;
    let mismatched = std::env::var("CAPE_VINTAGE").is_ok_and(|v| v == "mismatched");
    Ok(MarketFile { series, mismatched })
}

fn c7_reference() -> Verdict {
    let file = match market_file() {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    let series = &file.series;
    let widen = if file.mismatched { 2.0 } else { 1.0 };
    let options = CalibrationOptions::default();
    let cal = match calibrate(series, &options) {
        Ok(c) => c,
        Err(e) => return fail(format!("calibration failed: {e}")),
    };
    let (_, beta, _) = cal.predictive.gross.yearly_bp();
    let t = cal.predictive.gross.fit.t_statistic;
    let sample = predictive_sample(
        series,
        12,
        SamplingMode::NonOverlapping,
        YieldComponent::Gross,
    )
    .unwrap();
    let boot = run_bootstrap(
        &sample.y,
        &sample.x,
        &BootstrapConfig::new(7).with_replications(10_000),
    )
    .unwrap();
    let g = cal.g.estimate.mean * 1e4;
    let theta = cal.dividend.theta_div.estimate.mean * 1e4;
    let sigma_p2 = cal.sigma_p.sigma_p2 * 1e4;
    let checks = [
        (
            (beta - 1023.0).abs() <= widen * 445.0,
            format!("beta_c {beta:.0}"),
        ),
        ((t - 2.29).abs() <= 0.3 * widen, format!("t {t:.2}")),
        (
            !boot.mirrored && boot.p_value < 0.05,
            format!("p {:.4}", boot.p_value),
        ),
        ((-3.0..=31.0).contains(&g), format!("g {g:.1}")),
        (
            (111.0..=430.0).contains(&theta),
            format!("theta_d {theta:.0}"),
        ),
        (
            (sigma_p2 / 18.2 - 1.0).abs() <= 0.05,
            format!("sigma_p^2 {sigma_p2:.2}"),
        ),
    ];
    let mut detail: Vec<String> = checks
        .iter()
        .map(|(ok, d)| format!("{d}{}", if *ok { "" } else { " (out)" }))
        .collect();
    if file.mismatched {
        detail.push("vintage-mismatched".into());
    }
    verdict(checks.iter().all(|c| c.0), detail.join(", "))
}

fn c8_momentum() -> Verdict {
    let file = match market_file() {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    let cal = match calibrate(&file.series, &CalibrationOptions::default()) {
        Ok(c) => c,
        Err(e) => return fail(format!("calibration failed: {e}")),
    };
    let m = &cal.momentum;
    let kappa = m.kappa_point * 1e4;
    verdict(
        m.converged
            && m.gamma_point > 0.18
            && m.gamma_point < 0.33
            && kappa > 81.0
            && kappa < 597.0,
        format!(
            "gamma {:.3}, kappa {kappa:.0}e-4, {} iterations{}",
            m.gamma_point,
            m.iterations,
            if m.converged { "" } else { ", not converged" }
        ),
    )
}

/// One path per start month, horizons 24..192 in steps of 24, the first
/// 1250 admissible months with complete initial conditions: 10^4 points.
fn c9_coverage() -> Verdict {
    let params = ModelParams::sp_reference();
    let admissible = |s: &InitialConditions| params.log_dividend_level(s.log_ep0).is_ok();
    let (starts, source) = match market_file() {
        Ok(f) => {
            let starts: Vec<_> = InitialConditions::all_from_series(&f.series)
                .into_iter()
                .filter(admissible)
                .take(1250)
                .collect();
            (starts, "empirical starts")
        }
        Err(_) => {
            // log EP is not mean-reverting in the model, so several shorter
            // histories stand in for one long record
            let origin =
                InitialConditions::new(-2.9, 0.0, params.log_dividend_level(-2.9).unwrap());
            let mut starts = Vec::new();
            for k in 0..20 {
                let series = synthetic_market(
                    &params,
                    &origin,
                    YearMonth::new(1871, 1).unwrap(),
                    120,
                    400,
                    &mut GaussianNoise::new(stream_rng(9, u64::MAX - k)),
                )
                .unwrap();
                starts.extend(
                    InitialConditions::all_from_series(&series)
                        .into_iter()
                        .filter(admissible),
                );
                if starts.len() >= 1250 {
                    break;
                }
            }
            starts.truncate(1250);
            (
                starts,
                "starts from model-generated histories (no market file)",
            )
        }
    };
    if starts.len() < 1250 {
        return fail(format!("only {} start months", starts.len()));
    }
    let set = simulate(
        &params,
        &starts,
        &ScenarioConfig {
            horizons: HorizonGrid::range(24, 192, 24).unwrap(),
            paths_per_start: 1,
            master_seed: 9,
        },
    )
    .unwrap();
    let coverage = scenario_coverage(&set, 1.96, CenterMode::Exact, BandTarget::Gross).unwrap();
    verdict(
        (0.93..=0.97).contains(&coverage),
        format!(
            "{:.2}% of {} points inside, {source}",
            100.0 * coverage,
            set.n_paths() * set.horizons.len()
        ),
    )
}
