//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use cape_core::bootstrap::{run_bootstrap, BootstrapConfig, DEFAULT_REPLICATIONS};
use cape_core::calibration::{
    calibrate, estimate_predictive_coefficients, predictive_sample, CalibrationOptions,
    SamplingMode, YieldComponent, DEFAULT_WINDOW,
};
use cape_core::dynamics::{Affine, ModelParams};
use cape_core::market::{MarketSeries, YearMonth};
use cape_core::scenario::{
    band, scenario_coverage, simulate, BandTarget, CenterMode, HorizonGrid, InitialConditions,
    ScenarioConfig,
};

use crate::error::{AppError, Result};
use crate::formats::{self, mode_name, BootstrapRecord, FitEntry, FitRecord, ParamFile, Units};
use crate::input::{parse_log_ep_source, parse_market_csv, ColumnMap};
use crate::options::{parse_horizons, parse_mode};
use crate::{report, validate};

#[derive(Debug, Parser)]
#[command(
    name = "cape",
    version,
    about = "Long-horizon yield predictability from the CAPE ratio"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a monthly market file and write it back in canonical form.
    Ingest(IngestArgs),
    /// Deflate and write the derived monthly series.
    Derive(DeriveArgs),
    /// Augmented predictive regressions of gross, price and dividend yields.
    Regress(RegressArgs),
    /// Residual bootstrap of the gross-yield slope.
    Bootstrap(BootstrapArgs),
    /// Estimate every model parameter.
    Calibrate(CalibrateArgs),
    /// Monte Carlo scenarios and the analytical band.
    Simulate(SimulateArgs),
    /// Numerical self-checks.
    Validate(ValidateArgs),
    /// Regression and calibration tables.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Market {
    Sp,
    Nyse,
}

impl Market {
    pub fn reference(self) -> ModelParams {
        match self {
            Market::Sp => ModelParams::sp_reference(),
            Market::Nyse => ModelParams::nyse_reference(),
        }
    }
}

#[derive(Debug, Args)]
pub struct MarketInput {
    /// Monthly market CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// TOML file mapping column names.
    #[arg(long)]
    pub columns: Option<PathBuf>,
    /// CPI base month (YYYY.MM); defaults to the last month.
    #[arg(long)]
    pub base: Option<String>,
    /// CSV of `date,logEP` values that replace the computed log EP.
    #[arg(long)]
    pub ep_source: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
    /// Print a short summary to stdout.
    #[arg(long)]
    pub summary: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub columns: Option<PathBuf>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    #[command(flatten)]
    pub market: MarketInput,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct RegressionChoice {
    /// Yield horizon in months.
    #[arg(long, default_value_t = 12)]
    pub horizon: usize,
    /// Sampling of the yield observations.
    #[arg(long, default_value = "nonoverlapping", value_parser = parse_mode)]
    pub mode: SamplingMode,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    #[command(flatten)]
    pub market: MarketInput,
    #[command(flatten)]
    pub regression: RegressionChoice,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub market: MarketInput,
    #[command(flatten)]
    pub regression: RegressionChoice,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    pub replications: usize,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub market: MarketInput,
    #[command(flatten)]
    pub regression: RegressionChoice,
    /// Rolling window length in months.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub windows: usize,
    /// Reference market used to start the offset iteration.
    #[arg(long = "market", value_enum, default_value = "sp")]
    pub market_ref: Market,
    /// Units of the written parameter file.
    #[arg(long, value_enum, default_value = "table")]
    pub units: UnitsArg,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    Monthly,
    Table,
}

impl From<UnitsArg> for Units {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Monthly => Units::Monthly,
            UnitsArg::Table => Units::Table,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Parameter file; overrides `--market`.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Reference parameter set.
    #[arg(long, value_enum, default_value = "sp")]
    pub market: Market,
    /// Monthly market CSV providing empirical starts.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub columns: Option<PathBuf>,
    /// Start month when `--input` is given; defaults to the last month with
    /// complete initial conditions.
    #[arg(long)]
    pub start: Option<String>,
    /// Use every month of `--input` with complete initial conditions.
    #[arg(long)]
    pub all_starts: bool,
    #[arg(long, default_value_t = -2.9, allow_negative_numbers = true)]
    pub log_ep0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu0: f64,
    /// Defaults to the long-run level `log G(log EP0)`.
    #[arg(long, allow_negative_numbers = true)]
    pub log_dp0: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Paths per start.
    #[arg(long, default_value_t = 1000)]
    pub replications: usize,
    #[arg(long, default_value = "24..192", value_parser = parse_horizons)]
    pub horizons: HorizonGrid,
    /// Band half-width in standard deviations.
    #[arg(long, default_value_t = 1.96)]
    pub z: f64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Skip the Monte Carlo checks.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub market: MarketInput,
    #[command(flatten)]
    pub regression: RegressionChoice,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub windows: usize,
    /// Reference column of the parameter table.
    #[arg(long = "market", value_enum, default_value = "sp")]
    pub market_ref: Market,
    /// Enables the bootstrap p-value.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    pub replications: usize,
    #[command(flatten)]
    pub out: Output,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Derive(a) => derive(a),
        Command::Regress(a) => regress(a),
        Command::Bootstrap(a) => bootstrap(a),
        Command::Calibrate(a) => calibrate_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Validate(a) => validate_cmd(a),
        Command::Report(a) => report_cmd(a),
    }
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| AppError::Config("--seed is required for stochastic commands".into()))
}

fn parse_month(text: &str) -> Result<YearMonth> {
    text.parse()
        .map_err(|e| AppError::Config(format!("invalid month `{text}`: {e}")))
}

fn column_map(path: Option<&Path>) -> Result<ColumnMap> {
    path.map_or_else(|| Ok(ColumnMap::default()), ColumnMap::from_file)
}

fn output_dir(out: &Output) -> Result<&Path> {
    std::fs::create_dir_all(&out.output).map_err(|e| AppError::io(&out.output, e))?;
    Ok(&out.output)
}

pub fn load_series(m: &MarketInput) -> Result<MarketSeries> {
    let raw = parse_market_csv(&m.input, &column_map(m.columns.as_deref())?)?;
    let base = match &m.base {
        Some(b) => parse_month(b)?,
        None => raw.last().map(|r| r.date).ok_or({
            AppError::Core(cape_core::Error::InsufficientData {
                what: "market rows",
                needed: 1,
                available: 0,
            })
        })?,
    };
    let mut series = MarketSeries::deflate(&raw, base)?;
    if let Some(path) = &m.ep_source {
        series = series.with_log_ep_source(&parse_log_ep_source(path)?);
    }
    Ok(series)
}

fn ingest(a: IngestArgs) -> Result<()> {
    let raw = parse_market_csv(&a.input, &column_map(a.columns.as_deref())?)?;
    let dir = output_dir(&a.out)?;
    formats::write_records(&dir.join("records.csv"), &raw)?;
    if a.out.summary {
        let first = raw.first().map(|r| r.date.to_string()).unwrap_or_default();
        let last = raw.last().map(|r| r.date.to_string()).unwrap_or_default();
        println!("{} months, {first} to {last}", raw.len());
    }
    Ok(())
}

fn derive(a: DeriveArgs) -> Result<()> {
    let series = load_series(&a.market)?;
    let dir = output_dir(&a.out)?;
    formats::write_derived(&dir.join("derived.csv"), &series)?;
    if a.out.summary {
        let defined = series.log_ep().iter().flatten().count();
        println!(
            "{} months, {defined} with log EP, base {}",
            series.len(),
            series.base_month()
        );
    }
    Ok(())
}

fn fit_record(series: &MarketSeries, r: &RegressionChoice) -> Result<FitRecord> {
    let coeffs = estimate_predictive_coefficients(series, r.horizon, r.mode)?;
    let sample = predictive_sample(series, r.horizon, r.mode, YieldComponent::Gross)?;
    Ok(FitRecord {
        horizon: r.horizon,
        mode: mode_name(r.mode).into(),
        first_month: series.dates()[sample.first_index].to_string(),
        gross: FitEntry::from(&coeffs.gross),
        price: FitEntry::from(&coeffs.price),
        dividend: FitEntry::from(&coeffs.dividend),
    })
}

fn regress(a: RegressArgs) -> Result<()> {
    let series = load_series(&a.market)?;
    let record = fit_record(&series, &a.regression)?;
    let dir = output_dir(&a.out)?;
    record.write(&dir.join("fit.toml"))?;
    if a.out.summary {
        let coeffs =
            estimate_predictive_coefficients(&series, a.regression.horizon, a.regression.mode)?;
        print!("{}", report::predictive_table(&coeffs, None));
    }
    Ok(())
}

fn bootstrap_result(
    series: &MarketSeries,
    r: &RegressionChoice,
    seed: u64,
    replications: usize,
) -> Result<(cape_core::bootstrap::BootstrapResult, BootstrapRecord)> {
    let sample = predictive_sample(series, r.horizon, r.mode, YieldComponent::Gross)?;
    let cfg = BootstrapConfig::new(seed).with_replications(replications);
    let result = run_bootstrap(&sample.y, &sample.x, &cfg)?;
    let record = BootstrapRecord {
        replications,
        seed,
        horizon: r.horizon,
        mode: mode_name(r.mode).into(),
        observed_beta_c: result.observed_beta_c,
        p_value: result.p_value,
        mirrored: result.mirrored,
        degenerate: result.degenerate,
        null_alpha: result.null_fit.alpha,
        null_theta: result.null_fit.theta,
        null_rho: result.null_fit.rho,
    };
    Ok((result, record))
}

fn bootstrap(a: BootstrapArgs) -> Result<()> {
    let seed = require_seed(a.seed)?;
    let series = load_series(&a.market)?;
    let (result, record) = bootstrap_result(&series, &a.regression, seed, a.replications)?;
    let dir = output_dir(&a.out)?;
    formats::write_bootstrap_samples(&dir.join("bootstrap_samples.csv"), &result)?;
    let text = toml::to_string(&record).map_err(|e| AppError::Config(e.to_string()))?;
    formats::write_text(&dir.join("bootstrap.toml"), &text)?;
    if a.out.summary {
        println!(
            "beta_c = {:.6e}, p = {:.4} over {} replicas",
            record.observed_beta_c, record.p_value, record.replications
        );
    }
    Ok(())
}

fn calibration_options(r: &RegressionChoice, window: usize, market: Market) -> CalibrationOptions {
    let offset: Affine = market.reference().drift_offset;
    CalibrationOptions {
        horizon: r.horizon,
        regression_mode: r.mode,
        window,
        offset_init: offset,
        ..CalibrationOptions::default()
    }
}

fn calibrate_cmd(a: CalibrateArgs) -> Result<()> {
    let series = load_series(&a.market)?;
    let options = calibration_options(&a.regression, a.windows, a.market_ref);
    let cal = calibrate(&series, &options)?;
    let params = cal.to_model_params()?;
    let dir = output_dir(&a.out)?;
    ParamFile::from_params(&params, a.units.into()).write(&dir.join("params.toml"))?;
    let table = report::calibration_table(&cal, &a.market_ref.reference());
    formats::write_text(&dir.join("calibration.txt"), &table)?;
    if a.out.summary {
        print!("{table}");
    }
    Ok(())
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let seed = require_seed(a.seed)?;
    let params = match &a.params {
        Some(path) => ParamFile::read(path)?.to_params()?,
        None => a.market.reference(),
    };
    params.validate()?;
    let starts = match &a.input {
        Some(path) => {
            let raw = parse_market_csv(path, &column_map(a.columns.as_deref())?)?;
            let base = raw.last().map(|r| r.date).unwrap_or(raw[0].date);
            let series = MarketSeries::deflate(&raw, base)?;
            let all = InitialConditions::all_from_series(&series);
            if a.all_starts {
                all
            } else {
                let chosen = match &a.start {
                    Some(s) => {
                        let month = parse_month(s)?;
                        all.into_iter()
                            .find(|c| c.date == Some(month))
                            .ok_or_else(|| {
                                AppError::Config(format!(
                                    "no complete initial conditions at {month}"
                                ))
                            })?
                    }
                    None => *all.last().ok_or({
                        AppError::Core(cape_core::Error::InsufficientData {
                            what: "months with complete initial conditions",
                            needed: 1,
                            available: 0,
                        })
                    })?,
                };
                vec![chosen]
            }
        }
        None => {
            let log_dp0 = match a.log_dp0 {
                Some(v) => v,
                None => params.log_dividend_level(a.log_ep0)?,
            };
            vec![InitialConditions::new(a.log_ep0, a.mu0, log_dp0)]
        }
    };
    if starts.is_empty() {
        return Err(AppError::Core(cape_core::Error::InsufficientData {
            what: "months with complete initial conditions",
            needed: 1,
            available: 0,
        }));
    }
    let config = ScenarioConfig {
        horizons: a.horizons.clone(),
        paths_per_start: a.replications,
        master_seed: seed,
    };
    let set = simulate(&params, &starts, &config)?;
    // band of the most recent start
    let last = starts.last().expect("non-empty starts");
    let b = band(
        &params,
        &a.horizons,
        last,
        a.z,
        CenterMode::Exact,
        BandTarget::Gross,
    )?;
    let dir = output_dir(&a.out)?;
    formats::write_scenarios(&dir.join("scenarios.csv"), &set)?;
    formats::write_band(&dir.join("band.csv"), &b)?;
    if a.out.summary {
        let coverage = scenario_coverage(&set, a.z, CenterMode::Exact, BandTarget::Gross)?;
        println!(
            "{} paths from {} start(s), {} horizons, band coverage {:.4}",
            set.n_paths(),
            starts.len(),
            a.horizons.len(),
            coverage
        );
    }
    Ok(())
}

fn validate_cmd(a: ValidateArgs) -> Result<()> {
    let result = validate::run(a.quick, a.seed);
    let table = result.table();
    print!("{table}");
    if a.out.summary || a.out.output != Path::new(".") {
        let dir = output_dir(&a.out)?;
        formats::write_text(&dir.join("validation.txt"), &table)?;
    }
    if result.all_passed() {
        Ok(())
    } else {
        Err(AppError::Failed("validation failed".into()))
    }
}

fn report_cmd(a: ReportArgs) -> Result<()> {
    let series = load_series(&a.market)?;
    let options = calibration_options(&a.regression, a.windows, a.market_ref);
    let cal = calibrate(&series, &options)?;
    let p_value = match a.seed {
        Some(seed) => Some(
            bootstrap_result(&series, &a.regression, seed, a.replications)?
                .0
                .p_value,
        ),
        None => None,
    };
    let mut text = report::predictive_table(&cal.predictive, p_value);
    text.push('\n');
    text.push_str(&report::calibration_table(&cal, &a.market_ref.reference()));
    let dir = output_dir(&a.out)?;
    formats::write_text(&dir.join("report.txt"), &text)?;
    if a.out.summary {
        print!("{text}");
    }
    Ok(())
}
