use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cape::formats::{write_records, ParamFile, Units};
use cape_core::dynamics::ModelParams;
use cape_core::market::{RawMonthlyRecord, YearMonth};
use cape_core::rng::{stream_rng, GaussianNoise};
use cape_core::scenario::{synthetic_market, InitialConditions};

fn cape(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cape"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

/// A model-generated market written as a nominal file with unit CPI.
fn synthetic_file(dir: &Path, months: usize) -> PathBuf {
    let params = ModelParams::sp_reference();
    let start = InitialConditions::new(-2.9, 0.0, params.log_dividend_level(-2.9).unwrap());
    let series = synthetic_market(
        &params,
        &start,
        YearMonth::new(1881, 1).unwrap(),
        120,
        months,
        &mut GaussianNoise::new(stream_rng(11, 0)),
    )
    .unwrap();
    let records: Vec<RawMonthlyRecord> = (0..series.len())
        .map(|t| RawMonthlyRecord {
            date: series.dates()[t],
            nominal_price: series.real_price()[t],
            nominal_dividend: series.real_dividend()[t].map(|d| 12.0 * d),
            nominal_earnings: series.real_earnings()[t],
            cpi: 1.0,
        })
        .collect();
    let path = dir.join("market.csv");
    write_records(&path, &records).unwrap();
    path
}

#[test]
fn derive_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    std::fs::write(
        &input,
        "Date,P,D,E,CPI\n2000.01,100,2.4,5,1\n2000.02,110,2.4,5,1.1\n2000.03,99,2.4,5,1\n",
    )
    .unwrap();
    let out = cape(&["derive", "--input", s(&input), "--output", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(dir.path().join("derived.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "date,P,D,E,CAPE,logEP,logDP,H");
    assert_eq!(lines.len(), 4);
    let h: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert!(!h[0].is_empty() && !h[1].is_empty());
    assert!(h[2].is_empty());
    // base is the last month, CPI 1: real P at t=1 is 100
    let first_h: f64 = h[0].parse().unwrap();
    let expected = ((110.0 / 1.1 + 0.2) / 100.0_f64).ln();
    assert!(
        (first_h - expected).abs() < 1e-12,
        "{first_h} vs {expected}"
    );
    // ten years are needed for the earnings average
    assert!(lines[1].contains(",,,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = cape(&["derive", "--input", s(&missing), "--output", s(dir.path())]);
    assert_eq!(code(&out), 2);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "Date,P,D,E,CPI\n2000.01,x,1,1,1\n").unwrap();
    let out = cape(&["derive", "--input", s(&bad), "--output", s(dir.path())]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    let gap = dir.path().join("gap.csv");
    std::fs::write(&gap, "Date,P,D,E,CPI\n2000.01,1,1,1,1\n2000.03,1,1,1,1\n").unwrap();
    assert_eq!(code(&cape(&["derive", "--input", s(&gap)])), 3);

    let out = cape(&["simulate", "--output", s(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));

    let mut file = ParamFile::from_params(&ModelParams::sp_reference(), Units::Table);
    file.gamma = 0.5;
    file.kappa = 1000.0;
    let params = dir.path().join("params.toml");
    file.write(&params).unwrap();
    let out = cape(&[
        "simulate",
        "--params",
        s(&params),
        "--seed",
        "1",
        "--output",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 4);

    assert_eq!(
        code(&cape(&["simulate", "--seed", "1", "--horizons", "0..4"])),
        2
    );
}

#[test]
fn simulate_is_reproducible_and_shaped() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = cape(&[
            "simulate",
            "--seed",
            "42",
            "--replications",
            "50",
            "--horizons",
            "12..60:12",
            "--output",
            s(&out_dir),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        (
            read(out_dir.join("scenarios.csv")),
            read(out_dir.join("band.csv")),
        )
    };
    let (a, band_a) = run("a");
    let (b, band_b) = run("b");
    assert_eq!(a, b);
    assert_eq!(band_a, band_b);
    assert_eq!(a.lines().count(), 1 + 50 * 5);
    assert!(a.starts_with("path,scenario,start,horizon,logEP0,yield,price_yield\n"));
    assert!(band_a.starts_with("horizon,center,low,high\n"));
    assert_eq!(band_a.lines().count(), 6);
}

#[test]
fn pipeline_on_synthetic_market() {
    let dir = tempfile::tempdir().unwrap();
    let input = synthetic_file(dir.path(), 1200);
    let out_dir = dir.path().join("out");
    let o = s(&out_dir);
    let i = s(&input);

    let out = cape(&["ingest", "--input", i, "--output", o, "--summary"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("1320 months"));
    assert_eq!(read(out_dir.join("records.csv")), read(&input));

    let out = cape(&["regress", "--input", i, "--output", o]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let fit = read(out_dir.join("fit.toml"));
    assert!(fit.contains("[gross]") && fit.contains("beta_c"));
    assert!(fit.contains("mode = \"nonoverlapping\""));

    let boot = |sub: &str| {
        let d = dir.path().join(sub);
        let out = cape(&[
            "bootstrap",
            "--input",
            i,
            "--seed",
            "9",
            "--replications",
            "300",
            "--output",
            s(&d),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        (
            read(d.join("bootstrap_samples.csv")),
            read(d.join("bootstrap.toml")),
        )
    };
    let first = boot("b1");
    assert_eq!(first, boot("b2"));
    assert_eq!(first.0.lines().count(), 301);
    assert_eq!(code(&cape(&["bootstrap", "--input", i])), 2);

    let out = cape(&[
        "calibrate",
        "--input",
        i,
        "--output",
        o,
        "--mode",
        "overlapping",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let params = out_dir.join("params.toml");
    let file = ParamFile::read(&params).unwrap();
    assert_eq!(file.units, Units::Table);
    file.to_params().unwrap();

    let out = cape(&[
        "simulate",
        "--params",
        s(&params),
        "--input",
        i,
        "--seed",
        "3",
        "--replications",
        "20",
        "--horizons",
        "24,120",
        "--output",
        o,
        "--summary",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let scen = read(out_dir.join("scenarios.csv"));
    assert_eq!(scen.lines().count(), 1 + 20 * 2);
    assert!(scen.lines().nth(1).unwrap().contains("1990.12"));

    let out = cape(&[
        "report",
        "--input",
        i,
        "--seed",
        "5",
        "--replications",
        "200",
        "--output",
        o,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read(out_dir.join("report.txt"));
    assert!(report.contains("p(boot)") && report.contains("theta_d"));
}

#[test]
fn quick_validation_passes() {
    let out = cape(&["validate", "--quick"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 failed"));
}
