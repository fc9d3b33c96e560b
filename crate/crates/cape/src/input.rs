//! Reading monthly market files.

use std::path::Path;

use cape_core::market::{prepare_records, RawMonthlyRecord, YearMonth};
use serde::Deserialize;

use crate::error::{AppError, Result};

/// Header names of the mandatory columns. Defaults follow the layout of
/// the widely used public long-run S&P file.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub date: String,
    pub price: String,
    pub dividend: String,
    pub earnings: String,
    pub cpi: String,
    /// Lines to drop before the header row.
    pub skip_rows: usize,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            date: "Date".into(),
            price: "P".into(),
            dividend: "D".into(),
            earnings: "E".into(),
            cpi: "CPI".into(),
            skip_rows: 0,
        }
    }
}

impl ColumnMap {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        toml::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
    }
}

fn open(path: &Path, skip_rows: usize) -> Result<csv::Reader<std::io::Cursor<String>>> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let body: String = text.split_inclusive('\n').skip(skip_rows).collect();
    Ok(csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::Cursor::new(body)))
}

fn find_column(
    headers: &csv::StringRecord,
    path: &Path,
    column: &'static str,
    header: &str,
) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == header)
        .or_else(|| headers.iter().position(|h| h.eq_ignore_ascii_case(header)))
        .ok_or_else(|| AppError::Schema {
            path: path.to_path_buf(),
            column,
            header: header.to_string(),
        })
}

struct Cells<'a> {
    path: &'a Path,
    row: usize,
    record: &'a csv::StringRecord,
    headers: &'a csv::StringRecord,
}

impl Cells<'_> {
    fn error(&self, index: usize, reason: impl Into<String>) -> AppError {
        AppError::Parse {
            path: self.path.to_path_buf(),
            row: self.row,
            column: self.headers.get(index).unwrap_or("?").to_string(),
            reason: reason.into(),
        }
    }

    fn optional(&self, index: usize) -> Result<Option<f64>> {
        match self.record.get(index).unwrap_or("") {
            "" => Ok(None),
            cell => cell
                .parse::<f64>()
                .map(Some)
                .map_err(|_| self.error(index, format!("`{cell}` is not a number"))),
        }
    }

    fn required(&self, index: usize) -> Result<f64> {
        self.optional(index)?
            .ok_or_else(|| self.error(index, "value is missing"))
    }
}

/// Reads price, dividend, earnings and CPI columns. Rows with an empty date
/// cell are ignored; the result is sorted and checked for month gaps.
pub fn parse_market_csv(path: &Path, columns: &ColumnMap) -> Result<Vec<RawMonthlyRecord>> {
    let mut reader = open(path, columns.skip_rows)?;
    let headers = reader
        .headers()
        .map_err(|source| AppError::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    let date_col = find_column(&headers, path, "date", &columns.date)?;
    let price_col = find_column(&headers, path, "price", &columns.price)?;
    let dividend_col = find_column(&headers, path, "dividend", &columns.dividend)?;
    let earnings_col = find_column(&headers, path, "earnings", &columns.earnings)?;
    let cpi_col = find_column(&headers, path, "cpi", &columns.cpi)?;

    let mut records = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|source| AppError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        // header is line 1 of the data block
        let row = columns.skip_rows + i + 2;
        let cells = Cells {
            path,
            row,
            record: &record,
            headers: &headers,
        };
        let date_cell = record.get(date_col).unwrap_or("");
        if date_cell.is_empty() {
            continue;
        }
        let date: YearMonth = date_cell
            .parse()
            .map_err(|e| cells.error(date_col, format!("{e}")))?;
        records.push(RawMonthlyRecord {
            date,
            nominal_price: cells.required(price_col)?,
            nominal_dividend: cells.optional(dividend_col)?,
            nominal_earnings: cells.optional(earnings_col)?,
            cpi: cells.required(cpi_col)?,
        });
    }
    Ok(prepare_records(records)?)
}

/// Secondary log EP values keyed by month: a CSV whose first two columns
/// are a date and a log EP value.
pub fn parse_log_ep_source(path: &Path) -> Result<Vec<(YearMonth, f64)>> {
    let mut reader = open(path, 0)?;
    let headers = reader
        .headers()
        .map_err(|source| AppError::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|source| AppError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let cells = Cells {
            path,
            row: i + 2,
            record: &record,
            headers: &headers,
        };
        let date_cell = record.get(0).unwrap_or("");
        if date_cell.is_empty() {
            continue;
        }
        let date: YearMonth = date_cell
            .parse()
            .map_err(|e| cells.error(0, format!("{e}")))?;
        if let Some(v) = cells.optional(1)? {
            out.push((date, v));
        }
    }
    Ok(out)
}
