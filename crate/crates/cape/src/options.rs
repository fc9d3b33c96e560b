//! Parsing of command-line values.

use cape_core::calibration::SamplingMode;
use cape_core::scenario::HorizonGrid;

/// Accepts `a..b` (inclusive), `a..b:step` and comma-separated lists.
pub fn parse_horizons(text: &str) -> Result<HorizonGrid, String> {
    let text = text.trim();
    let bad = |what: &str| format!("invalid horizon {what} in `{text}`");
    let grid = if let Some((range, step)) = text.split_once("..") {
        let (end, step) = match step.split_once(':') {
            Some((end, step)) => (end, step.trim().parse::<u32>().map_err(|_| bad("step"))?),
            None => (step, 1),
        };
        let start = range.trim().parse::<u32>().map_err(|_| bad("start"))?;
        let end = end.trim().parse::<u32>().map_err(|_| bad("end"))?;
        HorizonGrid::range(start, end, step)
    } else {
        let values = text
            .split(',')
            .map(|v| v.trim().parse::<u32>().map_err(|_| bad("value")))
            .collect::<Result<Vec<_>, _>>()?;
        HorizonGrid::new(values)
    };
    grid.map_err(|e| e.to_string())
}

pub fn parse_mode(text: &str) -> Result<SamplingMode, String> {
    match text
        .trim()
        .to_ascii_lowercase()
        .replace(['-', '_'], "")
        .as_str()
    {
        "overlapping" => Ok(SamplingMode::Overlapping),
        "nonoverlapping" => Ok(SamplingMode::NonOverlapping),
        other => Err(format!(
            "unknown mode `{other}` (overlapping | nonoverlapping)"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_forms() {
        assert_eq!(parse_horizons("24..192").unwrap().len(), 169);
        assert_eq!(
            parse_horizons("24..192:24").unwrap().as_slice(),
            &[24, 48, 72, 96, 120, 144, 168, 192]
        );
        assert_eq!(
            parse_horizons("120, 12,60").unwrap().as_slice(),
            &[12, 60, 120]
        );
        assert_eq!(parse_horizons("36").unwrap().as_slice(), &[36]);
        assert!(parse_horizons("0..4").is_err());
        assert!(parse_horizons("a..b").is_err());
        assert!(parse_horizons("10..5").is_err());
    }

    #[test]
    fn modes() {
        assert_eq!(
            parse_mode("overlapping").unwrap(),
            SamplingMode::Overlapping
        );
        assert_eq!(
            parse_mode("non-overlapping").unwrap(),
            SamplingMode::NonOverlapping
        );
        assert!(parse_mode("weekly").is_err());
    }
}
