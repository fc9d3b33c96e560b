//! Descriptive statistics shared by the estimation modules.

use alloc::vec::Vec;

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased (n - 1) sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

/// Unbiased sample covariance of two equally long samples.
pub fn sample_covariance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() < 2 {
        return f64::NAN;
    }
    let (ma, mb) = (mean(a), mean(b));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (a.len() - 1) as f64
}

/// Linear-interpolation percentile (`q` in `[0, 1]`) of an unsorted sample.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    if sorted.is_empty() {
        return f64::NAN;
    }
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

pub(crate) fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let q = q.clamp(0.0, 1.0);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = libm::ceil(pos) as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Sample of window estimates summarized by its mean and the empirical
/// 16th/84th percentiles.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingEstimate {
    pub values: Vec<f64>,
    pub mean: f64,
    pub ci68: (f64, f64),
    pub window_length: usize,
    pub step: usize,
}

impl RollingEstimate {
    pub fn from_values(values: Vec<f64>, window_length: usize, step: usize) -> Self {
        let mean = mean(&values);
        let ci68 = (percentile(&values, 0.16), percentile(&values, 0.84));
        RollingEstimate {
            values,
            mean,
            ci68,
            window_length,
            step,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci68.0 <= value && value <= self.ci68.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 5.0);
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert!((percentile(&v, 0.16) - 1.64).abs() < 1e-12);
    }

    #[test]
    fn variance_of_known_sample() {
        let v = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert!((sample_variance(&v) - 32.0 / 7.0).abs() < 1e-12);
        assert!((sample_covariance(&v, &v) - 32.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn rolling_interval_is_ordered() {
        let r = RollingEstimate::from_values((0..100).map(|i| i as f64).collect(), 192, 1);
        assert!(r.ci68.0 <= r.ci68.1);
        assert!((r.mean - 49.5).abs() < 1e-12);
    }
}
