//! Small statistical helpers shared by the estimators.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Number of batches used for batch-means intervals.
pub const BATCHES: usize = 30;

/// A point estimate with a 95% confidence half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
}

impl Estimate {
    pub fn lo(&self) -> f64 {
        self.value - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.value + self.half_width
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Batch-means interval: the values are split, in order, into `batches`
/// contiguous groups whose means are treated as independent.
pub fn batch_means(values: &[f64], batches: usize) -> Estimate {
    let n = values.len();
    let value = mean(values);
    let b = batches.min(n);
    if b < 2 {
        return Estimate { value, half_width: f64::INFINITY };
    }
    let mut means = Vec::with_capacity(b);
    for k in 0..b {
        let lo = k * n / b;
        let hi = (k + 1) * n / b;
        means.push(mean(&values[lo..hi]));
    }
    let m = mean(&means);
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (b - 1) as f64).expect("valid dof").inverse_cdf(0.975);
    Estimate { value, half_width: t * (var / b as f64).sqrt() }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Weighted least-squares line `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
}

/// Fits a line with weights `w` (inverse variances when known). If
/// `known_variance` is false the standard errors are rescaled by the
/// residual variance.
pub fn line_fit(x: &[f64], y: &[f64], w: &[f64], known_variance: bool) -> LineFit {
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        sxx += w[i] * (x[i] - xm).powi(2);
        sxy += w[i] * (x[i] - xm) * (y[i] - ym);
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let mut scale = 1.0;
    if !known_variance && x.len() > 2 {
        let rss: f64 = (0..x.len()).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
        scale = rss / (x.len() - 2) as f64;
    }
    let slope_se = (scale / sxx).sqrt();
    let intercept_se = (scale * (1.0 / sw + xm * xm / sxx)).sqrt();
    LineFit { slope, intercept, slope_se, intercept_se }
}

pub fn ols(x: &[f64], y: &[f64]) -> LineFit {
    line_fit(x, y, &vec![1.0; x.len()], false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_p() {
        let (lo, hi) = wilson(30, 100, Z95);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!((lo - 0.2189).abs() < 1e-3 && (hi - 0.3958).abs() < 1e-3);
        assert_eq!(wilson(0, 10, Z95).0, 0.0);
    }

    #[test]
    fn exact_line_recovered() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = ols(&x, &y);
        assert!((f.slope + 0.5).abs() < 1e-12 && (f.intercept - 2.0).abs() < 1e-12);
        assert!(f.slope_se < 1e-10);
    }

    #[test]
    fn batch_means_constant_has_zero_width() {
        let e = batch_means(&[1.5; 300], BATCHES);
        assert_eq!(e.value, 1.5);
        assert_eq!(e.half_width, 0.0);
    }
}
