use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Sine integral `Si(x) = int_0^x sin(t)/t dt`: power series for small
/// arguments, continued fraction for `E_1(ix)` otherwise.
pub fn si(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < 2.0 {
        let x2 = ax * ax;
        let mut term = ax;
        let mut sum = ax;
        for k in 1..40 {
            term *= -x2 / ((2 * k) as f64 * (2 * k + 1) as f64);
            let add = term / (2 * k + 1) as f64;
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        let tiny = 1e-300;
        let mut b = Complex64::new(1.0, ax);
        let mut c = Complex64::new(1.0 / tiny, 0.0);
        let mut d = Complex64::new(1.0, 0.0) / b;
        let mut h = d;
        for i in 2..10_000 {
            let a = -((i - 1) * (i - 1)) as f64;
            b += 2.0;
            d = Complex64::new(1.0, 0.0) / (d * a + b);
            c = b + Complex64::new(a, 0.0) / c;
            let del = c * d;
            h *= del;
            if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
                break;
            }
        }
        h *= Complex64::new(ax.cos(), -ax.sin());
        FRAC_PI_2 + h.im
    };
    v.copysign(x)
}

/// Fejer density `(1/2pi) (sin(u/2) / (u/2))^2`, whose Fourier transform
/// is the triangle `(1 - |t|)_+`.
pub fn fejer_pdf(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        return 1.0 / (2.0 * PI);
    }
    let h = u / 2.0;
    (h.sin() / h).powi(2) / (2.0 * PI)
}

/// Distribution function of [`fejer_pdf`].
pub fn fejer_cdf(u: f64) -> f64 {
    let a = u.abs();
    if a == 0.0 {
        return 0.5;
    }
    let inner = if a < 1e-4 {
        // leading terms of the series of Si(a) - 2 sin^2(a/2)/a
        a / 2.0 - a * a * a / 72.0
    } else {
        si(a) - 2.0 * (a / 2.0).sin().powi(2) / a
    };
    0.5 + (inner / PI).copysign(u)
}

/// Mass of the scaled kernel `rho_scale(w) = rho(w / scale) / scale` on `[lo, hi]`.
pub fn fejer_mass(lo: f64, hi: f64, scale: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    (fejer_cdf(hi / scale) - fejer_cdf(lo / scale)).max(0.0)
}

/// `C_rho(eps)` making the upper smoothing bound tight: with `tail` the
/// kernel mass outside `[-1/eps, 1/eps]`, `C = tail / (1 - tail)`.
pub fn c_rho(eps: f64) -> f64 {
    let tail = 1.0 - fejer_mass(-1.0 / eps, 1.0 / eps, 1.0);
    tail / (1.0 - tail)
}

/// Finite union of closed intervals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalSet {
    pub intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    /// Sorts, drops empty pieces and merges overlapping ones.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidInput("interval endpoints must be finite".into()));
        }
        intervals.retain(|(a, b)| a <= b);
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(IntervalSet { intervals: merged })
    }

    pub fn indicator(&self, u: f64) -> f64 {
        if self.intervals.iter().any(|(a, b)| (*a..=*b).contains(&u)) {
            1.0
        } else {
            0.0
        }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Every interval widened (positive `eps`) or shrunk (negative `eps`).
    fn grow(&self, eps: f64) -> IntervalSet {
        IntervalSet::new(self.intervals.iter().map(|(a, b)| (a - eps, b + eps)).collect()).expect("finite")
    }
}

/// `(psi^+_eps, psi^-_eps)`: supremum and infimum of the indicator over
/// closed balls of radius `eps`.
pub fn smoothing_pair(psi: &IntervalSet, eps: f64) -> Result<(IntervalSet, IntervalSet)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    Ok((psi.grow(eps), psi.grow(-eps)))
}

/// Convolution of an interval indicator with the scaled Fejer kernel,
/// restricted to kernel arguments in `window` (use infinite bounds for the
/// full convolution).
fn convolve_fejer(set: &IntervalSet, u: f64, scale: f64, window: (f64, f64)) -> f64 {
    set.intervals
        .iter()
        .map(|(a, b)| {
            // set contains u - w  <=>  w in [u - b, u - a]
            fejer_mass((u - b).max(window.0), (u - a).min(window.1), scale)
        })
        .sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub eps: f64,
    pub c_rho: f64,
    pub points: usize,
    /// Number of grid points where a bound fails.
    pub violations: usize,
    /// Smallest `upper - psi` and `psi - lower` over the grid.
    pub min_upper_slack: f64,
    pub min_lower_slack: f64,
}

/// Pointwise check of
/// `psi^-_eps * rho_{eps^2} - int_{|w| >= eps} psi^-_eps(u - w) rho_{eps^2}(w) dw <= psi(u) <= (1 + C_rho(eps)) psi^+_eps * rho_{eps^2}(u)`
/// on `u_grid`, with `rho` the Fejer kernel.
pub fn smoothing_sandwich_check(psi: &IntervalSet, eps: f64, u_grid: &[f64]) -> Result<SandwichReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput("eps must lie in (0, 1)".into()));
    }
    let (plus, minus) = smoothing_pair(psi, eps)?;
    let c = c_rho(eps);
    let scale = eps * eps;
    let mut violations = 0;
    let mut min_upper = f64::INFINITY;
    let mut min_lower = f64::INFINITY;
    for &u in u_grid {
        let p = psi.indicator(u);
        let upper = (1.0 + c) * convolve_fejer(&plus, u, scale, (f64::NEG_INFINITY, f64::INFINITY));
        // the open window |w| < eps has the same kernel mass as the closed one
        let lower = convolve_fejer(&minus, u, scale, (-eps, eps));
        let (su, sl) = (upper - p, p - lower);
        if su < -1e-12 || sl < -1e-12 {
            violations += 1;
        }
        min_upper = min_upper.min(su);
        min_lower = min_lower.min(sl);
    }
    Ok(SandwichReport { eps, c_rho: c, points: u_grid.len(), violations, min_upper_slack: min_upper, min_lower_slack: min_lower })
}

/// Triangular density `(1/e) (1 - |u|/e)` on `[-e, e]`.
pub fn triangular_pdf(u: f64, e: f64) -> f64 {
    if u.abs() >= e {
        0.0
    } else {
        (1.0 - u.abs() / e) / e
    }
}

fn triangular_cdf(u: f64, e: f64) -> f64 {
    let x = (u / e).clamp(-1.0, 1.0);
    if x <= 0.0 {
        0.5 * (1.0 + x) * (1.0 + x)
    } else {
        1.0 - 0.5 * (1.0 - x) * (1.0 - x)
    }
}

/// `(chi^+_e * rho_bar_e)(u)` for an interval-union indicator `chi`.
pub fn triangular_smoothing(chi: &IntervalSet, e: f64, u: f64) -> f64 {
    chi.grow(e)
        .intervals
        .iter()
        .map(|(a, b)| (triangular_cdf(u - a, e) - triangular_cdf(u - b, e)).max(0.0))
        .sum::<f64>()
        .min(1.0)
}

/// Violations of `chi <= chi^+_e * rho_bar_e <= chi^+_{2e}` on `u_grid`.
pub fn triangular_sandwich_violations(chi: &IntervalSet, e: f64, u_grid: &[f64]) -> usize {
    let wide = chi.grow(2.0 * e);
    u_grid
        .iter()
        .filter(|&&u| {
            let v = triangular_smoothing(chi, e, u);
            v < chi.indicator(u) - 1e-12 || v > wide.indicator(u) + 1e-12
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn si_reference_values() {
        // Abramowitz and Stegun, table 5.1
        assert!((si(1.0) - 0.946_083_070_367_183).abs() < 1e-14);
        assert!((si(5.0) - 1.549_931_244_944_674).abs() < 1e-13);
        assert!((si(-2.0) + 1.605_412_976_802_695).abs() < 1e-13);
        assert!((si(1e4) - FRAC_PI_2).abs() < 1e-3);
        assert_eq!(si(0.0), 0.0);
    }

    #[test]
    fn fejer_cdf_limits() {
        assert_eq!(fejer_cdf(0.0), 0.5);
        assert!(fejer_cdf(1e6) > 1.0 - 1e-6);
        assert!(fejer_cdf(-1e6) < 1e-6);
        assert!((fejer_cdf(3.0) + fejer_cdf(-3.0) - 1.0).abs() < 1e-15);
        // continuity across the small-argument branch
        let jump = fejer_cdf(1.01e-4) - fejer_cdf(0.99e-4);
        assert!((jump - 2e-6 / (2.0 * PI)).abs() < 1e-13);
    }

    #[test]
    fn smoothing_pair_of_interval() {
        let psi = IntervalSet::new(vec![(-1.0, 1.0)]).unwrap();
        let (p, m) = smoothing_pair(&psi, 0.25).unwrap();
        assert_eq!(p.intervals, vec![(-1.25, 1.25)]);
        assert_eq!(m.intervals, vec![(-0.75, 0.75)]);
        let narrow = IntervalSet::new(vec![(0.0, 0.1)]).unwrap();
        assert!(smoothing_pair(&narrow, 0.1).unwrap().1.is_empty());
    }

    #[test]
    fn c_rho_vanishes() {
        assert!(c_rho(0.5) > c_rho(0.1));
        assert!(c_rho(0.01) < 1e-2);
    }

    #[test]
    fn triangular_sandwich() {
        let chi = IntervalSet::new(vec![(-0.5, 0.3), (1.0, 2.0)]).unwrap();
        let grid: Vec<f64> = (0..4001).map(|i| -3.0 + i as f64 * 0.0015).collect();
        assert_eq!(triangular_sandwich_violations(&chi, 0.1, &grid), 0);
    }
}
