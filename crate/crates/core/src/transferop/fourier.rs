use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::grid::ProjGrid;
use super::operator::{build_operator, build_perturbed};
use super::spectral::dominant_eigen;
use crate::ensemble::MatrixEnsemble;
use crate::error::{Error, Result};
use crate::montecarlo::map_replicas;
use crate::stats;

/// Default limit on the number of quadrature nodes in `t`.
pub const DEFAULT_NODE_BUDGET: usize = 1 << 20;

/// `P_{it}^n phi` on the grid.
pub fn perturbed_power(
    ensemble: &MatrixEnsemble,
    grid: &ProjGrid,
    t: f64,
    lambda: f64,
    n: usize,
    phi: &[f64],
) -> Result<Vec<Complex64>> {
    if phi.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: phi.len() });
    }
    let a = build_perturbed(ensemble, grid, t, lambda)?;
    let mut cur: Vec<Complex64> = phi.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let mut tmp = vec![Complex64::default(); cur.len()];
    for _ in 0..n {
        a.apply_into(&cur, &mut tmp);
        std::mem::swap(&mut cur, &mut tmp);
    }
    Ok(cur)
}

/// A compactly supported test function `psi` on `[-support, support]`.
pub struct Bump<'a> {
    pub support: f64,
    pub f: &'a (dyn Fn(f64) -> f64 + Sync),
}

/// The triangle `(1 - |t| / half_width)_+`.
pub fn triangle(half_width: f64) -> impl Fn(f64) -> f64 + Sync {
    move |t: f64| (1.0 - t.abs() / half_width).max(0.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierCheck {
    pub n: usize,
    pub l: f64,
    pub value: f64,
    /// Imaginary part of the normalized integral (zero for real symmetric data).
    pub value_imag: f64,
    pub target: f64,
    pub error: f64,
    pub step: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug)]
pub struct FourierSetup<'a> {
    pub ensemble: &'a MatrixEnsemble,
    pub grid: &'a ProjGrid,
    /// Grid node at which `P_{it}^n phi` is evaluated.
    pub x_index: usize,
    pub phi: &'a [f64],
    pub lambda: f64,
    pub sigma: f64,
    pub node_budget: usize,
}

fn is_isometric(ensemble: &MatrixEnsemble) -> bool {
    ensemble.matrices().iter().all(|g| (g.norm() - 1.0).abs() < 1e-12 && (g.inverse_norm() - 1.0).abs() < 1e-12)
}

/// Composite Simpson evaluation of
/// `sigma sqrt(n) e^{n l^2 / (2 sigma^2)} int e^{-itln} P_{it}^n phi(x) psi(t) dt`
/// against `sqrt(2 pi) nu(phi) psi(0)`.
pub fn llt_fourier_check(setup: &FourierSetup, psi: &Bump, n: usize, l: f64) -> Result<FourierCheck> {
    let FourierSetup { ensemble, grid, x_index, phi, lambda, sigma, node_budget } = *setup;
    if !(sigma > 0.0) || is_isometric(ensemble) {
        return Err(Error::DegenerateSigma(if is_isometric(ensemble) { 0.0 } else { sigma }));
    }
    if n == 0 || l.abs() > 1.0 / (n as f64).sqrt() {
        return Err(Error::InvalidInput(format!("need n >= 1 and |l| <= 1/sqrt(n), got n={n}, l={l}")));
    }
    if x_index >= grid.len() || phi.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: phi.len() });
    }
    let nf = n as f64;
    let max_step = PI / (8.0 * (nf * l.abs()).max(nf * sigma));
    let big_t = psi.support;
    // intervals: a multiple of 4 so that t = 0 is a panel boundary
    let mut intervals = ((2.0 * big_t / max_step).ceil() as usize).max(4);
    intervals = intervals.div_ceil(4) * 4;
    if intervals + 1 > node_budget {
        return Err(Error::UnresolvedPhase { needed: intervals + 1, budget: node_budget });
    }
    let step = 2.0 * big_t / intervals as f64;
    let integrand: Vec<Complex64> = map_replicas(intervals + 1, |k| {
        let t = -big_t + k as f64 * step;
        let w = (psi.f)(t);
        if w == 0.0 {
            return Complex64::default();
        }
        let v = perturbed_power(ensemble, grid, t, lambda, n, phi).expect("validated inputs")[x_index];
        v * Complex64::from_polar(w, -t * l * nf)
    });
    let mut sum = integrand[0] + integrand[intervals];
    for (k, v) in integrand.iter().enumerate().take(intervals).skip(1) {
        sum += v * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    let integral = sum * (step / 3.0);
    let norm = sigma * nf.sqrt() * (nf * l * l / (2.0 * sigma * sigma)).exp();
    let value = integral * norm;
    let nu = dominant_eigen(&build_operator(ensemble, grid, 0.0)?)?;
    let target = (2.0 * PI).sqrt() * nu.nu_of(phi) * (psi.f)(0.0);
    Ok(FourierCheck {
        n,
        l,
        value: value.re,
        value_imag: value.im,
        target,
        error: (value.re - target).abs(),
        step,
        nodes: intervals + 1,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierSweep {
    pub checks: Vec<FourierCheck>,
    /// Slope of `log error` against `log n`.
    pub exponent: f64,
    pub exponent_se: f64,
    /// Fitted constant `C` of the envelope `C n^{exponent}`.
    pub constant: f64,
}

pub fn llt_fourier_sweep(setup: &FourierSetup, psi: &Bump, ns: &[usize], l: f64) -> Result<FourierSweep> {
    if ns.len() < 2 {
        return Err(Error::InvalidInput("sweep needs at least two values of n".into()));
    }
    let checks = ns.iter().map(|&n| llt_fourier_check(setup, psi, n, l)).collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = checks.iter().map(|c| (c.n as f64).ln()).collect();
    let ys: Vec<f64> = checks.iter().map(|c| c.error.max(1e-300).ln()).collect();
    let fit = stats::ols(&xs, &ys);
    Ok(FourierSweep { checks, exponent: fit.slope, exponent_se: fit.slope_se, constant: fit.intercept.exp() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projgeom::Matrix;

    #[test]
    fn zero_frequency_keeps_constants() {
        let grid = ProjGrid::angle(32).unwrap();
        let e = MatrixEnsemble::two_matrix();
        let out = perturbed_power(&e, &grid, 0.0, 0.0, 7, &vec![1.0; 32]).unwrap();
        assert!(out.iter().all(|c| (c.re - 1.0).abs() < 1e-13 && c.im == 0.0));
    }

    #[test]
    fn modulus_bounded_by_sup() {
        let grid = ProjGrid::angle(32).unwrap();
        let e = MatrixEnsemble::two_matrix();
        let phi: Vec<f64> = (0..32).map(|i| (i as f64 * 0.4).sin()).collect();
        let sup = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for t in [0.3, 1.7, -4.0] {
            let out = perturbed_power(&e, &grid, t, 0.1, 5, &phi).unwrap();
            assert!(out.iter().all(|c| c.norm() <= sup + 1e-12));
        }
    }

    #[test]
    fn isometries_refused() {
        let grid = ProjGrid::angle(16).unwrap();
        let e = MatrixEnsemble::point_mass(Matrix::rotation(0.5));
        let phi = vec![1.0; 16];
        let tri = triangle(1.0);
        let setup = FourierSetup {
            ensemble: &e,
            grid: &grid,
            x_index: 0,
            phi: &phi,
            lambda: 0.0,
            sigma: 1.0,
            node_budget: DEFAULT_NODE_BUDGET,
        };
        assert!(matches!(
            llt_fourier_check(&setup, &Bump { support: 1.0, f: &tri }, 8, 0.0),
            Err(Error::DegenerateSigma(_))
        ));
    }

    #[test]
    fn budget_enforced() {
        let grid = ProjGrid::angle(16).unwrap();
        let e = MatrixEnsemble::two_matrix();
        let phi = vec![1.0; 16];
        let tri = triangle(1.0);
        let setup =
            FourierSetup { ensemble: &e, grid: &grid, x_index: 0, phi: &phi, lambda: 0.0, sigma: 0.7, node_budget: 10 };
        assert!(matches!(
            llt_fourier_check(&setup, &Bump { support: 1.0, f: &tri }, 64, 0.0),
            Err(Error::UnresolvedPhase { .. })
        ));
    }
}
