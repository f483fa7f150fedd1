//! Mass of level sets, hyperplanes and algebraic sets under empirical
//! stationary measures, with a heuristic zero/one verdict.
//!
//! Band masses are measured on a decreasing sequence of half-widths `h` and
//! fitted by `mass(h) = a + b h^c` with `a, b >= 0`; `a` estimates the mass
//! of the limiting set. The verdict is "one" when `a >= 0.99`, "zero" when
//! `a <= 0.01` and the masses decay like a positive power of `h`, and
//! "inconclusive" otherwise or when the measure has fewer than `10^4`
//! points.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasure;
use crate::projgeom::{delta, dist, DualProjPoint, ProjPoint};
use crate::stats::{self, Z95};

pub const MIN_POINTS_FOR_VERDICT: usize = 10_000;
pub const ATOM_ONE: f64 = 0.99;
pub const ATOM_ZERO: f64 = 0.01;
/// Atoms lighter than this are ignored by [`choose_offset`].
pub const ATOM_DETECTION: f64 = 0.01;

/// Smallest exponent `c` tried by [`fit_atom`]; below it `h^c` is nearly
/// flat over the default sequence and trades off against the atom.
pub const MIN_EXPONENT: f64 = 0.25;

/// `0.1 / 2^k`, `k = 0..8`.
pub fn default_h_sequence() -> Vec<f64> {
    (0..8).map(|k| 0.1 / f64::powi(2.0, k)).collect()
}

fn check_sequence(hs: &[f64]) -> Result<()> {
    if hs.is_empty() {
        return Err(Error::InvalidInput("h-sequence is empty".into()));
    }
    if hs.iter().any(|h| !(h.is_finite() && *h > 0.0)) || hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("h-sequence must be positive and strictly decreasing".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelSetQuery {
    pub y: DualProjPoint,
    /// Level of `log delta(y, x)`.
    pub t: f64,
    pub hs: Vec<f64>,
}

impl LevelSetQuery {
    pub fn new(y: DualProjPoint, t: f64, hs: Vec<f64>) -> Result<Self> {
        if !(t.is_finite() && t <= 0.0) {
            return Err(Error::InvalidInput(format!("level t = {t} must be finite and nonpositive")));
        }
        check_sequence(&hs)?;
        Ok(LevelSetQuery { y, t, hs })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Zero,
    One,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct AtomFit {
    pub atom: f64,
    /// 95% interval for the atom.
    pub atom_ci: (f64, f64),
    pub scale: f64,
    pub exponent: f64,
    /// Sum of squared log residuals.
    pub objective: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MassCurve {
    pub hs: Vec<f64>,
    pub masses: Vec<f64>,
    /// Wilson intervals using the effective sample size of the weights.
    pub ci: Vec<(f64, f64)>,
    pub fit: AtomFit,
    pub verdict: Verdict,
    pub points: usize,
}

/// Nonnegative weighted least squares for `m ~ a + b u` with relative
/// weights `1/m^2`.
fn nonneg_line(u: &[f64], m: &[f64]) -> (f64, f64, f64) {
    let w: Vec<f64> = m.iter().map(|v| 1.0 / (v * v)).collect();
    let sw: f64 = w.iter().sum();
    let su: f64 = w.iter().zip(u).map(|(w, u)| w * u).sum();
    let sm: f64 = w.iter().zip(m).map(|(w, m)| w * m).sum();
    let suu: f64 = w.iter().zip(u).map(|(w, u)| w * u * u).sum();
    let sum: f64 = w.iter().zip(u).zip(m).map(|((w, u), m)| w * u * m).sum();
    let det = sw * suu - su * su;
    let (mut a, mut b) = if det.abs() > 1e-300 {
        ((suu * sm - su * sum) / det, (sw * sum - su * sm) / det)
    } else {
        (sm / sw, 0.0)
    };
    if a < 0.0 {
        a = 0.0;
        b = if suu > 0.0 { sum / suu } else { 0.0 };
    }
    if b < 0.0 {
        b = 0.0;
        a = sm / sw;
    }
    let a_var = if det.abs() > 1e-300 { suu / det } else { 1.0 / sw };
    (a, b.max(0.0), a_var)
}

/// Fits `mass(h) = a + b h^c` by minimizing squared log residuals over
/// `c >= MIN_EXPONENT` (grid search then golden refinement), solving for `(a, b)` at each
/// `c`. Zero masses are left out of the objective.
pub fn fit_atom(hs: &[f64], masses: &[f64]) -> AtomFit {
    let pts: Vec<(f64, f64)> = hs.iter().zip(masses).filter(|(_, m)| **m > 0.0).map(|(h, m)| (*h, *m)).collect();
    if pts.is_empty() {
        return AtomFit { atom: 0.0, atom_ci: (0.0, 0.0), scale: 0.0, exponent: f64::INFINITY, objective: 0.0 };
    }
    let m: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let eval = |c: f64| {
        let u: Vec<f64> = pts.iter().map(|p| p.0.powf(c)).collect();
        let (a, b, a_var) = nonneg_line(&u, &m);
        let obj: f64 = u
            .iter()
            .zip(&m)
            .map(|(u, m)| {
                let f = (a + b * u).max(1e-300);
                (m.ln() - f.ln()).powi(2)
            })
            .sum();
        (obj, a, b, a_var)
    };
    let grid: Vec<f64> = (0..=75).map(|k| MIN_EXPONENT + 0.05 * k as f64).collect();
    let best = grid
        .iter()
        .copied()
        .min_by(|x, y| eval(*x).0.total_cmp(&eval(*y).0))
        .expect("non-empty grid");
    let c = crate::transferop::spectral::golden_min(|c| eval(c).0, (best - 0.05).max(MIN_EXPONENT), best + 0.05);
    let (objective, a, b, a_var) = eval(c);
    // residual scale of the relative-weighted fit
    let dof = (pts.len() as f64 - 3.0).max(1.0);
    let se = (a_var * objective / dof).sqrt() * a.max(m.iter().copied().fold(0.0, f64::max));
    AtomFit {
        atom: a,
        atom_ci: ((a - Z95 * se).max(0.0), (a + Z95 * se).min(1.0)),
        scale: b,
        exponent: if b > 0.0 { c } else { 0.0 },
        objective,
    }
}

fn verdict(points: usize, masses: &[f64], fit: &AtomFit) -> Verdict {
    if points < MIN_POINTS_FOR_VERDICT {
        return Verdict::Inconclusive;
    }
    if masses.iter().all(|m| *m == 0.0) {
        return Verdict::Zero;
    }
    if fit.atom >= ATOM_ONE {
        Verdict::One
    } else if fit.atom <= ATOM_ZERO && fit.scale > 0.0 && fit.exponent > 0.0 {
        Verdict::Zero
    } else {
        Verdict::Inconclusive
    }
}

fn curve<F: Fn(&ProjPoint, f64) -> bool>(measure: &EmpiricalMeasure, hs: &[f64], in_band: F) -> MassCurve {
    // `+ 0.0` maps an empty sum's -0.0 to 0.0
    let mut masses: Vec<f64> = hs.iter().map(|h| measure.mass_where(|x| in_band(x, *h)) + 0.0).collect();
    // nested bands; remove summation-order noise
    for k in 1..masses.len() {
        masses[k] = masses[k].min(masses[k - 1]);
    }
    let n_eff = measure.effective_size().round().max(1.0) as u64;
    let ci = masses
        .iter()
        .map(|m| stats::wilson((m * n_eff as f64).round() as u64, n_eff, Z95))
        .collect();
    let fit = fit_atom(hs, &masses);
    let verdict = verdict(measure.len(), &masses, &fit);
    MassCurve { hs: hs.to_vec(), masses, ci, fit, verdict, points: measure.len() }
}

/// Band masses `nu({|log delta(y, x) - t| <= h})`.
pub fn level_set_mass(measure: &EmpiricalMeasure, query: &LevelSetQuery) -> Result<MassCurve> {
    if measure.dim() != query.y.dim() {
        return Err(Error::DimensionMismatch { expected: measure.dim(), got: query.y.dim() });
    }
    Ok(curve(measure, &query.hs, |x, h| {
        let d = delta(&query.y, x);
        d > 0.0 && (d.ln() - query.t).abs() <= h
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperplaneReport {
    pub ts: Vec<f64>,
    /// `nu({delta(y, x) <= t})`.
    pub masses: Vec<f64>,
    /// Power law `mass ~ C t^alpha` fitted over the positive masses.
    pub c_hat: f64,
    pub alpha_hat: f64,
    pub fit: AtomFit,
    pub verdict: Verdict,
    /// The measure charges the hyperplane `ker y`, which is impossible for a
    /// strongly irreducible law.
    pub a1_violation: bool,
}

pub fn hyperplane_mass(measure: &EmpiricalMeasure, y: &DualProjPoint, ts: &[f64]) -> Result<HyperplaneReport> {
    if measure.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: measure.dim(), got: y.dim() });
    }
    check_sequence(ts)?;
    let c = curve(measure, ts, |x, t| delta(y, x) <= t);
    let pos: Vec<(f64, f64)> = ts.iter().zip(&c.masses).filter(|(_, m)| **m > 0.0).map(|(t, m)| (t.ln(), m.ln())).collect();
    let (c_hat, alpha_hat) = if pos.len() >= 2 {
        let f = stats::ols(&pos.iter().map(|p| p.0).collect::<Vec<_>>(), &pos.iter().map(|p| p.1).collect::<Vec<_>>());
        (f.intercept.exp(), f.slope)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(HyperplaneReport {
        ts: ts.to_vec(),
        masses: c.masses,
        c_hat,
        alpha_hat,
        a1_violation: c.verdict == Verdict::One,
        verdict: c.verdict,
        fit: c.fit,
    })
}

/// A homogeneous real polynomial in `d` variables.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolynomialSet {
    pub d: usize,
    pub degree: u32,
    /// Monomials as (exponents, coefficient).
    pub terms: Vec<(Vec<u32>, f64)>,
}

impl PolynomialSet {
    pub fn new(d: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        let nonzero: Vec<&(Vec<u32>, f64)> = terms.iter().filter(|t| t.1 != 0.0).collect();
        if nonzero.is_empty() {
            return Err(Error::InvalidInput("polynomial is identically zero".into()));
        }
        if let Some(t) = terms.iter().find(|t| t.0.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: t.0.len() });
        }
        if terms.iter().any(|t| !t.1.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        let degree: u32 = nonzero[0].0.iter().sum();
        if nonzero.iter().any(|t| t.0.iter().sum::<u32>() != degree) {
            return Err(Error::InvalidInput("polynomial is not homogeneous".into()));
        }
        Ok(PolynomialSet { d, degree, terms })
    }

    /// `v_i` as a linear form.
    pub fn coordinate(d: usize, i: usize) -> Result<Self> {
        let mut e = vec![0; d];
        e[i] = 1;
        Self::new(d, vec![(e, 1.0)])
    }

    /// The quadratic form `v_1^2 + ... + v_p^2 - v_{p+1}^2 - ... - v_d^2`.
    pub fn quadratic_form(p: usize, d: usize) -> Result<Self> {
        let terms = (0..d)
            .map(|i| {
                let mut e = vec![0; d];
                e[i] = 2;
                (e, if i < p { 1.0 } else { -1.0 })
            })
            .collect();
        Self::new(d, terms)
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * e.iter().zip(v).map(|(k, x)| x.powi(*k as i32)).product::<f64>()).sum()
    }
}

/// Band masses `nu({|p(v)| <= h |v|^deg})` on unit representatives.
pub fn algebraic_mass(measure: &EmpiricalMeasure, pset: &PolynomialSet, hs: &[f64]) -> Result<MassCurve> {
    if measure.dim() != pset.d {
        return Err(Error::DimensionMismatch { expected: measure.dim(), got: pset.d });
    }
    check_sequence(hs)?;
    Ok(curve(measure, hs, |x, h| pset.eval(x.rep()).abs() <= h))
}

/// First candidate `eta` whose multiples `-eta k`, `1 <= k <= k_max`, all
/// stay more than `gap` away from every detected atom level `t0`.
pub fn choose_offset(atoms: &[(f64, f64)], candidates: &[f64], k_max: usize, gap: f64) -> Result<f64> {
    let first = *candidates.first().ok_or_else(|| Error::InvalidInput("no offset candidates".into()))?;
    let detected: Vec<f64> = atoms.iter().filter(|a| a.1 > ATOM_DETECTION).map(|a| a.0).collect();
    if detected.is_empty() {
        return Ok(first);
    }
    candidates
        .iter()
        .copied()
        .find(|eta| detected.iter().all(|t0| (1..=k_max).all(|k| (-eta * k as f64 - t0).abs() > gap)))
        .ok_or(Error::NoValidOffset)
}

/// Symmetric Hausdorff distance between the supports under `dist`.
pub fn support_compare(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let support = |m: &EmpiricalMeasure| -> Vec<ProjPoint> {
        m.iter().filter(|(_, w)| *w > 0.0).map(|(p, _)| p.clone()).collect()
    };
    let (pa, pb) = (support(a), support(b));
    if pa.is_empty() || pb.is_empty() {
        return Err(Error::InvalidInput("measure with empty support".into()));
    }
    if a.dim() == 2 {
        Ok(directed_circle(&pa, &pb).max(directed_circle(&pb, &pa)))
    } else {
        let (da, db) = (dedup(pa), dedup(pb));
        Ok(directed_naive(&da, &db).max(directed_naive(&db, &da)))
    }
}

fn dedup(mut pts: Vec<ProjPoint>) -> Vec<ProjPoint> {
    pts.sort_by(|x, y| x.rep().partial_cmp(y.rep()).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup();
    pts
}

fn directed_naive(from: &[ProjPoint], to: &[ProjPoint]) -> f64 {
    from.iter().map(|x| to.iter().map(|y| dist(x, y)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
}

/// `max_{x in from} min_{y in to} dist(x, y)` on `P^1` via sorted angles.
fn directed_circle(from: &[ProjPoint], to: &[ProjPoint]) -> f64 {
    use std::f64::consts::PI;
    let mut angles: Vec<f64> = to.iter().map(ProjPoint::angle).collect();
    angles.sort_by(|x, y| x.total_cmp(y));
    angles.dedup();
    let n = angles.len();
    from.iter()
        .map(|x| {
            let t = x.angle();
            let i = angles.partition_point(|a| *a < t);
            let (lo, hi) = (angles[(i + n - 1) % n], angles[i % n]);
            let gap = |a: f64| {
                let d = (t - a).rem_euclid(PI);
                d.min(PI - d)
            };
            gap(lo).min(gap(hi)).sin()
        })
        .fold(0.0, f64::max)
}
