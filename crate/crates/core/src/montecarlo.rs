//! Path simulation and Monte Carlo estimators.
//!
//! Replicas are independent work units: replica `i` always draws from
//! stream `i` of the configured seed, results are collected in replica
//! order and reduced sequentially, so every estimate is identical for any
//! number of worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::MatrixEnsemble;
use crate::error::{Error, Result};
use crate::measure::{bounded_lipschitz, EmpiricalMeasure};
use crate::projgeom::{canonicalize, delta, dot, norm, DualProjPoint, Matrix, ProjPoint};
use crate::rng::{StreamRng, Streams};
use crate::stats::{self, Estimate, LineFit, BATCHES, Z95};

/// Default number of discarded steps before a chain is sampled.
pub const DEFAULT_BURN_IN: usize = 200;

/// Confidence half-widths are never reported below the rounding level of
/// the accumulated cocycle sums.
const ROUNDING_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathConfig {
    pub n: usize,
    pub replicas: usize,
    pub burn_in: usize,
    pub seed: u64,
    #[serde(serialize_with = "ser_point")]
    pub x0: ProjPoint,
}

fn ser_point<S: serde::Serializer>(p: &ProjPoint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(p.rep())
}

impl PathConfig {
    pub fn new(n: usize, replicas: usize, burn_in: usize, seed: u64, x0: ProjPoint) -> Result<Self> {
        if n == 0 || replicas == 0 {
            return Err(Error::InvalidInput("n and replicas must be at least 1".into()));
        }
        Ok(PathConfig { n, replicas, burn_in, seed, x0 })
    }

    fn check(&self, ensemble: &MatrixEnsemble) -> Result<()> {
        if self.n == 0 || self.replicas == 0 {
            return Err(Error::InvalidInput("n and replicas must be at least 1".into()));
        }
        if self.x0.dim() != ensemble.dim() {
            return Err(Error::DimensionMismatch { expected: ensemble.dim(), got: self.x0.dim() });
        }
        Ok(())
    }
}

/// A running unit vector together with the accumulated `log |G_k v|`.
#[derive(Clone, Debug)]
pub(crate) struct Walker {
    pub v: Vec<f64>,
    buf: Vec<f64>,
    pub log_norm: f64,
}

impl Walker {
    pub fn new(x: &[f64]) -> Self {
        Walker { v: x.to_vec(), buf: vec![0.0; x.len()], log_norm: 0.0 }
    }

    /// Applies `g` and renormalizes, adding `sigma(g, x)` to the sum.
    #[inline]
    pub fn step(&mut self, g: &Matrix) -> f64 {
        g.apply(&self.v, &mut self.buf);
        let n = norm(&self.buf);
        let inv = 1.0 / n;
        for (v, b) in self.v.iter_mut().zip(&self.buf) {
            *v = b * inv;
        }
        let s = n.ln();
        self.log_norm += s;
        s
    }

    /// Applies `g` without renormalizing; the scale is folded into
    /// `log_norm` only when it drifts far from 1. Call [`Walker::settle`]
    /// before reading `v`.
    #[inline]
    pub fn step_lazy(&mut self, g: &Matrix) {
        g.apply(&self.v, &mut self.buf);
        std::mem::swap(&mut self.v, &mut self.buf);
        let m = self.v.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        if !(1e-150..=1e150).contains(&m) {
            self.settle();
        }
    }

    #[inline]
    pub fn settle(&mut self) {
        let n = norm(&self.v);
        if n != 1.0 {
            let inv = 1.0 / n;
            self.v.iter_mut().for_each(|c| *c *= inv);
            self.log_norm += n.ln();
        }
    }

    pub fn point(&self) -> ProjPoint {
        let mut rep = self.v.clone();
        canonicalize(&mut rep);
        ProjPoint::from_canonical(rep)
    }

    #[inline]
    pub fn run<R: Rng + ?Sized>(&mut self, ensemble: &MatrixEnsemble, steps: usize, rng: &mut R) {
        for _ in 0..steps {
            self.step_lazy(ensemble.sample(rng));
        }
        self.settle();
    }
}

/// Maps `f` over replica indices in parallel, returning results in order.
pub(crate) fn map_replicas<T, F>(replicas: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..replicas as u64).into_par_iter().map(f).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathState {
    pub point: ProjPoint,
    /// `sigma(G_k, x_0)`.
    pub cocycle: f64,
}

/// The trajectory `(G_k x_0, sigma(G_k, x_0))` for `k = 1..=n`.
pub fn simulate_path(ensemble: &MatrixEnsemble, x0: &ProjPoint, n: usize, rng: &mut StreamRng) -> Result<Vec<PathState>> {
    if x0.dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch { expected: ensemble.dim(), got: x0.dim() });
    }
    let mut w = Walker::new(x0.rep());
    Ok((0..n)
        .map(|_| {
            w.step(ensemble.sample(rng));
            PathState { point: w.point(), cocycle: w.log_norm }
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct LyapunovEstimate {
    pub lambda: Estimate,
    pub n: usize,
    pub replicas: usize,
}

/// Ergodic average `sigma(G_n, x) / n` over the replicas, counted after the
/// burn-in, with a batch-means interval.
pub fn estimate_lyapunov(ensemble: &MatrixEnsemble, cfg: &PathConfig) -> Result<LyapunovEstimate> {
    cfg.check(ensemble)?;
    let streams = Streams::new(cfg.seed);
    let segs = if cfg.replicas >= BATCHES { 1 } else { BATCHES.min(cfg.n) };
    let per_replica: Vec<Vec<f64>> = map_replicas(cfg.replicas, |i| {
        let mut rng = streams.stream(i);
        let mut w = Walker::new(cfg.x0.rep());
        w.run(ensemble, cfg.burn_in, &mut rng);
        let mut out = Vec::with_capacity(segs);
        for k in 0..segs {
            let len = (k + 1) * cfg.n / segs - k * cfg.n / segs;
            let start = w.log_norm;
            w.run(ensemble, len, &mut rng);
            out.push((w.log_norm - start) / len as f64);
        }
        out
    });
    let totals: Vec<f64> = per_replica
        .iter()
        .map(|segs_v| {
            segs_v
                .iter()
                .enumerate()
                .map(|(k, m)| m * ((k + 1) * cfg.n / segs - k * cfg.n / segs) as f64)
                .sum::<f64>()
                / cfg.n as f64
        })
        .collect();
    let value = stats::mean(&totals);
    let flat: Vec<f64> = if segs == 1 { totals } else { per_replica.concat() };
    let mut est = stats::batch_means(&flat, BATCHES);
    est.value = value;
    est.half_width = est.half_width.max(ROUNDING_FLOOR);
    Ok(LyapunovEstimate { lambda: est, n: cfg.n, replicas: cfg.replicas })
}

#[derive(Clone, Debug, Serialize)]
pub struct VarianceEstimate {
    pub sigma2: Estimate,
    /// The estimate is within its own confidence half-width of zero.
    pub near_zero: bool,
}

/// Estimates `sigma^2 = lim (1/n) E (log |G_n v| - n lambda)^2` at the
/// configured `n` from independent replicas.
pub fn estimate_variance(ensemble: &MatrixEnsemble, cfg: &PathConfig, lambda: f64) -> Result<VarianceEstimate> {
    cfg.check(ensemble)?;
    if cfg.replicas < 2 {
        return Err(Error::InvalidInput("variance estimation needs at least 2 replicas".into()));
    }
    let streams = Streams::new(cfg.seed);
    let vals: Vec<f64> = map_replicas(cfg.replicas, |i| {
        let mut rng = streams.stream(i);
        let mut w = Walker::new(cfg.x0.rep());
        w.run(ensemble, cfg.burn_in, &mut rng);
        let start = w.log_norm;
        w.run(ensemble, cfg.n, &mut rng);
        let dev = w.log_norm - start - cfg.n as f64 * lambda;
        dev * dev / cfg.n as f64
    });
    let mut est = stats::batch_means(&vals, BATCHES);
    est.half_width = est.half_width.max(ROUNDING_FLOOR);
    Ok(VarianceEstimate { near_zero: est.value <= est.half_width, sigma2: est })
}

/// Pools the chain states `G_k x_0`, `burn_in < k <= burn_in + n`, of all
/// replicas into an equally weighted cloud.
pub fn empirical_stationary(ensemble: &MatrixEnsemble, cfg: &PathConfig, min_burn_in: usize) -> Result<EmpiricalMeasure> {
    cfg.check(ensemble)?;
    if cfg.burn_in < min_burn_in {
        return Err(Error::InvalidInput(format!(
            "burn_in {} is below the required minimum {min_burn_in}",
            cfg.burn_in
        )));
    }
    let streams = Streams::new(cfg.seed);
    let clouds: Vec<Vec<ProjPoint>> = map_replicas(cfg.replicas, |i| {
        let mut rng = streams.stream(i);
        let mut w = Walker::new(cfg.x0.rep());
        w.run(ensemble, cfg.burn_in, &mut rng);
        (0..cfg.n)
            .map(|_| {
                w.step(ensemble.sample(&mut rng));
                w.point()
            })
            .collect()
    });
    EmpiricalMeasure::uniform(clouds.concat())
}

/// Pushes every atom of `measure` forward by an independent draw of `mu`.
pub fn one_step_pushforward(ensemble: &MatrixEnsemble, measure: &EmpiricalMeasure, seed: u64) -> Result<EmpiricalMeasure> {
    let streams = Streams::new(seed);
    const CHUNK: usize = 4096;
    let chunks = measure.len().div_ceil(CHUNK);
    let pts: Vec<Vec<ProjPoint>> = map_replicas(chunks, |c| {
        let mut rng = streams.stream(c);
        let lo = c as usize * CHUNK;
        let hi = (lo + CHUNK).min(measure.len());
        measure.points()[lo..hi]
            .iter()
            .map(|p| crate::projgeom::act(ensemble.sample(&mut rng), p))
            .collect()
    });
    EmpiricalMeasure::new(pts.concat(), measure.weights().to_vec())
}

/// Bounded-Lipschitz discrepancy between `measure` and its one-step
/// pushforward (see [`bounded_lipschitz`] for what is computed).
pub fn stationarity_defect(ensemble: &MatrixEnsemble, measure: &EmpiricalMeasure, seed: u64) -> Result<f64> {
    let pushed = one_step_pushforward(ensemble, measure, seed)?;
    Ok(bounded_lipschitz(measure, &pushed))
}

#[derive(Clone, Debug, Serialize)]
pub struct TailReport {
    pub eps: f64,
    pub samples: u64,
    /// `k = 0..=k_max`.
    pub ks: Vec<usize>,
    /// Number of samples with `delta <= exp(-eps k)`.
    pub counts: Vec<u64>,
    pub probabilities: Vec<f64>,
    /// First and last `k` of the fitted range.
    pub fit_range: (usize, usize),
    /// Fitted decay rate of the exceedance probability per unit of `k`.
    pub c0: f64,
    pub c0_se: f64,
    pub t_stat: f64,
}

/// Exceedance probabilities `P(delta <= e^{-eps k})` from bracket samples,
/// with a weighted log-linear fit of the decay over `k_fit_min..=k_max`.
pub fn tail_from_deltas(deltas: &[f64], eps: f64, k_max: usize, k_fit_min: usize) -> Result<TailReport> {
    if k_max < 1 || k_fit_min > k_max || k_max - k_fit_min < 2 {
        return Err(Error::InvalidInput("need at least three fitted k values".into()));
    }
    let mut sorted: Vec<f64> = deltas.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as u64;
    let ks: Vec<usize> = (0..=k_max).collect();
    let mut counts: Vec<u64> =
        ks.iter().map(|&k| sorted.partition_point(|d| *d <= (-eps * k as f64).exp()) as u64).collect();
    // nested events; enforce the ordering against ties at the thresholds
    for k in 1..counts.len() {
        counts[k] = counts[k].min(counts[k - 1]);
    }
    let probabilities: Vec<f64> = counts.iter().map(|c| *c as f64 / n as f64).collect();
    if let Some(k) = (k_fit_min..=k_max).find(|&k| counts[k] < 100) {
        return Err(Error::InsufficientCounts { k, count: counts[k], required: 100 });
    }
    let xs: Vec<f64> = (k_fit_min..=k_max).map(|k| k as f64).collect();
    let ys: Vec<f64> = (k_fit_min..=k_max).map(|k| probabilities[k].ln()).collect();
    // Var(log p_hat) ~ (1 - p) / count
    let ws: Vec<f64> =
        (k_fit_min..=k_max).map(|k| counts[k] as f64 / (1.0 - probabilities[k]).max(1.0 / n as f64)).collect();
    let fit: LineFit = stats::line_fit(&xs, &ys, &ws, true);
    let c0 = -fit.slope;
    Ok(TailReport {
        eps,
        samples: n,
        ks,
        counts,
        probabilities,
        fit_range: (k_fit_min, k_max),
        c0,
        c0_se: fit.slope_se,
        t_stat: c0 / fit.slope_se,
    })
}

/// Samples `delta(y, G_n x_0)` over independent replicas and fits the tail
/// decay rate over `k_max / 4 ..= k_max`.
#[allow(clippy::too_many_arguments)]
pub fn regularity_tail(
    ensemble: &MatrixEnsemble,
    x0: &ProjPoint,
    y: &DualProjPoint,
    n: usize,
    eps: f64,
    k_max: usize,
    replicas: usize,
    seed: u64,
) -> Result<TailReport> {
    if !(n >= k_max && k_max >= 1) {
        return Err(Error::InvalidInput("need n >= k_max >= 1".into()));
    }
    let deltas = bracket_samples(ensemble, x0, y, n, replicas, seed)?;
    tail_from_deltas(&deltas, eps, k_max, (k_max / 4).max(1))
}

/// `delta(y, G_n x_0)` for each replica.
pub fn bracket_samples(
    ensemble: &MatrixEnsemble,
    x0: &ProjPoint,
    y: &DualProjPoint,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if x0.dim() != ensemble.dim() || y.dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch { expected: ensemble.dim(), got: x0.dim().min(y.dim()) });
    }
    let streams = Streams::new(seed);
    Ok(map_replicas(replicas, |i| {
        let mut rng = streams.stream(i);
        let mut w = Walker::new(x0.rep());
        w.run(ensemble, n, &mut rng);
        dot(y.rep(), &w.v).abs().min(1.0)
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct LltCount {
    pub hits: u64,
    pub replicas: u64,
    pub p_hat: f64,
    pub p_ci: (f64, f64),
    /// `(a2 - a1) / (sigma sqrt(2 pi n))`.
    pub target: f64,
    /// `p_hat / target`, absent for an empty interval.
    pub ratio: Option<f64>,
    pub ratio_ci: Option<(f64, f64)>,
}

/// `log |<f, G_n v>| - n lambda` for each replica, computed as
/// `log |G_n v| + log delta(y, G_n x)`. Vanishing coefficients give `-inf`.
pub fn coefficient_values(
    ensemble: &MatrixEnsemble,
    f: &[f64],
    v: &[f64],
    n: usize,
    replicas: usize,
    lambda: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = ensemble.dim();
    if f.len() != d || v.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: f.len().min(v.len()) });
    }
    if (norm(f) - 1.0).abs() > 1e-12 || (norm(v) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("f and v must be unit vectors".into()));
    }
    let streams = Streams::new(seed);
    let shift = n as f64 * lambda;
    Ok(map_replicas(replicas, |i| {
        let mut rng = streams.stream(i);
        let mut w = Walker::new(v);
        w.run(ensemble, n, &mut rng);
        w.log_norm + dot(f, &w.v).abs().ln() - shift
    }))
}

/// Fraction of replicas with `log |<f, G_n v>| - n lambda` in `[a1, a2]`,
/// compared with the local limit prediction `(a2 - a1) / (sigma sqrt(2 pi n))`.
#[allow(clippy::too_many_arguments)]
pub fn coefficient_llt_count(
    ensemble: &MatrixEnsemble,
    f: &[f64],
    v: &[f64],
    a1: f64,
    a2: f64,
    n: usize,
    replicas: usize,
    lambda: f64,
    sigma: f64,
    seed: u64,
) -> Result<LltCount> {
    if !(sigma > 0.0) {
        return Err(Error::DegenerateSigma(sigma));
    }
    if !(a1 <= a2) {
        return Err(Error::InvalidInput(format!("interval [{a1}, {a2}] is empty")));
    }
    let vals = coefficient_values(ensemble, f, v, n, replicas, lambda, seed)?;
    let hits = vals.iter().filter(|x| (a1..=a2).contains(*x)).count() as u64;
    Ok(llt_summary(hits, replicas as u64, a1, a2, n, sigma))
}

pub(crate) fn llt_summary(hits: u64, replicas: u64, a1: f64, a2: f64, n: usize, sigma: f64) -> LltCount {
    let p_hat = hits as f64 / replicas as f64;
    let p_ci = stats::wilson(hits, replicas, Z95);
    let target = (a2 - a1) / (sigma * (2.0 * std::f64::consts::PI * n as f64).sqrt());
    let (ratio, ratio_ci) = if target > 0.0 {
        (Some(p_hat / target), Some((p_ci.0 / target, p_ci.1 / target)))
    } else {
        (None, None)
    };
    LltCount { hits, replicas, p_hat, p_ci, target, ratio, ratio_ci }
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderMoment {
    /// `sum_i w_i delta(y, x_i)^{-alpha}`.
    pub value: f64,
    /// Mass carried by points with `delta < 1e-8`.
    pub small_mass: f64,
}

pub fn holder_moment(measure: &EmpiricalMeasure, y: &DualProjPoint, alpha: f64) -> Result<HolderMoment> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidInput("alpha must be nonnegative".into()));
    }
    let mut value = 0.0;
    let mut small_mass = 0.0;
    for (x, w) in measure.iter() {
        let d = delta(y, x);
        if d < 1e-8 {
            small_mass += w;
        }
        value += w * d.powf(-alpha);
    }
    Ok(HolderMoment { value, small_mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projgeom::{cocycle, project};
    use std::f64::consts::{FRAC_PI_2, LN_2, PI};

    fn diag_point_mass() -> MatrixEnsemble {
        MatrixEnsemble::point_mass(Matrix::diag(&[2.0, 0.5]).unwrap())
    }

    #[test]
    fn path_of_diagonal_accumulates_log2() {
        let e = MatrixEnsemble::point_mass(Matrix::diag(&[2.0, 1.0]).unwrap());
        let mut rng = Streams::new(0).stream(0);
        let path = simulate_path(&e, &ProjPoint::basis(2, 0), 10, &mut rng).unwrap();
        for (k, st) in path.iter().enumerate() {
            assert!((st.cocycle - (k + 1) as f64 * LN_2).abs() < 1e-13);
            assert_eq!(st.point, ProjPoint::basis(2, 0));
        }
    }

    #[test]
    fn rotation_path_has_zero_cocycle() {
        let e = MatrixEnsemble::point_mass(Matrix::rotation(0.3));
        let mut rng = Streams::new(0).stream(0);
        let path = simulate_path(&e, &project(&[1.0, 2.0]).unwrap(), 100, &mut rng).unwrap();
        assert!(path.iter().all(|s| s.cocycle.abs() < 1e-13));
    }

    #[test]
    fn lyapunov_of_point_mass_is_log2() {
        let cfg = PathConfig::new(200, 40, 0, 1, ProjPoint::basis(2, 0)).unwrap();
        let est = estimate_lyapunov(&diag_point_mass(), &cfg).unwrap();
        assert!((est.lambda.value - LN_2).abs() < 1e-13);
        let cfg1 = PathConfig::new(300, 1, 0, 1, ProjPoint::basis(2, 0)).unwrap();
        assert!((estimate_lyapunov(&diag_point_mass(), &cfg1).unwrap().lambda.value - LN_2).abs() < 1e-13);
    }

    #[test]
    fn isometries_give_zero_lyapunov_within_ci() {
        let e = MatrixEnsemble::finite(vec![Matrix::rotation(1.0), Matrix::rotation(FRAC_PI_2 + 0.1)], vec![0.5, 0.5])
            .unwrap();
        let cfg = PathConfig::new(500, 60, 10, 3, project(&[1.0, 0.3]).unwrap()).unwrap();
        let est = estimate_lyapunov(&e, &cfg).unwrap();
        assert!(est.lambda.value.abs() < 3.0 * est.lambda.half_width, "{:?}", est.lambda);
        let var = estimate_variance(&e, &cfg, 0.0).unwrap();
        assert!(var.sigma2.value < 1e-20 && var.near_zero);
    }

    #[test]
    fn point_mass_has_zero_variance() {
        let cfg = PathConfig::new(50, 40, 0, 1, ProjPoint::basis(2, 0)).unwrap();
        let v = estimate_variance(&diag_point_mass(), &cfg, LN_2).unwrap();
        assert!(v.sigma2.value < 1e-24);
    }

    #[test]
    fn stationary_of_proximal_point_mass_is_attractor() {
        let cfg = PathConfig::new(20, 10, DEFAULT_BURN_IN, 4, project(&[0.3, 1.0]).unwrap()).unwrap();
        let m = empirical_stationary(&diag_point_mass(), &cfg, DEFAULT_BURN_IN).unwrap();
        let e1 = ProjPoint::basis(2, 0);
        assert!(m.points().iter().all(|p| crate::projgeom::dist(p, &e1) < 1e-6));
        let short = PathConfig::new(20, 10, 5, 4, e1).unwrap();
        assert!(empirical_stationary(&diag_point_mass(), &short, DEFAULT_BURN_IN).is_err());
    }

    #[test]
    fn lazy_walker_matches_stepwise() {
        let e = MatrixEnsemble::two_matrix();
        let mut r1 = Streams::new(5).stream(0);
        let mut r2 = Streams::new(5).stream(0);
        let x = project(&[0.4, 0.9]).unwrap();
        let mut a = Walker::new(x.rep());
        let mut b = Walker::new(x.rep());
        let mut direct = 0.0;
        for _ in 0..300 {
            let g = e.sample(&mut r1);
            direct += cocycle(g, &a.point());
            a.step(g);
        }
        b.run(&e, 300, &mut r2);
        assert!((a.log_norm - b.log_norm).abs() < 1e-10);
        assert!((a.log_norm - direct).abs() < 1e-10);
    }

    #[test]
    fn tail_of_zero_k_is_one() {
        let mut rng = Streams::new(1).stream(0);
        let deltas: Vec<f64> = (0..200_000).map(|_| (rng.gen::<f64>() * PI).sin()).collect();
        let rep = tail_from_deltas(&deltas, 0.1, 40, 10).unwrap();
        assert_eq!(rep.probabilities[0], 1.0);
        assert!(rep.counts.windows(2).all(|w| w[0] >= w[1]));
        assert!(matches!(tail_from_deltas(&deltas[..1000], 0.1, 40, 10), Err(Error::InsufficientCounts { .. })));
    }

    #[test]
    fn llt_empty_interval() {
        let e = MatrixEnsemble::two_matrix();
        let f = [0.6, 0.8];
        let c = coefficient_llt_count(&e, &f, &[1.0, 0.0], 0.3, 0.3, 20, 1000, 0.0, LN_2, 1).unwrap();
        assert_eq!(c.target, 0.0);
        assert!(c.ratio.is_none());
        assert_eq!(c.hits, 0);
        assert!(matches!(
            coefficient_llt_count(&e, &f, &[1.0, 0.0], -1.0, 1.0, 20, 10, 0.0, 0.0, 1),
            Err(Error::DegenerateSigma(_))
        ));
    }

    #[test]
    fn holder_moment_examples() {
        let e1 = EmpiricalMeasure::uniform(vec![ProjPoint::basis(2, 0)]).unwrap();
        let y = DualProjPoint::basis(2, 0);
        assert_eq!(holder_moment(&e1, &y, 0.7).unwrap().value, 1.0);
        let mut rng = Streams::new(2).stream(0);
        let cloud = EmpiricalMeasure::uniform_circle(1000, &mut rng).unwrap();
        assert!((holder_moment(&cloud, &y, 0.0).unwrap().value - 1.0).abs() < 1e-12);
    }
}
