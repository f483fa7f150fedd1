use rand::Rng;
use serde::Serialize;

use super::spectral::{SpectralResult, SINGULAR_DELTA, SINGULAR_MASS};
use crate::ensemble::MatrixEnsemble;
use crate::error::{Error, Result};
use crate::montecarlo::{map_replicas, PathState, Walker};
use crate::projgeom::{act, cocycle, delta, dual_act, dual_cocycle, DualProjPoint, Matrix, ProjPoint};
use crate::rng::{StreamRng, Streams};
use crate::stats::{self, Estimate, BATCHES};

/// `q_s^*(g, y) = e^{s sigma(g^*, y)} r_s^*(g^* y) / (kappa^*(s) r_s^*(y))`
/// with `r_s^*` interpolated on the dual grid.
pub fn tilt_density(spec: &SpectralResult, g: &Matrix, y: &DualProjPoint) -> f64 {
    if spec.s == 0.0 {
        return 1.0;
    }
    let gy = dual_act(g, y);
    (spec.s * dual_cocycle(g, y)).exp() * spec.r_dual_at(&gy) / (spec.dual.kappa * spec.r_dual_at(y))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TiltMode {
    /// Sample under `mu^n` and carry the change-of-measure weight.
    Weighted,
    /// Sample each step from the tilted kernel `mu(g) e^{s sigma(g, x)} r_s(g x)`.
    Direct,
}

#[derive(Clone, Debug, Serialize)]
pub struct TiltedPath {
    #[serde(skip)]
    pub states: Vec<PathState>,
    /// `sigma(G_n, x_0)`.
    pub cocycle: f64,
    /// `q_n^s(x_0, G_n)`; identically 1 in direct mode.
    pub weight: f64,
    /// Sum over steps of `log(Z(x) / (kappa r_s(x)))`, where `Z(x)` is the
    /// normalizer of the direct-mode kernel. Zero in weighted mode.
    pub log_defect: f64,
}

fn check(ensemble: &MatrixEnsemble, spec: &SpectralResult, x0: &ProjPoint) -> Result<()> {
    if ensemble.dim() != spec.grid.dim() || x0.dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch { expected: ensemble.dim(), got: spec.grid.dim().min(x0.dim()) });
    }
    Ok(())
}

pub fn tilted_sample(
    ensemble: &MatrixEnsemble,
    spec: &SpectralResult,
    x0: &ProjPoint,
    n: usize,
    rng: &mut StreamRng,
    mode: TiltMode,
) -> Result<TiltedPath> {
    check(ensemble, spec, x0)?;
    Ok(tilted_path(ensemble, spec, x0, n, rng, mode, true))
}

fn tilted_path<R: Rng + ?Sized>(
    ensemble: &MatrixEnsemble,
    spec: &SpectralResult,
    x0: &ProjPoint,
    n: usize,
    rng: &mut R,
    mode: TiltMode,
    record: bool,
) -> TiltedPath {
    let s = spec.s;
    let kappa = spec.primal.kappa;
    let mut states = Vec::with_capacity(if record { n } else { 0 });
    match mode {
        TiltMode::Weighted => {
            let mut w = Walker::new(x0.rep());
            for _ in 0..n {
                w.step(ensemble.sample(rng));
                if record {
                    states.push(PathState { point: w.point(), cocycle: w.log_norm });
                }
            }
            let weight = if s == 0.0 {
                1.0
            } else {
                (s * w.log_norm - n as f64 * kappa.ln()).exp() * spec.r_at(&w.point()) / spec.r_at(x0)
            };
            TiltedPath { states, cocycle: w.log_norm, weight, log_defect: 0.0 }
        }
        TiltMode::Direct => {
            let mut x = x0.clone();
            let mut total = 0.0;
            let mut log_defect = 0.0;
            let mut probs = vec![0.0; ensemble.len()];
            let mut images: Vec<(ProjPoint, f64)> = Vec::with_capacity(ensemble.len());
            for _ in 0..n {
                images.clear();
                let mut z = 0.0;
                for (k, (g, p)) in ensemble.iter().enumerate() {
                    let gx = act(g, &x);
                    let sg = cocycle(g, &x);
                    probs[k] = p * (s * sg).exp() * spec.r_at(&gx);
                    z += probs[k];
                    images.push((gx, sg));
                }
                log_defect += (z / (kappa * spec.r_at(&x))).ln();
                let u = rng.gen::<f64>() * z;
                let mut acc = 0.0;
                let mut pick = ensemble.len() - 1;
                for (k, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                let (gx, sg) = images.swap_remove(pick);
                total += sg;
                x = gx;
                if record {
                    states.push(PathState { point: x.clone(), cocycle: total });
                }
            }
            TiltedPath { states, cocycle: total, weight: 1.0, log_defect }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TiltedStats {
    pub mode: TiltMode,
    pub n: usize,
    pub replicas: usize,
    /// Mean change-of-measure weight.
    pub weight_mean: Estimate,
    /// Estimate of `E_{Q_s}[sigma(G_n, x)] / n`.
    pub drift: Estimate,
    /// `(mean e^{s sigma(G_n, x)})^{1/n}` in weighted mode.
    pub kappa_hat: Option<f64>,
    /// Largest `|log_defect| / n` over replicas in direct mode.
    pub max_defect: f64,
}

/// Replicated tilted paths reduced to weight, drift and `kappa` estimates.
#[allow(clippy::too_many_arguments)]
pub fn tilted_statistics(
    ensemble: &MatrixEnsemble,
    spec: &SpectralResult,
    x0: &ProjPoint,
    n: usize,
    replicas: usize,
    seed: u64,
    mode: TiltMode,
) -> Result<TiltedStats> {
    check(ensemble, spec, x0)?;
    if n == 0 || replicas < 2 {
        return Err(Error::InvalidInput("need n >= 1 and at least 2 replicas".into()));
    }
    let streams = Streams::new(seed);
    let paths: Vec<TiltedPath> = map_replicas(replicas, |i| {
        let mut rng = streams.stream(i);
        tilted_path(ensemble, spec, x0, n, &mut rng, mode, false)
    });
    let nf = n as f64;
    let weights: Vec<f64> = paths.iter().map(|p| p.weight).collect();
    let drifts: Vec<f64> = paths.iter().map(|p| p.weight * p.cocycle / nf).collect();
    let kappa_hat = match mode {
        TiltMode::Weighted => {
            let m = stats::mean(&paths.iter().map(|p| (spec.s * p.cocycle).exp()).collect::<Vec<_>>());
            Some(m.powf(1.0 / nf))
        }
        TiltMode::Direct => None,
    };
    Ok(TiltedStats {
        mode,
        n,
        replicas,
        weight_mean: stats::batch_means(&weights, BATCHES),
        drift: stats::batch_means(&drifts, BATCHES),
        kappa_hat,
        max_defect: paths.iter().fold(0.0f64, |m, p| m.max(p.log_defect.abs() / nf)),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HarmonicityReport {
    pub y_index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Largest distance between `g^* y` and the dual node it is snapped to.
    pub snap_distance: f64,
    /// Eigenmeasure mass dropped at `delta < 1e-8` (negative `s` only).
    pub excluded_mass: f64,
    /// `10 (h + snap_distance)`.
    pub bound: f64,
}

/// Precomputed pieces of `upsilon_s^y(phi) = nu_s(delta(., y)^s phi) / r_s^*(y)`.
struct Harmonic<'a> {
    ensemble: &'a MatrixEnsemble,
    spec: &'a SpectralResult,
    support: Vec<usize>,
    duals: Vec<DualProjPoint>,
    /// `phi(g x_i)` for every support matrix and support node.
    pushed: Vec<Vec<f64>>,
    phi: &'a [f64],
}

impl<'a> Harmonic<'a> {
    fn new(ensemble: &'a MatrixEnsemble, spec: &'a SpectralResult, phi: &'a [f64]) -> Result<Self> {
        if phi.len() != spec.grid.len() {
            return Err(Error::DimensionMismatch { expected: spec.grid.len(), got: phi.len() });
        }
        if ensemble.dim() != spec.grid.dim() {
            return Err(Error::DimensionMismatch { expected: ensemble.dim(), got: spec.grid.dim() });
        }
        let support: Vec<usize> = (0..spec.grid.len()).filter(|&i| spec.primal.nu[i] > 0.0).collect();
        let pts = spec.grid.points();
        let pushed = ensemble
            .matrices()
            .iter()
            .map(|g| support.iter().map(|&i| spec.grid.interp(&act(g, &pts[i])).eval(phi)).collect())
            .collect();
        let duals = spec.dual_grid.points().iter().map(ProjPoint::as_dual).collect();
        Ok(Harmonic { ensemble, spec, support, duals, pushed, phi })
    }

    /// `upsilon^{y_j}` applied to `values` (indexed like `support`), with the
    /// singular mass it dropped.
    fn upsilon(&self, j: usize, values: impl Fn(usize) -> f64) -> (f64, f64) {
        let s = self.spec.s;
        let y = &self.duals[j];
        let mut acc = 0.0;
        let mut dropped = 0.0;
        for (k, &i) in self.support.iter().enumerate() {
            let w = self.spec.primal.nu[i];
            let d = delta(y, &self.spec.grid.points()[i]);
            if s < 0.0 && d < SINGULAR_DELTA {
                dropped += w;
                continue;
            }
            acc += w * d.powf(s) * values(k);
        }
        (acc / self.spec.dual.r[j], dropped)
    }

    fn at(&self, j: usize) -> HarmonicityReport {
        let (lhs, mut excluded) = self.upsilon(j, |k| self.phi[self.support[k]]);
        let y = &self.duals[j];
        let mut rhs = 0.0;
        let mut snap = 0.0f64;
        for (gi, (g, p)) in self.ensemble.iter().enumerate() {
            let gy = dual_act(g, y);
            let (node, dist) = self.spec.dual_grid.nearest(&gy.as_point());
            snap = snap.max(dist);
            let (u, dropped) = self.upsilon(node, |k| self.pushed[gi][k]);
            excluded = excluded.max(dropped);
            rhs += p * tilt_density(self.spec, g, y) * u;
        }
        let h = self.spec.grid.spacing();
        HarmonicityReport {
            y_index: j,
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
            snap_distance: snap,
            excluded_mass: excluded,
            bound: 10.0 * (h + snap),
        }
    }
}

/// Residual of `upsilon_s^y(phi) = sum_g mu(g) q_s^*(g, y) (g upsilon_s^{g^* y})(phi)`
/// at the dual node `y_index`, with `g^* y` snapped to the nearest dual node.
pub fn harmonicity_residual(
    ensemble: &MatrixEnsemble,
    spec: &SpectralResult,
    y_index: usize,
    phi: &[f64],
) -> Result<HarmonicityReport> {
    if y_index >= spec.dual_grid.len() {
        return Err(Error::InvalidInput(format!("dual node {y_index} out of range")));
    }
    let h = Harmonic::new(ensemble, spec, phi)?;
    let rep = h.at(y_index);
    if rep.excluded_mass > SINGULAR_MASS {
        return Err(Error::SingularBracket { mass: rep.excluded_mass });
    }
    Ok(rep)
}

/// The report with the largest residual over all dual nodes; its
/// `snap_distance` and `excluded_mass` are maxima over all nodes.
pub fn harmonicity_max(ensemble: &MatrixEnsemble, spec: &SpectralResult, phi: &[f64]) -> Result<HarmonicityReport> {
    let h = Harmonic::new(ensemble, spec, phi)?;
    let reports: Vec<HarmonicityReport> = map_replicas(spec.dual_grid.len(), |j| h.at(j as usize));
    let snap = reports.iter().fold(0.0f64, |m, r| m.max(r.snap_distance));
    let excluded = reports.iter().fold(0.0f64, |m, r| m.max(r.excluded_mass));
    if excluded > SINGULAR_MASS {
        return Err(Error::SingularBracket { mass: excluded });
    }
    let mut worst = reports.into_iter().fold(None::<HarmonicityReport>, |best, r| match best {
        Some(b) if b.residual >= r.residual => Some(b),
        _ => Some(r),
    });
    let mut w = worst.take().expect("non-empty grid");
    w.snap_distance = snap;
    w.excluded_mass = excluded;
    w.bound = 10.0 * (spec.dual_grid.spacing() + snap);
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transferop::grid::ProjGrid;

    #[test]
    fn zero_tilt_is_trivial() {
        let grid = ProjGrid::angle(64).unwrap();
        let e = MatrixEnsemble::two_matrix();
        let spec = SpectralResult::compute(&e, &grid, 0.0).unwrap();
        let y = DualProjPoint::from_angle(0.3);
        for g in e.matrices() {
            assert_eq!(tilt_density(&spec, g, &y), 1.0);
        }
        let mut rng = Streams::new(1).stream(0);
        let p = tilted_sample(&e, &spec, &ProjPoint::basis(2, 0), 20, &mut rng, TiltMode::Weighted).unwrap();
        assert_eq!(p.weight, 1.0);
        assert_eq!(p.states.len(), 20);
    }

    #[test]
    fn scalar_harmonicity_is_exact() {
        let grid = ProjGrid::angle(32).unwrap();
        let e = MatrixEnsemble::point_mass(Matrix::scalar(2, 1.5).unwrap());
        let spec = SpectralResult::compute(&e, &grid, 0.5).unwrap();
        let phi = grid.sample(|x| x.angle().cos());
        let rep = harmonicity_max(&e, &spec, &phi).unwrap();
        assert!(rep.residual < 1e-13, "{rep:?}");
        assert!(rep.snap_distance < 1e-12);
    }
}
