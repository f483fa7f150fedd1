use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projgeom::{dist, line_angle, project, ProjPoint};
use crate::rng::Streams;

/// Fraction of a cell below which an image is treated as lying on a node.
const NODE_SNAP: f64 = 1e-10;

/// Parameters that rebuild a grid exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GridSpec {
    /// `m` equally spaced angles `(i + offset) pi / m` of `P^1`, with
    /// `offset` in `[0, 1)`.
    Angle {
        m: usize,
        #[serde(default)]
        offset: f64,
    },
    /// Quasi-uniform cloud of `count` points in `P^{d-1}`.
    Cloud { d: usize, count: usize, seed: u64 },
}

/// Up to two grid nodes and weights reproducing a function value by
/// interpolation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interp {
    pub nodes: [usize; 2],
    pub weights: [f64; 2],
    pub len: usize,
}

impl Interp {
    fn single(i: usize) -> Self {
        Interp { nodes: [i, i], weights: [1.0, 0.0], len: 1 }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied()).take(self.len)
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.iter().map(|(i, w)| w * values[i]).sum()
    }
}

/// Discretization of projective space (or its dual, using the same points
/// as representatives of functionals).
#[derive(Clone, Debug)]
pub struct ProjGrid {
    spec: GridSpec,
    d: usize,
    points: Vec<ProjPoint>,
    weights: Vec<f64>,
}

/// Half the area of the unit sphere `S^{d-1}`.
pub fn half_sphere_area(d: usize) -> f64 {
    let k = d as f64 / 2.0;
    PI.powf(k) / statrs::function::gamma::gamma(k)
}

impl ProjGrid {
    pub fn angle(m: usize) -> Result<Self> {
        Self::angle_offset(m, 0.0)
    }

    /// Angle grid shifted by `offset` cells. A half-cell shift keeps every
    /// node at distance at least `sin(pi / 2m)` from the hyperplanes of the
    /// unshifted nodes.
    pub fn angle_offset(m: usize, offset: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidInput(format!("angle grid needs m >= 2, got {m}")));
        }
        if !(0.0..1.0).contains(&offset) {
            return Err(Error::InvalidInput(format!("grid offset must lie in [0, 1), got {offset}")));
        }
        let points = (0..m).map(|i| ProjPoint::from_angle((i as f64 + offset) * PI / m as f64)).collect();
        Ok(ProjGrid { spec: GridSpec::Angle { m, offset }, d: 2, points, weights: vec![PI / m as f64; m] })
    }

    /// Quasi-uniform cloud for `d >= 3`: a Fibonacci hemisphere for `d = 3`,
    /// seeded Gaussian directions otherwise. Cell weights are Monte Carlo
    /// estimates of the nearest-neighbour cell areas.
    pub fn cloud(d: usize, count: usize, seed: u64) -> Result<Self> {
        if d < 3 || count < 2 {
            return Err(Error::InvalidInput(format!("cloud grid needs d >= 3 and count >= 2, got d={d}, count={count}")));
        }
        let streams = Streams::new(seed);
        let points: Vec<ProjPoint> = if d == 3 {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = k as f64 * golden;
                    project(&[z, r * phi.cos(), r * phi.sin()]).expect("unit vector")
                })
                .collect()
        } else {
            let mut rng = streams.stream(0);
            (0..count).map(|_| gaussian_point(d, &mut rng)).collect()
        };
        let samples = 32 * count;
        let mut hits = vec![0u64; count];
        let mut rng = streams.stream(1);
        for _ in 0..samples {
            let p = gaussian_point(d, &mut rng);
            hits[nearest_in(&points, &p).0] += 1;
        }
        let total = half_sphere_area(d);
        let floored: Vec<f64> = hits.iter().map(|h| (*h).max(1) as f64).collect();
        let sum: f64 = floored.iter().sum();
        let weights = floored.iter().map(|h| total * h / sum).collect();
        Ok(ProjGrid { spec: GridSpec::Cloud { d, count, seed }, d, points, weights })
    }

    pub fn from_spec(spec: &GridSpec) -> Result<Self> {
        match *spec {
            GridSpec::Angle { m, offset } => Self::angle_offset(m, offset),
            GridSpec::Cloud { d, count, seed } => Self::cloud(d, count, seed),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[ProjPoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mesh size used by the grid-error model: `pi / m` for angle grids,
    /// the typical cell radius for clouds.
    pub fn spacing(&self) -> f64 {
        match self.spec {
            GridSpec::Angle { m, .. } => PI / m as f64,
            GridSpec::Cloud { d, count, .. } => (half_sphere_area(d) / count as f64).powf(1.0 / (d - 1) as f64),
        }
    }

    /// Interpolation stencil at `x`: linear in angle for angle grids (a
    /// point on a node uses that node only), nearest node for clouds.
    pub fn interp(&self, x: &ProjPoint) -> Interp {
        match self.spec {
            GridSpec::Angle { m, offset } => {
                let t = (line_angle(x.rep()) * m as f64 / PI - offset).rem_euclid(m as f64);
                let mut i = t.floor() as usize;
                let mut frac = t - i as f64;
                if i >= m {
                    i = m - 1;
                    frac = 1.0;
                }
                // images that land on a node up to rounding use that node alone
                if frac <= NODE_SNAP {
                    Interp::single(i)
                } else if frac >= 1.0 - NODE_SNAP {
                    Interp::single((i + 1) % m)
                } else {
                    Interp { nodes: [i, (i + 1) % m], weights: [1.0 - frac, frac], len: 2 }
                }
            }
            GridSpec::Cloud { .. } => Interp::single(self.nearest(x).0),
        }
    }

    /// Nearest node and its distance.
    pub fn nearest(&self, x: &ProjPoint) -> (usize, f64) {
        match self.spec {
            GridSpec::Angle { m, offset } => {
                let t = (line_angle(x.rep()) * m as f64 / PI - offset).rem_euclid(m as f64);
                let i = (t.round() as usize) % m;
                (i, dist(&self.points[i], x))
            }
            GridSpec::Cloud { .. } => nearest_in(&self.points, x),
        }
    }

    /// Grid samples of `f`.
    pub fn sample<F: Fn(&ProjPoint) -> f64>(&self, f: F) -> Vec<f64> {
        self.points.iter().map(f).collect()
    }
}

fn gaussian_point<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ProjPoint {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        if let Ok(p) = project(&v) {
            return p;
        }
    }
}

fn nearest_in(points: &[ProjPoint], x: &ProjPoint) -> (usize, f64) {
    // |<p, x>| is maximal exactly where the sine distance is minimal
    let mut best = (0, f64::NEG_INFINITY);
    for (i, p) in points.iter().enumerate() {
        let c = crate::projgeom::dot(p.rep(), x.rep()).abs();
        if c > best.1 {
            best = (i, c);
        }
    }
    (best.0, dist(&points[best.0], x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_grid_weights_and_nodes() {
        let g = ProjGrid::angle(8).unwrap();
        assert_eq!(g.len(), 8);
        assert!((g.total_measure() - PI).abs() < 1e-14);
        assert_eq!(g.interp(&g.points()[3]).len, 1);
        assert_eq!(g.interp(&g.points()[3]).nodes[0], 3);
        assert!(ProjGrid::angle(1).is_err());
    }

    #[test]
    fn interpolation_is_linear_in_angle_and_wraps() {
        let g = ProjGrid::angle(4).unwrap();
        let it = g.interp(&ProjPoint::from_angle(PI / 8.0));
        assert_eq!(it.nodes, [0, 1]);
        assert!((it.weights[0] - 0.5).abs() < 1e-12);
        let wrap = g.interp(&ProjPoint::from_angle(7.0 * PI / 8.0 + 0.1));
        assert_eq!(wrap.nodes, [3, 0]);
        let vals = [0.0, 1.0, 2.0, 3.0];
        assert!((g.interp(&ProjPoint::from_angle(PI / 8.0)).eval(&vals) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shifted_grid_interpolates() {
        let g = ProjGrid::angle_offset(4, 0.5).unwrap();
        assert!((g.points()[0].angle() - PI / 8.0).abs() < 1e-15);
        let it = g.interp(&ProjPoint::basis(2, 0));
        assert_eq!(it.nodes, [3, 0]);
        assert!((it.weights[0] - 0.5).abs() < 1e-12);
        assert_eq!(g.nearest(&ProjPoint::from_angle(PI / 8.0 + 0.01)).0, 0);
        assert!(ProjGrid::angle_offset(4, 1.0).is_err());
    }

    #[test]
    fn cloud_grid_measure() {
        let g = ProjGrid::cloud(3, 200, 7).unwrap();
        assert!((g.total_measure() - 2.0 * PI).abs() < 1e-9);
        assert!(g.weights().iter().all(|w| *w > 0.0));
        let p = g.points()[17].clone();
        assert_eq!(g.nearest(&p), (17, 0.0));
        let g4 = ProjGrid::cloud(4, 50, 1).unwrap();
        assert!((g4.total_measure() - PI * PI).abs() < 1e-9);
    }

    #[test]
    fn half_sphere_areas() {
        assert!((half_sphere_area(2) - PI).abs() < 1e-12);
        assert!((half_sphere_area(3) - 2.0 * PI).abs() < 1e-12);
    }
}
