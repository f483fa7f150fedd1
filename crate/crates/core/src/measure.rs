//! Weighted point clouds on projective space and their text format.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::projgeom::{dist, project, ProjPoint};

const WEIGHT_TOL: f64 = 1e-12;
const HEADER: &str = "projwalk-measure 1";

/// A probability measure supported on finitely many points.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    points: Vec<ProjPoint>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<ProjPoint>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("measure has no points".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
        }
        let d = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
        }
        if points.iter().any(|p| p.rep().iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidInput("measure has non-finite points".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {total} (deviation {:e})", total - 1.0)));
        }
        Ok(EmpiricalMeasure { points, weights })
    }

    /// Equal weights on the given points.
    pub fn uniform(points: Vec<ProjPoint>) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        let n = points.len();
        let mut weights = vec![w; n];
        // absorb the rounding defect so the total is 1 to within an ulp
        if n > 0 {
            let total: f64 = weights.iter().sum();
            weights[n - 1] += 1.0 - total;
        }
        Self::new(points, weights)
    }

    /// Normalizes arbitrary nonnegative masses.
    pub fn from_masses(points: Vec<ProjPoint>, masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("total mass must be positive".into()));
        }
        Self::new(points, masses.iter().map(|m| m / total).collect())
    }

    /// Uniform measure on `P^1` sampled by `count` i.i.d. angles.
    pub fn uniform_circle<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Result<Self> {
        let pts = (0..count).map(|_| ProjPoint::from_angle(rng.gen::<f64>() * PI)).collect();
        Self::uniform(pts)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn points(&self) -> &[ProjPoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProjPoint, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn integrate<F: Fn(&ProjPoint) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(p, w)| w * f(p)).sum()
    }

    /// Mass of the set where `pred` holds.
    pub fn mass_where<F: Fn(&ProjPoint) -> bool>(&self, pred: F) -> f64 {
        self.iter().filter(|(p, _)| pred(p)).map(|(_, w)| w).sum()
    }

    /// Kish effective sample size `1 / sum w_i^2`.
    pub fn effective_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// `count` i.i.d. draws from the measure, as an equally weighted cloud.
    pub fn resample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Self> {
        let mut cum = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cum.push(acc);
        }
        let pts = (0..count)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                let i = cum.partition_point(|c| *c <= u).min(self.len() - 1);
                self.points[i].clone()
            })
            .collect();
        Self::uniform(pts)
    }

    /// Serializes to the text format: a header, the dimension and count,
    /// then one line `weight coord_1 ... coord_d` per point, every number
    /// with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "dim {}", self.dim());
        let _ = writeln!(out, "count {}", self.len());
        for (p, w) in self.iter() {
            let _ = write!(out, "{w:.16e}");
            for c in p.rep() {
                let _ = write!(out, " {c:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let fmt = |line: usize, msg: &str| Error::Format { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (ln, header) = lines.next().ok_or_else(|| fmt(1, "empty file"))?;
        if header != HEADER {
            return Err(fmt(ln, "missing 'projwalk-measure 1' header"));
        }
        let mut field = |name: &str| -> Result<usize> {
            let (ln, l) = lines.next().ok_or_else(|| fmt(0, &format!("missing '{name}' line")))?;
            let rest = l.strip_prefix(name).ok_or_else(|| fmt(ln, &format!("expected '{name} <n>'")))?;
            rest.trim().parse().map_err(|_| fmt(ln, &format!("bad {name} value")))
        };
        let d = field("dim")?;
        let count = field("count")?;
        if d < 2 {
            return Err(fmt(2, "dimension must be at least 2"));
        }
        let mut points = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        let mut last = 3;
        for (ln, l) in lines {
            if l.is_empty() {
                continue;
            }
            last = ln;
            if points.len() == count {
                return Err(fmt(ln, "more points than declared"));
            }
            let nums: std::result::Result<Vec<f64>, _> = l.split_whitespace().map(str::parse::<f64>).collect();
            let nums = nums.map_err(|_| fmt(ln, "unparsable number"))?;
            if nums.len() != d + 1 {
                return Err(fmt(ln, &format!("expected {} numbers, found {}", d + 1, nums.len())));
            }
            let canonical = project(&nums[1..]).map_err(|e| fmt(ln, &e.to_string()))?;
            let same_line = canonical.rep().iter().zip(&nums[1..]).all(|(a, b)| (a - b).abs() <= 1e-12);
            if !same_line {
                return Err(fmt(ln, "point is not a canonical unit representative"));
            }
            if !(nums[0].is_finite() && nums[0] >= 0.0) {
                return Err(fmt(ln, "weight must be nonnegative"));
            }
            weights.push(nums[0]);
            points.push(ProjPoint::from_canonical(nums[1..].to_vec()));
        }
        if points.len() != count {
            return Err(fmt(last + 1, &format!("truncated: {} of {count} points present", points.len())));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(fmt(last, &format!("weights sum to {total}, deviation {:e}", total - 1.0)));
        }
        Self::new(points, weights)
    }
}

/// Estimate of the bounded-Lipschitz distance between two measures.
///
/// For `d = 2` this returns the Wasserstein-1 distance for the arc-length
/// metric on `P^1 = R / pi Z`, which bounds the bounded-Lipschitz distance
/// for the sine metric from above. For `d >= 3` it returns the largest
/// discrepancy over the test functions `x -> max(0, r - dist(x, z))`
/// centred at up to 64 points of the two clouds, a lower bound.
pub fn bounded_lipschitz(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    if a.dim() == 2 {
        return circle_w1(a, b);
    }
    let mut centres: Vec<&ProjPoint> = Vec::new();
    for m in [a, b] {
        let step = (m.len() / 32).max(1);
        centres.extend(m.points().iter().step_by(step).take(32));
    }
    let mut best: f64 = 0.0;
    for z in centres {
        for r in [0.05, 0.1, 0.2, 0.4, 0.7, 1.0] {
            let f = |x: &ProjPoint| (r - dist(x, z)).max(0.0);
            best = best.max((a.integrate(f) - b.integrate(f)).abs());
        }
    }
    best
}

fn circle_w1(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    let mut ev: Vec<(f64, f64)> = a.iter().map(|(p, w)| (p.angle(), w)).collect();
    ev.extend(b.iter().map(|(p, w)| (p.angle(), -w)));
    ev.sort_by(|x, y| x.0.total_cmp(&y.0));
    // F - G is piecewise constant between consecutive event angles
    let mut segs = Vec::with_capacity(ev.len());
    let mut level = 0.0;
    for i in 0..ev.len() {
        level += ev[i].1;
        let next = if i + 1 < ev.len() { ev[i + 1].0 } else { PI + ev[0].0 };
        let len = next - ev[i].0;
        if len > 0.0 {
            segs.push((level, len));
        }
    }
    if segs.is_empty() {
        return 0.0;
    }
    // the optimal shift is a weighted median of the levels
    let mut sorted = segs.clone();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let half = PI / 2.0;
    let mut acc = 0.0;
    let mut c = sorted[0].0;
    for (lv, len) in &sorted {
        acc += len;
        if acc >= half {
            c = *lv;
            break;
        }
    }
    segs.iter().map(|(lv, len)| (lv - c).abs() * len).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Streams;

    fn random_measure(n: usize, seed: u64) -> EmpiricalMeasure {
        let mut r = Streams::new(seed).stream(0);
        let pts: Vec<ProjPoint> =
            (0..n).map(|_| project(&[r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5, r.gen::<f64>()]).unwrap()).collect();
        let masses: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
        EmpiricalMeasure::from_masses(pts, &masses).unwrap()
    }

    #[test]
    fn text_round_trip_is_bitwise() {
        let m = random_measure(50, 3);
        let text = m.to_text();
        let back = EmpiricalMeasure::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back, m);
    }

    #[test]
    fn truncated_file_rejected() {
        let text = random_measure(10, 4).to_text();
        let cut: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
        match EmpiricalMeasure::from_text(&cut) {
            Err(Error::Format { line, msg }) => {
                assert_eq!(line, 9);
                assert!(msg.contains("truncated"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unnormalized_weights_rejected() {
        let text = "projwalk-measure 1\ndim 2\ncount 2\n0.5 1 0\n0.6 0 1\n";
        match EmpiricalMeasure::from_text(text) {
            Err(Error::Format { msg, .. }) => assert!(msg.contains("deviation"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn w1_of_identical_measures_vanishes() {
        let mut r = Streams::new(1).stream(0);
        let a = EmpiricalMeasure::uniform_circle(200, &mut r).unwrap();
        assert!(bounded_lipschitz(&a, &a) < 1e-15);
        let e1 = EmpiricalMeasure::uniform(vec![ProjPoint::basis(2, 0)]).unwrap();
        let e2 = EmpiricalMeasure::uniform(vec![ProjPoint::basis(2, 1)]).unwrap();
        assert!((bounded_lipschitz(&e1, &e2) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn resample_keeps_support() {
        let m = EmpiricalMeasure::new(
            vec![ProjPoint::basis(2, 0), ProjPoint::basis(2, 1)],
            vec![0.25, 0.75],
        )
        .unwrap();
        let mut r = Streams::new(8).stream(0);
        let c = m.resample(4000, &mut r).unwrap();
        let frac = c.mass_where(|p| p == &ProjPoint::basis(2, 1));
        assert!((frac - 0.75).abs() < 0.03);
    }
}
