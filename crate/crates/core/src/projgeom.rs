//! Exact geometry of the real projective space and its dual.
//!
//! A line `x = Rv` is stored as the unit representative whose first
//! coordinate of magnitude above `1e-9` is positive, so two points are
//! equal exactly when their representatives agree to rounding. Dual lines
//! `y = Rf` use the same canonical form; the pairing is the Euclidean
//! scalar product and `g*` acts as the transpose.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Norms below this are treated as the zero vector.
pub const ZERO_NORM: f64 = 1e-300;
/// Matrices whose 2-norm condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Floor used when reporting `log delta` for vanishing brackets.
pub const LOG_DELTA_FLOOR: f64 = -745.0;

const SIGN_EPS: f64 = 1e-9;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// Normalizes `v` in place to the canonical representative of its line and
/// returns the original norm.
pub(crate) fn canonicalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n < ZERO_NORM || !n.is_finite() {
        return n;
    }
    let flip = v.iter().find(|c| c.abs() > SIGN_EPS).is_some_and(|c| *c < 0.0);
    let inv = if flip { -1.0 / n } else { 1.0 / n };
    for c in v.iter_mut() {
        *c *= inv;
    }
    n
}

/// Sine of the angle between two unit representatives, computed from the
/// wedge product so that it stays accurate for nearby lines.
pub(crate) fn sine_between(u: &[f64], v: &[f64]) -> f64 {
    let d = u.len();
    let mut acc = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            let w = u[i] * v[j] - u[j] * v[i];
            acc += w * w;
        }
    }
    acc.sqrt().min(1.0)
}

/// An invertible `d x d` matrix with its inverse and operator norms cached.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    d: usize,
    entries: Vec<f64>,
    inverse: Vec<f64>,
    norm: f64,
    inverse_norm: f64,
}

impl Matrix {
    /// Builds a matrix from row-major entries.
    pub fn new(d: usize, entries: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput(format!("dimension must be at least 2, got {d}")));
        }
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: entries.len() });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let m = DMatrix::from_row_slice(d, d, &entries);
        let sv = m.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if smin <= 0.0 || smax / smin > MAX_CONDITION {
            let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
            return Err(Error::SingularMatrix(cond));
        }
        let inv = m.try_inverse().ok_or(Error::SingularMatrix(f64::INFINITY))?;
        let mut inverse = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                inverse.push(inv[(i, j)]);
            }
        }
        Ok(Self { d, entries, inverse, norm: smax, inverse_norm: 1.0 / smin })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("matrix rows must all have length d".into()));
        }
        Self::new(d, rows.concat())
    }

    pub fn identity(d: usize) -> Self {
        Self::scalar(d, 1.0).expect("identity is invertible")
    }

    pub fn scalar(d: usize, c: f64) -> Result<Self> {
        let mut e = vec![0.0; d * d];
        for i in 0..d {
            e[i * d + i] = c;
        }
        Self::new(d, e)
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let d = values.len();
        let mut e = vec![0.0; d * d];
        for (i, v) in values.iter().enumerate() {
            e[i * d + i] = *v;
        }
        Self::new(d, e)
    }

    /// Planar rotation by `angle`. Quarter turns are given exact entries so
    /// that coordinate axes map onto coordinate axes without rounding.
    pub fn rotation(angle: f64) -> Self {
        let quarter = angle / std::f64::consts::FRAC_PI_2;
        let (c, s) = if (quarter - quarter.round()).abs() < 1e-15 {
            match (quarter.round() as i64).rem_euclid(4) {
                0 => (1.0, 0.0),
                1 => (0.0, 1.0),
                2 => (-1.0, 0.0),
                _ => (0.0, -1.0),
            }
        } else {
            (angle.cos(), angle.sin())
        };
        Self::new(2, vec![c, -s, s, c]).expect("rotations are orthogonal")
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn inverse_entries(&self) -> &[f64] {
        &self.inverse
    }

    /// Operator norm `||g||`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Operator norm `||g^{-1}||`.
    pub fn inverse_norm(&self) -> f64 {
        self.inverse_norm
    }

    /// `N(g) = max(||g||, ||g^{-1}||)`.
    pub fn n_value(&self) -> f64 {
        self.norm.max(self.inverse_norm)
    }

    pub fn condition_number(&self) -> f64 {
        self.norm * self.inverse_norm
    }

    pub fn transpose(&self) -> Matrix {
        let d = self.d;
        let mut e = vec![0.0; d * d];
        let mut inv = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                e[j * d + i] = self.entries[i * d + j];
                inv[j * d + i] = self.inverse[i * d + j];
            }
        }
        Matrix { d, entries: e, inverse: inv, norm: self.norm, inverse_norm: self.inverse_norm }
    }

    pub fn inverse(&self) -> Matrix {
        Matrix {
            d: self.d,
            entries: self.inverse.clone(),
            inverse: self.entries.clone(),
            norm: self.inverse_norm,
            inverse_norm: self.norm,
        }
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.d != rhs.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: rhs.d });
        }
        let d = self.d;
        let mut e = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k];
                for j in 0..d {
                    e[i * d + j] += a * rhs.entries[k * d + j];
                }
            }
        }
        Matrix::new(d, e)
    }

    pub fn scaled(&self, c: f64) -> Result<Matrix> {
        Matrix::new(self.d, self.entries.iter().map(|x| x * c).collect())
    }

    /// `out = g v`.
    #[inline]
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let d = self.d;
        for (i, o) in out.iter_mut().enumerate().take(d) {
            let row = &self.entries[i * d..(i + 1) * d];
            *o = dot(row, v);
        }
    }

    /// `out = g^T f`.
    #[inline]
    pub fn apply_transpose(&self, f: &[f64], out: &mut [f64]) {
        let d = self.d;
        for (j, o) in out.iter_mut().enumerate().take(d) {
            let mut acc = 0.0;
            for i in 0..d {
                acc += self.entries[i * d + j] * f[i];
            }
            *o = acc;
        }
    }

    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        self.apply(v, &mut out);
        out
    }
}

/// A point `x = Rv` of projective space.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjPoint {
    rep: Vec<f64>,
}

/// A point `y = Rf` of the dual projective space.
#[derive(Clone, Debug, PartialEq)]
pub struct DualProjPoint {
    rep: Vec<f64>,
}

fn canonical_rep(v: &[f64]) -> Result<Vec<f64>> {
    if v.len() < 2 {
        return Err(Error::InvalidInput(format!("dimension must be at least 2, got {}", v.len())));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("vector has non-finite entries".into()));
    }
    let mut rep = v.to_vec();
    let n = canonicalize(&mut rep);
    if n < ZERO_NORM {
        return Err(Error::ZeroVector(n));
    }
    Ok(rep)
}

impl ProjPoint {
    pub fn rep(&self) -> &[f64] {
        &self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.len()
    }

    /// The coordinate line `R e_i`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut rep = vec![0.0; d];
        rep[i] = 1.0;
        ProjPoint { rep }
    }

    /// The line in `P^1` at angle `theta` from `e_1`.
    pub fn from_angle(theta: f64) -> Self {
        project(&[theta.cos(), theta.sin()]).expect("unit vector")
    }

    /// Angle in `[0, pi)` of a point of `P^1`.
    pub fn angle(&self) -> f64 {
        line_angle(&self.rep)
    }

    /// The dual line spanned by the functional `<rep, .>`.
    pub fn as_dual(&self) -> DualProjPoint {
        DualProjPoint { rep: self.rep.clone() }
    }

    pub(crate) fn from_canonical(rep: Vec<f64>) -> Self {
        ProjPoint { rep }
    }
}

impl DualProjPoint {
    pub fn new(f: &[f64]) -> Result<Self> {
        Ok(DualProjPoint { rep: canonical_rep(f)? })
    }

    pub fn rep(&self) -> &[f64] {
        &self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.len()
    }

    pub fn basis(d: usize, i: usize) -> Self {
        ProjPoint::basis(d, i).as_dual()
    }

    pub fn from_angle(theta: f64) -> Self {
        ProjPoint::from_angle(theta).as_dual()
    }

    pub fn angle(&self) -> f64 {
        line_angle(&self.rep)
    }

    /// The point of projective space with the same representative.
    pub fn as_point(&self) -> ProjPoint {
        ProjPoint { rep: self.rep.clone() }
    }
}

/// Angle in `[0, pi)` of the line through a planar vector.
pub(crate) fn line_angle(v: &[f64]) -> f64 {
    let mut t = v[1].atan2(v[0]);
    if t < 0.0 {
        t += std::f64::consts::PI;
    }
    if t >= std::f64::consts::PI {
        t -= std::f64::consts::PI;
    }
    t
}

/// Canonical representative of the line `Rv`.
pub fn project(v: &[f64]) -> Result<ProjPoint> {
    Ok(ProjPoint { rep: canonical_rep(v)? })
}

/// `g x = R gv`.
pub fn act(g: &Matrix, x: &ProjPoint) -> ProjPoint {
    let mut out = g.apply_vec(&x.rep);
    canonicalize(&mut out);
    ProjPoint { rep: out }
}

/// `g* y = R g^T f`.
pub fn dual_act(g: &Matrix, y: &DualProjPoint) -> DualProjPoint {
    let mut out = vec![0.0; g.dim()];
    g.apply_transpose(&y.rep, &mut out);
    canonicalize(&mut out);
    DualProjPoint { rep: out }
}

/// The bracket `delta(y, x) = |<f, v>| / (|f| |v|)`. Its value is symmetric
/// under the identification of points and dual points.
pub fn delta(y: &DualProjPoint, x: &ProjPoint) -> f64 {
    dot(&y.rep, &x.rep).abs().min(1.0)
}

/// `log delta(y, x)`, floored at [`LOG_DELTA_FLOOR`].
pub fn log_delta(y: &DualProjPoint, x: &ProjPoint) -> f64 {
    let d = delta(y, x);
    if d > 0.0 {
        d.ln().max(LOG_DELTA_FLOOR)
    } else {
        LOG_DELTA_FLOOR
    }
}

/// Sine of the angle between two lines.
pub fn dist(x: &ProjPoint, xp: &ProjPoint) -> f64 {
    sine_between(&x.rep, &xp.rep)
}

/// The norm cocycle `sigma(g, x) = log(|gv| / |v|)`.
pub fn cocycle(g: &Matrix, x: &ProjPoint) -> f64 {
    norm(&g.apply_vec(&x.rep)).ln()
}

/// `sigma(g*, y) = log(|g^T f| / |f|)`.
pub fn dual_cocycle(g: &Matrix, y: &DualProjPoint) -> f64 {
    let mut out = vec![0.0; g.dim()];
    g.apply_transpose(&y.rep, &mut out);
    norm(&out).ln()
}

/// Difference of the two sides of
/// `log delta(y, gx) + sigma(g, x) = log delta(x, g*y) + sigma(g*, y)`.
///
/// Returns 0 when both brackets vanish (both sides are `-inf`).
pub fn cohomology_residual(g: &Matrix, x: &ProjPoint, y: &DualProjPoint) -> Result<f64> {
    let gx = act(g, x);
    let gy = dual_act(g, y);
    let left_bracket = delta(y, &gx);
    let right_bracket = delta(&gy, x);
    match (left_bracket < ZERO_NORM, right_bracket < ZERO_NORM) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Err(Error::DegeneratePair),
        _ => {}
    }
    let lhs = left_bracket.ln() + cocycle(g, x);
    let rhs = right_bracket.ln() + dual_cocycle(g, y);
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn project_normalizes_and_fixes_sign() {
        assert_eq!(project(&[0.0, 3.0, 0.0]).unwrap().rep(), &[0.0, 1.0, 0.0]);
        assert_eq!(project(&[-2.0, 0.0]).unwrap().rep(), &[1.0, 0.0]);
        let p = project(&[1.0, 1.0, 0.0]).unwrap();
        assert!(close(p.rep(), &[FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0], 1e-15));
        assert!(close(project(&[2.0, -5.0]).unwrap().rep(), project(&[-0.4, 1.0]).unwrap().rep(), 1e-15));
    }

    #[test]
    fn project_rejects_zero() {
        assert!(matches!(project(&[0.0, 0.0]), Err(Error::ZeroVector(_))));
        assert!(matches!(project(&[1e-310, 0.0]), Err(Error::ZeroVector(_))));
    }

    #[test]
    fn act_examples() {
        let x = project(&[0.3, -0.7]).unwrap();
        assert_eq!(act(&Matrix::identity(2), &x), x);
        let g = Matrix::diag(&[2.0, 1.0]).unwrap();
        let gx = act(&g, &project(&[1.0, 1.0]).unwrap());
        assert!(close(gx.rep(), project(&[2.0, 1.0]).unwrap().rep(), 1e-15));
    }

    #[test]
    fn dual_act_fixes_transpose_eigendirection() {
        let g = Matrix::diag(&[2.0, 1.0]).unwrap();
        let y = DualProjPoint::basis(2, 0);
        assert_eq!(dual_act(&g, &y), y);
        assert_eq!(dual_act(&Matrix::identity(2), &y), y);
    }

    #[test]
    fn delta_examples() {
        let e1 = ProjPoint::basis(2, 0);
        let e2 = ProjPoint::basis(2, 1);
        let f1 = DualProjPoint::basis(2, 0);
        assert_eq!(delta(&f1, &e1), 1.0);
        assert_eq!(delta(&f1, &e2), 0.0);
        let x = project(&[1.0, 1.0, 0.0]).unwrap();
        assert!((delta(&DualProjPoint::basis(3, 0), &x) - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(log_delta(&f1, &e2), LOG_DELTA_FLOOR);
    }

    #[test]
    fn dist_examples() {
        let e1 = ProjPoint::basis(2, 0);
        let e2 = ProjPoint::basis(2, 1);
        assert_eq!(dist(&e1, &e1), 0.0);
        assert_eq!(dist(&e1, &e2), 1.0);
        let diag = project(&[1.0, 1.0]).unwrap();
        assert!((dist(&e1, &diag) - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn cocycle_examples() {
        let x = project(&[0.2, 0.9]).unwrap();
        assert!(cocycle(&Matrix::identity(2), &x).abs() < 1e-15);
        assert!((cocycle(&Matrix::scalar(2, 3.0).unwrap(), &x) - 3f64.ln()).abs() < 1e-15);
        let g1 = Matrix::diag(&[2.0, 1.0]).unwrap();
        let g2 = Matrix::rotation(PI / 2.0);
        let e1 = ProjPoint::basis(2, 0);
        let chain = cocycle(&g2, &act(&g1, &e1)) + cocycle(&g1, &e1);
        assert!((chain - 2f64.ln()).abs() < 1e-15);
        assert!((cocycle(&g2.mul(&g1).unwrap(), &e1) - chain).abs() < 1e-15);
    }

    #[test]
    fn dual_cocycle_examples() {
        let y = DualProjPoint::new(&[0.5, -0.1]).unwrap();
        assert_eq!(dual_cocycle(&Matrix::identity(2), &y), 0.0);
        assert!((dual_cocycle(&Matrix::scalar(2, 0.5).unwrap(), &y) - 0.5f64.ln()).abs() < 1e-15);
        let g = Matrix::new(2, vec![1.0, 2.0, -0.5, 3.0]).unwrap();
        assert!((dual_cocycle(&g, &y) - cocycle(&g.transpose(), &y.as_point())).abs() < 1e-15);
    }

    #[test]
    fn cohomology_examples() {
        let e1 = ProjPoint::basis(2, 0);
        let f1 = DualProjPoint::basis(2, 0);
        let x = project(&[0.3, 0.4]).unwrap();
        let y = DualProjPoint::new(&[-1.0, 0.2]).unwrap();
        assert!(cohomology_residual(&Matrix::identity(2), &x, &y).unwrap().abs() < 1e-15);
        let g = Matrix::diag(&[2.0, 1.0]).unwrap();
        assert_eq!(cohomology_residual(&g, &e1, &f1).unwrap(), 0.0);
    }

    #[test]
    fn cohomology_degenerate_cases() {
        let e1 = ProjPoint::basis(2, 0);
        let f2 = DualProjPoint::basis(2, 1);
        // both sides vanish for g = I
        assert_eq!(cohomology_residual(&Matrix::identity(2), &e1, &f2).unwrap(), 0.0);
    }

    #[test]
    fn singular_matrices_rejected() {
        assert!(matches!(Matrix::new(2, vec![1.0, 2.0, 2.0, 4.0]), Err(Error::SingularMatrix(_))));
        assert!(matches!(Matrix::diag(&[1.0, 1e-13]), Err(Error::SingularMatrix(_))));
        assert!(Matrix::diag(&[1.0, 1e-11]).is_ok());
        assert!(matches!(Matrix::new(2, vec![1.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn norms_cached() {
        let g = Matrix::diag(&[2.0, 0.25]).unwrap();
        assert!((g.norm() - 2.0).abs() < 1e-14);
        assert!((g.inverse_norm() - 4.0).abs() < 1e-14);
        assert!((g.n_value() - 4.0).abs() < 1e-14);
        let prod = g.mul(&g.inverse()).unwrap();
        assert!(close(prod.entries(), Matrix::identity(2).entries(), 1e-15));
    }

    #[test]
    fn quarter_turns_are_exact() {
        let r = Matrix::rotation(PI / 2.0);
        assert_eq!(r.entries(), &[0.0, -1.0, 1.0, 0.0]);
        assert_eq!(act(&r, &ProjPoint::basis(2, 0)), ProjPoint::basis(2, 1));
    }
}
