//! Finitely supported laws on `GL(d, R)`.
//!
//! Two variants are supported: an arbitrary finite support, and generators
//! of the isometry group `O(q)` of the form
//! `q(v) = v_1^2 + ... + v_p^2 - v_{p+1}^2 - ... - v_d^2`. Conditions such as
//! strong irreducibility cannot be decided from samples; the diagnostics
//! below only report evidence.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projgeom::Matrix;

const PROB_TOL: f64 = 1e-12;
const ISOMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Variant {
    FiniteSupport,
    /// Generators of `O(q)` for the signature `(p, d - p)`.
    IsometryGenerators { p: usize },
}

#[derive(Clone, Debug)]
pub struct MatrixEnsemble {
    d: usize,
    variant: Variant,
    matrices: Vec<Matrix>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl MatrixEnsemble {
    pub fn finite(matrices: Vec<Matrix>, probs: Vec<f64>) -> Result<Self> {
        Self::build(Variant::FiniteSupport, matrices, probs)
    }

    /// An ensemble of `O(q)` elements; each matrix is checked against the form.
    pub fn isometry_generators(p: usize, matrices: Vec<Matrix>, probs: Vec<f64>) -> Result<Self> {
        let d = matrices.first().map(Matrix::dim).unwrap_or(0);
        if p == 0 || p >= d {
            return Err(Error::BadSignature { p, d });
        }
        for (k, g) in matrices.iter().enumerate() {
            let r = isometry_residual(p, g);
            if r >= ISOMETRY_TOL {
                return Err(Error::InvalidEnsemble(format!(
                    "generator {k} does not preserve q (residual {r:e})"
                )));
            }
        }
        Self::build(Variant::IsometryGenerators { p }, matrices, probs)
    }

    fn build(variant: Variant, matrices: Vec<Matrix>, probs: Vec<f64>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidEnsemble("support is empty".into()));
        }
        if matrices.len() != probs.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} matrices but {} probabilities",
                matrices.len(),
                probs.len()
            )));
        }
        let d = matrices[0].dim();
        if let Some(g) = matrices.iter().find(|g| g.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: g.dim() });
        }
        if probs.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidEnsemble("probabilities must be positive".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidEnsemble(format!(
                "probabilities sum to {total} (deviation {:e})",
                total - 1.0
            )));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cumulative.last_mut().expect("nonempty") = 1.0;
        Ok(MatrixEnsemble { d, variant, matrices, probs, cumulative })
    }

    /// Point mass at `g`.
    pub fn point_mass(g: Matrix) -> Self {
        Self::finite(vec![g], vec![1.0]).expect("valid point mass")
    }

    /// `{diag(2, 1/2), rotation(pi/2)}` with equal weights.
    pub fn two_matrix() -> Self {
        Self::finite(
            vec![
                Matrix::diag(&[2.0, 0.5]).expect("invertible"),
                Matrix::rotation(std::f64::consts::FRAC_PI_2),
            ],
            vec![0.5, 0.5],
        )
        .expect("valid ensemble")
    }

    /// The `O(2,1)` ensemble used for the light-cone experiments: rotations by
    /// 1 and 2.5 radians in the negative block and boosts of rapidity `r`
    /// mixing `e_1` with `e_2` and with `e_3`.
    pub fn light_cone(rapidity: f64) -> Self {
        oq_generators(1, 3, &[1.0, 2.5], &[rapidity, rapidity]).expect("valid signature")
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Matrix, f64)> {
        self.matrices.iter().zip(self.probs.iter().copied())
    }

    #[inline]
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.matrices.len() == 1 {
            return 0;
        }
        let u: f64 = rng.gen();
        self.cumulative.iter().position(|c| u < *c).unwrap_or(self.cumulative.len() - 1)
    }

    /// One draw of `g` with law `mu`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Matrix {
        &self.matrices[self.sample_index(rng)]
    }

    /// Parses an ensemble definition file (see `docs/formats.md`).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let def: EnsembleFile = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0);
            Error::Format { line, msg: e.message().to_string() }
        })?;
        def.build()
    }
}

/// `q(v)` for the signature `(p, d - p)`.
pub fn quadratic_form(p: usize, v: &[f64]) -> f64 {
    v.iter().enumerate().map(|(i, x)| if i < p { x * x } else { -x * x }).sum()
}

/// `max |q(g e) - q(e)|` over the basis vectors and their pairwise sums,
/// which determines whether `g` preserves the polar bilinear form.
pub fn isometry_residual(p: usize, g: &Matrix) -> f64 {
    let d = g.dim();
    let mut worst: f64 = 0.0;
    let mut check = |v: &[f64]| {
        let gv = g.apply_vec(v);
        worst = worst.max((quadratic_form(p, &gv) - quadratic_form(p, v)).abs());
    };
    for i in 0..d {
        for j in i..d {
            let mut v = vec![0.0; d];
            v[i] += 1.0;
            v[j] += 1.0;
            check(&v);
        }
    }
    worst
}

/// Generators of `O(q)`: block rotations by each angle and hyperbolic boosts
/// with each rapidity.
///
/// Angle `k` rotates the `k`-th coordinate plane among the consecutive planes
/// of the positive block followed by those of the negative block (cycling).
/// Rapidity `k` mixes positive coordinate `k mod p` with negative coordinate
/// `p + k mod (d - p)` through the entries `cosh r`, `sinh r`. All generators
/// get equal probability.
pub fn oq_generators(p: usize, d: usize, angles: &[f64], rapidities: &[f64]) -> Result<MatrixEnsemble> {
    if d < 3 || p == 0 || p >= d {
        return Err(Error::BadSignature { p, d });
    }
    let mut planes = Vec::new();
    for i in 0..p.saturating_sub(1) {
        planes.push((i, i + 1));
    }
    for i in p..d - 1 {
        planes.push((i, i + 1));
    }
    let mut gens = Vec::new();
    for (k, &a) in angles.iter().enumerate() {
        let (i, j) = planes[k % planes.len()];
        let mut e = identity_entries(d);
        let (c, s) = (a.cos(), a.sin());
        e[i * d + i] = c;
        e[i * d + j] = -s;
        e[j * d + i] = s;
        e[j * d + j] = c;
        gens.push(Matrix::new(d, e)?);
    }
    for (k, &r) in rapidities.iter().enumerate() {
        let i = k % p;
        let j = p + k % (d - p);
        let mut e = identity_entries(d);
        let (c, s) = (r.cosh(), r.sinh());
        e[i * d + i] = c;
        e[i * d + j] = s;
        e[j * d + i] = s;
        e[j * d + j] = c;
        gens.push(Matrix::new(d, e)?);
    }
    if gens.is_empty() {
        return Err(Error::InvalidEnsemble("no generators requested".into()));
    }
    let w = 1.0 / gens.len() as f64;
    let probs = vec![w; gens.len()];
    MatrixEnsemble::isometry_generators(p, gens, probs)
}

fn identity_entries(d: usize) -> Vec<f64> {
    let mut e = vec![0.0; d * d];
    for i in 0..d {
        e[i * d + i] = 1.0;
    }
    e
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub s_grid: Vec<f64>,
    /// `int ||g||^s dmu` at each `s`.
    pub norm_moments: Vec<f64>,
    /// `int N(g)^{-s} dmu` at each `s` (the quantity defining `I_mu^-`).
    pub n_moments: Vec<f64>,
    pub alpha: f64,
    /// `int N(g)^alpha dmu`.
    pub two_sided_moment: f64,
    pub in_i_plus: Vec<bool>,
    pub in_i_minus: Vec<bool>,
}

/// Exact moment sums for a finite support.
pub fn moment_diagnostic(ensemble: &MatrixEnsemble, s_grid: &[f64], alpha: f64) -> MomentReport {
    let norm_moments: Vec<f64> =
        s_grid.iter().map(|&s| ensemble.iter().map(|(g, p)| p * g.norm().powf(s)).sum()).collect();
    let n_moments: Vec<f64> =
        s_grid.iter().map(|&s| ensemble.iter().map(|(g, p)| p * g.n_value().powf(-s)).sum()).collect();
    let two_sided_moment = ensemble.iter().map(|(g, p)| p * g.n_value().powf(alpha)).sum();
    MomentReport {
        s_grid: s_grid.to_vec(),
        in_i_plus: s_grid.iter().zip(&norm_moments).map(|(s, m)| *s >= 0.0 && m.is_finite()).collect(),
        in_i_minus: s_grid.iter().zip(&n_moments).map(|(s, m)| *s <= 0.0 && m.is_finite()).collect(),
        norm_moments,
        n_moments,
        alpha,
        two_sided_moment,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProximalityReport {
    pub word_length: usize,
    pub trials: usize,
    /// Largest observed `|lambda_1| / |lambda_2|` over sampled words.
    pub max_ratio: f64,
    /// Whether some word exceeded ratio `1 + 1e-6`. Evidence only.
    pub proximal_evidence: bool,
}

/// Samples words `G_n` and records the gap between the two largest
/// eigenvalue moduli.
pub fn proximality_diagnostic<R: Rng + ?Sized>(
    ensemble: &MatrixEnsemble,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<ProximalityReport> {
    if n == 0 {
        return Err(Error::InvalidInput("word length must be at least 1".into()));
    }
    let d = ensemble.dim();
    let mut max_ratio: f64 = 0.0;
    for _ in 0..trials {
        let mut prod = DMatrix::<f64>::identity(d, d);
        for _ in 0..n {
            let g = ensemble.sample(rng);
            prod = DMatrix::from_row_slice(d, d, g.entries()) * prod;
            let scale = prod.amax();
            prod /= scale;
        }
        let mut moduli: Vec<f64> = prod.complex_eigenvalues().iter().map(|z| z.norm()).collect();
        moduli.sort_by(|a, b| b.total_cmp(a));
        let ratio = if moduli[1] > 0.0 { moduli[0] / moduli[1] } else { f64::INFINITY };
        max_ratio = max_ratio.max(ratio);
    }
    Ok(ProximalityReport { word_length: n, trials, max_ratio, proximal_evidence: max_ratio > 1.0 + 1e-6 })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleFile {
    d: usize,
    variant: String,
    p: Option<usize>,
    angles: Option<Vec<f64>>,
    rapidities: Option<Vec<f64>>,
    #[serde(default)]
    matrix: Vec<MatrixEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixEntry {
    prob: f64,
    rows: Vec<Vec<f64>>,
}

impl EnsembleFile {
    fn build(self) -> Result<MatrixEnsemble> {
        let matrices = || -> Result<(Vec<Matrix>, Vec<f64>)> {
            let mut ms = Vec::new();
            let mut ps = Vec::new();
            for m in &self.matrix {
                let g = Matrix::from_rows(&m.rows)?;
                if g.dim() != self.d {
                    return Err(Error::DimensionMismatch { expected: self.d, got: g.dim() });
                }
                ms.push(g);
                ps.push(m.prob);
            }
            Ok((ms, ps))
        };
        match self.variant.as_str() {
            "finite" => {
                let (ms, ps) = matrices()?;
                MatrixEnsemble::finite(ms, ps)
            }
            "isometry" => {
                let p = self.p.ok_or_else(|| Error::InvalidEnsemble("isometry variant needs p".into()))?;
                if let (Some(angles), Some(rapidities)) = (&self.angles, &self.rapidities) {
                    if !self.matrix.is_empty() {
                        return Err(Error::InvalidEnsemble(
                            "give either generator parameters or explicit matrices, not both".into(),
                        ));
                    }
                    oq_generators(p, self.d, angles, rapidities)
                } else {
                    let (ms, ps) = matrices()?;
                    MatrixEnsemble::isometry_generators(p, ms, ps)
                }
            }
            other => Err(Error::InvalidEnsemble(format!("unknown variant '{other}'"))),
        }
    }
}
