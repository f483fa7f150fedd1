use serde::Serialize;

use super::grid::{GridSpec, ProjGrid};
use super::operator::{build_dual_operator, build_operator, OperatorMatrix};
use crate::ensemble::MatrixEnsemble;
use crate::error::{Error, Result};
use crate::projgeom::{delta, DualProjPoint, ProjPoint};
use crate::stats;

/// Stopping tolerance on successive eigenvalue estimates.
pub const RAYLEIGH_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 100_000;
/// Modulus ratio above which a stalled iteration is reported as gapless.
pub const NO_GAP_RATIO: f64 = 0.999;
/// Brackets below this value count as singular for negative `s`.
pub const SINGULAR_DELTA: f64 = 1e-8;
/// Largest singular mass tolerated before giving up.
pub const SINGULAR_MASS: f64 = 0.01;

/// Dominant eigenvalue with right eigenvector `r` and left eigenmeasure `nu`
/// (grid masses summing to 1), normalized by `nu(r) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenTriple {
    pub kappa: f64,
    pub r: Vec<f64>,
    pub nu: Vec<f64>,
    /// Estimated `|lambda_2| / kappa`.
    pub gap: f64,
    pub residual_r: f64,
    pub residual_nu: f64,
    pub iterations: usize,
}

impl EigenTriple {
    /// `nu(phi r) / nu(r)`.
    pub fn pi(&self, phi: &[f64]) -> f64 {
        let num: f64 = self.nu.iter().zip(&self.r).zip(phi).map(|((n, r), p)| n * r * p).sum();
        let den: f64 = self.nu.iter().zip(&self.r).map(|(n, r)| n * r).sum();
        num / den
    }

    /// `nu(phi)`.
    pub fn nu_of(&self, phi: &[f64]) -> f64 {
        self.nu.iter().zip(phi).map(|(n, p)| n * p).sum()
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Power iteration for `r`, adjoint power iteration for `nu`, and a
/// deflated iteration for the modulus of the second eigenvalue.
pub fn dominant_eigen(a: &OperatorMatrix) -> Result<EigenTriple> {
    let n = a.size();
    if n == 0 {
        return Err(Error::InvalidInput("empty operator".into()));
    }
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut kappa = f64::NAN;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        a.apply_into(&x, &mut y);
        iterations += 1;
        let k = sup(&y);
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidInput("operator annihilates the positive cone".into()));
        }
        let change = (k - kappa).abs();
        kappa = k;
        let res = x.iter().zip(&y).fold(0.0f64, |m, (xi, yi)| m.max((yi - k * xi).abs()));
        x.iter_mut().zip(&y).for_each(|(xi, yi)| *xi = yi / k);
        if change <= RAYLEIGH_TOL * k && res <= RAYLEIGH_TOL * k {
            converged = true;
            break;
        }
    }

    let mut nu = vec![1.0 / n as f64; n];
    let mut z = vec![0.0; n];
    let mut nu_iterations = 0;
    while nu_iterations < MAX_ITERATIONS {
        a.apply_transpose_into(&nu, &mut z);
        nu_iterations += 1;
        let mass: f64 = z.iter().sum();
        let diff: f64 = z.iter().zip(&nu).map(|(zi, ni)| (zi / mass - ni).abs()).sum();
        nu.iter_mut().zip(&z).for_each(|(ni, zi)| *ni = zi / mass);
        if diff <= RAYLEIGH_TOL * 0.1 {
            break;
        }
    }
    if nu_iterations == MAX_ITERATIONS {
        converged = false;
    }

    let scale: f64 = nu.iter().zip(&x).map(|(a, b)| a * b).sum();
    let r: Vec<f64> = x.iter().map(|v| v / scale).collect();
    let ar = a.apply(&r);
    let residual_r = ar.iter().zip(&r).fold(0.0f64, |m, (p, q)| m.max((p - kappa * q).abs()));
    let atn = a.apply_transpose(&nu);
    let residual_nu: f64 = atn.iter().zip(&nu).map(|(p, q)| (p - kappa * q).abs()).sum();
    let gap = deflated_ratio(a, kappa, &r, &nu);
    if !converged && gap > NO_GAP_RATIO {
        return Err(Error::NoGap(gap));
    }
    Ok(EigenTriple { kappa, r, nu, gap, residual_r, residual_nu, iterations: iterations.max(nu_iterations) })
}

/// Growth rate of `A - kappa r nu^T` relative to `kappa`, from the geometric
/// mean of norm ratios over the second half of the run.
fn deflated_ratio(a: &OperatorMatrix, kappa: f64, r: &[f64], nu: &[f64]) -> f64 {
    let n = r.len();
    let mut x: Vec<f64> = (0..n).map(|i| ((i as f64 + 1.0) * 0.754_877_666_246_692_8).fract() - 0.5).collect();
    let project_out = |x: &mut Vec<f64>| {
        let c: f64 = nu.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(r).for_each(|(xi, ri)| *xi -= c * ri);
    };
    project_out(&mut x);
    let mut previous = f64::NAN;
    let mut log_norms = vec![0.0];
    let mut budget = 256;
    let mut y = vec![0.0; n];
    loop {
        while log_norms.len() <= budget {
            a.apply_into(&x, &mut y);
            std::mem::swap(&mut x, &mut y);
            project_out(&mut x);
            let s = sup(&x);
            if s == 0.0 || !s.is_finite() {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v /= s);
            let last = *log_norms.last().unwrap();
            log_norms.push(last + s.ln());
        }
        let half = budget / 2;
        let rate = ((log_norms[budget] - log_norms[half]) / (budget - half) as f64).exp() / kappa;
        if (rate - previous).abs() < 1e-3 || budget >= 8192 {
            return rate;
        }
        previous = rate;
        budget *= 2;
    }
}

/// Dual eigentriple of `P_s^*` on `grid` read as a dual grid.
pub fn dual_spectral(ensemble: &MatrixEnsemble, grid: &ProjGrid, s: f64) -> Result<EigenTriple> {
    dominant_eigen(&build_dual_operator(ensemble, grid, s)?)
}

/// Primal and dual eigentriples at one `s`.
#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub s: f64,
    pub grid: ProjGrid,
    /// Grid of the dual space; its points are read as functionals.
    pub dual_grid: ProjGrid,
    pub primal: EigenTriple,
    pub dual: EigenTriple,
}

impl SpectralResult {
    /// Both triples, with the dual triple on the same grid.
    pub fn compute(ensemble: &MatrixEnsemble, grid: &ProjGrid, s: f64) -> Result<Self> {
        Self::compute_with_dual(ensemble, grid, grid, s)
    }

    pub fn compute_with_dual(ensemble: &MatrixEnsemble, grid: &ProjGrid, dual_grid: &ProjGrid, s: f64) -> Result<Self> {
        let primal = dominant_eigen(&build_operator(ensemble, grid, s)?)?;
        let dual = dual_spectral(ensemble, dual_grid, s)?;
        Ok(SpectralResult { s, grid: grid.clone(), dual_grid: dual_grid.clone(), primal, dual })
    }

    /// Interpolated `r_s(x)`.
    pub fn r_at(&self, x: &ProjPoint) -> f64 {
        self.grid.interp(x).eval(&self.primal.r)
    }

    /// Interpolated `r_s^*(y)`.
    pub fn r_dual_at(&self, y: &DualProjPoint) -> f64 {
        self.dual_grid.interp(&y.as_point()).eval(&self.dual.r)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("projwalk-spectral 1\n");
        out += &format!("s {:.16e}\n", self.s);
        for (key, grid) in [("grid", &self.grid), ("dual_grid", &self.dual_grid)] {
            out += &match grid.spec() {
                GridSpec::Angle { m, offset } => format!("{key} angle {m} {offset:.16e}\n"),
                GridSpec::Cloud { d, count, seed } => format!("{key} cloud {d} {count} {seed}\n"),
            };
        }
        for (name, t) in [("primal", &self.primal), ("dual", &self.dual)] {
            out += &format!("side {name}\n");
            out += &format!("kappa {:.16e}\n", t.kappa);
            out += &format!("gap {:.16e}\n", t.gap);
            out += &format!("residuals {:.16e} {:.16e}\n", t.residual_r, t.residual_nu);
            out += &format!("iterations {}\n", t.iterations);
            out += "r\n";
            t.r.iter().for_each(|v| out += &format!("{v:.16e}\n"));
            out += "nu\n";
            t.nu.iter().for_each(|v| out += &format!("{v:.16e}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut rd = Reader { lines: text.lines().collect(), pos: 0 };
        if rd.line("header")? != "projwalk-spectral 1" {
            return Err(rd.err("missing header 'projwalk-spectral 1'"));
        }
        let s = rd.keyed_f64("s")?;
        let grid = rd.grid("grid")?;
        let dual_grid = rd.grid("dual_grid")?;
        let triple = |rd: &mut Reader, name: &str| -> Result<EigenTriple> {
            if rd.keyed("side")? != [name.to_string()] {
                return Err(rd.err(&format!("expected side {name}")));
            }
            let kappa = rd.keyed_f64("kappa")?;
            let gap = rd.keyed_f64("gap")?;
            let res = rd.keyed("residuals")?;
            if res.len() != 2 {
                return Err(rd.err("expected two residuals"));
            }
            let (residual_r, residual_nu) = (rd.num(&res[0])?, rd.num(&res[1])?);
            let it = rd.keyed("iterations")?;
            let iterations = it.first().and_then(|t| t.parse().ok()).ok_or_else(|| rd.err("bad iteration count"))?;
            let m = if name == "primal" { grid.len() } else { dual_grid.len() };
            let r = rd.vector("r", m)?;
            let nu = rd.vector("nu", m)?;
            Ok(EigenTriple { kappa, r, nu, gap, residual_r, residual_nu, iterations })
        };
        let primal = triple(&mut rd, "primal")?;
        let dual = triple(&mut rd, "dual")?;
        Ok(SpectralResult { s, grid, dual_grid, primal, dual })
    }
}

struct Reader<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Format { line: self.pos.max(1), msg: msg.to_string() }
    }

    fn line(&mut self, what: &str) -> Result<&'a str> {
        let l = self.lines.get(self.pos).map(|l| l.trim());
        self.pos += 1;
        l.ok_or_else(|| self.err(&format!("unexpected end of file, expected {what}")))
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let l = self.line(key)?;
        let mut it = l.split_whitespace();
        if it.next() != Some(key) {
            return Err(self.err(&format!("expected '{key}'")));
        }
        Ok(it.map(str::to_string).collect())
    }

    fn num(&self, tok: &str) -> Result<f64> {
        tok.parse::<f64>().map_err(|_| self.err(&format!("bad number '{tok}'")))
    }

    fn keyed_f64(&mut self, key: &str) -> Result<f64> {
        let v = self.keyed(key)?;
        match v.as_slice() {
            [t] => self.num(t),
            _ => Err(self.err(&format!("expected one value after '{key}'"))),
        }
    }

    fn grid(&mut self, key: &str) -> Result<ProjGrid> {
        let g = self.keyed(key)?;
        let int = |k: usize| -> Result<u64> { g.get(k).and_then(|t| t.parse().ok()).ok_or_else(|| self.err("bad grid parameter")) };
        let spec = match g.first().map(String::as_str) {
            Some("angle") => GridSpec::Angle {
                m: int(1)? as usize,
                offset: g.get(2).map(|t| self.num(t)).transpose()?.unwrap_or(0.0),
            },
            Some("cloud") => GridSpec::Cloud { d: int(1)? as usize, count: int(2)? as usize, seed: int(3)? },
            _ => return Err(self.err("unknown grid kind")),
        };
        ProjGrid::from_spec(&spec)
    }

    fn vector(&mut self, key: &str, m: usize) -> Result<Vec<f64>> {
        if self.line(key)? != key {
            return Err(self.err(&format!("expected '{key}'")));
        }
        (0..m)
            .map(|k| {
                let l = self.line(key).map_err(|_| self.err(&format!("truncated: {k} of {m} values of '{key}'")))?;
                self.num(l)
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Consistency {
    /// `min_c max_i |r_i - c F_i| / max_i r_i`.
    pub residual: f64,
    pub scale: f64,
    /// Largest dual mass dropped at a single node for `delta < 1e-8`.
    pub excluded_mass: f64,
    /// Mesh size `h` of the grid-error model.
    pub grid_error: f64,
}

/// Compares `r_s` with `F(x) = sum_j nu*_j delta(x, y_j)^s` after the best
/// scalar matching.
pub fn eigenfunction_consistency(spec: &SpectralResult) -> Result<Consistency> {
    let s = spec.s;
    let grid = &spec.grid;
    let duals: Vec<DualProjPoint> = spec.dual_grid.points().iter().map(ProjPoint::as_dual).collect();
    let mut excluded_mass = 0.0f64;
    let f: Vec<f64> = grid
        .points()
        .iter()
        .map(|x| {
            let mut acc = 0.0;
            let mut dropped = 0.0;
            for (y, w) in duals.iter().zip(&spec.dual.nu) {
                if *w == 0.0 {
                    continue;
                }
                let dl = delta(y, x);
                if s < 0.0 && dl < SINGULAR_DELTA {
                    dropped += w;
                } else {
                    acc += w * dl.powf(s);
                }
            }
            excluded_mass = excluded_mass.max(dropped);
            acc
        })
        .collect();
    if excluded_mass > SINGULAR_MASS {
        return Err(Error::SingularBracket { mass: excluded_mass });
    }
    let r = &spec.primal.r;
    let misfit = |c: f64| r.iter().zip(&f).fold(0.0f64, |m, (a, b)| m.max((a - c * b).abs()));
    let ratios = r.iter().zip(&f).filter(|(_, b)| **b > 0.0).map(|(a, b)| a / b);
    let (lo, hi) = ratios.fold((f64::INFINITY, 0.0f64), |(l, h), q| (l.min(q), h.max(q)));
    let scale = golden_min(misfit, lo, hi);
    Ok(Consistency { residual: misfit(scale) / sup(r), scale, excluded_mass, grid_error: grid.spacing() })
}

/// Minimizer of a unimodal function on `[a, b]`.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    if !(a < b) {
        return a;
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}

/// `Q_s^n phi` with `Q_s phi = P_s(r_s phi) / (kappa r_s)`.
pub fn markov_q(a: &OperatorMatrix, triple: &EigenTriple, phi: &[f64], n: usize) -> Vec<f64> {
    let mut cur = phi.to_vec();
    let mut tmp = vec![0.0; cur.len()];
    for _ in 0..n {
        cur.iter_mut().zip(&triple.r).for_each(|(c, r)| *c *= r);
        a.apply_into(&cur, &mut tmp);
        for ((c, t), r) in cur.iter_mut().zip(&tmp).zip(&triple.r) {
            *c = t / (triple.kappa * r);
        }
    }
    cur
}

/// Per-step contraction factor of `||Q_s^n phi - pi_s(phi)||_sup`, fitted
/// over the second half of the iterates above the rounding floor.
pub fn q_decay_rate(a: &OperatorMatrix, triple: &EigenTriple, phi: &[f64], n_max: usize) -> Option<f64> {
    let target = triple.pi(phi);
    let mut cur = phi.to_vec();
    let first = cur.iter().fold(0.0f64, |m, v| m.max((v - target).abs()));
    let mut pts = Vec::new();
    for n in 1..=n_max {
        cur = markov_q(a, triple, &cur, 1);
        let e = cur.iter().fold(0.0f64, |m, v| m.max((v - target).abs()));
        if e <= 1e-11 * first.max(1e-300) {
            break;
        }
        pts.push((n as f64, e.ln()));
    }
    if pts.len() < 4 {
        return None;
    }
    let tail = &pts[pts.len() / 2..];
    let xs: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.1).collect();
    Some(stats::ols(&xs, &ys).slope.exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct KappaExpansion {
    /// `kappa'(0)`, which equals the Lyapunov exponent.
    pub lambda: f64,
    /// `(log kappa)''(0)`.
    pub sigma2: f64,
    pub kappa_minus: f64,
    pub kappa_zero: f64,
    pub kappa_plus: f64,
    pub h: f64,
}

/// Centered finite differences of `log kappa` at `s = 0` with step `h`.
pub fn kappa_expansion(ensemble: &MatrixEnsemble, grid: &ProjGrid, h: f64) -> Result<KappaExpansion> {
    let k = |s: f64| -> Result<f64> { Ok(dominant_eigen(&build_operator(ensemble, grid, s)?)?.kappa) };
    let (km, k0, kp) = (k(-h)?, k(0.0)?, k(h)?);
    Ok(KappaExpansion {
        lambda: (kp - km) / (2.0 * h),
        sigma2: (kp.ln() - 2.0 * k0.ln() + km.ln()) / (h * h),
        kappa_minus: km,
        kappa_zero: k0,
        kappa_plus: kp,
        h,
    })
}

/// `kappa'(s) / kappa(s)` by centered differences.
pub fn kappa_log_derivative(ensemble: &MatrixEnsemble, grid: &ProjGrid, s: f64, h: f64) -> Result<f64> {
    let k = |s: f64| -> Result<f64> { Ok(dominant_eigen(&build_operator(ensemble, grid, s)?)?.kappa) };
    Ok((k(s + h)?.ln() - k(s - h)?.ln()) / (2.0 * h))
}
