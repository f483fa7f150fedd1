use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::ProjGrid;
use crate::ensemble::MatrixEnsemble;
use crate::error::{Error, Result};
use crate::projgeom::{act, cocycle, dual_act, dual_cocycle, Matrix};

/// Default admissible range of the tilt parameter `s`.
pub const DEFAULT_S_RANGE: (f64, f64) = (-0.5, 2.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `P_s` acting through `x -> g x`.
    Primal,
    /// `P_s^*` acting through `y -> g^* y`.
    Dual,
}

/// Sparse row-compressed discretization of a transfer operator on a grid.
/// Each row has at most `2 |supp mu|` entries, so rows are stored
/// compressed rather than dense.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix<T = f64> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

pub type ComplexOperator = OperatorMatrix<Complex64>;

impl<T> OperatorMatrix<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<Output = T> + std::ops::AddAssign + Send + Sync,
{
    fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let (c, mut v) = row[k];
                k += 1;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        OperatorMatrix { n, row_ptr, cols, vals }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i).find(|e| e.0 == j).map(|e| e.1).unwrap_or_default()
    }

    /// `out = A x`.
    pub fn apply_into(&self, x: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = T::default();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); self.n];
        self.apply_into(x, &mut out);
        out
    }

    /// `out = A^T x`.
    pub fn apply_transpose_into(&self, x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::default());
        for (i, xi) in x.iter().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.cols[k]] += self.vals[k] * *xi;
            }
        }
    }

    pub fn apply_transpose(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); self.n];
        self.apply_transpose_into(x, &mut out);
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|i| {
                let mut r = vec![T::default(); self.n];
                for (j, v) in self.row(i) {
                    r[j] = v;
                }
                r
            })
            .collect()
    }
}

impl OperatorMatrix<f64> {
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|e| e.1).sum()).collect()
    }
}

fn check(ensemble: &MatrixEnsemble, grid: &ProjGrid) -> Result<()> {
    if ensemble.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: ensemble.dim(), got: grid.dim() });
    }
    Ok(())
}

fn check_s(s: f64, range: (f64, f64)) -> Result<()> {
    if !(range.0..=range.1).contains(&s) {
        return Err(Error::InvalidInput(format!("s = {s} outside the admissible range [{}, {}]", range.0, range.1)));
    }
    Ok(())
}

/// Generic row builder: `row_i = sum_g mu(g) weight(g, x_i) * interp(image(g, x_i))`.
fn build<T, W>(ensemble: &MatrixEnsemble, grid: &ProjGrid, side: Side, weight: W) -> OperatorMatrix<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<Output = T> + std::ops::AddAssign + Send + Sync,
    W: Fn(f64) -> T + Sync,
    f64: Into<T>,
{
    let rows: Vec<Vec<(usize, T)>> = grid
        .points()
        .par_iter()
        .map(|x| {
            let mut row = Vec::with_capacity(2 * ensemble.len());
            for (g, p) in ensemble.iter() {
                let (image, sigma) = image_and_cocycle(g, x, side);
                let c = weight(sigma) * p.into();
                for (j, w) in grid.interp(&image).iter() {
                    row.push((j, c * w.into()));
                }
            }
            row
        })
        .collect();
    OperatorMatrix::from_rows(rows)
}

/// The image of a node and the cocycle along the move, for either side.
pub(crate) fn image_and_cocycle(g: &Matrix, x: &crate::projgeom::ProjPoint, side: Side) -> (crate::projgeom::ProjPoint, f64) {
    match side {
        Side::Primal => (act(g, x), cocycle(g, x)),
        Side::Dual => {
            let y = x.as_dual();
            (dual_act(g, &y).as_point(), dual_cocycle(g, &y))
        }
    }
}

/// Discretized `P_s`: entry `(i, j) = sum_g mu(g) e^{s sigma(g, x_i)} w_j(g x_i)`.
pub fn build_operator(ensemble: &MatrixEnsemble, grid: &ProjGrid, s: f64) -> Result<OperatorMatrix> {
    build_operator_in_range(ensemble, grid, s, Side::Primal, DEFAULT_S_RANGE)
}

/// Discretized `P_s^*` on the dual grid.
pub fn build_dual_operator(ensemble: &MatrixEnsemble, grid: &ProjGrid, s: f64) -> Result<OperatorMatrix> {
    build_operator_in_range(ensemble, grid, s, Side::Dual, DEFAULT_S_RANGE)
}

pub fn build_operator_in_range(
    ensemble: &MatrixEnsemble,
    grid: &ProjGrid,
    s: f64,
    side: Side,
    range: (f64, f64),
) -> Result<OperatorMatrix> {
    check(ensemble, grid)?;
    check_s(s, range)?;
    Ok(build(ensemble, grid, side, |sigma| if s == 0.0 { 1.0 } else { (s * sigma).exp() }))
}

/// Discretized `P_{it}`: entries `sum_g mu(g) e^{it (sigma(g, x_i) - lambda)} w_j(g x_i)`.
pub fn build_perturbed(ensemble: &MatrixEnsemble, grid: &ProjGrid, t: f64, lambda: f64) -> Result<ComplexOperator> {
    check(ensemble, grid)?;
    Ok(build(ensemble, grid, Side::Primal, |sigma| {
        if t == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, t * (sigma - lambda))
        }
    }))
}
