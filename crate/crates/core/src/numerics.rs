//! Dense small-matrix kernel.
//!
//! Everything here works on row-major `f64` matrices of a few dozen entries:
//! one-sided Jacobi SVD (rank, nullspace, pseudo-inverse), LU solves,
//! cyclic Jacobi for symmetric eigenvalues and a two-phase tableau simplex
//! with Bland's rule for the constraint-qualification linear programs.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default threshold on `sigma_min / sigma_max` below which a square matrix
/// is treated as singular (condition estimate above `1e12`).
pub const DEFAULT_SINGULAR_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 80;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("matrix is singular (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex did not terminate within {0} pivots")]
    IterationLimit(usize),
}

/// Row-major dense matrix with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::ShapeMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices. All rows must share one length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, NumericsError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(NumericsError::ShapeMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `(A + A^T) / 2`; panics on non-square input.
    pub fn symmetric_part(&self) -> DenseMatrix {
        assert_eq!(self.rows, self.cols, "symmetric part of a non-square matrix");
        let mut s = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                s[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)]);
            }
        }
        s
    }

    pub fn scale(&self, factor: f64) -> DenseMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Spectral norm (largest singular value).
    pub fn norm2(&self) -> f64 {
        svd(self).singular_values.first().copied().unwrap_or(0.0)
    }

    /// Copies the rows in `rows` and the columns in `cols` into a new matrix.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Singular value decomposition `A = U diag(s) V^T`.
///
/// `singular_values` has one entry per column of `A` (zeros included) in
/// descending order, `v` is the full `n x n` orthogonal factor and `u` is
/// `m x n` with unit columns wherever the singular value is nonzero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn max_singular_value(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Smallest of the `min(m, n)` structurally possible singular values.
    pub fn min_singular_value(&self) -> f64 {
        let k = self.u.rows().min(self.v.rows());
        if k == 0 {
            return 0.0;
        }
        self.singular_values[k - 1]
    }

    fn threshold(&self, rel_tol: f64) -> f64 {
        rel_tol * self.max_singular_value()
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        let cut = self.threshold(rel_tol);
        self.singular_values.iter().filter(|s| **s > cut).count()
    }
}

/// One-sided Jacobi SVD.
pub fn svd(a: &DenseMatrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.clone();
    let mut v = DenseMatrix::identity(n);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if alpha < 1e-300 || beta < 1e-300 {
                    continue;
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let mut u = DenseMatrix::zeros(m, n);
    let mut vs = DenseMatrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        singular_values.push(s);
        for i in 0..n {
            vs[(i, k)] = v[(i, j)];
        }
        if s > 0.0 {
            for i in 0..m {
                u[(i, k)] = w[(i, j)] / s;
            }
        }
    }
    Svd {
        u,
        singular_values,
        v: vs,
    }
}

/// Default relative rank tolerance `max(m, n) * eps`.
pub fn default_rank_tolerance(a: &DenseMatrix) -> f64 {
    a.rows().max(a.cols()).max(1) as f64 * f64::EPSILON
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn rank(a: &DenseMatrix, rel_tol: f64) -> usize {
    svd(a).rank(rel_tol)
}

/// Orthonormal basis (as columns) of `{z : A z = 0}`.
pub fn nullspace_basis(a: &DenseMatrix, rel_tol: f64) -> DenseMatrix {
    let n = a.cols();
    let dec = svd(a);
    let r = dec.rank(rel_tol);
    let mut basis = DenseMatrix::zeros(n, n - r);
    for k in r..n {
        for i in 0..n {
            basis[(i, k - r)] = dec.v[(i, k)];
        }
    }
    basis
}

/// Nullspace basis read off the reduced row echelon form: one column per
/// free variable, with a unit entry at that variable and zeros at the other
/// free variables. Not orthonormal; useful when a hand-checkable basis is
/// wanted.
pub fn canonical_nullspace_basis(a: &DenseMatrix, rel_tol: f64) -> DenseMatrix {
    let (m, n) = (a.rows(), a.cols());
    let mut r = a.clone();
    let cut = rel_tol * a.max_abs().max(f64::MIN_POSITIVE);
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        if row == m {
            break;
        }
        let (best, val) = (row..m)
            .map(|i| (i, r[(i, col)].abs()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= cut {
            continue;
        }
        for j in 0..n {
            let tmp = r[(row, j)];
            r[(row, j)] = r[(best, j)];
            r[(best, j)] = tmp;
        }
        let p = r[(row, col)];
        for j in 0..n {
            r[(row, j)] /= p;
        }
        for i in 0..m {
            if i != row {
                let f = r[(i, col)];
                if f != 0.0 {
                    for j in 0..n {
                        r[(i, j)] -= f * r[(row, j)];
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let mut basis = DenseMatrix::zeros(n, free.len());
    for (k, &f) in free.iter().enumerate() {
        basis[(f, k)] = 1.0;
        for (prow, &pc) in pivots.iter().enumerate() {
            basis[(pc, k)] = -r[(prow, f)];
        }
    }
    basis
}

/// Determinant via LU with partial pivoting. Empty matrices have determinant 1.
pub fn determinant(a: &DenseMatrix) -> f64 {
    assert_eq!(a.rows(), a.cols(), "determinant of a non-square matrix");
    let n = a.rows();
    let mut lu = a.clone();
    let mut det = 1.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
            .unwrap();
        if lu[(p, k)] == 0.0 {
            return 0.0;
        }
        if p != k {
            det = -det;
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
        }
        det *= lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / lu[(k, k)];
            for j in k..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
        }
    }
    det
}

/// Solves `A z = b` for square `A`, refusing matrices whose condition
/// estimate `sigma_max / sigma_min` exceeds `1 / tol`.
pub fn solve_square(a: &DenseMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>, NumericsError> {
    assert_eq!(a.rows(), a.cols(), "solve_square needs a square matrix");
    assert_eq!(a.rows(), b.len(), "right-hand side length mismatch");
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let dec = svd(a);
    let (smax, smin) = (dec.max_singular_value(), dec.min_singular_value());
    if smax == 0.0 || smin <= tol * smax {
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        return Err(NumericsError::SingularMatrix { condition });
    }

    let mut lu = a.clone();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
            .unwrap();
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            rhs.swap(k, p);
        }
        for i in (k + 1)..n {
            let f = lu[(i, k)] / lu[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|j| lu[(i, j)] * z[j]).sum();
        z[i] = (rhs[i] - s) / lu[(i, i)];
    }
    Ok(z)
}

/// Minimum-norm least-squares solution of `A z = b` and the residual norm
/// `||A z - b||_2`. Singular values below `rel_tol * sigma_max` are dropped.
pub fn least_squares(a: &DenseMatrix, b: &[f64], rel_tol: f64) -> (Vec<f64>, f64) {
    assert_eq!(a.rows(), b.len(), "right-hand side length mismatch");
    let dec = svd(a);
    let z = pseudo_inverse_apply(&dec, b, rel_tol);
    let res = a
        .matvec(&z)
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    (z, res)
}

/// Applies the truncated pseudo-inverse encoded by `dec` to `b`.
pub fn pseudo_inverse_apply(dec: &Svd, b: &[f64], rel_tol: f64) -> Vec<f64> {
    let (m, n) = (dec.u.rows(), dec.v.rows());
    let cut = dec.threshold(rel_tol);
    let mut z = vec![0.0; n];
    for k in 0..n {
        let s = dec.singular_values[k];
        if s <= cut || s == 0.0 {
            continue;
        }
        let coef: f64 = (0..m).map(|i| dec.u[(i, k)] * b[i]).sum::<f64>() / s;
        for i in 0..n {
            z[i] += coef * dec.v[(i, k)];
        }
    }
    z
}

/// All eigenvalues of the symmetric part of `s`, ascending, by cyclic Jacobi.
pub fn symmetric_eigenvalues(s: &DenseMatrix) -> Vec<f64> {
    let n = s.rows();
    let mut a = s.symmetric_part();
    let scale = a.frobenius_norm();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Smallest eigenvalue of `(S + S^T) / 2`.
pub fn symmetric_min_eigenvalue(s: &DenseMatrix) -> f64 {
    symmetric_eigenvalues(s)
        .first()
        .copied()
        .unwrap_or(f64::INFINITY)
}

/// Optimum of a linear program.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub argument: Vec<f64>,
}

/// Maximizes `c . z` subject to `A z <= b` over free variables `z`.
///
/// Free variables are split into nonnegative parts, slacks are added, and
/// rows with negative right-hand side receive artificials for phase one.
/// Both phases pivot by Bland's rule.
pub fn lp_max(c: &[f64], a: &DenseMatrix, b: &[f64]) -> Result<LpSolution, NumericsError> {
    let k = c.len();
    let m = a.rows();
    assert_eq!(a.cols(), k, "constraint matrix width mismatch");
    assert_eq!(b.len(), m, "right-hand side length mismatch");

    // columns: p (k), q (k), slack (m), artificial (one per negative row)
    let art_rows: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let n_art = art_rows.len();
    let ncols = 2 * k + m + n_art;
    let mut tab = vec![vec![0.0; ncols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut art_idx = 0;
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..k {
            tab[i][j] = sign * a[(i, j)];
            tab[i][k + j] = -sign * a[(i, j)];
        }
        tab[i][2 * k + i] = sign;
        tab[i][ncols] = sign * b[i];
        if b[i] < 0.0 {
            let col = 2 * k + m + art_idx;
            tab[i][col] = 1.0;
            basis[i] = col;
            art_idx += 1;
        } else {
            basis[i] = 2 * k + i;
        }
    }
    let is_art = |j: usize| j >= 2 * k + m;
    let bscale = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));

    if n_art > 0 {
        let cost: Vec<f64> = (0..ncols).map(|j| if is_art(j) { -1.0 } else { 0.0 }).collect();
        let allowed = vec![true; ncols];
        simplex_phase(&mut tab, &mut basis, &cost, &allowed)?;
        let infeas: f64 = basis
            .iter()
            .enumerate()
            .filter(|(_, &bj)| is_art(bj))
            .map(|(i, _)| tab[i][ncols])
            .sum();
        if infeas > 1e-9 * bscale {
            return Err(NumericsError::Infeasible);
        }
        // drive zero-level artificials out of the basis where possible
        for i in 0..m {
            if !is_art(basis[i]) {
                continue;
            }
            if let Some(j) = (0..2 * k + m).find(|&j| tab[i][j].abs() > 1e-9) {
                pivot(&mut tab, &mut basis, i, j);
            }
        }
    }

    let mut cost = vec![0.0; ncols];
    for j in 0..k {
        cost[j] = c[j];
        cost[k + j] = -c[j];
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| !is_art(j)).collect();
    simplex_phase(&mut tab, &mut basis, &cost, &allowed)?;

    let mut vals = vec![0.0; ncols];
    for (i, &bj) in basis.iter().enumerate() {
        vals[bj] = tab[i][ncols];
    }
    let argument: Vec<f64> = (0..k).map(|j| vals[j] - vals[k + j]).collect();
    let value = c.iter().zip(&argument).map(|(p, q)| p * q).sum();
    Ok(LpSolution { value, argument })
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], r: usize, col: usize) {
    let width = tab[r].len();
    let p = tab[r][col];
    for j in 0..width {
        tab[r][j] /= p;
    }
    for i in 0..tab.len() {
        if i == r {
            continue;
        }
        let f = tab[i][col];
        if f == 0.0 {
            continue;
        }
        for j in 0..width {
            tab[i][j] -= f * tab[r][j];
        }
        tab[i][col] = 0.0;
    }
    basis[r] = col;
}

fn simplex_phase(
    tab: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    allowed: &[bool],
) -> Result<(), NumericsError> {
    const PIVOT_EPS: f64 = 1e-11;
    const MAX_PIVOTS: usize = 50_000;
    let ncols = cost.len();
    let m = tab.len();
    for _ in 0..MAX_PIVOTS {
        let entering = (0..ncols).find(|&j| {
            if !allowed[j] || basis.contains(&j) {
                return false;
            }
            let rc = cost[j] - (0..m).map(|i| cost[basis[i]] * tab[i][j]).sum::<f64>();
            rc > 1e-10
        });
        let Some(col) = entering else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let aij = tab[i][col];
            if aij <= PIVOT_EPS {
                continue;
            }
            let ratio = tab[i][ncols] / aij;
            leave = match leave {
                None => Some((i, ratio)),
                Some((li, lr)) => {
                    if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && basis[i] < basis[li]) {
                        Some((i, ratio))
                    } else {
                        Some((li, lr))
                    }
                }
            };
        }
        let Some((r, _)) = leave else {
            return Err(NumericsError::Unbounded);
        };
        pivot(tab, basis, r, col);
    }
    Err(NumericsError::IterationLimit(MAX_PIVOTS))
}

/// Infinity norm of a vector.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
