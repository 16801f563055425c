//! Sparse symmetric matrices, incomplete Cholesky and preconditioned CG.

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted columns and an explicit diagonal in every row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    diag_pos: Vec<usize>,
}

impl CsrMatrix {
    /// Builds a matrix from per-row `(column, value)` lists. Duplicates are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut diag_pos = Vec::with_capacity(n);
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            if !row.iter().any(|&(j, _)| j == i) {
                row.push((i, 0.0));
            }
            row.sort_by_key(|&(j, _)| j);
            let start = col_idx.len();
            for (j, v) in row {
                if col_idx.len() > start && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            let d = (start..col_idx.len()).find(|&k| col_idx[k] == i).unwrap();
            diag_pos.push(d);
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, values, diag_pos }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.diag_pos.iter().map(|&k| self.values[k]).collect()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.row(i).map(|(j, a)| a * x[j]).sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let mut r = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                r += self.values[k] * x[self.col_idx[k]];
            }
            s += x[i] * r;
        }
        s
    }

    /// `A + diag(d)`.
    pub fn shifted(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for (i, &k) in self.diag_pos.iter().enumerate() {
            out.values[k] += d[i];
        }
        out
    }

    /// Replaces rows and columns with `keep[i] == false` by the identity.
    pub fn restricted(&self, keep: &[bool]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if !keep[i] || !keep[j] {
                    out.values[k] = if i == j { 1.0 } else { 0.0 };
                }
            }
        }
        out
    }
}

/// Preconditioner built from a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub enum Preconditioner {
    /// Zero fill-in incomplete Cholesky factor, lower triangle stored by rows.
    IncompleteCholesky {
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    },
    Jacobi(Vec<f64>),
}

impl Preconditioner {
    /// Incomplete Cholesky with a Jacobi fallback on pivot breakdown.
    pub fn new(a: &CsrMatrix) -> Self {
        Self::incomplete_cholesky(a).unwrap_or_else(|| {
            Preconditioner::Jacobi(a.diagonal().iter().map(|&d| 1.0 / d.abs().max(1e-300)).collect())
        })
    }

    fn incomplete_cholesky(a: &CsrMatrix) -> Option<Self> {
        let n = a.n;
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        // position of column j inside the current row, usize::MAX when absent
        let mut marker = vec![usize::MAX; n];
        for i in 0..n {
            let start = col_idx.len();
            for (j, v) in a.row(i) {
                if j <= i {
                    marker[j] = col_idx.len();
                    col_idx.push(j);
                    values.push(v);
                }
            }
            let end = col_idx.len();
            for p in start..end {
                let k = col_idx[p];
                let mut s = values[p];
                if k < i {
                    for q in row_ptr[k]..row_ptr[k + 1] - 1 {
                        let j = col_idx[q];
                        let m = marker[j];
                        if m != usize::MAX && m < p {
                            s -= values[m] * values[q];
                        }
                    }
                    let lkk = values[row_ptr[k + 1] - 1];
                    values[p] = s / lkk;
                } else {
                    s -= values[start..p].iter().map(|v| v * v).sum::<f64>();
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    values[p] = s.sqrt();
                }
            }
            for p in start..end {
                marker[col_idx[p]] = usize::MAX;
            }
            row_ptr.push(end);
        }
        Some(Preconditioner::IncompleteCholesky { row_ptr, col_idx, values })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Jacobi(inv) => {
                for i in 0..r.len() {
                    z[i] = inv[i] * r[i];
                }
            }
            Preconditioner::IncompleteCholesky { row_ptr, col_idx, values } => {
                let n = r.len();
                for i in 0..n {
                    let mut s = r[i];
                    let end = row_ptr[i + 1] - 1;
                    for q in row_ptr[i]..end {
                        s -= values[q] * z[col_idx[q]];
                    }
                    z[i] = s / values[end];
                }
                for i in (0..n).rev() {
                    let end = row_ptr[i + 1] - 1;
                    z[i] /= values[end];
                    let zi = z[i];
                    for q in row_ptr[i]..end {
                        z[col_idx[q]] -= values[q] * zi;
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for `A x = b`, stopping at `‖r‖ ≤ tol·‖b‖`.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: &Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = a.dim();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(CgOutcome { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut r = vec![0.0; n];
    a.mul_vec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = norm2(&r) / bnorm;
    let mut it = 0;
    while rel > tol {
        if it >= max_iter {
            return Err(Error::NoConvergence { solver: "pcg", iterations: it, residual: rel });
        }
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence { solver: "pcg", iterations: it, residual: rel });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        rel = norm2(&r) / bnorm;
    }
    Ok(CgOutcome { x, iterations: it, relative_residual: rel })
}

/// Factor once, solve `A x = b` by PCG.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<CgOutcome> {
    let pc = Preconditioner::new(a);
    pcg(a, b, None, &pc, tol, cg_cap(a.dim()))
}

pub fn cg_cap(n: usize) -> usize {
    (20 * n).max(2000)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Least-squares line `y ≈ slope·x + intercept`; returns `(slope, intercept, rms)`.
pub fn line_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum::<f64>() / nf).sqrt();
    Some((slope, intercept, rms))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    #[test]
    fn tridiagonal_factor_is_exact() {
        let a = laplace_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let out = solve_spd(&a, &b, 1e-13).unwrap();
        assert!(out.iterations <= 2, "iterations {}", out.iterations);
        let ax = a.apply(&out.x);
        for i in 0..50 {
            assert!((ax[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn line_fit_recovers_exact_lines() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|t| -6.0 * t + 2.0).collect();
        let (s, c, r) = line_fit(&x, &y).unwrap();
        assert!((s + 6.0).abs() < 1e-14 && (c - 2.0).abs() < 1e-14 && r < 1e-14);
        assert!(line_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn restricted_rows_become_identity() {
        let a = laplace_1d(5);
        let keep = [true, false, true, true, true];
        let r = a.restricted(&keep);
        let out = solve_spd(&r, &[1.0, 0.0, 1.0, 1.0, 1.0], 1e-14).unwrap();
        assert!(out.x[1].abs() < 1e-14);
        assert!((out.x[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let a = CsrMatrix::from_rows(vec![vec![(0, 1.0), (0, 2.0)]]);
        assert_eq!(a.diagonal(), vec![3.0]);
    }
}
