//! Dense least squares via Householder QR.
//!
//! Small and allocation-light: the model search calls this about a million
//! times per ticker with four regressors, and the unit-root tests call it with
//! a dozen or so.

use nalgebra::{DMatrix, Matrix4};

use crate::error::{Error, Result};

/// Smallest/largest singular value ratio below which a design is rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Column-major design matrix.
#[derive(Debug, Clone)]
pub struct Design {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Design {
    pub fn from_columns(columns: &[&[f64]]) -> Self {
        let rows = columns.first().map_or(0, |c| c.len());
        assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            data.extend_from_slice(c);
        }
        Design {
            rows,
            cols: columns.len(),
            data,
        }
    }

    pub fn with_capacity(rows: usize, cols: usize) -> Self {
        Design {
            rows,
            cols: 0,
            data: Vec::with_capacity(rows * cols),
        }
    }

    pub fn push_column(&mut self, column: impl IntoIterator<Item = f64>) {
        let before = self.data.len();
        self.data.extend(column);
        assert_eq!(self.data.len() - before, self.rows, "column length");
        self.cols += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    /// `X β`.
    pub fn mul_vec(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (j, &b) in beta.iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(self.column(j)) {
                *o += x * b;
            }
        }
        out
    }

    /// `Xᵀ v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.cols)
            .map(|j| self.column(j).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Sum of squared residuals.
    pub ssr: f64,
    /// Upper-triangular R, row-major `cols × cols`.
    r: Vec<f64>,
    cols: usize,
}

impl LeastSquares {
    pub fn dof(&self) -> usize {
        self.residuals.len() - self.cols
    }

    /// Residual variance `ssr / (n - k)`.
    pub fn s2(&self) -> f64 {
        self.ssr / self.dof() as f64
    }

    /// Diagonal of `(XᵀX)⁻¹ = R⁻¹R⁻ᵀ`.
    pub fn xtx_inv_diag(&self) -> Vec<f64> {
        let k = self.cols;
        // Columns of R⁻¹ by back substitution on unit vectors.
        let mut rinv = vec![0.0; k * k];
        for c in 0..k {
            for i in (0..=c).rev() {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for j in i + 1..=c {
                    s -= self.r[i * k + j] * rinv[j * k + c];
                }
                rinv[i * k + c] = s / self.r[i * k + i];
            }
        }
        (0..k)
            .map(|i| (i..k).map(|c| rinv[i * k + c].powi(2)).sum())
            .collect()
    }

    /// OLS standard errors of the coefficients.
    pub fn standard_errors(&self) -> Vec<f64> {
        let s2 = self.s2();
        self.xtx_inv_diag()
            .into_iter()
            .map(|v| (v * s2).sqrt())
            .collect()
    }
}

/// Minimizes `‖y − Xβ‖²`. Fails with [`Error::RankDeficient`] when the
/// smallest singular value of X is below [`RANK_TOLERANCE`] times the largest.
pub fn lstsq(x: &Design, y: &[f64]) -> Result<LeastSquares> {
    let n = x.rows;
    let k = x.cols;
    assert_eq!(y.len(), n, "response length");
    if n < k || k == 0 {
        return Err(Error::TooFewObservations { need: k.max(1), have: n });
    }

    let mut a = x.data.clone();
    let mut qty = y.to_vec();
    let mut v = vec![0.0; n];
    let mut diag = vec![0.0; k];

    for j in 0..k {
        let col = &a[j * n..(j + 1) * n];
        let norm = col[j..].iter().map(|z| z * z).sum::<f64>().sqrt();
        if norm == 0.0 {
            diag[j] = 0.0;
            continue;
        }
        let alpha = if col[j] > 0.0 { -norm } else { norm };
        v[j..].copy_from_slice(&col[j..]);
        v[j] -= alpha;
        let vnorm2: f64 = v[j..].iter().map(|z| z * z).sum();
        diag[j] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        for c in j + 1..k {
            let col = &mut a[c * n..(c + 1) * n];
            let dot: f64 = v[j..].iter().zip(&col[j..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm2;
            for (q, p) in col[j..].iter_mut().zip(&v[j..]) {
                *q -= f * p;
            }
        }
        let dot: f64 = v[j..].iter().zip(&qty[j..]).map(|(p, q)| p * q).sum();
        let f = 2.0 * dot / vnorm2;
        for (q, p) in qty[j..].iter_mut().zip(&v[j..]) {
            *q -= f * p;
        }
    }

    let mut r = vec![0.0; k * k];
    for i in 0..k {
        r[i * k + i] = diag[i];
        for c in i + 1..k {
            r[i * k + c] = a[c * n + i];
        }
    }

    let ratio = singular_value_ratio(&r, k);
    if !(ratio >= RANK_TOLERANCE) {
        return Err(Error::RankDeficient { ratio });
    }

    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = qty[i];
        for c in i + 1..k {
            s -= r[i * k + c] * beta[c];
        }
        beta[i] = s / r[i * k + i];
    }

    let fitted = x.mul_vec(&beta);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let ssr = residuals.iter().map(|e| e * e).sum();
    Ok(LeastSquares {
        coefficients: beta,
        residuals,
        ssr,
        r,
        cols: k,
    })
}

/// Least squares of several responses on the same design; returns residuals only.
pub fn residualize(x: &Design, ys: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
    ys.iter().map(|y| lstsq(x, y).map(|f| f.residuals)).collect()
}

fn singular_value_ratio(r: &[f64], k: usize) -> f64 {
    let sv: Vec<f64> = if k == 4 {
        Matrix4::from_row_slice(r).singular_values().iter().copied().collect()
    } else {
        DMatrix::from_row_slice(k, k, r)
            .singular_values()
            .iter()
            .copied()
            .collect()
    };
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}
