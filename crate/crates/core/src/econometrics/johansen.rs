//! Johansen's reduced-rank trace test for a pair of series.
//!
//! The VAR(p) in levels is rewritten as a VECM
//!
//! ```text
//! Δy_t = Π y_{t−1} + Σ_{i=1}^{p−1} Γ_i Δy_{t−i} + deterministic + ε_t
//! ```
//!
//! and the rank of Π is tested through the squared canonical correlations
//! between Δy_t and y_{t−1}, both corrected for the short-run terms.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{residualize, Design};
use crate::timeseries::{align, MonthlySeries};

use super::tables::{johansen_trace, CriticalValues, Level};
use super::JohansenCase;

/// Lags of the levels VAR; one lagged difference in the VECM.
pub const DEFAULT_VECM_LAG: usize = 2;

const MIN_LENGTH: usize = 30;
const VARIABLES: usize = 2;

/// Eigenvalues this close to one mean the two series are perfectly
/// collinear.
const UNIT_EIGENVALUE: f64 = 1.0 - 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohansenReport {
    pub det_case: JohansenCase,
    pub vecm_lag: usize,
    /// Observations used after differencing and lagging.
    pub nobs: usize,
    /// Descending, each in [0, 1).
    pub eigenvalues: Vec<f64>,
    /// `trace_stats[r]` tests the null of rank ≤ r.
    pub trace_stats: Vec<f64>,
    /// Critical values for each `trace_stats[r]`.
    pub critical_values: Vec<CriticalValues>,
    /// Smallest r whose null is not rejected at 5%.
    pub rank: usize,
}

impl JohansenReport {
    /// Smallest r whose null is not rejected at `level`.
    pub fn rank_at(&self, level: Level) -> usize {
        self.trace_stats
            .iter()
            .zip(&self.critical_values)
            .position(|(stat, cv)| *stat < cv[&level])
            .unwrap_or(self.trace_stats.len())
    }
}

fn columns_of(range: std::ops::Range<usize>, f: impl Fn(usize) -> [f64; VARIABLES]) -> [Vec<f64>; VARIABLES] {
    let mut out = [Vec::with_capacity(range.len()), Vec::with_capacity(range.len())];
    for t in range {
        for (col, x) in out.iter_mut().zip(f(t)) {
            col.push(x);
        }
    }
    out
}

fn moment(a: &[Vec<f64>], b: &[Vec<f64>], n: f64) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| {
        a[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum::<f64>() / n
    })
}

pub fn johansen_test(
    y1: &MonthlySeries,
    y2: &MonthlySeries,
    vecm_lag: usize,
    det_case: JohansenCase,
) -> Result<JohansenReport> {
    if vecm_lag == 0 {
        return Err(Error::InvalidConfig("VECM lag must be at least 1".into()));
    }
    let (_, aligned) = align(&[y1, y2])?;
    let need = MIN_LENGTH + vecm_lag;
    if aligned.len() < need {
        return Err(Error::SeriesTooShort {
            need,
            have: aligned.len(),
        });
    }
    let y: Vec<[f64; VARIABLES]> = aligned.iter().map(|r| [r[0], r[1]]).collect();
    let diff = |t: usize| [y[t][0] - y[t - 1][0], y[t][1] - y[t - 1][1]];
    let range = vecm_lag..y.len();
    let nobs = range.len();

    let z0 = columns_of(range.clone(), diff);
    let mut z1: Vec<Vec<f64>> = columns_of(range.clone(), |t| y[t - 1]).into();
    match det_case {
        JohansenCase::RestrictedConstant => z1.push(vec![1.0; nobs]),
        JohansenCase::RestrictedTrend => z1.push(range.clone().map(|t| t as f64).collect()),
        _ => {}
    }

    let mut z2 = Design::with_capacity(nobs, VARIABLES * (vecm_lag - 1) + 1);
    for i in 1..vecm_lag {
        for v in columns_of(range.clone(), |t| diff(t - i)) {
            z2.push_column(v);
        }
    }
    if matches!(
        det_case,
        JohansenCase::UnrestrictedConstant | JohansenCase::RestrictedTrend
    ) {
        z2.push_column(std::iter::repeat_n(1.0, nobs));
    }

    let singular = |what: &str| Error::SingularMoment(what.to_string());
    let (r0, r1): (Vec<Vec<f64>>, Vec<Vec<f64>>) = if z2.cols() == 0 {
        (z0.to_vec(), z1)
    } else {
        let refs0: Vec<&[f64]> = z0.iter().map(Vec::as_slice).collect();
        let refs1: Vec<&[f64]> = z1.iter().map(Vec::as_slice).collect();
        (
            residualize(&z2, &refs0).map_err(|_| singular("short-run regressors are collinear"))?,
            residualize(&z2, &refs1).map_err(|_| singular("short-run regressors are collinear"))?,
        )
    };

    let n = nobs as f64;
    let s00 = moment(&r0, &r0, n);
    let s11 = moment(&r1, &r1, n);
    let s01 = moment(&r0, &r1, n);

    let s00_inv = s00
        .clone()
        .cholesky()
        .ok_or_else(|| singular("differences are collinear"))?
        .inverse();
    let l11 = s11
        .clone()
        .cholesky()
        .ok_or_else(|| singular("lagged levels are collinear"))?
        .l();
    let l11_inv = l11
        .try_inverse()
        .ok_or_else(|| singular("lagged levels are collinear"))?;

    // Eigenvalues of S11⁻¹ S10 S00⁻¹ S01 via the symmetric form
    // L⁻¹ S10 S00⁻¹ S01 L⁻ᵀ with S11 = L Lᵀ.
    let m = &l11_inv * s01.transpose() * &s00_inv * &s01 * l11_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    eigenvalues.truncate(VARIABLES);
    for l in eigenvalues.iter_mut() {
        *l = l.max(0.0);
    }
    if eigenvalues[0] >= UNIT_EIGENVALUE {
        return Err(singular("series are perfectly collinear (eigenvalue 1)"));
    }

    let trace_stats: Vec<f64> = (0..VARIABLES)
        .map(|r| -n * eigenvalues[r..].iter().map(|l| (1.0 - l).ln()).sum::<f64>())
        .collect();
    let critical_values: Vec<BTreeMap<Level, f64>> = (0..VARIABLES)
        .map(|r| johansen_trace(det_case, VARIABLES - r))
        .collect();

    let mut report = JohansenReport {
        det_case,
        vecm_lag,
        nobs,
        eigenvalues,
        trace_stats,
        critical_values,
        rank: 0,
    };
    report.rank = report.rank_at(Level::Five);
    Ok(report)
}
