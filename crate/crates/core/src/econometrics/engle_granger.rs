use crate::error::{Error, Result};
use crate::linalg::{lstsq, Design};
use crate::timeseries::{align, MonthlySeries};

use super::adf::dickey_fuller;
use super::tables::engle_granger_tau;
use super::{strongest_rejection, CriticalValues, Deterministic, UnitRootReport, UnitRootTest};

const MIN_LENGTH: usize = 30;

/// Residual variance below this fraction of the observed variance counts as
/// an exact fit.
const EXACT_FIT: f64 = 1e-20;

/// Engle-Granger two-step test: regress `observed` on `predicted` (plus the
/// deterministic terms), then test the residuals for a unit root against
/// cointegration critical values.
pub fn engle_granger(
    observed: &MonthlySeries,
    predicted: &MonthlySeries,
    det: Deterministic,
    max_lag: usize,
) -> Result<UnitRootReport> {
    if det == Deterministic::None {
        return Err(Error::InvalidConfig(
            "Engle-Granger needs a constant in the cointegrating regression".into(),
        ));
    }

    let (_, rows) = align(&[observed, predicted])?;
    if rows.len() < MIN_LENGTH {
        return Err(Error::SeriesTooShort {
            need: MIN_LENGTH,
            have: rows.len(),
        });
    }
    let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let x: Vec<f64> = rows.iter().map(|r| r[1]).collect();

    let mut design = Design::with_capacity(y.len(), 3);
    design.push_column(x.iter().copied());
    design.push_column(std::iter::repeat_n(1.0, y.len()));
    if det == Deterministic::ConstantTrend {
        design.push_column((0..y.len()).map(|t| t as f64));
    }
    let step1 = lstsq(&design, &y).map_err(|e| match e {
        Error::RankDeficient { .. } => Error::Degenerate("predicted series is constant".into()),
        other => other,
    })?;

    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if step1.ssr <= EXACT_FIT * tss.max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate(
            "observed and predicted series coincide; residuals are identically zero".into(),
        ));
    }

    let max_lag = max_lag.min(step1.residuals.len().saturating_sub(20));
    let df = dickey_fuller(&step1.residuals, max_lag, Deterministic::None)?;
    let critical_values = engle_granger_tau(det, df.nobs).expect("checked above");
    Ok(UnitRootReport {
        test: UnitRootTest::EngleGranger,
        deterministic: det,
        nobs: df.nobs,
        statistic_t: df.t,
        statistic_rho: df.rho,
        lags_used: df.lags,
        reject_unit_root_at: strongest_rejection(df.t, &critical_values),
        reject_unit_root_rho_at: None,
        critical_values,
        critical_values_rho: CriticalValues::new(),
    })
}
