//! Statistical validation of fitted models.
//!
//! Residuals of a good model should be stationary, and observed and predicted
//! prices should be cointegrated with rank one. This module provides the tests
//! used to check both: augmented Dickey-Fuller ([`adf_test`]),
//! Phillips-Perron ([`pp_test`]), the Engle-Granger two-step test
//! ([`engle_granger`]) and the Johansen trace test ([`johansen_test`]).
//!
//! All unit-root tests are left-tailed: the unit-root null is rejected when
//! the statistic falls below the critical value.

mod adf;
mod engle_granger;
mod johansen;
mod pp;
pub mod tables;

use serde::{Deserialize, Serialize};

pub use adf::{adf_test, DEFAULT_MAX_LAG};
pub use engle_granger::engle_granger;
pub use johansen::{johansen_test, JohansenReport, DEFAULT_VECM_LAG};
pub use pp::{pp_test, Bandwidth};
pub use tables::{CriticalValues, Level};

/// Deterministic terms in a unit-root regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deterministic {
    None,
    #[default]
    Constant,
    ConstantTrend,
}

impl Deterministic {
    pub(crate) fn columns(self) -> usize {
        match self {
            Deterministic::None => 0,
            Deterministic::Constant => 1,
            Deterministic::ConstantTrend => 2,
        }
    }
}

/// Deterministic specification of the Johansen VECM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JohansenCase {
    /// No constant anywhere.
    None,
    /// Constant inside the cointegrating relation only.
    RestrictedConstant,
    /// Unrestricted constant: linear trends in the levels.
    #[default]
    UnrestrictedConstant,
    /// Trend inside the cointegrating relation, unrestricted constant.
    RestrictedTrend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitRootTest {
    Adf,
    PhillipsPerron,
    EngleGranger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootReport {
    pub test: UnitRootTest,
    pub deterministic: Deterministic,
    /// Observations in the test regression.
    pub nobs: usize,
    /// τ statistic (t-ratio of the lagged level, or PP's Z_t).
    pub statistic_t: f64,
    /// n(ρ̂ − 1) statistic (PP's Z_ρ).
    pub statistic_rho: f64,
    /// Augmentation lags for ADF and Engle-Granger, kernel bandwidth for PP.
    pub lags_used: usize,
    /// Critical values for `statistic_t`.
    pub critical_values: CriticalValues,
    /// Critical values for `statistic_rho`; empty when no table applies.
    pub critical_values_rho: CriticalValues,
    /// Most stringent level at which `statistic_t` rejects a unit root.
    pub reject_unit_root_at: Option<Level>,
    /// Same, judged on `statistic_rho`.
    pub reject_unit_root_rho_at: Option<Level>,
}

pub(crate) fn strongest_rejection(statistic: f64, cvs: &CriticalValues) -> Option<Level> {
    Level::ALL
        .into_iter()
        .find(|l| cvs.get(l).is_some_and(|cv| statistic < *cv))
}

impl UnitRootReport {
    /// Whether the unit-root null is rejected at `level` on the τ statistic.
    pub fn rejects_at(&self, level: Level) -> bool {
        self.critical_values
            .get(&level)
            .is_some_and(|cv| self.statistic_t < *cv)
    }
}
