use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::adf::dickey_fuller;
use super::tables::{df_rho, df_tau};
use super::{strongest_rejection, Deterministic, UnitRootReport, UnitRootTest};

const MIN_LENGTH: usize = 20;

/// Number of autocovariances in the Bartlett long-run variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// ⌊4 (n/100)^(2/9)⌋.
    #[default]
    Automatic,
    Fixed(usize),
}

impl Bandwidth {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Bandwidth::Automatic => (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize,
            Bandwidth::Fixed(l) => l,
        }
    }
}

/// Phillips-Perron test: the unaugmented Dickey-Fuller regression with its
/// statistics corrected by a Bartlett-kernel long-run variance.
pub fn pp_test(series: &[f64], bandwidth: Bandwidth, det: Deterministic) -> Result<UnitRootReport> {
    if series.len() < MIN_LENGTH {
        return Err(Error::SeriesTooShort {
            need: MIN_LENGTH,
            have: series.len(),
        });
    }
    let df = dickey_fuller(series, 0, det)?;
    let u = &df.fit.residuals;
    let n = u.len();
    let nf = n as f64;
    let lags = bandwidth.resolve(n).min(n - 1);

    let autocov = |j: usize| u[j..].iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / nf;
    let gamma0 = autocov(0);
    let lambda2 = gamma0
        + 2.0
            * (1..=lags)
                .map(|j| (1.0 - j as f64 / (lags as f64 + 1.0)) * autocov(j))
                .sum::<f64>();

    let s2 = df.fit.s2();
    let se = df.fit.standard_errors()[0];
    let excess = lambda2 - gamma0;
    let z_t = (gamma0 / lambda2).sqrt() * df.t - excess / (2.0 * lambda2.sqrt()) * (nf * se / s2.sqrt());
    let z_rho = nf * df.gamma - 0.5 * (nf * nf * se * se / s2) * excess;

    let critical_values = df_tau(det, n);
    let critical_values_rho = df_rho(det, n);
    Ok(UnitRootReport {
        test: UnitRootTest::PhillipsPerron,
        deterministic: det,
        nobs: n,
        statistic_t: z_t,
        statistic_rho: z_rho,
        lags_used: lags,
        reject_unit_root_at: strongest_rejection(z_t, &critical_values),
        reject_unit_root_rho_at: strongest_rejection(z_rho, &critical_values_rho),
        critical_values,
        critical_values_rho,
    })
}
