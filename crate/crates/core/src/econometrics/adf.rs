use crate::error::{Error, Result};
use crate::linalg::{lstsq, Design, LeastSquares};

use super::tables::{df_rho, df_tau};
use super::{strongest_rejection, Deterministic, UnitRootReport, UnitRootTest};

/// One year of monthly lags.
pub const DEFAULT_MAX_LAG: usize = 12;

/// Minimum series length on top of `max_lag`.
const MIN_LENGTH: usize = 20;

pub(crate) struct DickeyFuller {
    pub gamma: f64,
    pub t: f64,
    pub rho: f64,
    pub lags: usize,
    pub nobs: usize,
    pub fit: LeastSquares,
}

/// Regression of Δy_t on y_{t−1}, `lags` lagged differences and the
/// deterministic terms, over t = `start`..n−1. Column 0 is y_{t−1}.
fn df_regression(y: &[f64], lags: usize, start: usize, det: Deterministic) -> Result<(Design, Vec<f64>)> {
    let rows = y.len() - start;
    let mut x = Design::with_capacity(rows, 1 + lags + det.columns());
    x.push_column((start..y.len()).map(|t| y[t - 1]));
    for i in 1..=lags {
        x.push_column((start..y.len()).map(|t| y[t - i] - y[t - i - 1]));
    }
    if det != Deterministic::None {
        x.push_column(std::iter::repeat_n(1.0, rows));
    }
    if det == Deterministic::ConstantTrend {
        x.push_column((start..y.len()).map(|t| t as f64));
    }
    let dy = (start..y.len()).map(|t| y[t] - y[t - 1]).collect();
    Ok((x, dy))
}

fn fit_df(y: &[f64], lags: usize, start: usize, det: Deterministic) -> Result<LeastSquares> {
    let (x, dy) = df_regression(y, lags, start, det)?;
    lstsq(&x, &dy).map_err(|e| match e {
        Error::RankDeficient { .. } => Error::Degenerate(format!("unit-root regression is singular ({e})")),
        other => other,
    })
}

pub(crate) fn dickey_fuller(y: &[f64], max_lag: usize, det: Deterministic) -> Result<DickeyFuller> {
    let need = MIN_LENGTH + max_lag;
    if y.len() < need {
        return Err(Error::SeriesTooShort { need, have: y.len() });
    }
    if y.windows(2).all(|w| w[1] == w[0]) {
        return Err(Error::Degenerate("series is constant".into()));
    }

    // Lag order by BIC on the common sample t = max_lag+1..n−1.
    let common = max_lag + 1;
    let mut best: Option<(f64, usize)> = None;
    for p in 0..=max_lag {
        let Ok(fit) = fit_df(y, p, common, det) else { continue };
        let n = fit.residuals.len() as f64;
        let k = (1 + p + det.columns()) as f64;
        let bic = n * (fit.ssr / n).ln() + k * n.ln();
        if best.is_none_or(|(b, _)| bic < b) {
            best = Some((bic, p));
        }
    }
    let (_, lags) = best.ok_or_else(|| Error::Degenerate("no lag order gives a regular regression".into()))?;

    let fit = fit_df(y, lags, lags + 1, det)?;
    if !(fit.ssr > 0.0) {
        return Err(Error::Degenerate("unit-root regression fits exactly".into()));
    }
    let nobs = fit.residuals.len();
    let gamma = fit.coefficients[0];
    let t = gamma / fit.standard_errors()[0];
    let phi_sum: f64 = fit.coefficients[1..=lags].iter().sum();
    let rho = nobs as f64 * gamma / (1.0 - phi_sum);
    Ok(DickeyFuller {
        gamma,
        t,
        rho,
        lags,
        nobs,
        fit,
    })
}

/// Augmented Dickey-Fuller test with the augmentation order chosen by BIC
/// over `0..=max_lag`.
pub fn adf_test(series: &[f64], max_lag: usize, det: Deterministic) -> Result<UnitRootReport> {
    let df = dickey_fuller(series, max_lag, det)?;
    let critical_values = df_tau(det, df.nobs);
    let critical_values_rho = df_rho(det, df.nobs);
    Ok(UnitRootReport {
        test: UnitRootTest::Adf,
        deterministic: det,
        nobs: df.nobs,
        statistic_t: df.t,
        statistic_rho: df.rho,
        lags_used: df.lags,
        reject_unit_root_at: strongest_rejection(df.t, &critical_values),
        reject_unit_root_rho_at: strongest_rejection(df.rho, &critical_values_rho),
        critical_values,
        critical_values_rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econometrics::Level;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn cumsum(v: &[f64]) -> Vec<f64> {
        v.iter()
            .scan(0.0, |s, x| {
                *s += x;
                Some(*s)
            })
            .collect()
    }

    #[test]
    fn white_noise_rejects() {
        let r = adf_test(&noise(1, 200), DEFAULT_MAX_LAG, Deterministic::Constant).unwrap();
        assert_eq!(r.reject_unit_root_at, Some(Level::One));
        assert!(r.critical_values.contains_key(&Level::Five));
        assert!(r.critical_values.contains_key(&Level::Ten));
    }

    #[test]
    fn random_walk_statistic_matches_hand_regression() {
        // With p forced to zero the τ statistic is γ̂ / se(γ̂) from the plain
        // regression of Δy on (y_{t−1}, 1); check against closed-form OLS.
        let y = cumsum(&noise(2, 60));
        let df = dickey_fuller(&y, 0, Deterministic::Constant).unwrap();
        let x: Vec<f64> = y[..59].to_vec();
        let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, dy.iter().sum::<f64>() / n);
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let sxy: f64 = x.iter().zip(&dy).map(|(a, b)| (a - mx) * (b - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ssr: f64 = x
            .iter()
            .zip(&dy)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        let se = (ssr / (n - 2.0) / sxx).sqrt();
        assert!((df.gamma - slope).abs() < 1e-12);
        assert!((df.t - slope / se).abs() < 1e-10);
        assert!((df.rho - n * slope).abs() < 1e-9);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let y = vec![4.2; 100];
        assert!(matches!(
            adf_test(&y, 4, Deterministic::Constant),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn short_series() {
        let y = noise(3, 25);
        assert!(matches!(
            adf_test(&y, 12, Deterministic::Constant),
            Err(Error::SeriesTooShort { need: 32, have: 25 })
        ));
    }

    #[test]
    fn shift_invariance_with_constant() {
        let y = cumsum(&noise(4, 150));
        let shifted: Vec<f64> = y.iter().map(|v| v + 250.0).collect();
        for det in [Deterministic::Constant, Deterministic::ConstantTrend] {
            let a = adf_test(&y, 8, det).unwrap();
            let b = adf_test(&shifted, 8, det).unwrap();
            assert_eq!(a.lags_used, b.lags_used);
            assert!((a.statistic_t - b.statistic_t).abs() < 1e-10);
            assert!((a.statistic_rho - b.statistic_rho).abs() < 1e-10);
        }
    }
}
