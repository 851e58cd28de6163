//! The two-component pricing model and its least-squares fit.
//!
//! A share price is modelled month by month as
//!
//! ```text
//! price(t) = b1·CPI1(t − τ1) + b2·CPI2(t − τ2) + c·(t − 2000) + d + e(t)
//! ```
//!
//! where `τ` are integer month lags (negative when the price leads the index),
//! `t − 2000` is [`time_trend`] and `e(t)` the residual. The design matrix has
//! the fixed column order `[CPI1 shifted, CPI2 shifted, trend, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::CpiCatalog;
use crate::linalg::{self, Design};
use crate::timeseries::{time_trend, MonthlySeries, Window};

/// Fewest months a model may be fitted over.
pub const MIN_OBSERVATIONS: usize = 8;

/// Free parameters of the model: b1, b2, c, d.
pub const PARAMETERS: usize = 4;

/// Identity of a candidate model. Components are stored in canonical order,
/// `cpi1 < cpi2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelSpec {
    pub ticker: String,
    pub cpi1: String,
    pub tau1: i64,
    pub cpi2: String,
    pub tau2: i64,
}

impl ModelSpec {
    /// Builds a spec, swapping the components (with their lags) into
    /// canonical order if needed.
    pub fn new(
        ticker: impl Into<String>,
        cpi1: impl Into<String>,
        tau1: i64,
        cpi2: impl Into<String>,
        tau2: i64,
    ) -> Result<Self> {
        let (cpi1, cpi2) = (cpi1.into(), cpi2.into());
        if cpi1 == cpi2 {
            return Err(Error::InvalidConfig(format!(
                "model needs two distinct components, got {cpi1} twice"
            )));
        }
        let ticker = ticker.into();
        Ok(if cpi1 < cpi2 {
            ModelSpec { ticker, cpi1, tau1, cpi2, tau2 }
        } else {
            ModelSpec { ticker, cpi1: cpi2, tau1: tau2, cpi2: cpi1, tau2: tau1 }
        })
    }
}

impl std::fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {}(τ={}) + {}(τ={})",
            self.ticker, self.cpi1, self.tau1, self.cpi2, self.tau2
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub spec: ModelSpec,
    /// Dollars per index point of the first component.
    pub b1: f64,
    pub b2: f64,
    /// Dollars per year.
    pub c: f64,
    /// Dollars.
    pub d: f64,
    /// Residual standard error in dollars.
    pub sigma: f64,
    pub window: Window,
    /// Observed minus fitted, one per month of `window`.
    pub residuals: Vec<f64>,
}

impl FittedModel {
    pub fn coefficients(&self) -> [f64; 4] {
        [self.b1, self.b2, self.c, self.d]
    }

    /// Model value for one month given the two lagged index readings.
    pub fn evaluate(&self, cpi1: f64, cpi2: f64, trend: f64) -> f64 {
        self.b1 * cpi1 + self.b2 * cpi2 + self.c * trend + self.d
    }

    pub(crate) fn from_fit(spec: ModelSpec, window: Window, fit: OlsFit) -> Self {
        let [b1, b2, c, d] = fit.coefficients;
        FittedModel {
            spec,
            b1,
            b2,
            c,
            d,
            sigma: fit.sigma,
            window,
            residuals: fit.residuals,
        }
    }
}

/// Residual standard error with a `J − 4` degrees-of-freedom correction.
pub fn sigma_from_residuals(residuals: &[f64]) -> f64 {
    let dof = residuals.len().saturating_sub(PARAMETERS).max(1);
    (residuals.iter().map(|e| e * e).sum::<f64>() / dof as f64).sqrt()
}

#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub window: Window,
    /// `J × 4`, columns `[CPI1 shifted, CPI2 shifted, trend, 1]`.
    pub x: Design,
    /// Observed prices over `window`.
    pub y: Vec<f64>,
}

/// Window on which both lagged components and the price are all observed.
pub fn feasible_window(
    prices: &MonthlySeries,
    cpi1: &MonthlySeries,
    tau1: i64,
    cpi2: &MonthlySeries,
    tau2: i64,
) -> Option<Window> {
    lagged_window(cpi1, tau1, cpi2, tau2)?.intersect(&prices.window())
}

/// Months on which both lagged components are available.
pub fn lagged_window(cpi1: &MonthlySeries, tau1: i64, cpi2: &MonthlySeries, tau2: i64) -> Option<Window> {
    cpi1.window().shift(tau1).intersect(&cpi2.window().shift(tau2))
}

pub fn build_design(
    prices: &MonthlySeries,
    catalog: &CpiCatalog,
    spec: &ModelSpec,
    window: Window,
) -> Result<DesignMatrix> {
    let cpi1 = catalog.series(&spec.cpi1)?;
    let cpi2 = catalog.series(&spec.cpi2)?;
    design_from_series(prices, cpi1, spec.tau1, cpi2, spec.tau2, window)
}

pub(crate) fn design_from_series(
    prices: &MonthlySeries,
    cpi1: &MonthlySeries,
    tau1: i64,
    cpi2: &MonthlySeries,
    tau2: i64,
    window: Window,
) -> Result<DesignMatrix> {
    let unavailable = || Error::WindowUnavailable {
        requested: window,
        feasible: feasible_window(prices, cpi1, tau1, cpi2, tau2).and_then(|w| w.intersect(&window)),
    };
    let c1 = cpi1.slice(&window.shift(-tau1)).ok_or_else(unavailable)?;
    let c2 = cpi2.slice(&window.shift(-tau2)).ok_or_else(unavailable)?;
    let y = prices.slice(&window).ok_or_else(unavailable)?;
    let mut x = Design::with_capacity(window.len(), PARAMETERS);
    x.push_column(c1.iter().copied());
    x.push_column(c2.iter().copied());
    x.push_column(window.months().map(time_trend));
    x.push_column(std::iter::repeat_n(1.0, window.len()));
    Ok(DesignMatrix {
        window,
        x,
        y: y.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: [f64; 4],
    pub residuals: Vec<f64>,
    pub sigma: f64,
}

/// Least-squares fit of the four-column design.
pub fn ols_fit(x: &Design, y: &[f64]) -> Result<OlsFit> {
    if x.cols() != PARAMETERS {
        return Err(Error::InvalidConfig(format!(
            "design must have {PARAMETERS} columns, has {}",
            x.cols()
        )));
    }
    if x.rows() < MIN_OBSERVATIONS {
        return Err(Error::TooFewObservations {
            need: MIN_OBSERVATIONS,
            have: x.rows(),
        });
    }
    let fit = linalg::lstsq(x, y)?;
    let sigma = sigma_from_residuals(&fit.residuals);
    let mut coefficients = [0.0; 4];
    coefficients.copy_from_slice(&fit.coefficients);
    Ok(OlsFit {
        coefficients,
        residuals: fit.residuals,
        sigma,
    })
}

/// Fits `spec` over `window`.
pub fn fit(
    prices: &MonthlySeries,
    catalog: &CpiCatalog,
    spec: &ModelSpec,
    window: Window,
) -> Result<FittedModel> {
    let design = build_design(prices, catalog, spec, window)?;
    let fit = ols_fit(&design.x, &design.y)?;
    Ok(FittedModel::from_fit(spec.clone(), window, fit))
}

/// Model prices over `range`. Values may be negative.
pub fn predict(model: &FittedModel, catalog: &CpiCatalog, range: Window) -> Result<MonthlySeries> {
    let spec = &model.spec;
    let cpi1 = catalog.series(&spec.cpi1)?;
    let cpi2 = catalog.series(&spec.cpi2)?;
    let unavailable = || Error::WindowUnavailable {
        requested: range,
        feasible: lagged_window(cpi1, spec.tau1, cpi2, spec.tau2).and_then(|w| w.intersect(&range)),
    };
    let c1 = cpi1.slice(&range.shift(-spec.tau1)).ok_or_else(unavailable)?;
    let c2 = cpi2.slice(&range.shift(-spec.tau2)).ok_or_else(unavailable)?;
    let values = range
        .months()
        .zip(c1.iter().zip(c2))
        .map(|(t, (&a, &b))| model.evaluate(a, b, time_trend(t)))
        .collect();
    Ok(MonthlySeries::from_parts(
        format!("{}.predicted", spec.ticker),
        0,
        range.first(),
        values,
    ))
}

/// Months over which `model` can be evaluated with the data in `catalog`.
pub fn prediction_horizon(model: &FittedModel, catalog: &CpiCatalog) -> Result<Option<Window>> {
    let spec = &model.spec;
    let cpi1 = catalog.series(&spec.cpi1)?;
    let cpi2 = catalog.series(&spec.cpi2)?;
    Ok(lagged_window(cpi1, spec.tau1, cpi2, spec.tau2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::MonthlyIndex;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ym(y: i32, m: u32) -> MonthlyIndex {
        MonthlyIndex::new(y, m).unwrap()
    }

    fn random_walk(rng: &mut ChaCha8Rng, id: &str, start: MonthlyIndex, n: usize) -> MonthlySeries {
        let mut v = 100.0;
        let values = (0..n)
            .map(|_| {
                v += 0.2 + rng.random_range(-1.0..1.0);
                v
            })
            .collect();
        MonthlySeries::new(id, start, values).unwrap()
    }

    /// Normal-equation solve through nalgebra's LU, independent of the QR path.
    fn normal_equations(x: &Design, y: &[f64]) -> Vec<f64> {
        let m = DMatrix::from_fn(x.rows(), x.cols(), |i, j| x.get(i, j));
        let xtx = m.transpose() * &m;
        let xty = m.transpose() * DVector::from_column_slice(y);
        xtx.lu().solve(&xty).unwrap().iter().copied().collect()
    }

    fn ssr(x: &Design, y: &[f64], beta: &[f64]) -> f64 {
        x.mul_vec(beta).iter().zip(y).map(|(f, y)| (y - f).powi(2)).sum()
    }

    fn random_system(rng: &mut ChaCha8Rng, n: usize) -> (Design, Vec<f64>) {
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        let ones = vec![1.0; n];
        let x = Design::from_columns(&[&cols[0], &cols[1], &cols[2], &ones]);
        let y = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        (x, y)
    }

    #[test]
    fn spec_is_canonical() {
        let s = ModelSpec::new("AFL", "TS", 6, "FS", -2).unwrap();
        assert_eq!((s.cpi1.as_str(), s.tau1, s.cpi2.as_str(), s.tau2), ("FS", -2, "TS", 6));
        assert!(ModelSpec::new("X", "FS", 1, "FS", 2).is_err());
    }

    #[test]
    fn zero_lag_design_uses_raw_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_walk(&mut rng, "A", ym(2003, 1), 24);
        let b = random_walk(&mut rng, "B", ym(2003, 1), 24);
        let p = random_walk(&mut rng, "P", ym(2003, 1), 24);
        let cat = CpiCatalog::from_series([a.clone(), b.clone()]).unwrap();
        let spec = ModelSpec::new("P", "A", 0, "B", 0).unwrap();
        let d = build_design(&p, &cat, &spec, p.window()).unwrap();
        assert_eq!(d.x.column(0), a.values());
        assert_eq!(d.x.column(1), b.values());
        assert_eq!(d.x.get(0, 2), time_trend(ym(2003, 1)));
        assert!(d.x.column(3).iter().all(|&v| v == 1.0));
        assert_eq!(d.y, p.values());
    }

    #[test]
    fn lag_off_data_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_walk(&mut rng, "A", ym(2002, 1), 60);
        let b = random_walk(&mut rng, "B", ym(2002, 1), 60);
        let p = random_walk(&mut rng, "P", ym(2003, 1), 24);
        let cat = CpiCatalog::from_series([a, b]).unwrap();
        let spec = ModelSpec::new("P", "A", 14, "B", 0).unwrap();
        match build_design(&p, &cat, &spec, p.window()) {
            Err(Error::WindowUnavailable { feasible, .. }) => {
                // A(t-14) is first available in 2003-03.
                assert_eq!(feasible.unwrap().first(), ym(2003, 3));
            }
            other => panic!("expected WindowUnavailable, got {other:?}"),
        }
    }

    #[test]
    fn afl_window_has_78_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fs = random_walk(&mut rng, "FS", ym(2002, 1), 100);
        let ts = random_walk(&mut rng, "TS", ym(2002, 1), 100);
        let p = random_walk(&mut rng, "AFL", ym(2003, 1), 84);
        let cat = CpiCatalog::from_series([fs, ts]).unwrap();
        let spec = ModelSpec::new("AFL", "FS", -2, "TS", 6).unwrap();
        let w = Window::new(ym(2003, 7), ym(2009, 12)).unwrap();
        let d = build_design(&p, &cat, &spec, w).unwrap();
        assert_eq!(d.y.len(), 78);
        assert_eq!(w.len(), 78);
    }

    #[test]
    fn exact_fit_recovers_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_walk(&mut rng, "A", ym(2000, 1), 120);
        let b = random_walk(&mut rng, "B", ym(2000, 1), 120);
        let w = Window::new(ym(2002, 1), ym(2008, 12)).unwrap();
        let truth = [2.5, -1.3, 4.0, 100.0];
        let values = w
            .months()
            .map(|t| {
                truth[0] * a.get(t.add_months(-3)).unwrap()
                    + truth[1] * b.get(t.add_months(-5)).unwrap()
                    + truth[2] * time_trend(t)
                    + truth[3]
            })
            .collect();
        let p = MonthlySeries::new("P", w.first(), values).unwrap();
        let cat = CpiCatalog::from_series([a, b]).unwrap();
        let spec = ModelSpec::new("P", "A", 3, "B", 5).unwrap();
        let m = fit(&p, &cat, &spec, w).unwrap();
        for (got, want) in m.coefficients().iter().zip(truth) {
            assert!(((got - want) / want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!(m.sigma < 1e-9);
        assert!(m.residuals.iter().all(|e| e.abs() < 1e-9));

        // Prediction past the fit window extends the generator.
        let ext = Window::new(ym(2009, 1), ym(2009, 8)).unwrap();
        let pred = predict(&m, &cat, ext).unwrap();
        for (t, v) in pred.iter() {
            let want = truth[0] * cat.series("A").unwrap().get(t.add_months(-3)).unwrap()
                + truth[1] * cat.series("B").unwrap().get(t.add_months(-5)).unwrap()
                + truth[2] * time_trend(t)
                + truth[3];
            assert!((v - want).abs() < 1e-9 * want.abs());
        }
    }

    #[test]
    fn prediction_on_fit_window_matches_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_walk(&mut rng, "A", ym(2000, 1), 100);
        let b = random_walk(&mut rng, "B", ym(2000, 1), 100);
        let p = random_walk(&mut rng, "P", ym(2001, 1), 80);
        let cat = CpiCatalog::from_series([a, b]).unwrap();
        let spec = ModelSpec::new("P", "A", 2, "B", -1).unwrap();
        let w = Window::new(ym(2001, 6), ym(2007, 6)).unwrap();
        let m = fit(&p, &cat, &spec, w).unwrap();
        let pred = predict(&m, &cat, w).unwrap();
        let obs = p.slice(&w).unwrap();
        for ((o, f), e) in obs.iter().zip(pred.values()).zip(&m.residuals) {
            assert!((o - f - e).abs() <= 1e-12 * o.abs().max(1.0));
        }
        assert!((sigma_from_residuals(&m.residuals) - m.sigma).abs() <= 1e-12 * m.sigma);
    }

    #[test]
    fn constant_model_predicts_constant() {
        let a = MonthlySeries::new("A", ym(2000, 1), vec![3.0; 30]).unwrap();
        let b = MonthlySeries::new("B", ym(2000, 1), vec![7.0; 30]).unwrap();
        let cat = CpiCatalog::from_series([a, b]).unwrap();
        let w = Window::new(ym(2000, 1), ym(2000, 12)).unwrap();
        let m = FittedModel {
            spec: ModelSpec::new("X", "A", 0, "B", 0).unwrap(),
            b1: 0.0,
            b2: 0.0,
            c: 0.0,
            d: 5.0,
            sigma: 0.0,
            window: w,
            residuals: vec![0.0; 12],
        };
        let pred = predict(&m, &cat, Window::new(ym(2000, 3), ym(2001, 6)).unwrap()).unwrap();
        assert!(pred.values().iter().all(|&v| v == 5.0));
        assert!(matches!(
            predict(&m, &cat, Window::new(ym(2002, 1), ym(2003, 1)).unwrap()),
            Err(Error::WindowUnavailable { .. })
        ));
    }

    #[test]
    fn duplicated_column_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (x, y) = random_system(&mut rng, 40);
        let c0 = x.column(0).to_vec();
        let dup = Design::from_columns(&[&c0, &c0, x.column(2), x.column(3)]);
        assert!(matches!(ols_fit(&dup, &y), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn too_few_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (x, y) = random_system(&mut rng, 7);
        assert!(matches!(ols_fit(&x, &y), Err(Error::TooFewObservations { .. })));
    }

    #[test]
    fn matches_brute_force_minimizer() {
        // Oracle: normal equations via LU, then a shrinking grid of
        // perturbations around the optimum must never lower the SSR.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let (x, y) = random_system(&mut rng, 80);
            let fit = ols_fit(&x, &y).unwrap();
            let oracle = normal_equations(&x, &y);
            for (a, b) in fit.coefficients.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
            let best = ssr(&x, &y, &fit.coefficients);
            for step in [1e-1, 1e-2, 1e-3, 1e-4] {
                for code in 0..81u32 {
                    let mut beta = fit.coefficients.to_vec();
                    let mut c = code;
                    for b in beta.iter_mut() {
                        *b += step * ((c % 3) as f64 - 1.0);
                        c /= 3;
                    }
                    assert!(ssr(&x, &y, &beta) >= best * (1.0 - 1e-12));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn normal_equations_hold(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, y) = random_system(&mut rng, 80);
            let fit = ols_fit(&x, &y).unwrap();
            let xte = x.tr_mul_vec(&fit.residuals);
            let xty = x.tr_mul_vec(&y);
            let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
            prop_assert!(norm(&xte) <= 1e-8 * norm(&xty));
        }

        #[test]
        fn column_swap_and_shifts(seed in any::<u64>(), k in -100.0f64..100.0, s in 0.1f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, y) = random_system(&mut rng, 60);
            let base = ols_fit(&x, &y).unwrap();

            let swapped = Design::from_columns(&[x.column(1), x.column(0), x.column(2), x.column(3)]);
            let sw = ols_fit(&swapped, &y).unwrap();
            prop_assert!((sw.sigma - base.sigma).abs() <= 1e-10 * base.sigma);
            prop_assert!((sw.coefficients[0] - base.coefficients[1]).abs() <= 1e-9 * base.coefficients[1].abs().max(1.0));

            let shifted: Vec<f64> = y.iter().map(|v| v + k).collect();
            let sh = ols_fit(&x, &shifted).unwrap();
            prop_assert!((sh.coefficients[3] - base.coefficients[3] - k).abs() <= 1e-9 * (1.0 + k.abs()));
            for i in 0..3 {
                prop_assert!((sh.coefficients[i] - base.coefficients[i]).abs() <= 1e-9 * (1.0 + base.coefficients[i].abs()));
            }
            prop_assert!((sh.sigma - base.sigma).abs() <= 1e-9 * base.sigma);

            let scaled: Vec<f64> = x.column(0).iter().map(|v| v * s).collect();
            let sc_x = Design::from_columns(&[&scaled, x.column(1), x.column(2), x.column(3)]);
            let sc = ols_fit(&sc_x, &y).unwrap();
            prop_assert!((sc.coefficients[0] * s - base.coefficients[0]).abs() <= 1e-9 * base.coefficients[0].abs().max(1e-3));
            prop_assert!((sc.sigma - base.sigma).abs() <= 1e-10 * base.sigma);
        }
    }
}
