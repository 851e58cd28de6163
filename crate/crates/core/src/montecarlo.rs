//! Seeded simulation harness.
//!
//! Every replication draws from its own ChaCha8 stream, selected from a root
//! seed by the replication index, so results are the same whatever the
//! number of threads. The generators here also build synthetic markets with
//! a known best model for end-to-end recovery checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::econometrics::{
    adf_test, engle_granger, johansen_test, pp_test, Bandwidth, Deterministic, JohansenCase, Level,
    DEFAULT_MAX_LAG, DEFAULT_VECM_LAG,
};
use crate::ingestion::{registry::REGISTRY, CpiCatalog};
use crate::regression::ModelSpec;
use crate::search::{search_best, SearchConfig};
use crate::timeseries::{time_trend, MonthlyIndex, MonthlySeries};

/// Random stream for replication `rep` under `root`.
pub fn rep_rng(root: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(rep);
    rng
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Cumulative sum of `drift + N(0, 1)` steps, starting from the first step.
pub fn random_walk(rng: &mut impl Rng, n: usize, drift: f64) -> Vec<f64> {
    let mut level = 0.0;
    (0..n)
        .map(|_| {
            level += drift + normal(rng);
            level
        })
        .collect()
}

/// `y_t = phi·y_{t−1} + N(0, 1)` from `y_0 = 0`, with a 100-step burn-in.
pub fn ar1(rng: &mut impl Rng, n: usize, phi: f64) -> Vec<f64> {
    let mut y = 0.0;
    for _ in 0..100 {
        y = phi * y + normal(rng);
    }
    (0..n)
        .map(|_| {
            y = phi * y + normal(rng);
            y
        })
        .collect()
}

/// Share of replications for which `hit` returned true. Errors count as
/// misses.
pub fn frequency<F>(seed: u64, reps: usize, hit: F) -> f64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let hits = (0..reps as u64)
        .into_par_iter()
        .filter(|&rep| hit(&mut rep_rng(seed, rep)))
        .count();
    hits as f64 / reps as f64
}

pub fn adf_rejection_rate(seed: u64, reps: usize, n: usize, phi: Option<f64>) -> f64 {
    frequency(seed, reps, |rng| {
        let y = match phi {
            Some(phi) => ar1(rng, n, phi),
            None => random_walk(rng, n, 0.0),
        };
        adf_test(&y, DEFAULT_MAX_LAG, Deterministic::Constant).is_ok_and(|r| r.rejects_at(Level::Five))
    })
}

pub fn pp_rejection_rate(seed: u64, reps: usize, n: usize, phi: Option<f64>) -> f64 {
    frequency(seed, reps, |rng| {
        let y = match phi {
            Some(phi) => ar1(rng, n, phi),
            None => random_walk(rng, n, 0.0),
        };
        pp_test(&y, Bandwidth::Automatic, Deterministic::Constant).is_ok_and(|r| r.rejects_at(Level::Five))
    })
}

fn monthly(id: &str, values: Vec<f64>) -> MonthlySeries {
    MonthlySeries::new(id, MonthlyIndex::new(2000, 1).expect("valid month"), values).expect("finite values")
}

/// Driftless random walk and `2·walk + N(0, 1)`.
pub fn cointegrated_pair(rng: &mut impl Rng, n: usize) -> (MonthlySeries, MonthlySeries) {
    let a = random_walk(rng, n, 0.0);
    let b = a.iter().map(|v| 2.0 * v + normal(rng)).collect();
    (monthly("y1", a), monthly("y2", b))
}

/// Two independent driftless random walks.
pub fn independent_pair(rng: &mut impl Rng, n: usize) -> (MonthlySeries, MonthlySeries) {
    let a = random_walk(rng, n, 0.0);
    let b = random_walk(rng, n, 0.0);
    (monthly("y1", a), monthly("y2", b))
}

/// Share of replications in which the Johansen test reports `rank` at 5%.
///
/// The pairs have no drift, so the constant is restricted to the
/// cointegrating relation.
pub fn johansen_rank_rate(seed: u64, reps: usize, n: usize, cointegrated: bool, rank: usize) -> f64 {
    frequency(seed, reps, |rng| {
        let (a, b) = if cointegrated {
            cointegrated_pair(rng, n)
        } else {
            independent_pair(rng, n)
        };
        johansen_test(&a, &b, DEFAULT_VECM_LAG, JohansenCase::RestrictedConstant).is_ok_and(|r| r.rank == rank)
    })
}

/// Share of replications in which Engle-Granger rejects no cointegration at
/// 5%.
pub fn engle_granger_rejection_rate(seed: u64, reps: usize, n: usize, cointegrated: bool) -> f64 {
    frequency(seed, reps, |rng| {
        let (a, b) = if cointegrated {
            cointegrated_pair(rng, n)
        } else {
            independent_pair(rng, n)
        };
        engle_granger(&b, &a, Deterministic::Constant, DEFAULT_MAX_LAG).is_ok_and(|r| r.rejects_at(Level::Five))
    })
}

/// Parameters of a synthetic market: CPI-like random walks and one price
/// series built from two of them.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSpec {
    pub components: usize,
    pub months: usize,
    pub start: MonthlyIndex,
    /// Positions in the component list of the two true regressors.
    pub true_pair: (usize, usize),
    pub lags: (i64, i64),
    /// `[b1, b2, c, d]`.
    pub coefficients: [f64; 4],
    pub noise_sd: f64,
}

impl Default for MarketSpec {
    fn default() -> Self {
        MarketSpec {
            components: 10,
            months: 84,
            start: MonthlyIndex::new(2002, 1).expect("valid month"),
            true_pair: (2, 6),
            lags: (3, 5),
            coefficients: [2.5, -1.3, 4.0, 100.0],
            noise_sd: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub catalog: CpiCatalog,
    pub prices: MonthlySeries,
    pub truth: ModelSpec,
    pub coefficients: [f64; 4],
}

impl SyntheticMarket {
    /// Search over lags −6..=14 on the whole price window.
    pub fn search_config(&self) -> SearchConfig {
        let mut config = SearchConfig::default();
        config.window.first = self.prices.start();
        config
    }
}

/// Builds a market whose prices follow the linear model exactly, plus
/// Gaussian noise of `noise_sd`. Components take the first acronyms of the
/// registry.
pub fn synthetic_market(rng: &mut impl Rng, spec: &MarketSpec) -> SyntheticMarket {
    assert!(spec.components <= REGISTRY.len() && spec.true_pair.0 < spec.true_pair.1);
    let series: Vec<MonthlySeries> = REGISTRY[..spec.components]
        .iter()
        .map(|(acronym, _)| {
            let walk = random_walk(rng, spec.months, 0.3);
            let values = walk.into_iter().map(|v| 180.0 + v).collect();
            MonthlySeries::new(*acronym, spec.start, values).expect("finite values")
        })
        .collect();
    let s1 = &series[spec.true_pair.0];
    let s2 = &series[spec.true_pair.1];
    let (tau1, tau2) = spec.lags;
    let window = s1
        .window()
        .shift(tau1)
        .intersect(&s2.window().shift(tau2))
        .expect("lagged components overlap");
    let [b1, b2, c, d] = spec.coefficients;
    let values = window
        .months()
        .map(|t| {
            let x1 = s1.get(t.add_months(-tau1)).expect("inside window");
            let x2 = s2.get(t.add_months(-tau2)).expect("inside window");
            b1 * x1 + b2 * x2 + c * time_trend(t) + d + spec.noise_sd * normal(rng)
        })
        .collect();
    let prices = MonthlySeries::new("SYN", window.first(), values).expect("finite values");
    let truth = ModelSpec::new("SYN", s1.id(), tau1, s2.id(), tau2).expect("distinct components");
    SyntheticMarket {
        catalog: CpiCatalog::from_series(series).expect("distinct acronyms"),
        prices,
        truth,
        coefficients: spec.coefficients,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub requirement: String,
    pub pass: bool,
}

fn check(name: &str, observed: f64, requirement: &str, pass: bool) -> Check {
    Check {
        name: name.to_string(),
        observed,
        requirement: requirement.to_string(),
        pass,
    }
}

/// Statistical self-test battery. Each check draws from its own sub-seed.
pub fn selftest(seed: u64) -> Vec<Check> {
    let sub = |k: u64| seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k);
    let mut out = Vec::new();

    let r = adf_rejection_rate(sub(1), 1000, 200, None);
    out.push(check("adf size (random walk, n=200)", r, "in [0.035, 0.065]", (0.035..=0.065).contains(&r)));
    let r = adf_rejection_rate(sub(2), 1000, 200, Some(0.5));
    out.push(check("adf power (AR(1) 0.5, n=200)", r, ">= 0.90", r >= 0.90));
    let r = pp_rejection_rate(sub(3), 1000, 200, None);
    out.push(check("pp size (random walk, n=200)", r, "in [0.03, 0.07]", (0.03..=0.07).contains(&r)));
    let r = johansen_rank_rate(sub(4), 100, 120, true, 1);
    out.push(check("johansen rank 1 (cointegrated, n=120)", r, ">= 0.90", r >= 0.90));
    let r = johansen_rank_rate(sub(5), 100, 120, false, 0);
    out.push(check("johansen rank 0 (independent, n=120)", r, ">= 0.85", r >= 0.85));
    let r = 1.0 - engle_granger_rejection_rate(sub(6), 100, 120, false);
    out.push(check("engle-granger no cointegration (independent, n=120)", r, ">= 0.85", r >= 0.85));

    let market = synthetic_market(&mut rep_rng(sub(7), 0), &MarketSpec::default());
    let recovered = search_best(&market.prices, &market.catalog, &market.search_config())
        .map(|r| (r.best().spec == market.truth, r.best().sigma))
        .unwrap_or((false, f64::NAN));
    out.push(check(
        "exact recovery (10 components, lags -6..14)",
        recovered.1,
        "true spec wins, sigma < 1e-9",
        recovered.0 && recovered.1 < 1e-9,
    ));
    out
}
