//! Exhaustive search over component pairs and lags.
//!
//! Every unordered pair of catalog components is tried with every lag pair in
//! `[lag_min, lag_max]²`, giving `C(N, 2) · L²` candidates for `N` components
//! and `L` lags. Each candidate is fitted by least squares and the survivors
//! are ranked by residual standard error.
//!
//! Ranking is a total order: lower sigma first, then the component acronyms,
//! then the two lags. Candidates are evaluated in parallel and merged through
//! bounded top-k lists under that order, so the result does not depend on the
//! number of threads.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::{CpiCatalog, ModelDocument, SCHEMA_VERSION};
use crate::regression::{design_from_series, ols_fit, FittedModel, ModelSpec, MIN_OBSERVATIONS};
use crate::timeseries::{MonthlyIndex, MonthlySeries, Window};

/// Largest lag accepted without `allow_extended_lags`.
pub const MAX_LAG: i64 = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchWindow {
    pub first: MonthlyIndex,
    /// `None` means the last month of the price series.
    pub last: Option<MonthlyIndex>,
}

impl Default for SearchWindow {
    fn default() -> Self {
        SearchWindow {
            first: MonthlyIndex::new(2003, 7).expect("valid month"),
            last: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub lag_min: i64,
    pub lag_max: i64,
    pub window: SearchWindow,
    pub top_k: usize,
    pub min_obs: usize,
    /// Fit every candidate on one common window instead of its own maximal one.
    pub strict_window: bool,
    pub allow_extended_lags: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            lag_min: -6,
            lag_max: MAX_LAG,
            window: SearchWindow::default(),
            top_k: 10,
            min_obs: 60,
            strict_window: false,
            allow_extended_lags: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.lag_min > self.lag_max {
            return bad(format!("lag_min {} exceeds lag_max {}", self.lag_min, self.lag_max));
        }
        if !self.allow_extended_lags && self.lag_max > MAX_LAG {
            return bad(format!(
                "lag_max {} exceeds the {MAX_LAG}-month cap (allow extended lags to override)",
                self.lag_max
            ));
        }
        if !self.allow_extended_lags && self.lag_min < -MAX_LAG {
            return bad(format!(
                "lag_min {} is below -{MAX_LAG} (allow extended lags to override)",
                self.lag_min
            ));
        }
        if self.min_obs < MIN_OBSERVATIONS {
            return bad(format!("min_obs must be at least {MIN_OBSERVATIONS}, got {}", self.min_obs));
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1".into());
        }
        Ok(())
    }

    pub fn lag_count(&self) -> u64 {
        (self.lag_max - self.lag_min + 1) as u64
    }

    /// Search window clipped to the price data.
    pub fn base_window(&self, prices: &MonthlySeries) -> Result<Window> {
        let last = self.window.last.unwrap_or(prices.end());
        let requested = Window::new(self.window.first, last).ok_or_else(|| {
            Error::InvalidConfig(format!("window {}..{last} is reversed", self.window.first))
        })?;
        requested
            .intersect(&prices.window())
            .ok_or(Error::WindowUnavailable {
                requested,
                feasible: None,
            })
    }
}

/// `C(N, 2) · L²`.
pub fn candidate_count(components: usize, lags: u64) -> u64 {
    let n = components as u64;
    n * n.saturating_sub(1) / 2 * lags * lags
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Best models first.
    pub ranked: Vec<FittedModel>,
    pub evaluated_count: u64,
    pub rejected_count: u64,
}

impl SearchResult {
    pub fn best(&self) -> &FittedModel {
        &self.ranked[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct CandidateKey {
    first: u32,
    second: u32,
    tau1: i64,
    tau2: i64,
}

fn rank_order(a: &(f64, CandidateKey), b: &(f64, CandidateKey)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

struct Accumulator {
    top: Vec<((f64, CandidateKey), FittedModel)>,
    evaluated: u64,
    rejected: u64,
    k: usize,
}

impl Accumulator {
    fn new(k: usize) -> Self {
        Accumulator {
            top: Vec::new(),
            evaluated: 0,
            rejected: 0,
            k,
        }
    }

    fn admits(&self, key: &(f64, CandidateKey)) -> bool {
        self.top.len() < self.k
            || rank_order(key, &self.top.last().expect("non-empty").0) == Ordering::Less
    }

    fn push(&mut self, key: (f64, CandidateKey), model: FittedModel) {
        let pos = self
            .top
            .binary_search_by(|(k, _)| rank_order(k, &key))
            .unwrap_or_else(|p| p);
        self.top.insert(pos, (key, model));
        self.top.truncate(self.k);
    }

    fn merge(mut self, other: Accumulator) -> Accumulator {
        self.evaluated += other.evaluated;
        self.rejected += other.rejected;
        self.top.extend(other.top);
        self.top.sort_by(|a, b| rank_order(&a.0, &b.0));
        self.top.truncate(self.k);
        self
    }
}

/// Window shared by every candidate: each component must cover it at every
/// lag in the range.
fn common_window(base: Window, components: &[(&str, &MonthlySeries)], config: &SearchConfig) -> Option<Window> {
    components.iter().try_fold(base, |w, (_, s)| {
        let usable = Window::new(
            s.start().add_months(config.lag_max),
            s.end().add_months(config.lag_min),
        )?;
        w.intersect(&usable)
    })
}

/// Finds the best-fitting models for one ticker.
pub fn search_best(prices: &MonthlySeries, catalog: &CpiCatalog, config: &SearchConfig) -> Result<SearchResult> {
    config.validate()?;
    if catalog.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "search needs at least two CPI components, catalog has {}",
            catalog.len()
        )));
    }
    let base = config.base_window(prices)?;
    let components: Vec<(&str, &MonthlySeries)> = catalog.iter().map(|(k, e)| (k, &e.series)).collect();
    let pairs: Vec<(u32, u32)> = (0..components.len() as u32)
        .flat_map(|i| (i + 1..components.len() as u32).map(move |j| (i, j)))
        .collect();
    let lags = config.lag_count();
    let total = candidate_count(components.len(), lags);
    let strict = if config.strict_window {
        Some(common_window(base, &components, config))
    } else {
        None
    };
    let ticker = prices.id();

    let evaluate = |mut acc: Accumulator, index: u64| -> Accumulator {
        let (first, second) = pairs[(index / (lags * lags)) as usize];
        let rem = index % (lags * lags);
        let tau1 = config.lag_min + (rem / lags) as i64;
        let tau2 = config.lag_min + (rem % lags) as i64;
        let (name1, s1) = components[first as usize];
        let (name2, s2) = components[second as usize];

        let window = match strict {
            Some(common) => common,
            None => s1
                .window()
                .shift(tau1)
                .intersect(&s2.window().shift(tau2))
                .and_then(|w| w.intersect(&base)),
        };
        let fitted = window
            .filter(|w| w.len() >= config.min_obs)
            .and_then(|w| {
                let design = design_from_series(prices, s1, tau1, s2, tau2, w).ok()?;
                let fit = ols_fit(&design.x, &design.y).ok()?;
                fit.sigma.is_finite().then_some((w, fit))
            });
        match fitted {
            Some((w, fit)) => {
                acc.evaluated += 1;
                let key = (fit.sigma, CandidateKey { first, second, tau1, tau2 });
                if acc.admits(&key) {
                    let spec = ModelSpec {
                        ticker: ticker.to_string(),
                        cpi1: name1.to_string(),
                        tau1,
                        cpi2: name2.to_string(),
                        tau2,
                    };
                    acc.push(key, FittedModel::from_fit(spec, w, fit));
                }
            }
            None => acc.rejected += 1,
        }
        acc
    };

    let acc = (0..total)
        .into_par_iter()
        .fold(|| Accumulator::new(config.top_k), evaluate)
        .reduce(|| Accumulator::new(config.top_k), Accumulator::merge);

    debug_assert_eq!(acc.evaluated + acc.rejected, total);
    if acc.top.is_empty() {
        return Err(Error::NoFeasibleCandidate { rejected: acc.rejected });
    }
    Ok(SearchResult {
        ranked: acc.top.into_iter().map(|(_, m)| m).collect(),
        evaluated_count: acc.evaluated,
        rejected_count: acc.rejected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityEntry {
    pub end: MonthlyIndex,
    pub winner: Option<ModelSpec>,
    pub sigma: Option<f64>,
    /// Why the search at this end-month produced no winner.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub entries: Vec<StabilityEntry>,
    /// Every end-month produced the same winner.
    pub stable: bool,
}

/// Reruns the search with the window ending at each of the last
/// `months_back` months and reports whether the winning spec changes.
pub fn rolling_stability(
    prices: &MonthlySeries,
    catalog: &CpiCatalog,
    config: &SearchConfig,
    months_back: usize,
) -> Result<StabilityReport> {
    if months_back == 0 {
        return Err(Error::InvalidConfig("months_back must be at least 1".into()));
    }
    config.validate()?;
    let last = config.base_window(prices)?.last();
    let entries: Vec<StabilityEntry> = (0..months_back)
        .rev()
        .map(|back| {
            let end = last.add_months(-(back as i64));
            let mut cfg = config.clone();
            cfg.window.last = Some(end);
            cfg.top_k = 1;
            match search_best(prices, catalog, &cfg) {
                Ok(r) => StabilityEntry {
                    end,
                    winner: Some(r.best().spec.clone()),
                    sigma: Some(r.best().sigma),
                    error: None,
                },
                Err(e) => StabilityEntry {
                    end,
                    winner: None,
                    sigma: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let stable = entries.iter().all(|e| e.winner.is_some())
        && entries.windows(2).all(|w| w[0].winner == w[1].winner);
    Ok(StabilityReport { entries, stable })
}

/// Serialized search output: run header plus the ranked models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub schema_version: u32,
    pub ticker: String,
    pub config: SearchConfig,
    pub components: usize,
    pub candidates: u64,
    pub evaluated_count: u64,
    pub rejected_count: u64,
    pub models: Vec<ModelDocument>,
}

impl SearchReport {
    pub fn new(ticker: &str, config: &SearchConfig, components: usize, result: &SearchResult) -> Self {
        SearchReport {
            schema_version: SCHEMA_VERSION,
            ticker: ticker.to_string(),
            config: config.clone(),
            components,
            candidates: candidate_count(components, config.lag_count()),
            evaluated_count: result.evaluated_count,
            rejected_count: result.rejected_count,
            models: result.ranked.iter().map(ModelDocument::from).collect(),
        }
    }
}
