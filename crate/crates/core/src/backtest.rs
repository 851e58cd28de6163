//! Point-in-time replay.
//!
//! [`fit_asof`] reruns the search with every price and CPI observation after
//! the as-of month removed, so nothing later can leak into the fit.
//! [`run_asof`] then projects the as-of model forward with the CPI data that
//! did arrive later, and [`compare`] lines that projection up against the
//! observed prices and a model fitted on the full sample.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::{CpiCatalog, ModelDocument};
use crate::regression::{predict, prediction_horizon, FittedModel};
use crate::search::{search_best, SearchConfig};
use crate::timeseries::{MonthlyIndex, MonthlySeries, Window};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub search: SearchConfig,
    /// CPI for month m is only known from m+1 on, so an as-of fit at m sees
    /// CPI through m−1.
    pub publication_lag: bool,
    pub divergence: DivergenceRule,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            search: SearchConfig::default(),
            publication_lag: false,
            divergence: DivergenceRule::default(),
        }
    }
}

/// Divergence starts at the first month that opens a run of `consecutive`
/// months with |projected − observed| above `sigma_multiple · σ`, where σ is
/// the as-of model's residual standard error. The threshold never goes below
/// `min_threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRule {
    pub sigma_multiple: f64,
    pub consecutive: usize,
    pub min_threshold: f64,
}

impl Default for DivergenceRule {
    fn default() -> Self {
        DivergenceRule {
            sigma_multiple: 2.0,
            consecutive: 3,
            min_threshold: 1e-8,
        }
    }
}

impl DivergenceRule {
    pub fn threshold(&self, sigma: f64) -> f64 {
        (self.sigma_multiple * sigma).max(self.min_threshold)
    }

    /// First month of the first qualifying run in `gaps`, which must be
    /// consecutive months.
    pub fn onset(&self, sigma: f64, gaps: &[(MonthlyIndex, f64)]) -> Option<MonthlyIndex> {
        let threshold = self.threshold(sigma);
        let need = self.consecutive.max(1);
        let mut run = 0;
        for (i, (_, gap)) in gaps.iter().enumerate() {
            if gap.abs() > threshold {
                run += 1;
                if run == need {
                    return Some(gaps[i + 1 - need].0);
                }
            } else {
                run = 0;
            }
        }
        None
    }
}

/// Best model using only data observed on or before `asof`.
pub fn fit_asof(
    prices: &MonthlySeries,
    catalog: &CpiCatalog,
    asof: MonthlyIndex,
    config: &BacktestConfig,
) -> Result<FittedModel> {
    let prices = prices
        .truncate_after(asof)
        .ok_or(Error::NoFeasibleCandidate { rejected: 0 })?;
    let cpi_last = if config.publication_lag { asof.prev() } else { asof };
    let catalog = catalog.truncated(cpi_last);
    let mut search = config.search.clone();
    search.window.last = Some(search.window.last.map_or(asof, |l| l.min(asof)));
    search.top_k = 1;
    let mut result = search_best(&prices, &catalog, &search)?;
    Ok(result.ranked.swap_remove(0))
}

/// Model prices from `first` through `through`. Fails with the feasible range
/// when the CPI data do not reach.
pub fn project(
    model: &FittedModel,
    catalog: &CpiCatalog,
    first: MonthlyIndex,
    through: MonthlyIndex,
) -> Result<MonthlySeries> {
    let range = Window::new(first, through)
        .ok_or_else(|| Error::InvalidConfig(format!("projection range {first}..{through} is reversed")))?;
    predict(model, catalog, range)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsOfRun {
    pub asof: MonthlyIndex,
    pub model: FittedModel,
    /// Model prices from the month after `asof`; `None` when the CPI data
    /// do not reach that far.
    pub projection: Option<MonthlySeries>,
    /// Observed minus projected, where both exist.
    pub divergence: Vec<(MonthlyIndex, f64)>,
    pub rms_forward: Option<f64>,
}

fn rms(values: impl ExactSizeIterator<Item = f64>) -> Option<f64> {
    let n = values.len();
    (n > 0).then(|| (values.map(|v| v * v).sum::<f64>() / n as f64).sqrt())
}

/// Fits as of `asof` and projects through `through`, or as far as the CPI
/// data allow.
pub fn run_asof(
    prices: &MonthlySeries,
    catalog: &CpiCatalog,
    asof: MonthlyIndex,
    through: MonthlyIndex,
    config: &BacktestConfig,
) -> Result<AsOfRun> {
    let model = fit_asof(prices, catalog, asof, config)?;
    let horizon = prediction_horizon(&model, catalog)?;
    let projection = Window::new(asof.next(), through)
        .and_then(|w| horizon.and_then(|h| w.intersect(&h)))
        .filter(|w| w.first() == asof.next())
        .map(|w| predict(&model, catalog, w))
        .transpose()?;
    let divergence: Vec<(MonthlyIndex, f64)> = projection
        .iter()
        .flat_map(|p| p.iter())
        .filter_map(|(m, v)| prices.get(m).map(|o| (m, o - v)))
        .collect();
    let rms_forward = rms(divergence.iter().map(|(_, d)| *d));
    Ok(AsOfRun {
        asof,
        model,
        projection,
        divergence,
        rms_forward,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub month: MonthlyIndex,
    pub observed: f64,
    pub asof_pred: f64,
    pub later_pred: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub rms_asof: Option<f64>,
    pub rms_later: Option<f64>,
    pub divergence_onset: Option<MonthlyIndex>,
}

/// Lines the as-of projection up against `observed` and the in-sample
/// fitted values of `later`, over the months where all three exist.
pub fn compare(
    run: &AsOfRun,
    later: &FittedModel,
    observed: &MonthlySeries,
    rule: &DivergenceRule,
) -> ComparisonReport {
    let rows: Vec<ComparisonRow> = run
        .projection
        .iter()
        .flat_map(|p| p.iter())
        .filter_map(|(month, asof_pred)| {
            let observed = observed.get(month)?;
            if !later.window.contains(month) {
                return None;
            }
            let i = later.window.first().months_until(month) as usize;
            Some(ComparisonRow {
                month,
                observed,
                asof_pred,
                later_pred: observed - later.residuals[i],
            })
        })
        .collect();
    let gaps: Vec<(MonthlyIndex, f64)> = rows.iter().map(|r| (r.month, r.asof_pred - r.observed)).collect();
    ComparisonReport {
        rms_asof: rms(rows.iter().map(|r| r.observed - r.asof_pred)),
        rms_later: rms(rows.iter().map(|r| r.observed - r.later_pred)),
        divergence_onset: rule.onset(run.model.sigma, &gaps),
        rows,
    }
}

/// JSON companion of the comparison CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestSummary {
    pub ticker: String,
    pub asof: MonthlyIndex,
    pub through: MonthlyIndex,
    pub publication_lag: bool,
    pub asof_model: ModelDocument,
    pub later_model: ModelDocument,
    pub projection: Option<Window>,
    pub rows: usize,
    pub rms_forward: Option<f64>,
    pub rms_asof: Option<f64>,
    pub rms_later: Option<f64>,
    pub divergence_rule: DivergenceRule,
    pub divergence_threshold: f64,
    /// Month string, or `"none"`.
    pub divergence_onset: String,
}

impl BacktestSummary {
    pub fn new(
        run: &AsOfRun,
        later: &FittedModel,
        report: &ComparisonReport,
        through: MonthlyIndex,
        config: &BacktestConfig,
    ) -> Self {
        BacktestSummary {
            ticker: run.model.spec.ticker.clone(),
            asof: run.asof,
            through,
            publication_lag: config.publication_lag,
            asof_model: ModelDocument::from(&run.model),
            later_model: ModelDocument::from(later),
            projection: run.projection.as_ref().map(MonthlySeries::window),
            rows: report.rows.len(),
            rms_forward: run.rms_forward,
            rms_asof: report.rms_asof,
            rms_later: report.rms_later,
            divergence_rule: config.divergence,
            divergence_threshold: config.divergence.threshold(run.model.sigma),
            divergence_onset: report
                .divergence_onset
                .map_or_else(|| "none".to_string(), |m| m.to_string()),
        }
    }
}

/// `month,observed,asof_pred,later_pred`.
pub fn comparison_csv(report: &ComparisonReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["month", "observed", "asof_pred", "later_pred"])
        .expect("in-memory write");
    for r in &report.rows {
        w.write_record([
            r.month.to_string(),
            r.observed.to_string(),
            r.asof_pred.to_string(),
            r.later_pred.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn write_comparison(path: &Path, report: &ComparisonReport) -> Result<()> {
    crate::write_atomic(path, &comparison_csv(report))
}
