//! Share prices as lagged linear functions of consumer price index
//! components.
//!
//! The model explains a company's monthly share price with two CPI
//! components, each displaced by its own integer month lag, plus a linear time
//! trend and an intercept. This crate fits that model, searches the full grid
//! of component pairs and lags for the best one, checks the fit with unit-root
//! and cointegration tests, replays fits as of a historical month, and flags
//! predicted price paths that go below zero.
//!
//! Module map:
//!
//! - [`timeseries`]: month arithmetic, lag shifting, alignment, the trend regressor
//! - [`ingestion`]: CSV series, the CPI catalog, prices, model JSON
//! - [`regression`]: design matrix, least squares, prediction
//! - [`search`]: exhaustive pair/lag search and rolling stability
//! - [`econometrics`]: ADF, Phillips-Perron, Engle-Granger, Johansen
//! - [`backtest`]: as-of fits, forward projection, divergence
//! - [`bankruptcy`]: negative-price screening and implied debt
//! - [`cli`]: the `cpiprice` command line

pub mod backtest;
pub mod bankruptcy;
pub mod cli;
pub mod econometrics;
pub mod error;
pub mod ingestion;
pub mod linalg;
pub mod montecarlo;
pub mod regression;
pub mod search;
pub mod timeseries;

pub use error::{Error, Result};
pub use ingestion::{CpiCatalog, PriceBook};
pub use regression::{FittedModel, ModelSpec};
pub use timeseries::{MonthlyIndex, MonthlySeries, Window};

use std::fs;
use std::io::Write;
use std::path::Path;

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
