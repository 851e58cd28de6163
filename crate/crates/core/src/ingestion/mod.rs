//! File-based inputs: monthly series CSVs, the CPI catalog manifest, share
//! prices and shares outstanding, plus fitted-model persistence.
//!
//! Series files hold one `YYYY-MM,value` row per month, ascending and without
//! gaps. A header line is allowed. Missing months are an error; nothing is
//! interpolated.

mod model_io;
pub mod registry;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub use model_io::{
    load_model, load_models, model_from_json, model_to_json, save_model, ModelDocument,
    SCHEMA_VERSION,
};

use crate::error::{Error, Result};
use crate::timeseries::{MonthlyIndex, MonthlySeries};

/// Reads a single series from a `YYYY-MM,value` CSV file.
pub fn load_series(path: impl AsRef<Path>, id: &str) -> Result<MonthlySeries> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_series(&text, path, id)
}

/// Parses series text; `path` is only used in diagnostics.
pub fn parse_series(text: &str, path: &Path, id: &str) -> Result<MonthlySeries> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut start: Option<MonthlyIndex> = None;
    let mut previous: Option<MonthlyIndex> = None;
    let mut values = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        let (date, value) = line
            .split_once(',')
            .ok_or_else(|| parse_err(line_no, format!("expected `YYYY-MM,value`, got {line:?}")))?;
        let month: MonthlyIndex = match date.trim().parse() {
            Ok(m) => m,
            // A header is only tolerated before the first data row.
            Err(_) if previous.is_none() && value.trim().parse::<f64>().is_err() => continue,
            Err(e) => return Err(parse_err(line_no, e)),
        };
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad value {:?}", value.trim())))?;
        if !value.is_finite() {
            return Err(parse_err(line_no, format!("non-finite value {value}")));
        }
        if let Some(prev) = previous {
            if month <= prev {
                return Err(Error::Order {
                    path: path.to_path_buf(),
                    line: line_no,
                    previous: prev,
                    found: month,
                });
            }
            if month != prev.next() {
                return Err(Error::Gap {
                    path: path.to_path_buf(),
                    missing: prev.next(),
                    before: prev,
                    after: month,
                });
            }
        } else {
            start = Some(month);
        }
        previous = Some(month);
        values.push(value);
    }

    let start = start.ok_or_else(|| parse_err(0, "no data rows".to_string()))?;
    MonthlySeries::new(id, start, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    /// Registry description; `None` for user-defined acronyms.
    pub description: Option<String>,
    pub series: MonthlySeries,
}

impl CatalogEntry {
    pub fn user_defined(&self) -> bool {
        self.description.is_none()
    }
}

/// CPI components available to the model search, keyed by acronym.
///
/// Iteration is always in acronym order, whatever order the components were
/// loaded in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CpiCatalog {
    entries: BTreeMap<String, CatalogEntry>,
}

impl CpiCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a component. Registered acronyms pick up their description.
    pub fn insert(&mut self, series: MonthlySeries) -> Result<()> {
        let acronym = series.id().to_string();
        if self.entries.contains_key(&acronym) {
            return Err(Error::DuplicateAcronym(acronym));
        }
        let description = registry::describe(&acronym).map(str::to_string);
        self.entries.insert(acronym, CatalogEntry { description, series });
        Ok(())
    }

    pub fn from_series(series: impl IntoIterator<Item = MonthlySeries>) -> Result<Self> {
        let mut catalog = CpiCatalog::new();
        for s in series {
            catalog.insert(s)?;
        }
        Ok(catalog)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, acronym: &str) -> Option<&CatalogEntry> {
        self.entries.get(acronym)
    }

    pub fn series(&self, acronym: &str) -> Result<&MonthlySeries> {
        self.entries
            .get(acronym)
            .map(|e| &e.series)
            .ok_or_else(|| Error::UnknownComponent(acronym.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &CatalogEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn acronyms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Acronyms not found in the built-in registry.
    pub fn user_defined(&self) -> Vec<&str> {
        self.iter()
            .filter(|(_, e)| e.user_defined())
            .map(|(k, _)| k)
            .collect()
    }

    /// Copy with every component cut off after `last`. Components with no
    /// data on or before `last` are dropped.
    pub fn truncated(&self, last: MonthlyIndex) -> CpiCatalog {
        let entries = self
            .entries
            .iter()
            .filter_map(|(k, e)| {
                e.series.truncate_after(last).map(|series| {
                    (
                        k.clone(),
                        CatalogEntry {
                            description: e.description.clone(),
                            series,
                        },
                    )
                })
            })
            .collect();
        CpiCatalog { entries }
    }
}

/// Loads every component listed in an `ACRONYM,path` manifest. Relative
/// paths resolve against the manifest's directory.
pub fn load_catalog(manifest_path: impl AsRef<Path>) -> Result<CpiCatalog> {
    let manifest_path = manifest_path.as_ref();
    let rows = read_pairs(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut catalog = CpiCatalog::new();
    for (acronym, file) in rows {
        if catalog.get(&acronym).is_some() {
            return Err(Error::DuplicateAcronym(acronym));
        }
        let path = resolve(base, &file);
        let series = load_series(&path, &acronym)?;
        catalog.insert(series)?;
    }
    for acronym in catalog.user_defined() {
        log::warn!("{acronym} is not a registered CPI component; treating it as user-defined");
    }
    Ok(catalog)
}

/// Observed share prices and, optionally, shares outstanding per ticker.
#[derive(Debug, Clone, Default)]
pub struct PriceBook {
    prices: BTreeMap<String, MonthlySeries>,
    shares: BTreeMap<String, f64>,
}

impl PriceBook {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an observed price series; prices must be strictly positive.
    pub fn insert(&mut self, series: MonthlySeries) -> Result<()> {
        check_positive(&series)?;
        let ticker = series.id().to_string();
        if self.prices.contains_key(&ticker) {
            return Err(Error::DuplicateTicker(ticker));
        }
        self.prices.insert(ticker, series);
        Ok(())
    }

    pub fn set_shares(&mut self, ticker: &str, shares: f64) -> Result<()> {
        if !(shares.is_finite() && shares > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "{ticker}: shares outstanding must be positive, got {shares}"
            )));
        }
        self.shares.insert(ticker.to_string(), shares);
        Ok(())
    }

    pub fn prices(&self, ticker: &str) -> Option<&MonthlySeries> {
        self.prices.get(ticker)
    }

    pub fn shares(&self, ticker: &str) -> Option<f64> {
        self.shares.get(ticker).copied()
    }

    pub fn tickers(&self) -> impl Iterator<Item = &str> {
        self.prices.keys().map(String::as_str)
    }
}

/// Path of a ticker's price file inside a prices directory.
pub fn price_path(dir: &Path, ticker: &str) -> PathBuf {
    dir.join(format!("{ticker}.csv"))
}

/// Loads `<dir>/<ticker>.csv` as an observed price series.
pub fn load_prices(dir: impl AsRef<Path>, ticker: &str) -> Result<MonthlySeries> {
    let path = price_path(dir.as_ref(), ticker);
    let series = load_series(&path, ticker)?;
    check_positive(&series)?;
    Ok(series)
}

fn check_positive(series: &MonthlySeries) -> Result<()> {
    match series.iter().find(|(_, v)| *v <= 0.0) {
        Some((month, value)) => Err(Error::NonPositivePrice {
            ticker: series.id().to_string(),
            month,
            value,
        }),
        None => Ok(()),
    }
}

/// Reads a `TICKER,shares` file.
pub fn load_shares(path: impl AsRef<Path>) -> Result<BTreeMap<String, f64>> {
    let path = path.as_ref();
    let mut out = BTreeMap::new();
    for (i, (ticker, value)) in read_pairs(path)?.into_iter().enumerate() {
        let shares: f64 = value.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("bad share count {value:?}"),
        })?;
        if !(shares.is_finite() && shares > 0.0) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("share count must be positive, got {shares}"),
            });
        }
        if out.insert(ticker.clone(), shares).is_some() {
            return Err(Error::DuplicateTicker(ticker));
        }
    }
    Ok(out)
}

/// Reads a `TICKER,model.json` portfolio manifest. Relative paths resolve
/// against the manifest's directory.
pub fn load_portfolio(path: impl AsRef<Path>) -> Result<Vec<(String, PathBuf)>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut seen = std::collections::BTreeSet::new();
    read_pairs(path)?
        .into_iter()
        .map(|(ticker, file)| {
            if !seen.insert(ticker.clone()) {
                return Err(Error::DuplicateTicker(ticker));
            }
            let model = resolve(base, &file);
            Ok((ticker, model))
        })
        .collect()
}

/// Two-column CSV rows, skipping a header row such as `acronym,path`.
fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: format!("{other:?}"),
            },
        })?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() < 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected two columns".to_string(),
            });
        }
        let key = record[0].to_string();
        if rows.is_empty() && is_header(&key) {
            continue;
        }
        rows.push((key, record[1].to_string()));
    }
    Ok(rows)
}

fn is_header(key: &str) -> bool {
    matches!(
        key.to_ascii_lowercase().as_str(),
        "acronym" | "ticker" | "symbol" | "component"
    )
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
