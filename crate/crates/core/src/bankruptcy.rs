//! Negative predicted prices as a distress signal.
//!
//! A predicted share price below zero is read as net debt: the company's
//! liabilities exceed what the model says its equity is worth. The implied
//! debt is the number of shares outstanding times the magnitude of the
//! negative price.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{MonthlyIndex, MonthlySeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistressSignal {
    pub ticker: String,
    pub first_negative: MonthlyIndex,
    pub first_negative_price: f64,
    /// Lowest price on the path; earliest month on ties.
    pub trough_month: MonthlyIndex,
    pub trough_price: f64,
    /// Length of the negative run that starts at `first_negative`.
    pub consecutive_negative_months: usize,
    /// First month after the trough with a positive price.
    pub recovery_month: Option<MonthlyIndex>,
}

/// Scans a predicted path for prices below zero.
///
/// The ticker is the series id without a trailing `.predicted`.
pub fn detect_negative(predicted: &MonthlySeries) -> Option<DistressSignal> {
    let (first_negative, first_negative_price) = predicted.iter().find(|(_, v)| *v < 0.0)?;
    let (trough_month, trough_price) = predicted
        .iter()
        .reduce(|best, x| if x.1 < best.1 { x } else { best })?;
    let consecutive_negative_months = predicted
        .iter()
        .skip(predicted.start().months_until(first_negative) as usize)
        .take_while(|(_, v)| *v < 0.0)
        .count();
    let recovery_month = predicted
        .iter()
        .skip(predicted.start().months_until(trough_month) as usize + 1)
        .find(|(_, v)| *v > 0.0)
        .map(|(m, _)| m);
    let id = predicted.id();
    Some(DistressSignal {
        ticker: id.strip_suffix(".predicted").unwrap_or(id).to_string(),
        first_negative,
        first_negative_price,
        trough_month,
        trough_price,
        consecutive_negative_months,
        recovery_month,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebtEstimate {
    pub ticker: String,
    pub shares_outstanding: f64,
    pub reference_price: f64,
    /// Dollars.
    pub debt: f64,
}

/// `shares × |reference_price|` for a negative reference price.
pub fn estimate_debt(ticker: &str, shares: f64, reference_price: f64) -> Result<DebtEstimate> {
    if !(shares.is_finite() && shares > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "{ticker}: shares outstanding must be positive, got {shares}"
        )));
    }
    if !(reference_price < 0.0) {
        return Err(Error::NotDistressed(reference_price));
    }
    Ok(DebtEstimate {
        ticker: ticker.to_string(),
        shares_outstanding: shares,
        reference_price,
        debt: shares * reference_price.abs(),
    })
}

/// Which negative price stands for the company's debt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferencePrice {
    #[default]
    Trough,
    FirstNegative,
}

impl ReferencePrice {
    pub fn pick(self, signal: &DistressSignal) -> f64 {
        match self {
            ReferencePrice::Trough => signal.trough_price,
            ReferencePrice::FirstNegative => signal.first_negative_price,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistressRow {
    pub signal: DistressSignal,
    pub debt: DebtEstimate,
}

/// Signal plus debt estimate, or `None` for a path that never goes negative.
pub fn screen(
    predicted: &MonthlySeries,
    shares: f64,
    reference: ReferencePrice,
) -> Result<Option<DistressRow>> {
    let Some(signal) = detect_negative(predicted) else {
        return Ok(None);
    };
    let debt = estimate_debt(&signal.ticker, shares, reference.pick(&signal))?;
    Ok(Some(DistressRow { signal, debt }))
}

pub const DISTRESS_HEADER: [&str; 9] = [
    "ticker",
    "first_negative",
    "trough_month",
    "trough_price",
    "consecutive_negative_months",
    "recovery_month",
    "shares",
    "reference_price",
    "debt",
];

pub fn distress_csv(rows: &[DistressRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DISTRESS_HEADER).expect("in-memory write");
    for r in rows {
        let s = &r.signal;
        w.write_record([
            s.ticker.clone(),
            s.first_negative.to_string(),
            s.trough_month.to_string(),
            s.trough_price.to_string(),
            s.consecutive_negative_months.to_string(),
            s.recovery_month.map(|m| m.to_string()).unwrap_or_default(),
            r.debt.shares_outstanding.to_string(),
            r.debt.reference_price.to_string(),
            r.debt.debt.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn write_distress(path: &Path, rows: &[DistressRow]) -> Result<()> {
    crate::write_atomic(path, &distress_csv(rows))
}
