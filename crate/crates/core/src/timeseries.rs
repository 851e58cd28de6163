//! Monthly calendar arithmetic and the series type everything else is built on.
//!
//! A [`MonthlyIndex`] is a Gregorian (year, month) pair. Internally all
//! arithmetic happens on the month ordinal `12 * year + (month - 1)`, so
//! differences and shifts are exact integer operations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthlyIndex {
    year: i32,
    month: u8,
}

impl MonthlyIndex {
    /// Returns `None` when `month` is outside `1..=12`.
    pub fn new(year: i32, month: u32) -> Option<Self> {
        if (1..=12).contains(&month) {
            Some(MonthlyIndex {
                year,
                month: month as u8,
            })
        } else {
            None
        }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month as u32
    }

    /// Months since January of year 0.
    pub fn ordinal(self) -> i64 {
        12 * self.year as i64 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        let year = ordinal.div_euclid(12);
        let month = ordinal.rem_euclid(12) + 1;
        MonthlyIndex {
            year: year as i32,
            month: month as u8,
        }
    }

    pub fn add_months(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// `other - self` in months.
    pub fn months_until(self, other: MonthlyIndex) -> i64 {
        other.ordinal() - self.ordinal()
    }

    pub fn next(self) -> Self {
        self.add_months(1)
    }

    pub fn prev(self) -> Self {
        self.add_months(-1)
    }
}

impl fmt::Display for MonthlyIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthlyIndex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| format!("expected YYYY-MM, got {s:?}"))?;
        if y.len() != 4 || m.len() != 2 {
            return Err(format!("expected YYYY-MM, got {s:?}"));
        }
        let year: i32 = y.parse().map_err(|_| format!("bad year in {s:?}"))?;
        let month: u32 = m.parse().map_err(|_| format!("bad month in {s:?}"))?;
        MonthlyIndex::new(year, month).ok_or_else(|| format!("month out of range in {s:?}"))
    }
}

impl Serialize for MonthlyIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthlyIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Closed range of months, `first..=last`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr")]
pub struct Window {
    first: MonthlyIndex,
    last: MonthlyIndex,
}

impl Window {
    pub fn new(first: MonthlyIndex, last: MonthlyIndex) -> Option<Self> {
        (first <= last).then_some(Window { first, last })
    }

    pub fn first(&self) -> MonthlyIndex {
        self.first
    }

    pub fn last(&self) -> MonthlyIndex {
        self.last
    }

    /// Number of months J in the window.
    pub fn len(&self) -> usize {
        (self.first.months_until(self.last) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, m: MonthlyIndex) -> bool {
        self.first <= m && m <= self.last
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        self.first <= other.first && other.last <= self.last
    }

    pub fn intersect(&self, other: &Window) -> Option<Window> {
        Window::new(self.first.max(other.first), self.last.min(other.last))
    }

    pub fn shift(&self, months: i64) -> Window {
        Window {
            first: self.first.add_months(months),
            last: self.last.add_months(months),
        }
    }

    pub fn months(&self) -> impl Iterator<Item = MonthlyIndex> {
        let first = self.first.ordinal();
        (first..=self.last.ordinal()).map(MonthlyIndex::from_ordinal)
    }
}

#[derive(Deserialize)]
struct WindowRepr {
    first: MonthlyIndex,
    last: MonthlyIndex,
}

impl TryFrom<WindowRepr> for Window {
    type Error = String;

    fn try_from(r: WindowRepr) -> Result<Self, Self::Error> {
        Window::new(r.first, r.last).ok_or_else(|| format!("window {}..{} is reversed", r.first, r.last))
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

/// A contiguous run of monthly observations.
///
/// `lag` records how far the values have been displaced by [`shift`]; it is
/// zero for anything read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySeries {
    id: String,
    lag: i64,
    start: MonthlyIndex,
    values: Vec<f64>,
}

impl MonthlySeries {
    pub fn new(id: impl Into<String>, start: MonthlyIndex, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if values.is_empty() {
            return Err(Error::InvalidConfig(format!("series {id} is empty")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "series {id} has a non-finite value at {}",
                start.add_months(pos as i64)
            )));
        }
        Ok(MonthlySeries {
            id,
            lag: 0,
            start,
            values,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn lag(&self) -> i64 {
        self.lag
    }

    /// Identifier with the lag annotation, e.g. `SEFV(t-2)`.
    pub fn label(&self) -> String {
        match self.lag {
            0 => self.id.clone(),
            l if l > 0 => format!("{}(t-{l})", self.id),
            l => format!("{}(t+{})", self.id, -l),
        }
    }

    pub fn start(&self) -> MonthlyIndex {
        self.start
    }

    pub fn end(&self) -> MonthlyIndex {
        self.start.add_months(self.values.len() as i64 - 1)
    }

    pub fn window(&self) -> Window {
        Window {
            first: self.start,
            last: self.end(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, m: MonthlyIndex) -> Option<f64> {
        let off = self.start.months_until(m);
        if off < 0 {
            return None;
        }
        self.values.get(off as usize).copied()
    }

    /// Values over `window`, if the series covers it.
    pub fn slice(&self, window: &Window) -> Option<&[f64]> {
        if !self.window().contains_window(window) {
            return None;
        }
        let off = self.start.months_until(window.first) as usize;
        Some(&self.values[off..off + window.len()])
    }

    /// Sub-series over `window`, if the series covers it.
    pub fn restrict(&self, window: &Window) -> Option<MonthlySeries> {
        let values = self.slice(window)?.to_vec();
        Some(MonthlySeries {
            id: self.id.clone(),
            lag: self.lag,
            start: window.first,
            values,
        })
    }

    /// Drops every observation after `last`; `None` if nothing remains.
    pub fn truncate_after(&self, last: MonthlyIndex) -> Option<MonthlySeries> {
        let w = Window::new(self.start, self.end().min(last))?;
        self.restrict(&w)
    }

    pub fn iter(&self) -> impl Iterator<Item = (MonthlyIndex, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.start.add_months(i as i64), v))
    }

    pub(crate) fn from_parts(id: String, lag: i64, start: MonthlyIndex, values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        MonthlySeries {
            id,
            lag,
            start,
            values,
        }
    }
}

/// Displaces `series` by `lag` months: the result read at `t` is the input at
/// `t - lag`. A positive lag attributes past values to later months.
pub fn shift(series: &MonthlySeries, lag: i64) -> MonthlySeries {
    MonthlySeries {
        id: series.id.clone(),
        lag: series.lag + lag,
        start: series.start.add_months(lag),
        values: series.values.clone(),
    }
}

/// Common window of all series and their values over it, one column per
/// series, rows in chronological order.
pub fn align(series: &[&MonthlySeries]) -> Result<(Window, Vec<Vec<f64>>)> {
    let (head, rest) = series.split_first().ok_or(Error::EmptyIntersection)?;
    let window = rest
        .iter()
        .try_fold(head.window(), |w, s| w.intersect(&s.window()))
        .ok_or(Error::EmptyIntersection)?;
    let columns: Vec<&[f64]> = series
        .iter()
        .map(|s| s.slice(&window).expect("window is inside every series"))
        .collect();
    let rows = (0..window.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    Ok((window, rows))
}

/// Decimal years since January 2000; January of year `Y` maps to `Y - 2000`.
pub fn time_trend(t: MonthlyIndex) -> f64 {
    (t.year() as f64 + (t.month() as f64 - 1.0) / 12.0) - 2000.0
}
