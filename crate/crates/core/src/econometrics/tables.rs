//! Critical values for the unit-root and cointegration tests.
//!
//! Dickey-Fuller τ and n(ρ̂−1) quantiles come from Fuller's finite-sample
//! tables, tabulated at n = 25, 50, 100, 250, 500 and ∞ and interpolated
//! linearly in n (in 1/n beyond 500). Engle-Granger values use MacKinnon's
//! response surfaces for two variables. Johansen trace values are the
//! Osterwald-Lenum asymptotic quantiles for k − r ∈ {1, 2}.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Deterministic, JohansenCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "1%")]
    One,
    #[serde(rename = "5%")]
    Five,
    #[serde(rename = "10%")]
    Ten,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::One, Level::Five, Level::Ten];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::One => "1%",
            Level::Five => "5%",
            Level::Ten => "10%",
        }
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type CriticalValues = BTreeMap<Level, f64>;

const SAMPLE_SIZES: [f64; 5] = [25.0, 50.0, 100.0, 250.0, 500.0];

/// Rows: n = 25, 50, 100, 250, 500, ∞. Columns: 1%, 5%, 10%.
type FullerTable = [[f64; 3]; 6];

const TAU_NONE: FullerTable = [
    [-2.66, -1.95, -1.60],
    [-2.62, -1.95, -1.61],
    [-2.60, -1.95, -1.61],
    [-2.58, -1.95, -1.62],
    [-2.58, -1.95, -1.62],
    [-2.58, -1.95, -1.62],
];

const TAU_CONSTANT: FullerTable = [
    [-3.75, -3.00, -2.63],
    [-3.58, -2.93, -2.60],
    [-3.51, -2.89, -2.58],
    [-3.46, -2.88, -2.57],
    [-3.44, -2.87, -2.57],
    [-3.43, -2.86, -2.57],
];

const TAU_TREND: FullerTable = [
    [-4.38, -3.60, -3.24],
    [-4.15, -3.50, -3.18],
    [-4.04, -3.45, -3.15],
    [-3.99, -3.43, -3.13],
    [-3.98, -3.42, -3.13],
    [-3.96, -3.41, -3.12],
];

const RHO_NONE: FullerTable = [
    [-11.9, -7.3, -5.3],
    [-12.9, -7.7, -5.5],
    [-13.3, -7.9, -5.6],
    [-13.6, -8.0, -5.7],
    [-13.7, -8.0, -5.7],
    [-13.8, -8.1, -5.7],
];

const RHO_CONSTANT: FullerTable = [
    [-17.2, -12.5, -10.2],
    [-18.9, -13.3, -10.7],
    [-19.8, -13.7, -11.0],
    [-20.3, -14.0, -11.2],
    [-20.5, -14.0, -11.2],
    [-20.7, -14.1, -11.3],
];

const RHO_TREND: FullerTable = [
    [-22.5, -17.9, -15.6],
    [-25.7, -19.8, -16.8],
    [-27.4, -20.7, -17.5],
    [-28.4, -21.3, -18.0],
    [-28.9, -21.5, -18.1],
    [-29.5, -21.8, -18.3],
];

fn interpolate(table: &FullerTable, col: usize, n: f64) -> f64 {
    if n <= SAMPLE_SIZES[0] {
        return table[0][col];
    }
    for i in 1..SAMPLE_SIZES.len() {
        if n <= SAMPLE_SIZES[i] {
            let (n0, n1) = (SAMPLE_SIZES[i - 1], SAMPLE_SIZES[i]);
            let (v0, v1) = (table[i - 1][col], table[i][col]);
            return v0 + (v1 - v0) * (n - n0) / (n1 - n0);
        }
    }
    // Between 500 and ∞, linear in 1/n.
    let (v500, vinf) = (table[4][col], table[5][col]);
    vinf + (v500 - vinf) * 500.0 / n
}

fn lookup(table: &FullerTable, n: usize) -> CriticalValues {
    Level::ALL
        .iter()
        .enumerate()
        .map(|(col, &level)| (level, interpolate(table, col, n as f64)))
        .collect()
}

/// Dickey-Fuller τ (t-ratio) critical values for `n` observations.
pub fn df_tau(det: Deterministic, n: usize) -> CriticalValues {
    lookup(
        match det {
            Deterministic::None => &TAU_NONE,
            Deterministic::Constant => &TAU_CONSTANT,
            Deterministic::ConstantTrend => &TAU_TREND,
        },
        n,
    )
}

/// Dickey-Fuller n(ρ̂ − 1) critical values for `n` observations.
pub fn df_rho(det: Deterministic, n: usize) -> CriticalValues {
    lookup(
        match det {
            Deterministic::None => &RHO_NONE,
            Deterministic::Constant => &RHO_CONSTANT,
            Deterministic::ConstantTrend => &RHO_TREND,
        },
        n,
    )
}

/// MacKinnon response-surface coefficients `[β∞, β1, β2]` for the
/// two-variable cointegration τ test, per level (1%, 5%, 10%).
const EG_CONSTANT: [[f64; 3]; 3] = [
    [-3.89644, -10.9519, -33.527],
    [-3.33613, -6.1101, -6.823],
    [-3.04445, -4.2412, -2.720],
];

const EG_TREND: [[f64; 3]; 3] = [
    [-4.32762, -15.4387, -35.679],
    [-3.78057, -9.5106, -12.074],
    [-3.49631, -7.0815, -7.538],
];

/// Engle-Granger residual τ critical values; `None` when the cointegrating
/// regression has no deterministic terms (no table available).
pub fn engle_granger_tau(det: Deterministic, n: usize) -> Option<CriticalValues> {
    let table = match det {
        Deterministic::None => return None,
        Deterministic::Constant => &EG_CONSTANT,
        Deterministic::ConstantTrend => &EG_TREND,
    };
    let t = n as f64;
    Some(
        Level::ALL
            .iter()
            .zip(table)
            .map(|(&level, b)| (level, b[0] + b[1] / t + b[2] / (t * t)))
            .collect(),
    )
}

/// Trace-test quantiles `[10%, 5%, 1%]` for k − r = 1 and 2.
struct TraceTable {
    one: [f64; 3],
    two: [f64; 3],
}

const TRACE_NONE: TraceTable = TraceTable {
    one: [2.86, 3.84, 6.51],
    two: [10.47, 12.53, 16.31],
};

const TRACE_RESTRICTED_CONSTANT: TraceTable = TraceTable {
    one: [7.52, 9.24, 12.97],
    two: [17.85, 19.96, 24.60],
};

const TRACE_UNRESTRICTED_CONSTANT: TraceTable = TraceTable {
    one: [2.69, 3.76, 6.65],
    two: [13.33, 15.41, 20.04],
};

const TRACE_RESTRICTED_TREND: TraceTable = TraceTable {
    one: [10.49, 12.25, 16.26],
    two: [22.76, 25.32, 30.45],
};

/// Trace critical values for `k_minus_r` ∈ {1, 2} non-cointegrating
/// directions.
pub fn johansen_trace(case: JohansenCase, k_minus_r: usize) -> CriticalValues {
    let table = match case {
        JohansenCase::None => &TRACE_NONE,
        JohansenCase::RestrictedConstant => &TRACE_RESTRICTED_CONSTANT,
        JohansenCase::UnrestrictedConstant => &TRACE_UNRESTRICTED_CONSTANT,
        JohansenCase::RestrictedTrend => &TRACE_RESTRICTED_TREND,
    };
    let row = match k_minus_r {
        1 => table.one,
        2 => table.two,
        other => panic!("trace tables cover k - r in 1..=2, got {other}"),
    };
    [(Level::Ten, row[0]), (Level::Five, row[1]), (Level::One, row[2])]
        .into_iter()
        .collect()
}
