//! Code blocks from the guide in `book/src`, compiled and run as doc tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/months-and-lags.md")]
pub mod months_and_lags {}

#[doc = include_str!("../../../book/src/fitting.md")]
pub mod fitting {}

#[doc = include_str!("../../../book/src/search.md")]
pub mod search {}

#[doc = include_str!("../../../book/src/cointegration.md")]
pub mod cointegration {}

#[doc = include_str!("../../../book/src/backtesting.md")]
pub mod backtesting {}

#[doc = include_str!("../../../book/src/distress.md")]
pub mod distress {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../book/src/file-formats.md")]
pub mod file_formats {}
