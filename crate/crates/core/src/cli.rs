//! The `cpiprice` command line.
//!
//! Exit codes: 0 on success, 1 for unreadable or malformed input and bad
//! flags, 2 when the analysis itself is infeasible (no candidate fits, a
//! degenerate series, a window the data do not cover).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::backtest::{compare, fit_asof, run_asof, write_comparison, BacktestConfig, BacktestSummary, DivergenceRule};
use crate::bankruptcy::{screen, write_distress, ReferencePrice};
use crate::econometrics::{
    adf_test, engle_granger, johansen_test, pp_test, Bandwidth, Deterministic, JohansenCase, JohansenReport,
    UnitRootReport, DEFAULT_MAX_LAG, DEFAULT_VECM_LAG,
};
use crate::error::{Error, Result};
use crate::ingestion::{load_catalog, load_model, load_portfolio, load_prices, load_shares, save_model, CpiCatalog};
use crate::montecarlo::selftest;
use crate::regression::{feasible_window, fit, predict, prediction_horizon, FittedModel, ModelSpec};
use crate::search::{rolling_stability, search_best, SearchConfig, SearchReport, SearchWindow, MAX_LAG};
use crate::timeseries::{MonthlyIndex, MonthlySeries, Window};

#[derive(Debug, Parser)]
#[command(name = "cpiprice", version, about = "Share prices as lagged linear functions of CPI components")]
pub struct Cli {
    /// CPI catalog manifest (`ACRONYM,path` rows).
    #[arg(long, env = "CPIPRICE_CATALOG", global = true)]
    pub catalog: Option<PathBuf>,
    /// Directory of `<TICKER>.csv` price files.
    #[arg(long, env = "CPIPRICE_PRICES", global = true)]
    pub prices: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "CPIPRICE_OUT", global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exhaustive pair and lag search; writes TICKER.models.json and TICKER.fit.csv.
    Search {
        ticker: String,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Fit one given spec; writes TICKER.model.json and TICKER.fit.csv.
    Fit(FitArgs),
    /// Unit-root and cointegration tests for a fitted model; writes TICKER.cointegration.json.
    Cointegrate(CointegrateArgs),
    /// As-of fit and forward comparison; writes TICKER.backtest.csv and TICKER.backtest.json.
    Backtest(BacktestArgs),
    /// Negative-price screen over a portfolio of models; writes distress.csv.
    Distress(DistressArgs),
    /// Rerun the search for each of the last N end months; writes TICKER.stability.json.
    Stability {
        ticker: String,
        #[arg(long, default_value_t = 12)]
        months_back: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Monte-Carlo checks of the statistical machinery.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = -6, allow_negative_numbers = true)]
    pub lag_min: i64,
    #[arg(long, default_value_t = MAX_LAG, allow_negative_numbers = true)]
    pub lag_max: i64,
    /// Allow lags beyond ±14 months.
    #[arg(long)]
    pub allow_extended_lags: bool,
    #[arg(long, default_value = "2003-07")]
    pub window_first: MonthlyIndex,
    /// Default: last price month.
    #[arg(long)]
    pub window_last: Option<MonthlyIndex>,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    #[arg(long, default_value_t = 60)]
    pub min_obs: usize,
    /// One common window for every candidate.
    #[arg(long)]
    pub strict_window: bool,
}

impl SearchArgs {
    pub fn config(&self) -> SearchConfig {
        SearchConfig {
            lag_min: self.lag_min,
            lag_max: self.lag_max,
            window: SearchWindow {
                first: self.window_first,
                last: self.window_last,
            },
            top_k: self.top_k,
            min_obs: self.min_obs,
            strict_window: self.strict_window,
            allow_extended_lags: self.allow_extended_lags,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub ticker: String,
    #[arg(long)]
    pub cpi1: String,
    #[arg(long, allow_negative_numbers = true)]
    pub tau1: i64,
    #[arg(long)]
    pub cpi2: String,
    #[arg(long, allow_negative_numbers = true)]
    pub tau2: i64,
    #[arg(long, default_value = "2003-07")]
    pub window_first: MonthlyIndex,
    #[arg(long)]
    pub window_last: Option<MonthlyIndex>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DeterministicArg {
    None,
    Constant,
    ConstantTrend,
}

impl From<DeterministicArg> for Deterministic {
    fn from(d: DeterministicArg) -> Self {
        match d {
            DeterministicArg::None => Deterministic::None,
            DeterministicArg::Constant => Deterministic::Constant,
            DeterministicArg::ConstantTrend => Deterministic::ConstantTrend,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum JohansenCaseArg {
    None,
    RestrictedConstant,
    UnrestrictedConstant,
    RestrictedTrend,
}

impl From<JohansenCaseArg> for JohansenCase {
    fn from(c: JohansenCaseArg) -> Self {
        match c {
            JohansenCaseArg::None => JohansenCase::None,
            JohansenCaseArg::RestrictedConstant => JohansenCase::RestrictedConstant,
            JohansenCaseArg::UnrestrictedConstant => JohansenCase::UnrestrictedConstant,
            JohansenCaseArg::RestrictedTrend => JohansenCase::RestrictedTrend,
        }
    }
}

#[derive(Debug, Args)]
pub struct CointegrateArgs {
    pub ticker: String,
    /// Model JSON from `fit` or `search` (the first model is used).
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
    pub max_lag: usize,
    /// Bartlett bandwidth for Phillips-Perron (default: automatic).
    #[arg(long)]
    pub bandwidth: Option<usize>,
    #[arg(long, value_enum, default_value = "constant")]
    pub deterministic: DeterministicArg,
    #[arg(long, default_value_t = DEFAULT_VECM_LAG)]
    pub vecm_lag: usize,
    #[arg(long, value_enum, default_value = "unrestricted-constant")]
    pub johansen_case: JohansenCaseArg,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    pub ticker: String,
    #[arg(long)]
    pub asof: MonthlyIndex,
    #[arg(long)]
    pub through: MonthlyIndex,
    /// CPI for a month becomes known one month later.
    #[arg(long)]
    pub publication_lag: bool,
    #[arg(long, default_value_t = 2.0)]
    pub sigma_multiple: f64,
    #[arg(long, default_value_t = 3)]
    pub consecutive: usize,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReferenceArg {
    Trough,
    FirstNegative,
}

#[derive(Debug, Args)]
pub struct DistressArgs {
    /// `TICKER,model.json` rows.
    #[arg(long)]
    pub portfolio: PathBuf,
    /// `TICKER,shares` rows.
    #[arg(long)]
    pub shares: PathBuf,
    /// Last month to project (default: as far as the CPI data reach).
    #[arg(long)]
    pub through: Option<MonthlyIndex>,
    #[arg(long, value_enum, default_value = "trough")]
    pub reference: ReferenceArg,
}

/// Everything `cointegrate` writes.
#[derive(Debug, Clone, Serialize)]
pub struct CointegrationReport {
    pub ticker: String,
    pub model: ModelSpec,
    pub window: Window,
    pub sigma: f64,
    pub adf: UnitRootReport,
    pub phillips_perron: UnitRootReport,
    pub engle_granger: UnitRootReport,
    pub johansen: JohansenReport,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_analytic() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Search { ticker, search } => cmd_search(cli, ticker, &search.config()),
        Command::Fit(args) => cmd_fit(cli, args),
        Command::Cointegrate(args) => cmd_cointegrate(cli, args),
        Command::Backtest(args) => cmd_backtest(cli, args),
        Command::Distress(args) => cmd_distress(cli, args),
        Command::Stability {
            ticker,
            months_back,
            search,
        } => cmd_stability(cli, ticker, *months_back, &search.config()),
        Command::Selftest { seed } => cmd_selftest(*seed),
    }
}

fn catalog(cli: &Cli) -> Result<CpiCatalog> {
    let path = cli
        .catalog
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("no CPI catalog given (--catalog or CPIPRICE_CATALOG)".into()))?;
    load_catalog(path)
}

fn prices(cli: &Cli, ticker: &str) -> Result<MonthlySeries> {
    let dir = cli
        .prices
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("no prices directory given (--prices or CPIPRICE_PRICES)".into()))?;
    load_prices(dir, ticker)
}

fn output(cli: &Cli, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    Ok(cli.out.join(name))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    crate::write_atomic(path, text.as_bytes())
}

/// `month,observed,predicted,residual` over the model's window.
pub fn fit_csv(model: &FittedModel, observed: &MonthlySeries) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["month", "observed", "predicted", "residual"])
        .expect("in-memory write");
    for (month, e) in model.window.months().zip(&model.residuals) {
        let y = observed.get(month).expect("model window inside observed data");
        w.write_record([month.to_string(), y.to_string(), (y - e).to_string(), e.to_string()])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

fn cmd_search(cli: &Cli, ticker: &str, config: &SearchConfig) -> Result<i32> {
    config.validate()?;
    let catalog = catalog(cli)?;
    let prices = prices(cli, ticker)?;
    let started = Instant::now();
    let result = search_best(&prices, &catalog, config)?;
    log::info!(
        "{ticker}: {} candidates in {:.2?}",
        result.evaluated_count + result.rejected_count,
        started.elapsed()
    );
    let report = SearchReport::new(ticker, config, catalog.len(), &result);
    write_json(&output(cli, &format!("{ticker}.models.json"))?, &report)?;
    let best = result.best();
    crate::write_atomic(&output(cli, &format!("{ticker}.fit.csv"))?, &fit_csv(best, &prices))?;
    println!("{}  sigma={}  window={}", best.spec, best.sigma, best.window);
    Ok(0)
}

fn cmd_fit(cli: &Cli, args: &FitArgs) -> Result<i32> {
    let catalog = catalog(cli)?;
    let prices = prices(cli, &args.ticker)?;
    let spec = ModelSpec::new(&args.ticker, &args.cpi1, args.tau1, &args.cpi2, args.tau2)?;
    let last = args.window_last.unwrap_or(prices.end());
    let requested = Window::new(args.window_first, last)
        .ok_or_else(|| Error::InvalidConfig(format!("window {}..{last} is reversed", args.window_first)))?;
    let feasible = feasible_window(
        &prices,
        catalog.series(&spec.cpi1)?,
        spec.tau1,
        catalog.series(&spec.cpi2)?,
        spec.tau2,
    );
    let window = feasible
        .and_then(|w| w.intersect(&requested))
        .ok_or(Error::WindowUnavailable { requested, feasible })?;
    let model = fit(&prices, &catalog, &spec, window)?;
    save_model(&model, output(cli, &format!("{}.model.json", args.ticker))?)?;
    crate::write_atomic(&output(cli, &format!("{}.fit.csv", args.ticker))?, &fit_csv(&model, &prices))?;
    println!("{}  sigma={}  window={}", model.spec, model.sigma, model.window);
    Ok(0)
}

fn cmd_cointegrate(cli: &Cli, args: &CointegrateArgs) -> Result<i32> {
    let model = crate::ingestion::load_models(&args.model)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Schema("model file lists no models".into()))?;
    let catalog = catalog(cli)?;
    let prices = prices(cli, &args.ticker)?;
    let observed = prices
        .restrict(&model.window)
        .ok_or(Error::WindowUnavailable {
            requested: model.window,
            feasible: model.window.intersect(&prices.window()),
        })?;
    let predicted = predict(&model, &catalog, model.window)?;
    let det: Deterministic = args.deterministic.into();
    let bandwidth = args.bandwidth.map_or(Bandwidth::Automatic, Bandwidth::Fixed);
    let report = CointegrationReport {
        ticker: args.ticker.clone(),
        model: model.spec.clone(),
        window: model.window,
        sigma: model.sigma,
        adf: adf_test(&model.residuals, args.max_lag, det)?,
        phillips_perron: pp_test(&model.residuals, bandwidth, det)?,
        engle_granger: engle_granger(&observed, &predicted, Deterministic::Constant, args.max_lag)?,
        johansen: johansen_test(&observed, &predicted, args.vecm_lag, args.johansen_case.into())?,
    };
    write_json(&output(cli, &format!("{}.cointegration.json", args.ticker))?, &report)?;
    println!(
        "{}  adf z(t)={:.3}  pp z(t)={:.3}  johansen rank={}",
        report.model, report.adf.statistic_t, report.phillips_perron.statistic_t, report.johansen.rank
    );
    Ok(0)
}

fn cmd_backtest(cli: &Cli, args: &BacktestArgs) -> Result<i32> {
    let config = BacktestConfig {
        search: args.search.config(),
        publication_lag: args.publication_lag,
        divergence: DivergenceRule {
            sigma_multiple: args.sigma_multiple,
            consecutive: args.consecutive,
            ..DivergenceRule::default()
        },
    };
    config.search.validate()?;
    if args.through < args.asof {
        return Err(Error::InvalidConfig(format!(
            "--through {} is before --asof {}",
            args.through, args.asof
        )));
    }
    let catalog = catalog(cli)?;
    let prices = prices(cli, &args.ticker)?;
    let run = run_asof(&prices, &catalog, args.asof, args.through, &config)?;
    let later = fit_asof(&prices, &catalog, args.through, &config)?;
    let report = compare(&run, &later, &prices, &config.divergence);
    write_comparison(&output(cli, &format!("{}.backtest.csv", args.ticker))?, &report)?;
    let summary = BacktestSummary::new(&run, &later, &report, args.through, &config);
    write_json(&output(cli, &format!("{}.backtest.json", args.ticker))?, &summary)?;
    println!(
        "{}  as of {}: {} forward months, divergence onset {}",
        run.model.spec,
        args.asof,
        report.rows.len(),
        summary.divergence_onset
    );
    Ok(0)
}

fn cmd_distress(cli: &Cli, args: &DistressArgs) -> Result<i32> {
    let portfolio = load_portfolio(&args.portfolio)?;
    let shares = load_shares(&args.shares)?;
    let reference = match args.reference {
        ReferenceArg::Trough => ReferencePrice::Trough,
        ReferenceArg::FirstNegative => ReferencePrice::FirstNegative,
    };
    let catalog = if portfolio.is_empty() { CpiCatalog::new() } else { catalog(cli)? };
    let mut rows = Vec::new();
    for (ticker, model_path) in &portfolio {
        let count = *shares.get(ticker).ok_or_else(|| {
            Error::InvalidConfig(format!("{ticker} has no entry in {}", args.shares.display()))
        })?;
        let model = load_model(model_path)?;
        let horizon = prediction_horizon(&model, &catalog)?;
        let range = horizon.and_then(|h| match args.through {
            Some(t) => Window::new(model.window.first(), t).and_then(|w| w.intersect(&h)),
            None => Window::new(model.window.first(), h.last()).and_then(|w| w.intersect(&h)),
        });
        let Some(range) = range else {
            log::warn!("{ticker}: no months to project");
            continue;
        };
        let path = predict(&model, &catalog, range)?;
        if let Some(row) = screen(&path, count, reference)? {
            rows.push(row);
        }
    }
    write_distress(&output(cli, "distress.csv")?, &rows)?;
    println!("{} of {} tickers go negative", rows.len(), portfolio.len());
    Ok(0)
}

fn cmd_stability(cli: &Cli, ticker: &str, months_back: usize, config: &SearchConfig) -> Result<i32> {
    let catalog = catalog(cli)?;
    let prices = prices(cli, ticker)?;
    let report = rolling_stability(&prices, &catalog, config, months_back)?;
    write_json(&output(cli, &format!("{ticker}.stability.json"))?, &report)?;
    println!("{ticker}: winner {} over the last {months_back} months", if report.stable { "stable" } else { "changes" });
    Ok(0)
}

fn cmd_selftest(seed: u64) -> Result<i32> {
    let checks = selftest(seed);
    for c in &checks {
        let observed = if c.observed == 0.0 || c.observed.abs() >= 1e-3 {
            format!("{:.3}", c.observed)
        } else {
            format!("{:.3e}", c.observed)
        };
        println!(
            "{} {}: {observed} ({})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.requirement
        );
    }
    Ok(if checks.iter().all(|c| c.pass) { 0 } else { 2 })
}
