#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cpiprice::montecarlo::SyntheticMarket;
use cpiprice::MonthlySeries;

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub catalog: PathBuf,
    pub prices: PathBuf,
    pub out: PathBuf,
}

pub fn write_series(path: &Path, series: &MonthlySeries) {
    let mut text = String::from("month,value\n");
    for (m, v) in series.iter() {
        text.push_str(&format!("{m},{v}\n"));
    }
    fs::write(path, text).unwrap();
}

/// Catalog manifest, one CSV per component, and `prices/<TICKER>.csv`.
pub fn write_market(market: &SyntheticMarket) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let cpi = dir.path().join("cpi");
    let prices = dir.path().join("prices");
    fs::create_dir_all(&cpi).unwrap();
    fs::create_dir_all(&prices).unwrap();
    let mut manifest = String::from("acronym,path\n");
    for (acronym, entry) in market.catalog.iter() {
        write_series(&cpi.join(format!("{acronym}.csv")), &entry.series);
        manifest.push_str(&format!("{acronym},cpi/{acronym}.csv\n"));
    }
    let catalog = dir.path().join("catalog.csv");
    fs::write(&catalog, manifest).unwrap();
    write_series(&prices.join(format!("{}.csv", market.prices.id())), &market.prices);
    let out = dir.path().join("out");
    Fixture {
        dir,
        catalog,
        prices,
        out,
    }
}

impl Fixture {
    /// Runs the binary with this fixture's paths in the environment.
    pub fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_cpiprice"))
            .args(args)
            .env("CPIPRICE_CATALOG", &self.catalog)
            .env("CPIPRICE_PRICES", &self.prices)
            .env("CPIPRICE_OUT", &self.out)
            .env_remove("RUST_LOG")
            .output()
            .unwrap()
    }

    pub fn read(&self, name: &str) -> String {
        fs::read_to_string(self.out.join(name)).unwrap()
    }
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}
