//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints one PASS or FAIL line; exits non-zero if any fails.

mod common;

use std::fs;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use cpiprice::backtest::{fit_asof, BacktestConfig};
use cpiprice::bankruptcy::estimate_debt;
use cpiprice::econometrics::tables::johansen_trace;
use cpiprice::econometrics::{
    adf_test, johansen_test, pp_test, Bandwidth, Deterministic, JohansenCase, Level, DEFAULT_MAX_LAG, DEFAULT_VECM_LAG,
};
use cpiprice::ingestion::{model_to_json, registry::REGISTRY, CpiCatalog};
use cpiprice::linalg::Design;
use cpiprice::montecarlo::{rep_rng, synthetic_market, MarketSpec, SyntheticMarket};
use cpiprice::regression::ols_fit;
use cpiprice::search::{candidate_count, search_best, SearchConfig};
use cpiprice::timeseries::time_trend;
use cpiprice::{Error, MonthlyIndex, MonthlySeries};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn walk(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut s = 0.0;
    (0..n)
        .map(|_| {
            s += normal(rng);
            s
        })
        .collect()
}

fn rate(reps: u64, seed: u64, hit: impl Fn(&mut ChaCha8Rng) -> bool) -> f64 {
    let hits = (0..reps)
        .filter(|&r| hit(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(r))))
        .count();
    hits as f64 / reps as f64
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

/// Design of the true spec, built directly from the component series.
fn true_design(m: &SyntheticMarket) -> DMatrix<f64> {
    let s1 = m.catalog.series(&m.truth.cpi1).unwrap();
    let s2 = m.catalog.series(&m.truth.cpi2).unwrap();
    let months: Vec<MonthlyIndex> = m.prices.window().months().collect();
    DMatrix::from_fn(months.len(), 4, |i, j| {
        let t = months[i];
        match j {
            0 => s1.get(t.add_months(-m.truth.tau1)).unwrap(),
            1 => s2.get(t.add_months(-m.truth.tau2)).unwrap(),
            2 => time_trend(t),
            _ => 1.0,
        }
    })
}

fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    (x.transpose() * x).lu().solve(&(x.transpose() * y)).unwrap()
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let m = synthetic_market(&mut rep_rng(2024, 0), &MarketSpec::default());
    let result = match search_best(&m.prices, &m.catalog, &m.search_config()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("search failed: {e}")),
    };
    let elapsed = started.elapsed();
    let best = result.best();
    let worst = best
        .coefficients()
        .iter()
        .zip(m.coefficients)
        .map(|(g, w)| rel_err(*g, w))
        .fold(0.0, f64::max);
    let pass = best.spec == m.truth && worst < 1e-9 && best.sigma < 1e-9 && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "exact recovery: {} wins={} max rel coef err {worst:.1e} (< 1e-9), sigma {:.1e} (< 1e-9), {:.2?} (< 60 s)",
            best.spec,
            best.spec == m.truth,
            best.sigma,
            elapsed
        ),
    )
}

fn criterion_2() -> Outcome {
    let spec = MarketSpec {
        noise_sd: 0.5,
        ..MarketSpec::default()
    };
    let mut wins = 0;
    let mut within_band = 0;
    for rep in 0..50 {
        let m = synthetic_market(&mut rep_rng(77, rep), &spec);
        let Ok(result) = search_best(&m.prices, &m.catalog, &m.search_config()) else {
            continue;
        };
        let best = result.best();
        if best.spec != m.truth {
            continue;
        }
        wins += 1;

        // 200 independent noise draws on the same design give the sampling
        // spread of each coefficient; keep the 99th percentile of |error|.
        let x = true_design(&m);
        let beta = DVector::from_column_slice(&m.coefficients);
        let clean = &x * &beta;
        let mut rng = ChaCha8Rng::seed_from_u64(9_000 + rep);
        let mut errors: Vec<[f64; 4]> = (0..200)
            .map(|_| {
                let y = DVector::from_fn(clean.len(), |i, _| clean[i] + 0.5 * normal(&mut rng));
                let b = normal_equations(&x, &y);
                [0, 1, 2, 3].map(|j| (b[j] - beta[j]).abs())
            })
            .collect();
        let band: [f64; 4] = [0, 1, 2, 3].map(|j| {
            errors.sort_by(|a, b| a[j].total_cmp(&b[j]));
            errors[197][j]
        });
        let inside = best
            .coefficients()
            .iter()
            .zip(m.coefficients)
            .zip(band)
            .all(|((g, w), b)| (g - w).abs() <= b);
        if inside {
            within_band += 1;
        }
    }
    outcome(
        wins >= 45 && within_band >= 45,
        format!(
            "noisy recovery: true spec wins {wins}/50, wins with all coefficients inside the 99% oracle band {within_band}/50 (>= 45)"
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut rank_ok = 0;
    for _ in 0..1000 {
        let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..80).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
        let y: Vec<f64> = (0..80).map(|_| rng.random_range(-100.0..100.0)).collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let x = Design::from_columns(&refs);
        let fit = ols_fit(&x, &y).unwrap();
        let xte = x.tr_mul_vec(&fit.residuals);
        let xty = x.tr_mul_vec(&y);
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst = worst.max(norm(&xte) / norm(&xty));

        let mut dup = cols.clone();
        let (a, b) = (rng.random_range(0..4), rng.random_range(0..4));
        if a != b {
            dup[b] = dup[a].clone();
        } else {
            dup[(a + 1) % 4] = dup[a].iter().map(|v| 3.0 * v).collect();
        }
        let refs: Vec<&[f64]> = dup.iter().map(Vec::as_slice).collect();
        if matches!(ols_fit(&Design::from_columns(&refs), &y), Err(Error::RankDeficient { .. })) {
            rank_ok += 1;
        }
    }
    outcome(
        worst <= 1e-8 && rank_ok == 1000,
        format!("OLS contract: max |X'e|/|X'y| {worst:.1e} (<= 1e-8), duplicated columns rejected {rank_ok}/1000"),
    )
}

fn criterion_4() -> Outcome {
    let rw_adf = rate(1000, 41, |rng| {
        adf_test(&walk(rng, 200), DEFAULT_MAX_LAG, Deterministic::Constant).is_ok_and(|r| r.rejects_at(Level::Five))
    });
    let ar_adf = rate(1000, 42, |rng| {
        let mut y = 0.0;
        let v: Vec<f64> = (0..300)
            .map(|_| {
                y = 0.5 * y + normal(rng);
                y
            })
            .skip(100)
            .collect();
        adf_test(&v, DEFAULT_MAX_LAG, Deterministic::Constant).is_ok_and(|r| r.rejects_at(Level::Five))
    });
    let rw_pp = rate(1000, 43, |rng| {
        pp_test(&walk(rng, 200), Bandwidth::Automatic, Deterministic::Constant).is_ok_and(|r| r.rejects_at(Level::Five))
    });
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let y = walk(&mut rng, 200);
        let pp = pp_test(&y, Bandwidth::Fixed(0), Deterministic::Constant).unwrap();
        let df = adf_test(&y, 0, Deterministic::Constant).unwrap();
        worst = worst.max((pp.statistic_t - df.statistic_t).abs());
    }
    let size = 0.035..=0.065;
    outcome(
        size.contains(&rw_adf) && ar_adf >= 0.90 && size.contains(&rw_pp) && worst <= 1e-10,
        format!(
            "unit roots: ADF size {rw_adf:.3}, PP size {rw_pp:.3} (in [0.035, 0.065]), ADF power {ar_adf:.3} (>= 0.90), |PP(0) - DF| {worst:.1e} (<= 1e-10)"
        ),
    )
}

fn series(id: &str, v: Vec<f64>) -> MonthlySeries {
    MonthlySeries::new(id, MonthlyIndex::new(2000, 1).unwrap(), v).unwrap()
}

fn criterion_5() -> Outcome {
    let walk = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut s = 0.0;
        (0..120)
            .map(|_| {
                s += normal(rng);
                s
            })
            .collect()
    };
    let case = JohansenCase::RestrictedConstant;
    let rank1 = rate(100, 51, |rng| {
        let a = walk(rng);
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v + normal(rng)).collect();
        johansen_test(&series("a", a), &series("b", b), DEFAULT_VECM_LAG, case).is_ok_and(|r| r.rank == 1)
    });
    let rank0 = rate(100, 52, |rng| {
        let (a, b) = (walk(rng), walk(rng));
        johansen_test(&series("a", a), &series("b", b), DEFAULT_VECM_LAG, case).is_ok_and(|r| r.rank == 0)
    });
    let cv = johansen_trace(JohansenCase::default(), 1)[&Level::Five];
    outcome(
        rank1 >= 0.90 && rank0 >= 0.85 && cv == 3.76,
        format!("Johansen: rank 1 on cointegrated pairs {rank1:.2} (>= 0.90), rank 0 on independent walks {rank0:.2} (>= 0.85), default 5% CV for k-r=1 {cv} (= 3.76)"),
    )
}

fn criterion_6() -> Outcome {
    let exact = [
        ("LEH", 6.89e8, -20.0, 1.378e10),
        ("FNM", 1.11e9, -50.0, 5.55e10),
        ("CIT", 8.12e9, -20.0, 1.624e11),
        ("FRE", 6.8e8, -40.0, 2.72e10),
    ];
    let mut ok = exact
        .iter()
        .all(|(t, shares, price, debt)| estimate_debt(t, *shares, *price).is_ok_and(|d| d.debt == *debt));
    // Quoted debt figures that are not shares × |price|.
    let discrepant = [("C", 1.1e9, -30.0, 3.3e11), ("AIG", 1.34e8, -360.0, 1.0e11)];
    let mut notes = Vec::new();
    for (t, shares, price, quoted) in discrepant {
        let d = estimate_debt(t, shares, price).unwrap().debt;
        ok &= d == shares * price.abs() && (d - quoted).abs() > 0.05 * quoted;
        notes.push(format!("{t} {d:.4e} vs quoted {quoted:.1e}"));
    }
    outcome(
        ok,
        format!("debt arithmetic: LEH/FNM/CIT/FRE exact; discrepancies confirmed: {}", notes.join(", ")),
    )
}

/// Adds `delta` to one observation strictly after `asof`.
fn mutate_after(s: &MonthlySeries, asof: MonthlyIndex, pos: usize, delta: f64) -> Result<MonthlySeries, TestCaseError> {
    prop_assume!(s.end() > asof);
    let after = asof.months_until(s.end()) as usize;
    let mut v = s.values().to_vec();
    let i = v.len() - 1 - pos % after;
    v[i] += delta;
    Ok(MonthlySeries::new(s.id(), s.start(), v).unwrap())
}

fn criterion_7() -> Outcome {
    let m = synthetic_market(
        &mut rep_rng(7, 0),
        &MarketSpec {
            noise_sd: 0.5,
            ..MarketSpec::default()
        },
    );
    let asof = MonthlyIndex::new(2007, 6).unwrap();
    let mut config = BacktestConfig::default();
    config.search = m.search_config();
    config.search.min_obs = 40;
    let baseline = model_to_json(&fit_asof(&m.prices, &m.catalog, asof, &config).unwrap());

    let names: Vec<String> = m.catalog.acronyms().map(str::to_string).collect();
    let mut runner = TestRunner::new(Config {
        cases: 40,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (0..=names.len(), 0usize..1000, -50.0f64..50.0);
    let result = runner.run(&strategy, |(which, pos, delta)| {
        let mutate = |s: &MonthlySeries| mutate_after(s, asof, pos, delta);
        let (prices, catalog) = if which == names.len() {
            (mutate(&m.prices)?, m.catalog.clone())
        } else {
            let mut parts: Vec<MonthlySeries> = m.catalog.iter().map(|(_, e)| e.series.clone()).collect();
            parts[which] = mutate(&parts[which])?;
            (m.prices.clone(), CpiCatalog::from_series(parts).unwrap())
        };
        let refit = model_to_json(&fit_asof(&prices, &catalog, asof, &config).unwrap());
        prop_assert_eq!(&refit, &baseline);
        Ok(())
    });
    outcome(
        result.is_ok(),
        match result {
            Ok(()) => "no look-ahead: 40 random post-asof mutations leave the as-of fit bit-identical".to_string(),
            Err(e) => format!("no look-ahead violated: {e}"),
        },
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let start = MonthlyIndex::new(2001, 1).unwrap();
    let components: Vec<MonthlySeries> = REGISTRY
        .iter()
        .map(|(acronym, _)| {
            let mut v = 180.0;
            let values = (0..120)
                .map(|_| {
                    v += 0.3 + normal(&mut rng);
                    v
                })
                .collect();
            MonthlySeries::new(*acronym, start, values).unwrap()
        })
        .collect();
    let catalog = CpiCatalog::from_series(components).unwrap();
    let prices: Vec<f64> = (0..100).map(|i| 50.0 + 0.2 * i as f64 + normal(&mut rng)).collect();
    let prices = MonthlySeries::new("BIG", MonthlyIndex::new(2002, 6).unwrap(), prices).unwrap();
    let mut config = SearchConfig::default();
    config.window.first = prices.start();

    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let started = Instant::now();
    let result = single.install(|| search_best(&prices, &catalog, &config)).unwrap();
    let single_time = started.elapsed();
    let total = result.evaluated_count + result.rejected_count;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let parallel_note = if cores >= 8 {
        let started = Instant::now();
        let again = search_best(&prices, &catalog, &config).unwrap();
        let t = started.elapsed();
        let ok = t < Duration::from_secs(300) && again.ranked == result.ranked;
        if !ok {
            return outcome(false, format!("parallel search took {t:.2?} or changed the ranking"));
        }
        format!("{cores} threads {t:.2?} (< 5 min)")
    } else {
        format!("parallel budget not timed: {cores} core(s) available")
    };
    outcome(
        total == 1_065_015 && candidate_count(70, 21) == 1_065_015 && single_time < Duration::from_secs(1800),
        format!(
            "grid completeness: evaluated {} + rejected {} = {total} (= 1065015), single thread {single_time:.2?} (< 30 min); {parallel_note}",
            result.evaluated_count, result.rejected_count
        ),
    )
}

fn criterion_9() -> Outcome {
    let m = synthetic_market(
        &mut rep_rng(9, 0),
        &MarketSpec {
            noise_sd: 0.5,
            ..MarketSpec::default()
        },
    );
    let f = common::write_market(&m);
    let mut outputs = Vec::new();
    for threads in ["1", "1", "4"] {
        let out = f.run(&["--threads", threads, "search", "SYN", "--window-first", "2002-06"]);
        if !out.status.success() {
            return outcome(false, format!("search exited {:?}", out.status.code()));
        }
        outputs.push(fs::read(f.out.join("SYN.models.json")).unwrap());
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    outcome(
        same,
        format!(
            "determinism: models.json byte-identical across 2 runs at 1 thread and 1 run at 4 threads ({} bytes)",
            outputs[0].len()
        ),
    )
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = 0;
    for (n, check) in criteria {
        let o = check();
        println!("{} criterion {n}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
