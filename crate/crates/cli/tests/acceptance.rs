//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Every instance is generated from a fixed seed.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fmean_core::fixtures::{self, catalog, jensen_range, value_range};
use fmean_core::function::Convexity;
use fmean_core::means::f_mean_points;
use fmean_core::pricing::{
    certainty_equivalent, conditional_certainty_equivalent, exit_hits_monte_carlo,
    exit_probability_exact, markov_ce_schedule, pratt_premium, u_martingale_check, unroll,
    CeSchedule,
};
use fmean_core::prob::{
    f_cond_expectation, f_expectation, jensen_order_check, total_variance_check,
};
use fmean_core::stats::{clt_check, f_unbiasedness_check, lln_diagnostic};
use fmean_core::{
    Filtration, FiniteProbSpace, MarkovChainModel, MeanFunction, MeanMap, PhiloxStream, PointSet,
    RandomVariable, SamplerSpec,
};
use statrs::distribution::{ContinuousCDF, Normal};

const SEED: u64 = 0x5eed_2026;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn stream(criterion: u64) -> PhiloxStream {
    PhiloxStream::new(SEED, criterion)
}

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

// ---------------------------------------------------------------- 1

/// Φ by the series `1/2 + φ(x) Σ x^(2n+1) / (2n+1)!!`, independent of any
/// erfc implementation. statrs' `cdf` is off by about 1e-10 near x = −0.71,
/// so it is not used here.
fn series_cdf(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut k = 1.0;
    while term.abs() > 1e-18 * sum.abs() {
        k += 2.0;
        term *= x * x / k;
        sum += term;
    }
    0.5 + sum * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// The closed-form column, written out directly with std math and statrs.
fn closed_form(f: &MeanFunction, probs: &[f64], xs: &[f64]) -> f64 {
    let e = |g: &dyn Fn(f64) -> f64| probs.iter().zip(xs).map(|(p, &x)| p * g(x)).sum::<f64>();
    let params = f.params();
    match f.family() {
        "identity" => e(&|x| x),
        "power" => {
            let a = params[0];
            e(&|x| x.powf(a)).powf(1.0 / a)
        }
        "neg_inverse" => 1.0 / e(&|x| 1.0 / x),
        "cara" => {
            let a = params[0];
            -(1.0 / a) * e(&|x| (-a * x).exp()).ln()
        }
        "exp" => {
            let a = params[0];
            (1.0 / a) * e(&|x| (a * x).exp()).ln()
        }
        "log" => e(&|x| x.ln()).exp(),
        "sinh" => e(&|x| x.sinh()).asinh(),
        "normal_cdf" => Normal::new(0.0, 1.0).unwrap().inverse_cdf(e(&series_cdf)),
        other => panic!("no closed form for {other}"),
    }
}

fn catalog_conformance() -> Verdict {
    let mut rng = stream(1);
    let mut worst = 0.0f64;
    let mut where_ = String::new();
    for f in catalog() {
        for _ in 0..100 {
            let n = 1 + rng.index(12);
            let space = fixtures::random_space(&mut rng, n, true);
            let x = fixtures::random_variable(&mut rng, &f, n);
            let got = f_expectation(&f, &space, &x).unwrap();
            let want = closed_form(&f, space.probs(), x.values());
            let r = rel(got, want);
            if r > worst {
                worst = r;
                where_ = f.to_string();
            }
        }
    }
    verdict(
        worst <= 1e-10,
        format!("max relative residual {worst:.2e} ({where_}) over 11 functions x 100 spaces"),
    )
}

// ---------------------------------------------------------------- 2

fn objective(f: &MeanFunction, pts: &[Vec<f64>], y: &[f64]) -> f64 {
    pts.iter()
        .map(|p| {
            p.iter()
                .zip(y)
                .map(|(a, b)| (f.apply(*a) - f.apply(*b)).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Minimizes the sum of squared f-distances by a grid over the bounding box
/// followed by a compass search, without ever inverting `f`.
fn search_minimizer(f: &MeanFunction, pts: &[Vec<f64>]) -> Vec<f64> {
    let d = pts[0].len();
    let lo: Vec<f64> = (0..d)
        .map(|j| pts.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..d)
        .map(|j| pts.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let steps = 20usize;
    let mut best = lo.clone();
    let mut best_val = f64::INFINITY;
    let total = (steps + 1).pow(d as u32);
    for idx in 0..total {
        let mut rest = idx;
        let y: Vec<f64> = (0..d)
            .map(|j| {
                let i = rest % (steps + 1);
                rest /= steps + 1;
                lo[j] + (hi[j] - lo[j]) * i as f64 / steps as f64
            })
            .collect();
        let v = objective(f, pts, &y);
        if v < best_val {
            best_val = v;
            best = y;
        }
    }
    let mut step: Vec<f64> = (0..d)
        .map(|j| (hi[j] - lo[j]).max(1e-3) / steps as f64)
        .collect();
    let domain = f.domain();
    while step.iter().any(|&s| s > 1e-9) {
        let mut moved = false;
        for j in 0..d {
            for sign in [-1.0, 1.0] {
                let mut y = best.clone();
                y[j] += sign * step[j];
                if !domain.contains(y[j]) {
                    continue;
                }
                let v = objective(f, pts, &y);
                if v < best_val {
                    best_val = v;
                    best = y;
                    moved = true;
                }
            }
        }
        if !moved {
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    best
}

fn metric_projection() -> Verdict {
    let mut rng = stream(2);
    let fs = catalog();
    let mut worst_gap = 0.0f64;
    let mut worst_excess = 0.0f64;
    for i in 0..200 {
        let f = &fs[i % fs.len()];
        let (lo, hi) = value_range(f);
        let n = 1 + rng.index(6);
        let d = 1 + rng.index(3);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.range(lo, hi)).collect())
            .collect();
        let m = f_mean_points(f, &PointSet::new(pts.clone()).unwrap()).unwrap();
        let y = search_minimizer(f, &pts);
        let gap = m
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let excess = objective(f, &pts, &m) - objective(f, &pts, &y);
        worst_gap = worst_gap.max(gap);
        worst_excess = worst_excess.max(excess / objective(f, &pts, &y).max(1.0));
    }
    verdict(
        worst_gap <= 1e-4 && worst_excess <= 1e-12,
        format!("max |mean - searched minimizer| {worst_gap:.2e}, max relative objective excess {worst_excess:.2e}"),
    )
}

// ---------------------------------------------------------------- 3

fn tower_property() -> Verdict {
    let mut rng = stream(3);
    let fs = catalog();
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let f = &fs[i % fs.len()];
        let n = 1 + rng.index(12);
        let space = fixtures::random_space(&mut rng, n, true);
        let fine = fixtures::random_partition(&mut rng, n);
        let coarse = fixtures::coarsen(&mut rng, &fine);
        let x = fixtures::random_variable(&mut rng, f, n);
        let inner = f_cond_expectation(f, &space, &x, &fine).unwrap();
        let lhs = f_cond_expectation(f, &space, &inner, &coarse).unwrap();
        let rhs = f_cond_expectation(f, &space, &x, &coarse).unwrap();
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            worst = worst.max(rel(*a, *b));
        }
    }
    verdict(
        worst <= 1e-10,
        format!("max relative residual {worst:.2e} over 1000 instances"),
    )
}

// ---------------------------------------------------------------- 4

fn total_variance() -> Verdict {
    let mut rng = stream(4);
    let fs = catalog();
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let f = &fs[i % fs.len()];
        let n = 1 + rng.index(12);
        let space = fixtures::random_space(&mut rng, n, true);
        let g = fixtures::random_partition(&mut rng, n);
        let x = fixtures::random_variable(&mut rng, f, n);
        let tv = total_variance_check(f, &space, &x, &g).unwrap();
        worst = worst.max((tv.lhs - tv.rhs()).abs());
    }
    verdict(
        worst <= 1e-10,
        format!("max |lhs - rhs| {worst:.2e} over 1000 instances"),
    )
}

// ---------------------------------------------------------------- 5

fn u_martingale() -> Verdict {
    let mut rng = stream(5);
    let fs = catalog();
    let mut worst = 0.0f64;
    let mut worst_initial = 0.0f64;
    for i in 0..1000 {
        let u = &fs[i % fs.len()];
        let n = 1 + rng.index(12);
        let m = 1 + rng.index(4);
        let space = fixtures::random_space(&mut rng, n, true);
        let filtration = Filtration::new(fixtures::random_filtration(&mut rng, n, m)).unwrap();
        let x = fixtures::random_variable(&mut rng, u, n);
        let r = u_martingale_check(u, &space, &filtration, &x, 1e-10).unwrap();
        let c_t = certainty_equivalent(u, &space, &x).unwrap();
        worst = worst.max(r.max_residual());
        worst_initial = worst_initial.max(rel(r.prices[0].value(0), c_t));
    }
    verdict(
        worst <= 1e-10 && worst_initial <= 1e-10,
        format!("max step residual {worst:.2e}, max |pi_0 - C(T)| {worst_initial:.2e} over 1000 scenarios"),
    )
}

// ---------------------------------------------------------------- 6

fn jensen_ordering() -> Verdict {
    let mut rng = stream(6);
    let ordered: Vec<MeanFunction> = catalog()
        .into_iter()
        .filter(|f| f.convexity() != Convexity::Neither)
        .collect();
    let mut violations = 0usize;
    let mut checked = 0usize;
    let mut min_premium = f64::INFINITY;
    let mut skipped = Vec::new();
    for f in &ordered {
        let both = jensen_range(f);
        if both.is_none() {
            skipped.push(f.to_string());
        }
        for _ in 0..500 {
            let n = 1 + rng.index(12);
            let space = fixtures::random_space(&mut rng, n, true);
            let g = fixtures::random_partition(&mut rng, n);
            if let Some((lo, hi)) = both {
                let x = RandomVariable::new((0..n).map(|_| rng.range(lo, hi)).collect()).unwrap();
                let j = jensen_order_check(f, &space, &x, &g).unwrap();
                violations += j.violations(1e-12).len();
                checked += 1;
            }
            if f.convexity() == Convexity::Concave {
                let x = fixtures::random_variable(&mut rng, f, n);
                let p = pratt_premium(f, &space, &x, &g).unwrap();
                min_premium = p.values().iter().copied().fold(min_premium, f64::min);
            }
        }
    }
    verdict(
        violations == 0 && min_premium >= -1e-12,
        format!(
            "{violations} violations in {checked} instances, min risk premium {min_premium:.2e}; \
             no common domain for {}",
            skipped.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 7

fn markov_cross_validation() -> Verdict {
    let mut rng = stream(7);
    let fs = catalog();
    let mut worst = 0.0f64;
    for i in 0..50 {
        let u = &fs[i % fs.len()];
        let states = 1 + rng.index(4);
        let depth = 1 + rng.index(5);
        let chain = fixtures::random_chain(&mut rng, u, states);
        let schedule = markov_ce_schedule(u, &chain, depth).unwrap();
        let tree = unroll(&chain, depth).unwrap();
        let c0 = certainty_equivalent(u, &tree.space, &tree.payoff).unwrap();
        worst = worst.max(rel(c0, schedule.at(0, chain.initial_state())));
        for (k, g) in tree.filtration.partitions().iter().enumerate() {
            let c = conditional_certainty_equivalent(u, &tree.space, &tree.payoff, g).unwrap();
            for (w, path) in tree.paths.iter().enumerate() {
                if tree.space.prob(w) > 0.0 {
                    worst = worst.max(rel(c.value(w), schedule.at(k + 1, path[k + 1])));
                }
            }
        }
    }
    verdict(
        worst <= 1e-10,
        format!("max relative residual {worst:.2e} over 50 chains"),
    )
}

// ---------------------------------------------------------------- 8

fn enumerate_exit(
    s: &CeSchedule,
    c: &MarkovChainModel,
    level: f64,
    h: usize,
    k: usize,
    state: usize,
    p: f64,
) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    if s.at(k, state) < level {
        return p;
    }
    if k == h {
        return 0.0;
    }
    (0..c.n_states())
        .map(|t| enumerate_exit(s, c, level, h, k + 1, t, p * c.transition()[state][t]))
        .sum()
}

fn exit_time() -> Verdict {
    let mut rng = stream(8);
    let fs = catalog();
    let n_paths = 100_000u64;
    let mut worst_se = 0.0f64;
    let mut worst_enum = 0.0f64;
    for i in 0..20 {
        let u = &fs[i % fs.len()];
        let states = 2 + rng.index(3);
        let n = 1 + rng.index(10);
        let chain = fixtures::random_chain(&mut rng, u, states);
        let schedule = markov_ce_schedule(u, &chain, n).unwrap();
        let (lo, hi) = schedule.extent(n);
        let level = rng.range(lo, hi);
        let exact = exit_probability_exact(&schedule, &chain, level, n);
        let oracle = enumerate_exit(&schedule, &chain, level, n, 0, chain.initial_state(), 1.0);
        worst_enum = worst_enum.max((exact - oracle).abs());
        let hits = exit_hits_monte_carlo(&schedule, &chain, level, n, n_paths, SEED + i as u64);
        let mc = hits as f64 / n_paths as f64;
        let se = (exact * (1.0 - exact) / n_paths as f64).sqrt();
        let z = if se > 0.0 {
            (mc - exact).abs() / se
        } else if mc == exact {
            0.0
        } else {
            f64::INFINITY
        };
        worst_se = worst_se.max(z);
    }
    verdict(
        worst_se <= 3.0 && worst_enum <= 1e-12,
        format!("max |mc - exact| {worst_se:.2} standard errors, max |DP - enumeration| {worst_enum:.2e} over 20 chains"),
    )
}

// ---------------------------------------------------------------- 9

fn unbiasedness() -> Verdict {
    let mut rng = stream(9);
    let mut worst = 0.0f64;
    let mut count = 0;
    for f in catalog() {
        for atoms in 1..=4 {
            for n in 1..=6 {
                let space = fixtures::random_space(&mut rng, atoms, false);
                let x = fixtures::random_variable(&mut rng, &f, atoms);
                let r = f_unbiasedness_check(&f, &space, &x, n).unwrap();
                worst = worst.max(r.residual());
                count += 1;
            }
        }
    }
    verdict(
        worst <= 1e-10,
        format!("max relative residual {worst:.2e} over {count} checks"),
    )
}

// ---------------------------------------------------------------- 10

fn lln() -> Verdict {
    let mut ok = true;
    let mut worst_ratio = 0.0f64;
    let mut slowest = Duration::ZERO;
    for (i, f) in catalog().iter().enumerate() {
        let start = Instant::now();
        let spec = SamplerSpec::new(
            FiniteProbSpace::uniform(2).unwrap(),
            RandomVariable::new(vec![1.0, 4.0]).unwrap(),
            SEED + i as u64,
            1_000_000,
        )
        .unwrap();
        let r = lln_diagnostic(f, &spec, &[1000, 100_000]).unwrap();
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        ok &= r.passed() && elapsed < Duration::from_secs(10);
        worst_ratio = worst_ratio.max(r.final_error() / r.bound);
    }
    verdict(
        ok,
        format!(
            "worst error / bound {worst_ratio:.3} at N = 1e6 on uniform {{1, 4}}, slowest {:.2} s",
            slowest.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 11

fn clt() -> Verdict {
    let spec = SamplerSpec::new(
        FiniteProbSpace::new(vec![0.1, 0.25, 0.3, 0.2, 0.15]).unwrap(),
        RandomVariable::new(vec![0.5, 0.9, 1.4, 2.0, 2.7]).unwrap(),
        SEED,
        1,
    )
    .unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for f in [
        MeanFunction::identity(),
        MeanFunction::log(),
        MeanFunction::exp(1.0).unwrap(),
    ] {
        let r = clt_check(&f, &spec, 10_000, 1000).unwrap();
        ok &= r.passed();
        parts.push(format!("{f} {:.4}", r.ks_statistic));
    }
    verdict(ok, format!("KS {} vs critical 0.0163", parts.join(", ")))
}

// ---------------------------------------------------------------- 12

fn determinism() -> Verdict {
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut ok = true;
    let mut names = Vec::new();
    for name in [
        "exit_time.toml",
        "clt.toml",
        "lln.toml",
        "estimate.toml",
        "martingale.toml",
    ] {
        let path = scenarios.join(name);
        let outputs: Vec<Vec<u8>> = ["1", "4", "4", "1"]
            .iter()
            .map(|w| {
                let o = Command::new(env!("CARGO_BIN_EXE_fmean"))
                    .args([
                        "run",
                        "--config",
                        path.to_str().unwrap(),
                        "--format",
                        "structured",
                        "--workers",
                        w,
                    ])
                    .output()
                    .expect("binary runs");
                assert!(
                    o.status.success(),
                    "{name}: {}",
                    String::from_utf8_lossy(&o.stderr)
                );
                o.stdout
            })
            .collect();
        ok &= outputs.windows(2).all(|w| w[0] == w[1]) && !outputs[0].is_empty();
        names.push(name.trim_end_matches(".toml"));
    }
    verdict(
        ok,
        format!("workers 1 and 4, byte-identical for {}", names.join(", ")),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Verdict;
    let criteria: [(u32, &str, Option<u64>, Check); 12] = [
        (1, "catalog conformance", Some(5), catalog_conformance),
        (2, "metric projection", Some(30), metric_projection),
        (3, "tower property", Some(10), tower_property),
        (4, "total variance identity", None, total_variance),
        (5, "u-martingale", None, u_martingale),
        (6, "Jensen ordering", None, jensen_ordering),
        (7, "Markov cross-validation", None, markov_cross_validation),
        (8, "exit-time probability", None, exit_time),
        (9, "f-unbiasedness", None, unbiasedness),
        (10, "law of large numbers", None, lln),
        (11, "central limit theorem", Some(60), clt),
        (12, "determinism", None, determinism),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let v = check();
        let secs = start.elapsed().as_secs_f64();
        let in_time = limit.is_none_or(|l| secs < l as f64);
        let passed = v.passed && in_time;
        if !passed {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(" / {l} s"));
        println!(
            "{} {id:>2} {name}: {} [{secs:.2} s{budget}]",
            if passed { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
