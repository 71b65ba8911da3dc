//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Numeric arguments select criteria,
//! e.g. `cargo test --test acceptance -- 1 4`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tempfile::TempDir;

use boinit::acquisition::expected_improvement;
use boinit::engine::derive_seed;
use boinit::harness::config::ExperimentConfig;
use boinit::harness::{analyze, compare, run_experiment, RunOptions, SweepFilter};
use boinit::init::truncnorm_sample;
use boinit::objectives::{BaseFunction, Synthetic, SyntheticSpec};
use boinit::space::Kind;
use boinit::stats::{binomial_test, Decision, SensitivityMetric};
use boinit::surrogate::{FitPolicy, GpModel};
use boinit::{run_bo, BoOptions, InitStrategy, SearchSpace};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

// ---------------------------------------------------------------------------

fn binomial_table() -> Verdict {
    let rows = [((18, 15), 0.364), ((10, 12), 0.738), ((19, 12), 0.141), ((11, 17), 0.908)];
    let mut pass = true;
    let mut parts = Vec::new();
    for ((w, l), want) in rows {
        let r = binomial_test(w, l).expect("non-empty");
        let ok = (r.p_value - want).abs() <= 0.002 && r.decision == Decision::FailToReject;
        pass &= ok;
        parts.push(format!("({w},{l}) p={:.4} vs {want} {}", r.p_value, r.decision.label()));
    }
    verdict(pass, parts.join("; "))
}

// ---------------------------------------------------------------------------

fn se_kernel(sf2: f64, ell: f64, a: &[f64], b: &[f64]) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    sf2 * (-sq / (2.0 * ell * ell)).exp()
}

fn gp_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9);
    let mut worst_mean: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    for _ in 0..50 {
        let d = rng.random_range(1..=3usize);
        let n = rng.random_range(1..=15usize);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(1.0..8.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|p| {
                let s: f64 = p.iter().zip(&w).map(|(a, b)| a * b).sum();
                s.sin() + 0.05 * rng.random::<f64>()
            })
            .collect();
        let model = GpModel::fit(&x, &y, &FitPolicy::default()).expect("fit");

        // dense inverse of K + (σn² + jitter)·I built from the kernel formula
        let kp = *model.kernel();
        let (sf2, ell) = (kp.signal_variance, kp.length_scale);
        let mut k = DMatrix::from_fn(n, n, |i, j| se_kernel(sf2, ell, &x[i], &x[j]));
        for i in 0..n {
            k[(i, i)] += kp.noise_variance + model.jitter();
        }
        let inv = k.try_inverse().expect("invertible");
        let (mu_y, s_y) = (model.target_mean(), model.target_std());
        let ys = DVector::from_iterator(n, y.iter().map(|v| (v - mu_y) / s_y));
        let weights = &inv * &ys;

        for _ in 0..100 {
            let t: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            let ks = DVector::from_iterator(n, x.iter().map(|xi| se_kernel(sf2, ell, &t, xi)));
            let mean = mu_y + s_y * ks.dot(&weights);
            let var = (sf2 - ks.dot(&(&inv * &ks))) * s_y * s_y;
            let (m, v) = model.posterior(&t).expect("posterior");
            // relative to the value, floored at the prior scale of each quantity
            worst_mean = worst_mean.max((m - mean).abs() / mean.abs().max(s_y));
            worst_var = worst_var.max((v - var.max(0.0)).abs() / var.abs().max(sf2 * s_y * s_y));
        }
    }
    verdict(
        worst_mean <= 1e-8 && worst_var <= 1e-8,
        format!("50 datasets x 100 points, max rel. error mean {worst_mean:.2e}, variance {worst_var:.2e} (tol 1e-8)"),
    )
}

// ---------------------------------------------------------------------------

fn ei_oracle() -> Verdict {
    const SAMPLES: usize = 10_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    // one set of standard normal draws shared by every triple
    let z: Vec<f64> = (0..SAMPLES).map(|_| rng.sample(StandardNormal)).collect();
    let mut worst: f64 = 0.0;
    let mut outside = 0;
    for _ in 0..200 {
        let std = rng.random_range(0.05..2.0);
        let gap = rng.random_range(-4.0..3.0) * std;
        let incumbent = rng.random_range(-2.0..2.0);
        let mean = incumbent + gap;
        let (mut s1, mut s2) = (0.0, 0.0);
        for &zi in &z {
            let imp = (mean + std * zi - incumbent).max(0.0);
            s1 += imp;
            s2 += imp * imp;
        }
        let m = s1 / SAMPLES as f64;
        let var = (s2 / SAMPLES as f64 - m * m) * SAMPLES as f64 / (SAMPLES - 1) as f64;
        let se = (var / SAMPLES as f64).sqrt();
        let ei = expected_improvement(mean, std, incumbent).expect("finite");
        let k = (ei - m).abs() / se;
        worst = worst.max(k);
        if k > 3.0 {
            outside += 1;
        }
    }
    let at_zero = expected_improvement(0.0, 1.0, 0.0).expect("finite");
    let zero_ok = (at_zero - 0.398_942).abs() <= 1e-6;
    verdict(
        outside == 0 && zero_ok,
        format!(
            "200 triples vs 1e7-sample estimates: max |EI - MC|/SE = {worst:.2}, {outside} beyond 3 SE; EI(z=0) = {at_zero:.9}"
        ),
    )
}

// ---------------------------------------------------------------------------

fn truncnorm_cdf(x: f64, mu: f64, sigma: f64, a: f64, b: f64) -> f64 {
    let (lo, hi) = (phi((a - mu) / sigma), phi((b - mu) / sigma));
    ((phi((x - mu) / sigma) - lo) / (hi - lo)).clamp(0.0, 1.0)
}

fn truncated_normal() -> Verdict {
    const N: usize = 20_000;
    // asymptotic Kolmogorov critical value at α = 0.01
    let critical = (-(0.01f64 / 2.0).ln() / 2.0).sqrt() / (N as f64).sqrt();
    let cases = [
        (0.5, 0.05, 0.0, 1.0),
        (0.5, 0.3, 0.0, 1.0),
        (0.2, 0.1125, 0.0, 1.0),
        (0.9, 0.2375, 0.0, 1.0),
        (0.0, 0.05, 0.0, 1.0),
        (1.0, 0.175, 0.0, 1.0),
        (-1.0, 0.5, -1.0, 0.0),
        (3.0, 2.0, -1.0, 10.0),
        (0.5, 5.0, 0.0, 1.0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(68);
    let mut ks_fail = 0;
    let mut worst_ratio: f64 = 0.0;
    for &(mu, sigma, a, b) in &cases {
        let mut xs: Vec<f64> = (0..N)
            .map(|_| truncnorm_sample(mu, sigma, a, b, &mut rng).expect("valid"))
            .collect();
        xs.sort_by(f64::total_cmp);
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = truncnorm_cdf(x, mu, sigma, a, b);
                (f - i as f64 / N as f64).max((i + 1) as f64 / N as f64 - f)
            })
            .fold(0.0, f64::max);
        worst_ratio = worst_ratio.max(d / critical);
        if d > critical {
            ks_fail += 1;
        }
    }

    // mass within ±σ of interior continuous defaults of the shipped spaces at λ = 0.05
    let lambda = 0.05;
    let mut fractions = Vec::new();
    for entry in fs::read_dir(configs_dir().join("spaces")).expect("spaces dir") {
        let path = entry.expect("entry").path();
        let space = SearchSpace::load(&path).expect("space");
        let centre = space.default_unit();
        for (p, &m) in space.parameters().iter().zip(&centre) {
            // truncation within σ of a bound inflates the mass
            if p.kind == Kind::Integer || m < lambda || m > 1.0 - lambda {
                continue;
            }
            let draws = 100_000;
            let inside = (0..draws)
                .filter(|_| {
                    let u = truncnorm_sample(m, lambda, 0.0, 1.0, &mut rng).expect("valid");
                    (u - m).abs() <= lambda
                })
                .count();
            fractions.push((p.name.clone(), inside as f64 / draws as f64));
        }
    }
    let mass_ok = !fractions.is_empty() && fractions.iter().all(|(_, f)| (f - 0.68).abs() <= 0.02);
    let (lo, hi) = fractions.iter().fold((1.0f64, 0.0f64), |(l, h), (_, f)| (l.min(*f), h.max(*f)));
    verdict(
        ks_fail == 0 && mass_ok,
        format!(
            "KS: {ks_fail}/9 rejected at alpha=0.01 (max D/D_crit {worst_ratio:.2}); ±sigma mass over {} interior defaults in [{lo:.4}, {hi:.4}]",
            fractions.len()
        ),
    )
}

// ---------------------------------------------------------------------------

struct SanityCase {
    name: &'static str,
    objective: Synthetic,
    space: SearchSpace,
    random_median: f64,
}

fn random_search_median(f: &Synthetic, d: usize, budget: usize, runs: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut best: Vec<f64> = (0..runs)
        .map(|_| {
            (0..budget)
                .map(|_| {
                    let u: Vec<f64> = (0..d).map(|_| rng.random()).collect();
                    f.value_unit(&u)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    best.sort_by(f64::total_cmp);
    best[runs / 2]
}

fn optimizer_sanity() -> Verdict {
    const T: usize = 30;
    const SEEDS: usize = 20;
    let quad_space = SearchSpace::unit(&[0.5]).expect("space");
    let quad = Synthetic::new(
        SyntheticSpec::new(BaseFunction::SphereBowl, vec![0.3], vec![0.5], 0.04),
        quad_space.clone(),
    )
    .expect("spec");
    // best of T uniform draws: P(min |x − 0.3| > r) = (1 − 2r)^T for r ≤ 0.3
    let r = (1.0 - 0.5f64.powf(1.0 / T as f64)) / 2.0;
    let quad_median = quad.value_unit(&[0.3 + r]);

    let basin_space = SearchSpace::unit(&[0.25, 0.7]).expect("space");
    let basin = Synthetic::new(
        SyntheticSpec::new(BaseFunction::TwoBasin, vec![0.75, 0.3], vec![0.25, 0.7], 0.1),
        basin_space.clone(),
    )
    .expect("spec");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let basin_median = random_search_median(&basin, 2, T, 10_001, &mut rng);

    let cases = [
        SanityCase {
            name: "quadratic-1d",
            objective: quad,
            space: quad_space,
            random_median: quad_median,
        },
        SanityCase {
            name: "two-basin-2d",
            objective: basin,
            space: basin_space,
            random_median: basin_median,
        },
    ];
    let strategy = InitStrategy::Uniform { count: 3 };
    let mut pass = true;
    let mut parts = Vec::new();
    for mut case in cases {
        let optimum = case.objective.spec().optimum_value;
        let tolerance = 0.01 * (optimum - case.objective.lower_bound());
        let (mut hits, mut below_median) = (0, 0);
        for rep in 0..SEEDS {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(2024, case.name, "uniform-n3-T30", rep));
            let trace = run_bo(&mut case.objective, &case.space, &strategy, T, &mut rng, &BoOptions::default())
                .expect("run");
            let best = trace.best_metric();
            if best >= optimum - tolerance {
                hits += 1;
            }
            if best < case.random_median {
                below_median += 1;
            }
        }
        let ok = hits * 10 >= SEEDS * 9 && below_median == 0;
        pass &= ok;
        parts.push(format!(
            "{}: {hits}/{SEEDS} within 1% of range, {below_median} below random-search median {:.5}",
            case.name, case.random_median
        ));
    }
    verdict(pass, parts.join("; "))
}

// ---------------------------------------------------------------------------

fn sensitivity() -> Verdict {
    let cfg = ExperimentConfig::load(configs_dir().join("sensitivity.toml")).expect("config");
    let tmp = TempDir::new().expect("tempdir");
    let opts = RunOptions {
        output_dir: Some(tmp.path().to_path_buf()),
        ..RunOptions::default()
    };
    let (out, manifest) = run_experiment(&cfg, &opts).expect("run");
    if manifest.failures() > 0 {
        return verdict(false, format!("{} failed cells", manifest.failures()));
    }
    let traces = boinit::trace::read_trace_dir(&out).expect("traces");
    let report = analyze(&traces, &SweepFilter::default(), 0.5).expect("sweep");
    let get = |m| report.row(m).correlation;
    let (early, max, conv) = (
        get(SensitivityMetric::EarlyMean),
        get(SensitivityMetric::MaxPerformance),
        get(SensitivityMetric::ConvergenceIndex),
    );
    let show = |c: Option<boinit::stats::Correlation>| match c {
        Some(c) => format!("r={:+.3} p={:.3}", c.r, c.p),
        None => "undefined".into(),
    };
    let pass = early.is_some_and(|c| c.r < 0.0 && c.p < 0.05)
        && max.is_some_and(|c| c.p > 0.05)
        && conv.is_some_and(|c| c.p > 0.05);
    verdict(
        pass,
        format!(
            "{} runs: early mean {}; max performance {}; convergence index {}",
            report.runs,
            show(early),
            show(max),
            show(conv)
        ),
    )
}

// ---------------------------------------------------------------------------

fn null_result() -> Verdict {
    let cfg = ExperimentConfig::load(configs_dir().join("suite.toml")).expect("config");
    let mut held = 0;
    let mut parts = Vec::new();
    for seed in 1..=10u64 {
        let tmp = TempDir::new().expect("tempdir");
        let opts = RunOptions {
            seed: Some(seed),
            output_dir: Some(tmp.path().to_path_buf()),
            ..RunOptions::default()
        };
        let (out, manifest) = run_experiment(&cfg, &opts).expect("run");
        assert_eq!(manifest.failures(), 0);
        let traces = boinit::trace::read_trace_dir(&out).expect("traces");
        let report = compare(&traces, &cfg.thresholds).expect("compare");
        // a comparison whose cells all tie has no wins to test and keeps H0
        let rejected: Vec<String> = report
            .rows
            .iter()
            .filter(|r| r.test.decision == Decision::Reject)
            .map(|r| format!("{} {}/{}", r.label(), r.test.wins, r.test.losses))
            .collect();
        if rejected.is_empty() {
            held += 1;
        } else {
            parts.push(format!("seed {seed}: {}", rejected.join(", ")));
        }
    }
    let mut detail = format!("{held}/10 replications keep all four null hypotheses");
    if !parts.is_empty() {
        detail.push_str(&format!(" (rejections: {})", parts.join("; ")));
    }
    verdict(held >= 8, detail)
}

// ---------------------------------------------------------------------------

fn boinit(args: &[&str]) -> std::process::Output {
    let o = Command::new(env!("CARGO_BIN_EXE_boinit"))
        .args(args)
        .env_remove("BOINIT_JOBS")
        .env_remove("BOINIT_OUTPUT_DIR")
        .output()
        .expect("boinit launches");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o
}

fn trace_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir.join("traces"))
        .expect("trace dir")
        .map(|e| {
            let p = e.expect("entry").path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).expect("read"))
        })
        .collect();
    v.sort();
    v
}

fn determinism() -> Verdict {
    let tmp = TempDir::new().expect("tempdir");
    let config = configs_dir().join("demo.toml");
    let config = config.to_str().expect("utf-8 path");
    let dirs: Vec<PathBuf> = ["a", "b"].iter().map(|d| tmp.path().join(d)).collect();
    for (dir, jobs) in dirs.iter().zip(["1", "3"]) {
        boinit(&["--jobs", jobs, "run", "-c", config, "--output-dir", dir.to_str().unwrap()]);
    }
    let (a, b) = (trace_bytes(&dirs[0]), trace_bytes(&dirs[1]));
    let traces_equal = !a.is_empty() && a == b;
    let mut reports_equal = true;
    for format in ["text", "structured"] {
        let ra = boinit(&["--format", format, "compare", "-d", dirs[0].to_str().unwrap()]).stdout;
        let rb = boinit(&["--format", format, "compare", "-d", dirs[1].to_str().unwrap()]).stdout;
        reports_equal &= !ra.is_empty() && ra == rb;
    }
    verdict(
        traces_equal && reports_equal,
        format!(
            "{} trace files byte-identical across runs with 1 and 3 workers: {traces_equal}; compare reports identical: {reports_equal}",
            a.len()
        ),
    )
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Verdict); 8] = [
        (1, "binomial p-values of the four win/loss pairs", binomial_table),
        (2, "GP posterior vs dense-inverse oracle", gp_oracle),
        (3, "expected improvement vs Monte Carlo", ei_oracle),
        (4, "truncated normal sampling", truncated_normal),
        (5, "optimizer sanity on synthetic optima", optimizer_sanity),
        (6, "concentration sweep sign pattern", sensitivity),
        (7, "null result on the synthetic suite", null_result),
        (8, "end-to-end determinism", determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} criterion {id} ({name}): {} [{:.1}s]",
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
