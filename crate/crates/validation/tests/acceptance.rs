//! One line per acceptance criterion. Exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use condana::closed_forms::{berry_esseen_sup, snc_wnc_exact};
use condana::linalg::norm2;
use condana::problems::{evaluate, fd_jacobian, jacobian, list_problems, problem_by_name, Problem};
use condana::rand_geom::SampleStream;
use condana::verify::{run_suite, CheckGroup, Relation, SuiteConfig, VerifySuiteReport};

const EXACT_REL_TOL: f64 = 1e-14;
const LEMMA5_TOL: f64 = 1e-6;
const BERRY_ESSEEN_M1_LIMIT: f64 = 0.05;
const JACOBIAN_REL_TOL: f64 = 1e-6;
const FD_H_SCALE: f64 = 1e-5;
const TAYLOR_MIN_SLOPE: f64 = 1.9;
const JACOBIAN_POINTS: usize = 20;

struct Outcome {
    passed: bool,
    detail: String,
}

fn suite(groups: &[CheckGroup]) -> VerifySuiteReport {
    let cfg = SuiteConfig {
        groups: groups.to_vec(),
        ..SuiteConfig::default()
    };
    run_suite(&cfg).expect("suite runs")
}

fn summary(r: &VerifySuiteReport) -> String {
    let first = r
        .failures()
        .next()
        .map(|c| format!("; first failure {} [{}]", c.name, c.instance));
    format!(
        "{} checks, {} failed, min slack {:.3e}{}",
        r.checks.len(),
        r.failed,
        r.checks
            .iter()
            .map(|c| c.slack)
            .fold(f64::INFINITY, f64::min),
        first.unwrap_or_default()
    )
}

fn criterion1() -> Outcome {
    let (r2, _) = snc_wnc_exact::<f64>(2).unwrap();
    let (r3, _) = snc_wnc_exact::<f64>(3).unwrap();
    let exact_ok = ((r2 - 4.0 / (3.0 * PI)) / r2).abs() <= EXACT_REL_TOL
        && ((r3 - 0.375) / r3).abs() <= EXACT_REL_TOL;
    let r = suite(&[CheckGroup::Corollary1]);
    let mc = r
        .checks
        .iter()
        .filter(|c| c.name == "corollary1.monte_carlo_ratio")
        .count();
    Outcome {
        passed: exact_ok && r.all_passed() && mc == 10,
        detail: format!(
            "exact m=2,3 {}; {} Monte Carlo ratios; {}",
            if exact_ok { "ok" } else { "off" },
            mc,
            summary(&r)
        ),
    }
}

fn criterion2() -> Outcome {
    let r = suite(&[CheckGroup::BallSampling]);
    Outcome {
        passed: r.all_passed() && r.checks.len() >= 8 * 6,
        detail: summary(&r),
    }
}

fn criterion3() -> Outcome {
    let cfg = SuiteConfig::default();
    let problems = cfg.theorem1_m.len() * cfg.theorem1_n.len() * cfg.theorem1_trials;
    let r = suite(&[CheckGroup::Theorem1]);
    Outcome {
        passed: r.all_passed() && problems >= 100,
        detail: format!("{problems} problems; {}", summary(&r)),
    }
}

fn criterion4() -> Outcome {
    let r = suite(&[CheckGroup::Theorem2]);
    let has = |n: &str| r.checks.iter().any(|c| c.name == n);
    let patterns = has("theorem2.one_hot_exact") && has("theorem2.all_ones_exact");
    Outcome {
        passed: r.all_passed() && patterns,
        detail: summary(&r),
    }
}

fn criterion5() -> Outcome {
    let r = suite(&[CheckGroup::Lemma5]);
    let tight = r
        .checks
        .iter()
        .filter(|c| c.relation == Relation::Within)
        .all(|c| c.tolerance <= LEMMA5_TOL && (c.computed - c.bound).abs() <= LEMMA5_TOL);
    let zero = r.checks.iter().any(|c| c.instance.contains("m=0"));
    Outcome {
        passed: r.all_passed() && tight && zero,
        detail: summary(&r),
    }
}

fn criterion6() -> Outcome {
    let r = suite(&[CheckGroup::BerryEsseen]);
    let s1 = berry_esseen_sup::<f64>(1, SuiteConfig::default().berry_esseen_grid).unwrap();
    let m1_ok = s1.sup < BERRY_ESSEEN_M1_LIMIT;
    Outcome {
        passed: r.all_passed() && m1_ok,
        detail: format!(
            "1/sqrt(m) bounds: {}; m=1 sup {:.5} at {:.4} vs limit {BERRY_ESSEEN_M1_LIMIT}",
            summary(&r),
            s1.sup,
            s1.argmax
        ),
    }
}

fn criterion7() -> Outcome {
    let r = suite(&[CheckGroup::Corollary2, CheckGroup::EntropyLemmas]);
    let positive = r.checks.iter().all(|c| c.slack > 0.0);
    Outcome {
        passed: r.all_passed() && positive,
        detail: summary(&r),
    }
}

fn verify_bytes(dir: &std::path::Path, tag: &str, threads: usize) -> Vec<u8> {
    let out = dir.join(format!("{tag}.csv"));
    let threads = threads.to_string();
    let out_arg = out.to_str().unwrap();
    condana_cli::run_from([
        "condana",
        "--command",
        "verify",
        "--seed",
        "42",
        "--threads",
        &threads,
        "--out",
        out_arg,
    ]);
    std::fs::read(out).unwrap_or_default()
}

fn criterion8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    // The host may report a single core; force real parallelism for the comparison.
    let max = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .max(4);
    let a = verify_bytes(dir.path(), "a", max);
    let b = verify_bytes(dir.path(), "b", max);
    let c = verify_bytes(dir.path(), "c", 1);
    let rerun = !a.is_empty() && a == b;
    let threads = !a.is_empty() && a == c;
    Outcome {
        passed: rerun && threads,
        detail: format!(
            "{} bytes; rerun identical {rerun}; 1 vs {max} threads identical {threads}",
            a.len()
        ),
    }
}

fn corpus() -> Vec<Box<dyn Problem<f64>>> {
    list_problems()
        .into_iter()
        .map(|d| problem_by_name(d.name, d.input_dim.or(Some(3))).unwrap())
        .collect()
}

fn taylor_slope(p: &dyn Problem<f64>, x: &[f64], u: &[f64]) -> f64 {
    let fx = evaluate(p, x).unwrap();
    let j = jacobian(p, x).unwrap().matrix;
    let pts: Vec<(f64, f64)> = (0..7)
        .map(|k| {
            let d = 0.1 / f64::from(1 << k);
            let xp: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + d * b).collect();
            let step: Vec<f64> = u.iter().map(|b| d * b).collect();
            let lin = j.mul_vec(&step);
            let fp = evaluate(p, &xp).unwrap();
            let r: Vec<f64> = fp
                .iter()
                .zip(&fx)
                .zip(&lin)
                .map(|((a, b), c)| a - b - c)
                .collect();
            (d.ln(), norm2(&r).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}

fn criterion9() -> Outcome {
    let mut s = SampleStream::new(42);
    let mut worst = 0.0f64;
    let mut min_slope = f64::INFINITY;
    let mut problems = 0;
    for p in corpus() {
        problems += 1;
        let m = p.input_dim();
        for _ in 0..JACOBIAN_POINTS {
            let x: Vec<f64> = (0..m).map(|_| 2.0 * s.next_symmetric()).collect();
            let an = jacobian(p.as_ref(), &x).unwrap();
            let fd = fd_jacobian(p.as_ref(), &x, FD_H_SCALE).unwrap();
            let scale = an
                .matrix
                .as_slice()
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()));
            for (a, f) in an.matrix.as_slice().iter().zip(fd.matrix.as_slice()) {
                let denom = a.abs().max(scale);
                if denom > 0.0 {
                    worst = worst.max((a - f).abs() / denom);
                }
            }
        }
        if !p.is_linear() && p.analytic_jacobian(&vec![1.0; m]).is_some() {
            for _ in 0..5 {
                let x: Vec<f64> = (0..m).map(|_| 2.0 * s.next_symmetric()).collect();
                let u: Vec<f64> = (0..m).map(|_| s.next_symmetric()).collect();
                min_slope = min_slope.min(taylor_slope(p.as_ref(), &x, &u));
            }
        }
    }
    Outcome {
        passed: worst <= JACOBIAN_REL_TOL && min_slope >= TAYLOR_MIN_SLOPE,
        detail: format!(
            "{problems} problems; worst relative gap {worst:.2e}; min Taylor slope {min_slope:.4}"
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome, Duration); 9] = [
        (1, criterion1, Duration::from_secs(30)),
        (2, criterion2, Duration::from_secs(30)),
        (3, criterion3, Duration::from_secs(300)),
        (4, criterion4, Duration::from_secs(300)),
        (5, criterion5, Duration::from_secs(10)),
        (6, criterion6, Duration::from_secs(10)),
        (7, criterion7, Duration::from_secs(120)),
        (8, criterion8, Duration::from_secs(600)),
        (9, criterion9, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (id, run, limit) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let ok = out.passed && took <= limit;
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id}: {} ({:.2}s, limit {}s) {}",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs(),
            out.detail
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
