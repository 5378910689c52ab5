use std::fmt;
use std::path::Path;

use condana::closed_forms::{snc_wnc_exact, theorem1_bounds, theorem2_bounds, MomentTable};
use condana::condition::{report, scc, snc, Estimate, EstimatorConfig, TrendRow};
use condana::problems::{evaluate, list_problems, problem_by_name, Linear, Problem};
use condana::rand_geom::SampleStream;
use condana::verify::{run_suite, CheckGroup, SuiteConfig};
use condana::Error;

use crate::args::{parse_range, parse_reals, Cli};
use crate::table::{format_real, Cell, Table};

pub const EXIT_FLAGGED: u8 = 2;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 3;

const POINT_STREAM: u64 = 0;
const ESTIMATOR_STREAM: u64 = 1;
const RANDOM_POINT_HALF_WIDTH: f64 = 2.0;
const RANDOM_POINT_MIN_OUTPUT: f64 = 1e-9;
const RANDOM_POINT_ATTEMPTS: usize = 1000;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoConvergence { .. } | Error::NonFinite { .. } => EXIT_NUMERICAL,
            Error::InfiniteCondition { .. } => EXIT_FLAGGED,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// A finished command: its table and whether any row was flagged.
pub struct Outcome {
    pub table: Table,
    pub flagged: bool,
    pub summary: Option<String>,
}

pub type Run = Result<Outcome, Failure>;

fn resolve_problem(cli: &Cli, point_len: Option<usize>) -> Result<Box<dyn Problem<f64>>, Failure> {
    if let Some(d) = list_problems().into_iter().find(|d| d.name == cli.problem) {
        let dim = match d.input_dim {
            Some(_) => None,
            None => cli.dim.or(point_len),
        };
        return Ok(problem_by_name(d.name, dim)?);
    }
    let path = Path::new(&cli.problem);
    if path.is_file() {
        return Ok(Box::new(Linear::from_file(path)?));
    }
    Err(Error::UnknownProblem(cli.problem.clone()).into())
}

fn literal_point(cli: &Cli) -> Result<Option<Vec<f64>>, Failure> {
    if cli.point.trim() == "random" {
        return Ok(None);
    }
    parse_reals(&cli.point, "point")
        .map(Some)
        .map_err(Failure::usage)
}

/// Draws from `[-2, 2]^m`, rejecting points with any `|f_j| < 1e-9`.
fn random_point(p: &dyn Problem<f64>, seed: u64) -> Result<Vec<f64>, Failure> {
    let mut s = SampleStream::new(seed).substream(POINT_STREAM);
    for _ in 0..RANDOM_POINT_ATTEMPTS {
        let x: Vec<f64> = (0..p.input_dim())
            .map(|_| RANDOM_POINT_HALF_WIDTH * s.next_symmetric())
            .collect();
        match evaluate(p, &x) {
            Ok(fx) if fx.iter().all(|v| v.abs() >= RANDOM_POINT_MIN_OUTPUT) => return Ok(x),
            _ => continue,
        }
    }
    Err(Failure {
        code: EXIT_NUMERICAL,
        message: format!("no nondegenerate random point after {RANDOM_POINT_ATTEMPTS} draws"),
    })
}

fn problem_and_point(cli: &Cli, seed: u64) -> Result<(Box<dyn Problem<f64>>, Vec<f64>), Failure> {
    let literal = literal_point(cli)?;
    let p = resolve_problem(cli, literal.as_ref().map(Vec::len))?;
    let x = match literal {
        Some(x) => x,
        None => random_point(p.as_ref(), seed)?,
    };
    if x.len() != p.input_dim() {
        return Err(Failure::usage(format!(
            "problem `{}` takes {} coordinates, point has {}",
            p.name(),
            p.input_dim(),
            x.len()
        )));
    }
    Ok((p, x))
}

fn join_point(x: &[f64]) -> String {
    x.iter()
        .map(|v| format_real(*v))
        .collect::<Vec<_>>()
        .join(";")
}

fn estimator(cli: &Cli, seed: u64) -> Result<EstimatorConfig<f64>, Failure> {
    Ok(EstimatorConfig::new(
        cli.samples,
        SampleStream::new(seed).substream(ESTIMATOR_STREAM),
    )?)
}

pub fn analyze(cli: &Cli, seed: u64) -> Run {
    let (p, x) = problem_and_point(cli, seed)?;
    let r = report(p.as_ref(), &x, &estimator(cli, seed)?)?;
    let mut table = Table::new(vec![
        "problem",
        "point",
        "m",
        "n",
        "k",
        "output",
        "f",
        "wnc",
        "wcc",
        "snc_est",
        "snc_hw",
        "snc_exact",
        "snlp",
        "snlp_hw",
        "snlp_skewness",
        "snlp_exact",
        "scc",
        "scc_hw",
        "scc_exact",
        "sclp",
        "sclp_hw",
        "sclp_skewness",
        "wnc_infinite",
        "wcc_infinite",
        "samples",
        "seed",
    ]);
    let point = join_point(&x);
    for j in 0..r.n {
        let snc = r.snc.as_ref();
        let snc_est = snc.map(|s| &s.estimate);
        let scc = r.scc[j].as_ref();
        let scc_est = scc.map(|s| &s.estimate);
        table.push(vec![
            r.problem.as_str().into(),
            point.clone().into(),
            r.m.into(),
            r.n.into(),
            r.k.into(),
            j.into(),
            r.output[j].into(),
            r.wnc().into(),
            r.wcc(j).into(),
            snc_est.map(|e| e.mean).into(),
            snc_est.map(|e| e.half_width).into(),
            snc.and_then(|s| s.exact).into(),
            snc_est.and_then(|e| e.log_mean).into(),
            snc_est.and_then(|e| e.log_half_width).into(),
            snc_est.and_then(|e| e.log_skewness).into(),
            snc.and_then(|s| s.exact_log).into(),
            scc_est.map(|e| e.mean).into(),
            scc_est.map(|e| e.half_width).into(),
            scc.and_then(|s| s.exact).into(),
            scc_est.and_then(|e| e.log_mean).into(),
            scc_est.and_then(|e| e.log_half_width).into(),
            scc_est.and_then(|e| e.log_skewness).into(),
            r.norm_flagged().into(),
            r.output_flagged(j).into(),
            cli.samples.into(),
            seed.into(),
        ]);
    }
    Ok(Outcome {
        table,
        flagged: r.any_flagged(),
        summary: None,
    })
}

fn suite_config(cli: &Cli, seed: u64) -> Result<SuiteConfig, Failure> {
    let mut cfg = SuiteConfig {
        seed,
        ..SuiteConfig::default()
    };
    cfg.mc.samples = cli.samples;
    if let Some(list) = &cli.checks {
        cfg.groups = list
            .split(',')
            .map(|g| g.trim().parse::<CheckGroup>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(r) = &cli.m_range {
        let ms = parse_range(r).map_err(Failure::usage)?;
        if ms.contains(&0) {
            return Err(Failure::usage("dimensions start at 1"));
        }
        let within = |lo: usize, hi: usize| {
            ms.iter()
                .copied()
                .filter(|m| (lo..=hi).contains(m))
                .collect::<Vec<_>>()
        };
        cfg.closed_forms_m = ms.clone();
        cfg.sampling_m = within(3, usize::MAX);
        cfg.corollary1_m = ms.clone();
        cfg.theorem1_m = ms.clone();
        cfg.theorem2_m = ms.clone();
        cfg.corollary2_quadrature_m = within(2, 15);
        cfg.corollary2_mc_m = within(16, usize::MAX);
        cfg.berry_esseen_m = within(1, 30);
        cfg.lemma6_m = within(2, 30);
        cfg.lemma4_m = within(1, 16);
    }
    if let Some(r) = &cli.n_range {
        cfg.theorem1_n = parse_range(r).map_err(Failure::usage)?;
        if cfg.theorem1_n.contains(&0) {
            return Err(Failure::usage("dimensions start at 1"));
        }
    }
    if let Some(t) = cli.trials {
        cfg.theorem1_trials = t;
        cfg.theorem2_trials = t;
        cfg.lemma6_trials = t;
    }
    Ok(cfg)
}

pub fn verify(cli: &Cli, seed: u64) -> Run {
    let cfg = suite_config(cli, seed)?;
    let report = run_suite(&cfg)?;
    let mut table = Table::new(vec![
        "name",
        "instance",
        "relation",
        "computed",
        "bound",
        "slack",
        "tolerance",
        "passed",
        "warning",
        "seed",
    ]);
    for c in &report.checks {
        table.push(vec![
            c.name.as_str().into(),
            c.instance.as_str().into(),
            c.relation.symbol().into(),
            c.computed.into(),
            c.bound.into(),
            c.slack.into(),
            c.tolerance.into(),
            c.passed.into(),
            c.warning.into(),
            report.seed.into(),
        ]);
    }
    let mut summary = format!(
        "{} checks: {} passed, {} failed, {} passed only after widening",
        report.checks.len(),
        report.passed,
        report.failed,
        report.warnings
    );
    for c in report.failures() {
        summary.push_str(&format!("\nFAILED {} [{}]", c.name, c.instance));
    }
    Ok(Outcome {
        table,
        flagged: !report.all_passed(),
        summary: Some(summary),
    })
}

/// Least-squares slope of `ln|diff|` against `ln δ` over usable rows.
pub fn fitted_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, e)| *d > 0.0 && *e > 0.0 && e.is_finite())
        .map(|(d, e)| (d.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn push_trend(
    table: &mut Table,
    quantity: &str,
    output: Option<usize>,
    linearized: &Estimate<f64>,
    trend: &[TrendRow<f64>],
) -> bool {
    let diffs: Vec<(f64, f64)> = trend
        .iter()
        .filter(|r| !r.underflowed())
        .map(|r| (r.delta, (r.estimate.mean - linearized.mean).abs()))
        .collect();
    let slope = fitted_slope(&diffs);
    let mut flagged = false;
    for r in trend {
        flagged |= r.underflowed();
        table.push(vec![
            quantity.into(),
            output.map_or(Cell::Empty, Cell::from),
            r.delta.into(),
            r.estimate.mean.into(),
            r.estimate.half_width.into(),
            linearized.mean.into(),
            (r.estimate.mean - linearized.mean).abs().into(),
            slope.into(),
            r.zero_differences.into(),
            r.underflowed().into(),
        ]);
    }
    flagged
}

pub fn sweep(cli: &Cli, seed: u64) -> Run {
    let deltas = parse_reals(&cli.deltas, "delta").map_err(Failure::usage)?;
    let (p, x) = problem_and_point(cli, seed)?;
    let cfg = estimator(cli, seed)?.with_deltas(deltas)?;
    let fx = evaluate(p.as_ref(), &x)?;
    let mut table = Table::new(vec![
        "quantity",
        "output",
        "delta",
        "finite_delta",
        "half_width",
        "linearized",
        "abs_diff",
        "slope",
        "zero_differences",
        "underflow",
    ]);
    let mut flagged = false;
    match snc(p.as_ref(), &x, &cfg) {
        Ok(r) => flagged |= push_trend(&mut table, "snc", None, &r.estimate, &r.trend),
        Err(Error::InfiniteCondition { .. }) => flagged = true,
        Err(e) => return Err(e.into()),
    }
    for j in 0..fx.len() {
        let c = cfg.clone().with_stream(cfg.stream.substream(j as u64 + 1));
        match scc(p.as_ref(), &x, j, &c) {
            Ok(r) => flagged |= push_trend(&mut table, "scc", Some(j), &r.estimate, &r.trend),
            Err(Error::InfiniteCondition { .. }) => flagged = true,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome {
        table,
        flagged,
        summary: None,
    })
}

pub fn moments(cli: &Cli) -> Run {
    let ms = match &cli.m_range {
        Some(r) => parse_range(r).map_err(Failure::usage)?,
        None => (1..=10).collect(),
    };
    let ns = match &cli.n_range {
        Some(r) => parse_range(r).map_err(Failure::usage)?,
        None => vec![1],
    };
    let mut table = Table::new(vec![
        "m",
        "n",
        "k",
        "wallis",
        "log_cos_ratio",
        "e_norm",
        "e_norm_sq",
        "e_log_norm",
        "e_abs_cos",
        "e_cos_sq",
        "e_log_abs_cos",
        "snc_wnc_ratio",
        "snlp_gap_bits",
        "t1_ratio_lo",
        "t1_ratio_hi",
        "t1_gap_lo",
        "t1_gap_hi",
        "epsilon_m",
        "t2_ratio_lo",
        "t2_ratio_hi",
        "t2_gap_lo",
        "t2_gap_hi",
    ]);
    for &m in &ms {
        let t = MomentTable::<f64>::new(m)?;
        let (ratio, gap) = snc_wnc_exact::<f64>(m)?;
        let t2 = (m > 1).then(|| theorem2_bounds::<f64>(m)).transpose()?;
        for &n in &ns {
            let t1 = theorem1_bounds::<f64>(m, n)?;
            table.push(vec![
                m.into(),
                n.into(),
                t1.k.into(),
                t.wallis.into(),
                t.log_cos_ratio.into(),
                t.e_norm.into(),
                t.e_norm_sq.into(),
                t.e_log_norm.into(),
                t.e_abs_cos.into(),
                t.e_cos_sq.into(),
                t.e_log_abs_cos.into(),
                ratio.into(),
                gap.into(),
                t1.ratio.lo.into(),
                t1.ratio.hi.into(),
                t1.gap_bits.lo.into(),
                t1.gap_bits.hi.into(),
                t2.map(|b| b.epsilon_m).into(),
                t2.map(|b| b.ratio.lo).into(),
                t2.map(|b| b.ratio.hi).into(),
                t2.map(|b| b.gap_bits.lo).into(),
                t2.map(|b| b.gap_bits.hi).into(),
            ]);
        }
    }
    Ok(Outcome {
        table,
        flagged: false,
        summary: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|d| (*d, 3.0 * d * d))
            .collect();
        assert!((fitted_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fitted_slope(&[(1e-2, 1.0)]), None);
        assert_eq!(fitted_slope(&[(1e-2, 0.0), (1e-3, 0.0)]), None);
    }

    #[test]
    fn error_codes() {
        assert_eq!(
            Failure::from(Error::UnknownProblem("x".into())).code,
            EXIT_USAGE
        );
        let e = Error::NoConvergence {
            iterations: 1,
            estimate: 0.0,
            residual: 1.0,
            last_iterate: vec![],
        };
        assert_eq!(Failure::from(e).code, EXIT_NUMERICAL);
    }
}
