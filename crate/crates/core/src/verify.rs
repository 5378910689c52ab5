//! Executable checks of the bounds and identities, each producing a
//! [`BoundCheck`] with its measured slack.
//!
//! Monte Carlo values are compared after widening by `widening` half-widths;
//! exact oracle values use the fixed absolute tolerances given per check.
//! Every group draws from its own sub-stream of the master seed, keyed by the
//! group's position in [`CheckGroup::ALL`], so selecting a subset of groups
//! does not change the numbers of the others.

use std::f64::consts::{FRAC_PI_2, LN_2, LOG2_E, PI};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::closed_forms::{
    ball_moments, berry_esseen_sup, corollary2_lower_bound, cos_moments, entropy_term_expectation,
    expected_log_uniform_sum, lemma4_lower_bound, lemma5_rhs, log_cos_ratio, normal_tail_log_ratio,
    snc_wnc_exact, theorem1_bounds, theorem2_bounds, uniform_sum_cdf, wallis_integral,
    MAX_QUADRATURE_TERMS,
};
use crate::condition::{
    chunk_sizes, expected_abs_projection, scc_linearized, snc_linearized, spectral_norm,
};
use crate::error::{Error, Result};
use crate::linalg::{norm1, norm2, Matrix};
use crate::quadrature::Integrator;
use crate::rand_geom::{sample_unit_ball_into, sample_unit_cube_into, SampleStream};
use crate::special::normal_cdf;
use crate::stats::Moments;

/// Confidence level whose two-sided normal critical value is 1, so one
/// half-width is one standard error.
pub const ONE_SIGMA: f64 = 0.682_689_492_137_085_9;
pub const DEFAULT_WIDENING: f64 = 4.0;
/// Absolute tolerance of strict inequalities checked with quadrature oracles.
pub const ORACLE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
    /// `|computed - bound| <= tolerance`
    Within,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Within => "~=",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    pub instance: String,
    pub computed: f64,
    pub bound: f64,
    pub relation: Relation,
    /// Signed distance to the bound before widening; positive means satisfied.
    /// For [`Relation::Within`] it is `tolerance - |computed - bound|`.
    pub slack: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// A strict relation that only holds thanks to the widening.
    pub warning: bool,
}

impl BoundCheck {
    pub fn new(
        name: impl Into<String>,
        instance: impl Into<String>,
        computed: f64,
        relation: Relation,
        bound: f64,
        tolerance: f64,
    ) -> Self {
        let slack = match relation {
            Relation::Le | Relation::Lt => bound - computed,
            Relation::Ge | Relation::Gt => computed - bound,
            Relation::Within => tolerance - (computed - bound).abs(),
        };
        let passed = match relation {
            Relation::Le | Relation::Ge => slack + tolerance >= 0.0,
            Relation::Lt | Relation::Gt => slack + tolerance > 0.0,
            Relation::Within => slack >= 0.0,
        };
        let strict = matches!(relation, Relation::Lt | Relation::Gt);
        let passed = passed && slack.is_finite();
        Self {
            name: name.into(),
            instance: instance.into(),
            computed,
            bound,
            relation,
            slack,
            tolerance,
            passed,
            warning: strict && passed && slack <= 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySuiteReport {
    pub seed: u64,
    pub checks: Vec<BoundCheck>,
    pub passed: usize,
    pub failed: usize,
    pub warnings: usize,
}

impl VerifySuiteReport {
    pub fn new(seed: u64, checks: Vec<BoundCheck>) -> Self {
        let passed = checks.iter().filter(|c| c.passed).count();
        let warnings = checks.iter().filter(|c| c.warning).count();
        Self {
            seed,
            failed: checks.len() - passed,
            passed,
            warnings,
            checks,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    /// Smallest slack among checks with the given name.
    pub fn min_slack(&self, name: &str) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.name == name)
            .map(|c| c.slack)
            .min_by(f64::total_cmp)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckGroup {
    ClosedForms,
    BallSampling,
    Corollary1,
    Theorem1,
    Theorem2,
    Lemma5,
    Corollary2,
    BerryEsseen,
    Lemma6,
    EntropyLemmas,
}

impl CheckGroup {
    /// Declared order; also the sub-stream index of each group.
    pub const ALL: [CheckGroup; 10] = [
        CheckGroup::ClosedForms,
        CheckGroup::BallSampling,
        CheckGroup::Corollary1,
        CheckGroup::Theorem1,
        CheckGroup::Theorem2,
        CheckGroup::Lemma5,
        CheckGroup::Corollary2,
        CheckGroup::BerryEsseen,
        CheckGroup::Lemma6,
        CheckGroup::EntropyLemmas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckGroup::ClosedForms => "closed_forms",
            CheckGroup::BallSampling => "ball_sampling",
            CheckGroup::Corollary1 => "corollary1",
            CheckGroup::Theorem1 => "theorem1",
            CheckGroup::Theorem2 => "theorem2",
            CheckGroup::Lemma5 => "lemma5",
            CheckGroup::Corollary2 => "corollary2",
            CheckGroup::BerryEsseen => "berry_esseen",
            CheckGroup::Lemma6 => "lemma6",
            CheckGroup::EntropyLemmas => "entropy_lemmas",
        }
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|g| *g == self).expect("listed") as u64
    }
}

impl FromStr for CheckGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check group `{s}`")))
    }
}

impl fmt::Display for CheckGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sample size, confidence and widening shared by the Monte Carlo checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub samples: usize,
    pub confidence: f64,
    pub widening: f64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            samples: 100_000,
            confidence: ONE_SIGMA,
            widening: DEFAULT_WIDENING,
        }
    }
}

impl MonteCarlo {
    fn tol(&self, half_width: f64) -> f64 {
        self.widening * half_width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub mc: MonteCarlo,
    pub groups: Vec<CheckGroup>,
    pub closed_forms_m: Vec<usize>,
    pub sampling_m: Vec<usize>,
    pub corollary1_m: Vec<usize>,
    pub theorem1_m: Vec<usize>,
    pub theorem1_n: Vec<usize>,
    pub theorem1_trials: usize,
    pub theorem2_m: Vec<usize>,
    pub theorem2_trials: usize,
    pub lemma5_max_terms: usize,
    pub corollary2_quadrature_m: Vec<usize>,
    pub corollary2_mc_m: Vec<usize>,
    pub corollary2_mc_samples: usize,
    pub berry_esseen_m: Vec<usize>,
    pub berry_esseen_grid: usize,
    pub lemma6_m: Vec<usize>,
    pub lemma6_trials: usize,
    pub lemma4_m: Vec<usize>,
    pub lemma4_deltas: Vec<f64>,
    pub lemma7_deltas: Vec<f64>,
    pub lemma7_b: Vec<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            mc: MonteCarlo::default(),
            groups: CheckGroup::ALL.to_vec(),
            closed_forms_m: (1..=20).collect(),
            sampling_m: (3..=10).collect(),
            corollary1_m: (1..=10).collect(),
            theorem1_m: vec![1, 3, 7, 15, 30],
            theorem1_n: vec![1, 2, 5, 12, 30],
            theorem1_trials: 4,
            theorem2_m: (2..=50).collect(),
            theorem2_trials: 50,
            lemma5_max_terms: 4,
            corollary2_quadrature_m: (2..=15).collect(),
            corollary2_mc_m: vec![20, 50, 100, 200],
            corollary2_mc_samples: 1_000_000,
            berry_esseen_m: (1..=12).collect(),
            berry_esseen_grid: 10_000,
            lemma6_m: (2..=10).collect(),
            lemma6_trials: 50,
            lemma4_m: vec![1, 2, 3, 4, 6, 8, 12, 16],
            lemma4_deltas: vec![1e-4, 0.1, 0.5, 1.0, 2.0, 4.0],
            lemma7_deltas: (1..=20).map(|i| i as f64 / 10.0).collect(),
            lemma7_b: vec![1.5, 3.0, 6.0],
        }
    }
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<VerifySuiteReport> {
    if cfg.mc.samples < 2 {
        return Err(Error::Config(
            "Monte Carlo checks need at least 2 samples".into(),
        ));
    }
    let root = SampleStream::new(cfg.seed);
    let parts: Vec<Result<Vec<BoundCheck>>> = cfg
        .groups
        .par_iter()
        .map(|&g| run_group(cfg, g, &root.substream(g.index())))
        .collect();
    let mut checks = Vec::new();
    for part in parts {
        checks.extend(part?);
    }
    Ok(VerifySuiteReport::new(cfg.seed, checks))
}

fn run_group(
    cfg: &SuiteConfig,
    group: CheckGroup,
    stream: &SampleStream,
) -> Result<Vec<BoundCheck>> {
    let mc = &cfg.mc;
    match group {
        CheckGroup::ClosedForms => check_closed_forms(&cfg.closed_forms_m),
        CheckGroup::BallSampling => check_ball_sampling(&cfg.sampling_m, mc, stream),
        CheckGroup::Corollary1 => check_corollary1(&cfg.corollary1_m, mc, stream),
        CheckGroup::Theorem1 => check_theorem1(
            &cfg.theorem1_m,
            &cfg.theorem1_n,
            cfg.theorem1_trials,
            mc,
            stream,
        ),
        CheckGroup::Theorem2 => check_theorem2(&cfg.theorem2_m, cfg.theorem2_trials, mc, stream),
        CheckGroup::Lemma5 => check_lemma5(cfg.lemma5_max_terms),
        CheckGroup::Corollary2 => check_corollary2(
            &cfg.corollary2_quadrature_m,
            &cfg.corollary2_mc_m,
            MonteCarlo {
                samples: cfg.corollary2_mc_samples,
                ..*mc
            },
            stream,
        ),
        CheckGroup::BerryEsseen => check_berry_esseen(&cfg.berry_esseen_m, cfg.berry_esseen_grid),
        CheckGroup::Lemma6 => check_lemma6(&cfg.lemma6_m, cfg.lemma6_trials, mc, stream),
        CheckGroup::EntropyLemmas => check_entropy_lemmas(
            &cfg.lemma4_m,
            &cfg.lemma4_deltas,
            &cfg.lemma7_deltas,
            &cfg.lemma7_b,
        ),
    }
}

// ---------------------------------------------------------------------------
// Helpers

/// Chunked, order-stable accumulation of `K` sample means.
fn sample_moments<const K: usize, F>(
    stream: &SampleStream,
    samples: usize,
    draw: F,
) -> [Moments<f64>; K]
where
    F: Fn(&mut SampleStream) -> [f64; K] + Sync,
{
    let parts: Vec<[Moments<f64>; K]> = chunk_sizes(samples)
        .par_iter()
        .enumerate()
        .map(|(c, &len)| {
            let mut s = stream.substream(c as u64);
            let mut acc = [Moments::new(); K];
            for _ in 0..len {
                for (a, v) in acc.iter_mut().zip(draw(&mut s)) {
                    a.push(v);
                }
            }
            acc
        })
        .collect();
    let mut total = [Moments::new(); K];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
}

fn oracle() -> Integrator<f64> {
    Integrator {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 20_000,
    }
}

const MAX_REDRAWS: usize = 100;

/// Random `n × m` matrix and point from `[-1, 1]`, redrawn while `‖Ax‖ < 1e-12`.
pub fn random_linear_problem(
    stream: &mut SampleStream,
    n: usize,
    m: usize,
) -> Result<(Matrix<f64>, Vec<f64>, Vec<f64>)> {
    for _ in 0..MAX_REDRAWS {
        let a: Vec<f64> = (0..n * m).map(|_| stream.next_symmetric()).collect();
        let a = Matrix::from_row_major(n, m, a)?;
        let x: Vec<f64> = (0..m).map(|_| stream.next_symmetric()).collect();
        let fx = a.mul_vec(&x);
        if norm2(&fx) >= 1e-12 {
            return Ok((a, x, fx));
        }
    }
    Err(Error::Config(format!(
        "{MAX_REDRAWS} degenerate random problems in a row"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pattern {
    Dense,
    Sparse,
    Geometric,
    Normal,
}

impl Pattern {
    const ALL: [Pattern; 4] = [
        Pattern::Dense,
        Pattern::Sparse,
        Pattern::Geometric,
        Pattern::Normal,
    ];

    fn name(self) -> &'static str {
        match self {
            Pattern::Dense => "dense",
            Pattern::Sparse => "sparse",
            Pattern::Geometric => "geometric",
            Pattern::Normal => "normal",
        }
    }

    fn draw(self, stream: &mut SampleStream, m: usize) -> Vec<f64> {
        loop {
            let g: Vec<f64> = match self {
                Pattern::Dense => (0..m).map(|_| stream.next_symmetric()).collect(),
                Pattern::Normal => (0..m).map(|_| stream.next_normal()).collect(),
                Pattern::Geometric => (0..m)
                    .map(|i| {
                        let sign = if stream.next_uniform() < 0.5 {
                            -1.0
                        } else {
                            1.0
                        };
                        sign * 0.5f64.powi(i as i32)
                    })
                    .collect(),
                Pattern::Sparse => {
                    let keep = stream.next_range(1, m);
                    let mut g = vec![0.0; m];
                    for slot in g.iter_mut().take(keep) {
                        *slot = stream.next_symmetric();
                    }
                    // Fisher–Yates so the support is not always a prefix.
                    for i in (1..m).rev() {
                        g.swap(i, stream.next_range(0, i));
                    }
                    g
                }
            };
            if g.iter().any(|v| *v != 0.0) {
                return g;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Groups

/// Closed forms against direct quadrature of their defining integrals.
pub fn check_closed_forms(ms: &[usize]) -> Result<Vec<BoundCheck>> {
    let q = oracle();
    let mut out = Vec::new();
    for &m in ms {
        let inst = format!("m={m}");
        let mi = m as i32;
        let wallis = wallis_integral::<f64>(m);
        let quad_i = q.integrate(|t: f64| t.sin().powi(mi), 0.0, FRAC_PI_2).value;
        out.push(BoundCheck::new(
            "closed_forms.wallis",
            &inst,
            wallis,
            Relation::Within,
            quad_i,
            1e-12,
        ));
        if m >= 1 {
            let product = wallis * wallis_integral::<f64>(m - 1);
            out.push(BoundCheck::new(
                "closed_forms.wallis_product",
                &inst,
                product,
                Relation::Within,
                FRAC_PI_2 / m as f64,
                1e-13,
            ));
        }
        let quad_j = q
            .integrate(|t: f64| t.sin().powi(mi) * t.cos().ln(), 0.0, FRAC_PI_2)
            .value;
        out.push(BoundCheck::new(
            "closed_forms.log_cos_ratio",
            &inst,
            log_cos_ratio::<f64>(m),
            Relation::Within,
            quad_j / quad_i,
            1e-9,
        ));

        let (e_norm, e_norm_sq, e_log_norm) = ball_moments::<f64>(m)?;
        let mf = m as f64;
        let radial = |g: fn(f64) -> f64| {
            q.integrate(|r: f64| mf * r.powi(mi - 1) * g(r), 0.0, 1.0)
                .value
        };
        out.push(BoundCheck::new(
            "closed_forms.ball_norm",
            &inst,
            e_norm,
            Relation::Within,
            radial(|r| r),
            1e-12,
        ));
        out.push(BoundCheck::new(
            "closed_forms.ball_norm_sq",
            &inst,
            e_norm_sq,
            Relation::Within,
            radial(|r| r * r),
            1e-12,
        ));
        out.push(BoundCheck::new(
            "closed_forms.ball_log_norm",
            &inst,
            e_log_norm,
            Relation::Within,
            radial(f64::ln),
            1e-9,
        ));

        if m >= 3 {
            let (abs_cos, cos_sq, log_cos) = cos_moments::<f64>(m)?;
            let w = mi - 2;
            let breaks = [0.0, FRAC_PI_2, PI];
            let angular = |g: fn(f64) -> f64| {
                q.integrate_with_breaks(|t: f64| t.sin().powi(w) * g(t), &breaks)
                    .value
            };
            let z = angular(|_| 1.0);
            out.push(BoundCheck::new(
                "closed_forms.abs_cos",
                &inst,
                abs_cos,
                Relation::Within,
                angular(|t| t.cos().abs()) / z,
                1e-12,
            ));
            out.push(BoundCheck::new(
                "closed_forms.cos_sq",
                &inst,
                cos_sq,
                Relation::Within,
                angular(|t| t.cos().powi(2)) / z,
                1e-12,
            ));
            out.push(BoundCheck::new(
                "closed_forms.log_abs_cos",
                &inst,
                log_cos,
                Relation::Within,
                angular(|t| t.cos().abs().ln()) / z,
                1e-9,
            ));
        }

        let (ratio, _) = snc_wnc_exact::<f64>(m)?;
        out.push(BoundCheck::new(
            "closed_forms.ratio_wallis_form",
            &inst,
            ratio,
            Relation::Within,
            1.0 / ((mf + 1.0) * wallis),
            1e-13,
        ));
    }
    Ok(out)
}

/// Sample moments of the ball radius and of the angle to a fixed axis.
pub fn check_ball_sampling(
    ms: &[usize],
    mc: &MonteCarlo,
    stream: &SampleStream,
) -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();
    for &m in ms {
        let (e_norm, e_norm_sq, e_log_norm) = ball_moments::<f64>(m)?;
        let (abs_cos, cos_sq, log_cos) = cos_moments::<f64>(m)?;
        let acc = sample_moments(&stream.substream(m as u64), mc.samples, |s| {
            let mut u = vec![0.0; m];
            sample_unit_ball_into(s, &mut u);
            let r = norm2(&u);
            let c = u[0] / r;
            [r, r * r, r.ln(), c.abs(), c * c, c.abs().ln()]
        });
        let inst = format!("m={m} samples={}", mc.samples);
        let names = [
            ("lemma1.norm", e_norm),
            ("lemma1.norm_sq", e_norm_sq),
            ("lemma1.log_norm", e_log_norm),
            ("lemma2.abs_cos", abs_cos),
            ("lemma2.cos_sq", cos_sq),
            ("lemma2.log_abs_cos", log_cos),
        ];
        for ((name, exact), a) in names.into_iter().zip(&acc) {
            out.push(BoundCheck::new(
                name,
                &inst,
                a.mean(),
                Relation::Within,
                exact,
                mc.tol(a.half_width(mc.confidence)),
            ));
        }
    }
    Ok(out)
}

/// Exact SNC/WNC against Monte Carlo on random one-output linear problems,
/// and against the product of the radial and angular moments.
pub fn check_corollary1(
    ms: &[usize],
    mc: &MonteCarlo,
    stream: &SampleStream,
) -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();
    for &m in ms {
        let (ratio, gap) = snc_wnc_exact::<f64>(m)?;
        let mut s = stream.substream(m as u64);
        let (a, x, fx) = random_linear_problem(&mut s, 1, m)?;
        let wnc = norm2(&x) * spectral_norm(&a)? / norm2(&fx);
        let est = snc_linearized(
            norm2(&x),
            norm2(&fx),
            &a,
            mc.samples,
            &s.substream(0),
            mc.confidence,
        )?;
        let inst = format!("m={m} samples={}", mc.samples);
        out.push(BoundCheck::new(
            "corollary1.monte_carlo_ratio",
            &inst,
            est.mean / wnc,
            Relation::Within,
            ratio,
            mc.tol(est.half_width / wnc),
        ));
        out.push(BoundCheck::new(
            "corollary1.monte_carlo_gap",
            &inst,
            est.log_mean.unwrap_or(f64::NAN) - wnc.log2(),
            Relation::Within,
            gap,
            mc.tol(est.log_half_width.unwrap_or(f64::NAN)),
        ));

        let (e_norm, _, e_log_norm) = ball_moments::<f64>(m)?;
        let (e_abs_cos, e_log_cos) = match m {
            1 => (1.0, 0.0),
            // Uniform angle on the circle.
            2 => (2.0 / PI, -LN_2),
            _ => {
                let (c, _, l) = cos_moments::<f64>(m)?;
                (c, l)
            }
        };
        let inst = format!("m={m}");
        out.push(BoundCheck::new(
            "corollary1.moment_product",
            &inst,
            e_norm * e_abs_cos,
            Relation::Within,
            ratio,
            1e-12,
        ));
        out.push(BoundCheck::new(
            "corollary1.moment_gap",
            &inst,
            (e_log_norm + e_log_cos) * LOG2_E,
            Relation::Within,
            gap,
            1e-12,
        ));
    }
    Ok(out)
}

pub fn check_theorem1(
    ms: &[usize],
    ns: &[usize],
    trials: usize,
    mc: &MonteCarlo,
    stream: &SampleStream,
) -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();
    let mut exact_ms: Vec<usize> = ms.to_vec();
    exact_ms.sort_unstable();
    exact_ms.dedup();
    for &m in &exact_ms {
        let b = theorem1_bounds::<f64>(m, 1)?;
        let (ratio, gap) = snc_wnc_exact::<f64>(m)?;
        let inst = format!("m={m} n=1 exact");
        out.push(BoundCheck::new(
            "theorem1.exact_ratio_lower",
            &inst,
            ratio,
            Relation::Ge,
            b.ratio.lo,
            0.0,
        ));
        out.push(BoundCheck::new(
            "theorem1.exact_ratio_upper",
            &inst,
            ratio,
            Relation::Le,
            b.ratio.hi,
            0.0,
        ));
        out.push(BoundCheck::new(
            "theorem1.exact_gap_lower",
            &inst,
            gap,
            Relation::Ge,
            b.gap_bits.lo,
            0.0,
        ));
        out.push(BoundCheck::new(
            "theorem1.exact_gap_upper",
            &inst,
            gap,
            Relation::Le,
            b.gap_bits.hi,
            0.0,
        ));
    }
    let mut idx = 0u64;
    for &m in ms {
        for &n in ns {
            let b = theorem1_bounds::<f64>(m, n)?;
            for t in 0..trials {
                let mut s = stream.substream(idx);
                idx += 1;
                let (a, x, fx) = random_linear_problem(&mut s, n, m)?;
                let wnc = norm2(&x) * spectral_norm(&a)? / norm2(&fx);
                let est = snc_linearized(
                    norm2(&x),
                    norm2(&fx),
                    &a,
                    mc.samples,
                    &s.substream(0),
                    mc.confidence,
                )?;
                let ratio = est.mean / wnc;
                let tol = mc.tol(est.half_width / wnc);
                let gap = est.log_mean.unwrap_or(f64::NAN) - wnc.log2();
                let gap_tol = mc.tol(est.log_half_width.unwrap_or(f64::NAN));
                let inst = format!("m={m} n={n} trial={t}");
                out.push(BoundCheck::new(
                    "theorem1.ratio_lower",
                    &inst,
                    ratio,
                    Relation::Ge,
                    b.ratio.lo,
                    tol,
                ));
                out.push(BoundCheck::new(
                    "theorem1.ratio_upper",
                    &inst,
                    ratio,
                    Relation::Le,
                    b.ratio.hi,
                    tol,
                ));
                out.push(BoundCheck::new(
                    "theorem1.gap_lower",
                    &inst,
                    gap,
                    Relation::Ge,
                    b.gap_bits.lo,
                    gap_tol,
                ));
                out.push(BoundCheck::new(
                    "theorem1.gap_upper",
                    &inst,
                    gap,
                    Relation::Le,
                    b.gap_bits.hi,
                    gap_tol,
                ));
            }
        }
    }
    Ok(out)
}

fn push_theorem2_bounds(
    out: &mut Vec<BoundCheck>,
    m: usize,
    inst: &str,
    g: &[f64],
    mc: &MonteCarlo,
    stream: &SampleStream,
) -> Result<crate::condition::Estimate<f64>> {
    let b = theorem2_bounds::<f64>(m)?;
    // With f_j = ‖g‖₁ the estimate is SCC/WCC and its log mean is the gap.
    let est = scc_linearized(g, norm1(g), mc.samples, stream, mc.confidence)?;
    let tol = mc.tol(est.half_width);
    let gap = est.log_mean.unwrap_or(f64::NAN);
    let gap_tol = mc.tol(est.log_half_width.unwrap_or(f64::NAN));
    out.push(BoundCheck::new(
        "theorem2.ratio_lower",
        inst,
        est.mean,
        Relation::Gt,
        b.ratio.lo,
        tol,
    ));
    out.push(BoundCheck::new(
        "theorem2.ratio_upper",
        inst,
        est.mean,
        Relation::Le,
        b.ratio.hi,
        tol,
    ));
    out.push(BoundCheck::new(
        "theorem2.gap_lower",
        inst,
        gap,
        Relation::Gt,
        b.gap_bits.lo,
        gap_tol,
    ));
    out.push(BoundCheck::new(
        "theorem2.gap_upper",
        inst,
        gap,
        Relation::Le,
        b.gap_bits.hi,
        gap_tol,
    ));
    Ok(est)
}

pub fn check_theorem2(
    ms: &[usize],
    trials: usize,
    mc: &MonteCarlo,
    stream: &SampleStream,
) -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();
    for &m in ms {
        if m == 1 {
            out.extend(check_theorem2_m1(mc, &stream.substream(0))?);
            continue;
        }
        let ms = stream.substream(m as u64);
        for t in 0..trials {
            let pattern = Pattern::ALL[t % Pattern::ALL.len()];
            let mut s = ms.substream(t as u64);
            let g = pattern.draw(&mut s, m);
            let inst = format!("m={m} pattern={} trial={t}", pattern.name());
            push_theorem2_bounds(&mut out, m, &inst, &g, mc, &s.substream(0))?;
        }

        let mut one_hot = vec![0.0; m];
        one_hot[m - 1] = 1.0;
        let inst = format!("m={m} pattern=one_hot");
        let est = push_theorem2_bounds(
            &mut out,
            m,
            &inst,
            &one_hot,
            mc,
            &ms.substream(trials as u64),
        )?;
        let exact = expected_abs_projection(&one_hot).expect("single nonzero");
        out.push(BoundCheck::new(
            "theorem2.one_hot_exact",
            &inst,
            exact,
            Relation::Within,
            0.5,
            2.0 * est.half_width,
        ));
        out.push(BoundCheck::new(
            "theorem2.one_hot_monte_carlo",
            &inst,
            est.mean,
            Relation::Within,
            0.5,
            mc.tol(est.half_width),
        ));

        let ones = vec![1.0; m];
        let inst = format!("m={m} pattern=all_ones");
        let est = push_theorem2_bounds(
            &mut out,
            m,
            &inst,
            &ones,
            mc,
            &ms.substream(trials as u64 + 1),
        )?;
        if m == 2 {
            let exact = expected_abs_projection(&ones).expect("two nonzeros") / 2.0;
            out.push(BoundCheck::new(
                "theorem2.all_ones_exact",
                &inst,
                exact,
                Relation::Within,
                1.0 / 3.0,
                1e-15,
            ));
            out.push(BoundCheck::new(
                "theorem2.all_ones_monte_carlo",
                &inst,
                est.mean,
                Relation::Within,
                exact,
                mc.tol(est.half_width),
            ));
        }
    }
    Ok(out)
}

/// For `m = 1`, `SCC/WCC = E|u| = 1/2` and the gap is `E log₂|u| = -log₂ e`.
fn check_theorem2_m1(mc: &MonteCarlo, stream: &SampleStream) -> Result<Vec<BoundCheck>> {
    let inst = "m=1";
    let est = scc_linearized(&[1.0], 1.0, mc.samples, stream, mc.confidence)?;
    let exact_gap = expected_log_uniform_sum::<f64>(1)? * LOG2_E;
    Ok(vec![
        BoundCheck::new(
            "theorem2.m1_ratio",
            inst,
            est.mean,
            Relation::Within,
            0.5,
            mc.tol(est.half_width),
        ),
        BoundCheck::new(
            "theorem2.m1_gap_oracle",
            inst,
            exact_gap,
            Relation::Within,
            -LOG2_E,
            1e-9,
        ),
        BoundCheck::new(
            "theorem2.m1_gap",
            inst,
            est.log_mean.unwrap_or(f64::NAN),
            Relation::Within,
            -LOG2_E,
            mc.tol(est.log_half_width.unwrap_or(f64::NAN)),
        ),
    ])
}

pub fn check_lemma5(max_terms: usize) -> Result<Vec<BoundCheck>> {
    if max_terms == 0 || max_terms > MAX_QUADRATURE_TERMS {
        return Err(Error::Config(format!(
            "lemma5 terms must be in 1..={MAX_QUADRATURE_TERMS}"
        )));
    }
    let mut out = Vec::new();
    for m in 0..max_terms {
        let inst = format!("m={m}");
        let lhs = expected_log_uniform_sum::<f64>(m + 1)?;
        let rhs = lemma5_rhs::<f64>(m)?;
        out.push(BoundCheck::new(
            "lemma5.identity",
            &inst,
            lhs,
            Relation::Within,
            rhs,
            1e-6,
        ));
        match m {
            0 => {
                out.push(BoundCheck::new(
                    "lemma5.closed_lhs",
                    &inst,
                    lhs,
                    Relation::Within,
                    -1.0,
                    1e-9,
                ));
                out.push(BoundCheck::new(
                    "lemma5.closed_rhs",
                    &inst,
                    rhs,
                    Relation::Within,
                    -1.0,
                    0.0,
                ));
            }
            1 => out.push(BoundCheck::new(
                "lemma5.closed_lhs",
                &inst,
                lhs,
                Relation::Within,
                LN_2 - 1.5,
                1e-9,
            )),
            _ => {}
        }
    }
    Ok(out)
}

pub fn check_corollary2(
    quadrature_ms: &[usize],
    mc_ms: &[usize],
    mc: MonteCarlo,
    stream: &SampleStream,
) -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();
    for &m in quadrature_ms {
        let lhs = expected_log_uniform_sum::<f64>(m + 1)?;
        let rhs = corollary2_lower_bound::<f64>(m)?;
        out.push(BoundCheck::new(
            "corollary2.quadrature",
            format!("m={m}"),
            lhs,
            Relation::Gt,
            rhs,
            ORACLE_TOL,
        ));
    }
    for &m in mc_ms {
        let [acc] = sample_moments(&stream.substream(m as u64), mc.samples, |s| {
            let sum: f64 = (0..=m).map(|_| s.next_symmetric()).sum();
            [sum.abs().ln()]
        });
        let rhs = corollary2_lower_bound::<f64>(m)?;
        out.push(BoundCheck::new(
            "corollary2.monte_carlo",
            format!("m={m} samples={}", mc.samples),
            acc.mean(),
            Relation::Gt,
            rhs,
            mc.tol(acc.half_width(mc.confidence)),
        ));
    }
    Ok(out)
}

pub fn check_berry_esseen(ms: &[usize], grid: usize) -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();
    for &m in ms {
        let sup = berry_esseen_sup::<f64>(m, grid)?;
        let inst = format!("m={m} grid={grid} argmax={:.6}", sup.argmax);
        out.push(BoundCheck::new(
            "berry_esseen.sup",
            inst,
            sup.sup,
            Relation::Le,
            1.0 / (m as f64).sqrt(),
            0.0,
        ));
        let center = (uniform_sum_cdf::<f64>(m, 0.0)? - normal_cdf(0.0)).abs();
        out.push(BoundCheck::new(
            "berry_esseen.center",
            format!("m={m}"),
            center,
            Relation::Within,
            0.0,
            1e-15,
        ));
    }
    Ok(out)
}

/// `P(|S_m| > c·√(m/3))` for the all-ones direction.
fn all_ones_tail(m: usize, c: f64) -> Result<f64> {
    Ok(2.0 * (1.0 - uniform_sum_cdf::<f64>(m, c)?))
}

const LEMMA6_THRESHOLDS: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

pub fn check_lemma6(
    ms: &[usize],
    trials: usize,
    mc: &MonteCarlo,
    stream: &SampleStream,
) -> Result<Vec<BoundCheck>> {
    if ms.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();

    // a = m·e_1 at m = 2, b = 1: 1/2 against 1/4.
    let one_hot = all_ones_tail(1, 0.5 / (1.0f64 / 3.0).sqrt())?;
    let ones = all_ones_tail(2, 1.0 / (2.0f64 / 3.0).sqrt())?;
    out.push(BoundCheck::new(
        "lemma6.example_one_hot",
        "m=2 b=1",
        one_hot,
        Relation::Within,
        0.5,
        1e-14,
    ));
    out.push(BoundCheck::new(
        "lemma6.example_all_ones",
        "m=2 b=1",
        ones,
        Relation::Within,
        0.25,
        1e-14,
    ));
    out.push(BoundCheck::new(
        "lemma6.example",
        "m=2 b=1",
        one_hot,
        Relation::Ge,
        ones,
        0.0,
    ));

    let z = crate::special::two_sided_z(mc.confidence);
    let n = mc.samples as f64;
    for t in 0..=trials {
        let m = ms[t % ms.len()];
        let mut s = stream.substream(t as u64);
        // The last trial is the all-ones direction itself.
        let (a, label) = if t == trials {
            (vec![1.0; m], "all_ones".to_string())
        } else {
            let pattern = Pattern::ALL[t % Pattern::ALL.len()];
            let mut a = pattern.draw(&mut s, m);
            let scale = m as f64 / norm1(&a);
            a.iter_mut().for_each(|v| *v *= scale);
            (a, format!("pattern={} trial={t}", pattern.name()))
        };
        let scale = (m as f64 / 3.0).sqrt();
        let acc: [Moments<f64>; 5] = sample_moments(&s.substream(0), mc.samples, |s| {
            let mut u = vec![0.0; m];
            sample_unit_cube_into(s, &mut u);
            let y = crate::linalg::dot(&a, &u).abs();
            let mut row = [0.0; 5];
            for (slot, c) in row.iter_mut().zip(LEMMA6_THRESHOLDS) {
                *slot = if y > c * scale { 1.0 } else { 0.0 };
            }
            row[4] = y.ln();
            row
        });
        for (c, p) in LEMMA6_THRESHOLDS.iter().zip(&acc) {
            let exact = all_ones_tail(m, *c)?;
            let phat = p.mean();
            // Binomial standard error, floored at one count so an empty tail
            // still carries a width.
            let hw = z * (phat * (1.0 - phat) / n).sqrt().max(1.0 / n);
            let inst = format!("m={m} b={:.6} {label}", c * scale);
            let relation = if t == trials {
                Relation::Within
            } else {
                Relation::Ge
            };
            out.push(BoundCheck::new(
                "lemma6.tail_probability",
                inst,
                phat,
                relation,
                exact,
                mc.tol(hw),
            ));
        }
        if m <= MAX_QUADRATURE_TERMS {
            let exact = expected_log_uniform_sum::<f64>(m)?;
            let relation = if t == trials {
                Relation::Within
            } else {
                Relation::Ge
            };
            out.push(BoundCheck::new(
                "lemma6.log_moment",
                format!("m={m} {label}"),
                acc[4].mean(),
                relation,
                exact,
                mc.tol(acc[4].half_width(mc.confidence)),
            ));
        }
    }
    Ok(out)
}

pub fn check_entropy_lemmas(
    lemma4_m: &[usize],
    lemma4_deltas: &[f64],
    lemma7_deltas: &[f64],
    lemma7_b: &[f64],
) -> Result<Vec<BoundCheck>> {
    let mut grid4 = Vec::new();
    for &m in lemma4_m {
        let cap = (3.0 * m as f64).sqrt();
        for &d in lemma4_deltas.iter().filter(|d| **d <= cap) {
            grid4.push((m, d));
        }
        grid4.push((m, cap));
    }
    let mut out: Vec<BoundCheck> = grid4
        .par_iter()
        .map(|&(m, d)| -> Result<BoundCheck> {
            let lhs = entropy_term_expectation::<f64>(m, d)?;
            Ok(BoundCheck::new(
                "lemma4.entropy_term",
                format!("m={m} delta={d}"),
                lhs,
                Relation::Gt,
                lemma4_lower_bound(m, d),
                ORACLE_TOL,
            ))
        })
        .collect::<Result<_>>()?;
    for &b in lemma7_b {
        for &d in lemma7_deltas {
            out.push(BoundCheck::new(
                "lemma7.normal_tail",
                format!("delta={d} b={b}"),
                normal_tail_log_ratio::<f64>(d, b)?,
                Relation::Gt,
                0.0,
                ORACLE_TOL,
            ));
        }
    }
    Ok(out)
}
