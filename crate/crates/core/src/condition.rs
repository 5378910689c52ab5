//! The six condition quantities at a point.
//!
//! Worst-case values (`wnc`, `wcc`) come from the Jacobian directly. The
//! stochastic values (`snc`, `scc`) are Monte Carlo means of the amplification
//! over the perturbation region, with normal-approximation half-widths; the
//! `*lp` variants are the means of its base-2 logarithm. Exact values are
//! attached where they are known in closed form: `snc` for scalar outputs and
//! `scc` when at most three coordinates are sensitive.
//!
//! Sampling is split into fixed-size chunks, each drawn from its own
//! sub-stream and reduced in chunk order, so results do not depend on the
//! number of worker threads.

use rayon::prelude::*;

use crate::closed_forms::snc_wnc_exact;
use crate::error::{Error, Result};
use crate::linalg::{norm1, norm2, Matrix};
use crate::problems::{evaluate, jacobian, zero_outputs, Jacobian, Problem};
use crate::rand_geom::{sample_unit_ball_into, sample_unit_cube_into, SampleStream};
use crate::scalar::Real;
use crate::stats::Moments;

pub const DEFAULT_CONFIDENCE: f64 = 0.99;
pub const MIN_SAMPLES: usize = 100;
/// Samples per chunk; each chunk owns one sub-stream.
pub const CHUNK_SIZE: usize = 4096;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 10_000;
const POWER_START_SEED: u64 = 0x5EED_0F5E_ED0F_5EED;
/// Consecutive zero-norm draws tolerated before giving up on a log estimate.
const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub enum Mode<T> {
    /// Sample the first-order model `Gᵀu` (the `δ → 0` limit).
    Linearized,
    /// Also evaluate `f` on the actual perturbation regions for each `δ`,
    /// which must be strictly decreasing.
    FiniteDelta(Vec<T>),
}

#[derive(Debug, Clone)]
pub struct EstimatorConfig<T> {
    pub samples: usize,
    pub stream: SampleStream,
    pub mode: Mode<T>,
    pub confidence: f64,
}

impl<T: Real> EstimatorConfig<T> {
    pub fn new(samples: usize, stream: SampleStream) -> Result<Self> {
        let cfg = Self {
            samples,
            stream,
            mode: Mode::Linearized,
            confidence: DEFAULT_CONFIDENCE,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_deltas(mut self, deltas: Vec<T>) -> Result<Self> {
        self.mode = Mode::FiniteDelta(deltas);
        self.validate()?;
        Ok(self)
    }

    pub fn with_confidence(mut self, confidence: f64) -> Result<Self> {
        self.confidence = confidence;
        self.validate()?;
        Ok(self)
    }

    pub fn with_stream(mut self, stream: SampleStream) -> Self {
        self.stream = stream;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::Config(format!(
                "samples = {} is below the minimum {MIN_SAMPLES}",
                self.samples
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Config(format!(
                "confidence {} outside (0, 1)",
                self.confidence
            )));
        }
        if let Mode::FiniteDelta(deltas) = &self.mode {
            if deltas.is_empty() {
                return Err(Error::Config(
                    "finite-delta mode needs at least one delta".into(),
                ));
            }
            if deltas.iter().any(|d| !(*d > T::zero()) || !d.is_finite()) {
                return Err(Error::Config("deltas must be positive and finite".into()));
            }
            if deltas.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::Config("deltas must be strictly decreasing".into()));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Worst case

/// Largest singular value `σ₁`.
///
/// Works on the smaller Gram matrix; 1×1 and 2×2 Gram matrices use closed
/// forms, larger ones power iteration from a fixed pseudo-random start.
pub fn spectral_norm<T: Real>(a: &Matrix<T>) -> Result<T> {
    if !a.is_finite() {
        return Err(Error::NonFinite {
            context: "spectral_norm input".into(),
        });
    }
    let scale = a
        .as_slice()
        .iter()
        .fold(T::zero(), |acc, v| acc.max(v.abs()));
    if scale == T::zero() {
        return Ok(T::zero());
    }
    let g = a.scaled(scale.recip()).small_gram();
    let k = g.rows();
    let lambda = match k {
        1 => g[(0, 0)],
        2 => {
            let (p, q, r) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
            let half = T::lit(0.5);
            (p + r) * half + ((p - r) * half).hypot(q)
        }
        _ => power_iteration(&g)?,
    };
    Ok(lambda.max(T::zero()).sqrt() * scale)
}

fn power_iteration<T: Real>(g: &Matrix<T>) -> Result<T> {
    let k = g.rows();
    let mut stream = SampleStream::new(POWER_START_SEED);
    let mut v: Vec<T> = (0..k).map(|_| T::lit(stream.next_normal())).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![T::zero(); k];
    let mut lambda = T::zero();
    let tol = T::lit(POWER_TOL);
    let mut residual = T::infinity();
    for _ in 0..POWER_MAX_ITER {
        g.mul_vec_into(&v, &mut w);
        let next = crate::linalg::dot(&v, &w);
        residual = w
            .iter()
            .zip(&v)
            .map(|(&wi, &vi)| (wi - next * vi) * (wi - next * vi))
            .sum::<T>()
            .sqrt();
        let nw = norm2(&w);
        if nw == T::zero() {
            return Ok(T::zero());
        }
        let converged = (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if converged {
            return Ok(lambda);
        }
        for (vi, &wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    Err(Error::NoConvergence {
        iterations: POWER_MAX_ITER,
        estimate: lambda.to_f64_lossy(),
        residual: residual.to_f64_lossy(),
        last_iterate: v.iter().map(|x| x.to_f64_lossy()).collect(),
    })
}

/// `‖x‖ σ₁(G) / ‖f(x)‖` from precomputed parts.
pub fn wnc_from_parts<T: Real>(x: &[T], fx: &[T], jac: &Matrix<T>) -> Result<T> {
    let nf = norm2(fx);
    if nf == T::zero() {
        return Err(Error::InfiniteCondition { output: None });
    }
    Ok(norm2(x) * spectral_norm(jac)? / nf)
}

pub fn wnc<T: Real>(p: &dyn Problem<T>, x: &[T]) -> Result<T> {
    let fx = evaluate(p, x)?;
    let jac = jacobian(p, x)?;
    wnc_from_parts(x, &fx, &jac.matrix)
}

/// `g_i = x_i ∂f_j/∂x_i`.
pub fn sensitivity<T: Real>(x: &[T], jac: &Jacobian<T>, j: usize) -> Vec<T> {
    x.iter()
        .zip(jac.gradient(j))
        .map(|(&xi, &d)| xi * d)
        .collect()
}

/// `‖g‖₁ / |f_j|`.
pub fn wcc_from_sensitivity<T: Real>(g: &[T], fj: T, j: usize) -> Result<T> {
    if fj == T::zero() {
        return Err(Error::InfiniteCondition { output: Some(j) });
    }
    Ok(norm1(g) / fj.abs())
}

pub fn wcc<T: Real>(p: &dyn Problem<T>, x: &[T], j: usize) -> Result<T> {
    let fx = evaluate(p, x)?;
    check_output(p, j)?;
    let jac = jacobian(p, x)?;
    wcc_from_sensitivity(&sensitivity(x, &jac, j), fx[j], j)
}

fn check_output<T: Real>(p: &dyn Problem<T>, j: usize) -> Result<()> {
    if j >= p.output_dim() {
        return Err(Error::Dimension {
            expected: p.output_dim(),
            got: j,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sampling machinery

/// Mean of a sampled amplification and of its base-2 logarithm.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T> {
    pub samples: u64,
    pub mean: T,
    pub half_width: T,
    /// `None` when the amplification is identically zero.
    pub log_mean: Option<T>,
    pub log_half_width: Option<T>,
    pub log_skewness: Option<T>,
}

impl<T: Real> Estimate<T> {
    fn from_moments(value: &Moments<T>, log: &Moments<T>, confidence: f64) -> Self {
        let has_log = log.count() > 0;
        Self {
            samples: value.count(),
            mean: value.mean(),
            half_width: value.half_width(confidence),
            log_mean: has_log.then(|| log.mean()),
            log_half_width: has_log.then(|| log.half_width(confidence)),
            log_skewness: has_log.then(|| log.skewness()),
        }
    }

    fn zero(samples: u64) -> Self {
        Self {
            samples,
            mean: T::zero(),
            half_width: T::zero(),
            log_mean: None,
            log_half_width: None,
            log_skewness: None,
        }
    }
}

/// One row of a finite-`δ` trend.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendRow<T> {
    pub delta: T,
    pub estimate: Estimate<T>,
    /// Draws where `f(x') = f(x)` exactly (the perturbation underflowed).
    pub zero_differences: u64,
}

impl<T: Real> TrendRow<T> {
    pub fn underflowed(&self) -> bool {
        self.zero_differences > 0
    }
}

struct Accum<T> {
    value: Moments<T>,
    log: Moments<T>,
    zeros: u64,
}

impl<T: Real> Default for Accum<T> {
    fn default() -> Self {
        Self {
            value: Moments::new(),
            log: Moments::new(),
            zeros: 0,
        }
    }
}

pub(crate) fn chunk_sizes(samples: usize) -> Vec<usize> {
    let full = samples / CHUNK_SIZE;
    let mut v = vec![CHUNK_SIZE; full];
    if samples % CHUNK_SIZE != 0 {
        v.push(samples % CHUNK_SIZE);
    }
    v
}

/// Runs `draw` over all chunks in parallel and merges in chunk order.
/// `draw(stream, len)` returns the accumulators for one chunk.
fn run_chunks<T, F>(stream: &SampleStream, samples: usize, draw: F) -> Result<Accum<T>>
where
    T: Real,
    F: Fn(&mut SampleStream, usize) -> Result<Accum<T>> + Sync,
{
    let sizes = chunk_sizes(samples);
    let parts: Vec<Result<Accum<T>>> = sizes
        .par_iter()
        .enumerate()
        .map(|(c, &len)| draw(&mut stream.substream(c as u64), len))
        .collect();
    let mut total = Accum::default();
    for part in parts {
        let part = part?;
        total.value.merge(&part.value);
        total.log.merge(&part.log);
        total.zeros += part.zeros;
    }
    Ok(total)
}

fn push_positive<T: Real>(acc: &mut Accum<T>, r: T) {
    acc.value.push(r);
    acc.log.push(r.log2());
}

fn rejection_error() -> Error {
    Error::NonFinite {
        context: format!("{MAX_REJECTIONS} consecutive zero-amplification draws"),
    }
}

// ---------------------------------------------------------------------------
// Stochastic norm-wise

#[derive(Debug, Clone, PartialEq)]
pub struct SncResult<T> {
    pub wnc: T,
    /// Linearized Monte Carlo estimate of SNC (and SNLP in `log_mean`).
    pub estimate: Estimate<T>,
    /// `wnc · SNC/WNC(m)` and `log₂ wnc + gap(m)`, for scalar outputs.
    pub exact: Option<T>,
    pub exact_log: Option<T>,
    /// Finite-`δ` rows in [`Mode::FiniteDelta`], empty otherwise.
    pub trend: Vec<TrendRow<T>>,
}

/// Linearized SNC for a fixed Jacobian: mean of `‖x‖‖Gᵀu‖/‖f(x)‖` over `u`
/// uniform in the unit ball.
pub fn snc_linearized<T: Real>(
    x_norm: T,
    f_norm: T,
    jac: &Matrix<T>,
    samples: usize,
    stream: &SampleStream,
    confidence: f64,
) -> Result<Estimate<T>> {
    if f_norm == T::zero() {
        return Err(Error::InfiniteCondition { output: None });
    }
    let scale = x_norm / f_norm;
    if scale == T::zero() || jac.as_slice().iter().all(|v| *v == T::zero()) {
        return Ok(Estimate::zero(samples as u64));
    }
    let (n, m) = (jac.rows(), jac.cols());
    let acc = run_chunks(stream, samples, |s, len| {
        let mut acc = Accum::default();
        let mut u = vec![T::zero(); m];
        let mut y = vec![T::zero(); n];
        for _ in 0..len {
            let mut tries = 0;
            loop {
                sample_unit_ball_into(s, &mut u);
                jac.mul_vec_into(&u, &mut y);
                let r = scale * norm2(&y);
                if r > T::zero() {
                    push_positive(&mut acc, r);
                    break;
                }
                tries += 1;
                if tries >= MAX_REJECTIONS {
                    return Err(rejection_error());
                }
            }
        }
        Ok(acc)
    })?;
    Ok(Estimate::from_moments(&acc.value, &acc.log, confidence))
}

fn snc_trend<T: Real>(
    p: &dyn Problem<T>,
    x: &[T],
    fx: &[T],
    deltas: &[T],
    samples: usize,
    stream: &SampleStream,
    confidence: f64,
) -> Result<Vec<TrendRow<T>>> {
    let (m, n) = (x.len(), fx.len());
    let x_norm = norm2(x);
    let f_norm = norm2(fx);
    deltas
        .iter()
        .map(|&delta| {
            let radius = delta * x_norm;
            // Common random numbers: every δ replays the same stream.
            let acc = run_chunks(stream, samples, |s, len| {
                let mut acc = Accum::default();
                let mut u = vec![T::zero(); m];
                let mut xp = vec![T::zero(); m];
                let mut fp = vec![T::zero(); n];
                for _ in 0..len {
                    sample_unit_ball_into(s, &mut u);
                    for ((o, &xi), &ui) in xp.iter_mut().zip(x).zip(&u) {
                        *o = xi + radius * ui;
                    }
                    p.eval_into(&xp, &mut fp);
                    fp.iter_mut().zip(fx).for_each(|(a, &b)| *a -= b);
                    let r = norm2(&fp) / (delta * f_norm);
                    record_difference(&mut acc, r, p.name())?;
                }
                Ok(acc)
            })?;
            Ok(TrendRow {
                delta,
                estimate: Estimate::from_moments(&acc.value, &acc.log, confidence),
                zero_differences: acc.zeros,
            })
        })
        .collect()
}

fn record_difference<T: Real>(acc: &mut Accum<T>, r: T, name: &str) -> Result<()> {
    if !r.is_finite() {
        return Err(Error::NonFinite {
            context: format!("{name} on the perturbation region"),
        });
    }
    if r > T::zero() {
        push_positive(acc, r);
    } else {
        acc.value.push(T::zero());
        acc.zeros += 1;
    }
    Ok(())
}

pub fn snc<T: Real>(p: &dyn Problem<T>, x: &[T], cfg: &EstimatorConfig<T>) -> Result<SncResult<T>> {
    cfg.validate()?;
    let fx = evaluate(p, x)?;
    let jac = jacobian(p, x)?;
    snc_with_parts(p, x, &fx, &jac.matrix, cfg, &cfg.stream)
}

fn snc_with_parts<T: Real>(
    p: &dyn Problem<T>,
    x: &[T],
    fx: &[T],
    jac: &Matrix<T>,
    cfg: &EstimatorConfig<T>,
    stream: &SampleStream,
) -> Result<SncResult<T>> {
    let wnc = wnc_from_parts(x, fx, jac)?;
    let estimate = snc_linearized(
        norm2(x),
        norm2(fx),
        jac,
        cfg.samples,
        stream,
        cfg.confidence,
    )?;
    let (exact, exact_log) = if fx.len() == 1 {
        let (ratio, gap) = snc_wnc_exact::<T>(x.len())?;
        let log = (wnc > T::zero()).then(|| wnc.log2() + gap);
        (Some(wnc * ratio), log)
    } else {
        (None, None)
    };
    let trend = match &cfg.mode {
        Mode::Linearized => Vec::new(),
        Mode::FiniteDelta(deltas) => {
            snc_trend(p, x, fx, deltas, cfg.samples, stream, cfg.confidence)?
        }
    };
    Ok(SncResult {
        wnc,
        estimate,
        exact,
        exact_log,
        trend,
    })
}

// ---------------------------------------------------------------------------
// Stochastic componentwise

#[derive(Debug, Clone, PartialEq)]
pub struct SccResult<T> {
    pub output: usize,
    pub wcc: T,
    /// Linearized Monte Carlo estimate of SCC_j (and SCLP_j in `log_mean`).
    pub estimate: Estimate<T>,
    /// `E|uᵀg| / |f_j|` in closed form when at most three `g_i` are nonzero.
    pub exact: Option<T>,
    pub trend: Vec<TrendRow<T>>,
}

/// `E|uᵀg|` for `u` uniform in `[-1, 1]^m`, when `g` has at most three
/// nonzero entries.
///
/// With `a₁ ≥ a₂ ≥ a₃ > 0` the sorted magnitudes:
/// one term `a₁/2`; two terms `a₁/2 + a₂²/(6a₁)`; three terms
/// `(a₁² + (a₂² + a₃²)/3)/(2a₁) − L₊⁴/(48 a₁a₂a₃)` with `L = a₂ + a₃ − a₁`.
pub fn expected_abs_projection<T: Real>(g: &[T]) -> Option<T> {
    let mut a: Vec<T> = g
        .iter()
        .map(|v| v.abs())
        .filter(|v| *v > T::zero())
        .collect();
    if a.len() > 3 {
        return None;
    }
    a.sort_by(|p, q| q.partial_cmp(p).expect("finite sensitivities"));
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    Some(match a[..] {
        [] => T::zero(),
        [a1] => a1 / two,
        [a1, a2] => a1 / two + a2 * a2 / (T::lit(6.0) * a1),
        [a1, a2, a3] => {
            let base = (a1 * a1 + (a2 * a2 + a3 * a3) / three) / (two * a1);
            let l = a2 + a3 - a1;
            if l > T::zero() {
                base - l.powi(4) / (T::lit(48.0) * a1 * a2 * a3)
            } else {
                base
            }
        }
        _ => unreachable!(),
    })
}

/// Linearized SCC from a sensitivity vector: mean of `|uᵀg|/|f_j|` over `u`
/// uniform in `[-1, 1]^m`.
pub fn scc_linearized<T: Real>(
    g: &[T],
    fj: T,
    samples: usize,
    stream: &SampleStream,
    confidence: f64,
) -> Result<Estimate<T>> {
    if fj == T::zero() {
        return Err(Error::InfiniteCondition { output: None });
    }
    let inv = fj.abs().recip();
    if g.iter().all(|v| *v == T::zero()) {
        return Ok(Estimate::zero(samples as u64));
    }
    let acc = run_chunks(stream, samples, |s, len| {
        let mut acc = Accum::default();
        let mut u = vec![T::zero(); g.len()];
        for _ in 0..len {
            let mut tries = 0;
            loop {
                sample_unit_cube_into(s, &mut u);
                let r = crate::linalg::dot(&u, g).abs() * inv;
                if r > T::zero() {
                    push_positive(&mut acc, r);
                    break;
                }
                tries += 1;
                if tries >= MAX_REJECTIONS {
                    return Err(rejection_error());
                }
            }
        }
        Ok(acc)
    })?;
    Ok(Estimate::from_moments(&acc.value, &acc.log, confidence))
}

fn scc_trend<T: Real>(
    p: &dyn Problem<T>,
    x: &[T],
    fx: &[T],
    j: usize,
    deltas: &[T],
    samples: usize,
    stream: &SampleStream,
    confidence: f64,
) -> Result<Vec<TrendRow<T>>> {
    let m = x.len();
    let fj = fx[j];
    deltas
        .iter()
        .map(|&delta| {
            let acc = run_chunks(stream, samples, |s, len| {
                let mut acc = Accum::default();
                let mut u = vec![T::zero(); m];
                let mut xp = vec![T::zero(); m];
                let mut fp = vec![T::zero(); fx.len()];
                for _ in 0..len {
                    sample_unit_cube_into(s, &mut u);
                    for ((o, &xi), &ui) in xp.iter_mut().zip(x).zip(&u) {
                        *o = xi + delta * xi * ui;
                    }
                    p.eval_into(&xp, &mut fp);
                    let r = (fp[j] - fj).abs() / (delta * fj.abs());
                    record_difference(&mut acc, r, p.name())?;
                }
                Ok(acc)
            })?;
            Ok(TrendRow {
                delta,
                estimate: Estimate::from_moments(&acc.value, &acc.log, confidence),
                zero_differences: acc.zeros,
            })
        })
        .collect()
}

pub fn scc<T: Real>(
    p: &dyn Problem<T>,
    x: &[T],
    j: usize,
    cfg: &EstimatorConfig<T>,
) -> Result<SccResult<T>> {
    cfg.validate()?;
    check_output(p, j)?;
    let fx = evaluate(p, x)?;
    let jac = jacobian(p, x)?;
    scc_with_parts(p, x, &fx, &jac, j, cfg, &cfg.stream)
}

fn scc_with_parts<T: Real>(
    p: &dyn Problem<T>,
    x: &[T],
    fx: &[T],
    jac: &Jacobian<T>,
    j: usize,
    cfg: &EstimatorConfig<T>,
    stream: &SampleStream,
) -> Result<SccResult<T>> {
    let g = sensitivity(x, jac, j);
    let wcc = wcc_from_sensitivity(&g, fx[j], j)?;
    let estimate = scc_linearized(&g, fx[j], cfg.samples, stream, cfg.confidence)
        .map_err(|_| Error::InfiniteCondition { output: Some(j) })?;
    let exact = expected_abs_projection(&g).map(|e| e / fx[j].abs());
    let trend = match &cfg.mode {
        Mode::Linearized => Vec::new(),
        Mode::FiniteDelta(deltas) => {
            scc_trend(p, x, fx, j, deltas, cfg.samples, stream, cfg.confidence)?
        }
    };
    Ok(SccResult {
        output: j,
        wcc,
        estimate,
        exact,
        trend,
    })
}

// ---------------------------------------------------------------------------
// Report

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport<T> {
    pub problem: String,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub point: Vec<T>,
    pub output: Vec<T>,
    pub jacobian: Jacobian<T>,
    /// `None` iff `f(x) = 0`.
    pub snc: Option<SncResult<T>>,
    /// Entry `j` is `None` iff `f_j(x) = 0`.
    pub scc: Vec<Option<SccResult<T>>>,
    /// Outputs with `f_j(x) = 0`, whose componentwise numbers are infinite.
    pub zero_outputs: Vec<usize>,
}

impl<T: Real> ConditionReport<T> {
    pub fn wnc(&self) -> Option<T> {
        self.snc.as_ref().map(|s| s.wnc)
    }

    pub fn wcc(&self, j: usize) -> Option<T> {
        self.scc[j].as_ref().map(|s| s.wcc)
    }

    pub fn norm_flagged(&self) -> bool {
        self.snc.is_none()
    }

    pub fn output_flagged(&self, j: usize) -> bool {
        self.scc[j].is_none()
    }

    pub fn any_flagged(&self) -> bool {
        self.norm_flagged() || !self.zero_outputs.is_empty()
    }
}

/// All quantities at `x`. Degenerate outputs are flagged instead of failing.
///
/// The norm-wise estimator uses sub-stream 0 of `cfg.stream`; output `j`
/// uses sub-stream `j + 1`.
pub fn report<T: Real>(
    p: &dyn Problem<T>,
    x: &[T],
    cfg: &EstimatorConfig<T>,
) -> Result<ConditionReport<T>> {
    cfg.validate()?;
    let fx = evaluate(p, x)?;
    let jac = jacobian(p, x)?;
    let zeros = zero_outputs(&fx);
    let snc = if norm2(&fx) == T::zero() {
        None
    } else {
        Some(snc_with_parts(
            p,
            x,
            &fx,
            &jac.matrix,
            cfg,
            &cfg.stream.substream(0),
        )?)
    };
    let scc = (0..fx.len())
        .map(|j| {
            if fx[j] == T::zero() {
                Ok(None)
            } else {
                let s = cfg.stream.substream(j as u64 + 1);
                scc_with_parts(p, x, &fx, &jac, j, cfg, &s).map(Some)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConditionReport {
        problem: p.name().to_string(),
        m: x.len(),
        n: fx.len(),
        k: x.len().min(fx.len()),
        point: x.to_vec(),
        output: fx,
        jacobian: jac,
        snc,
        scc,
        zero_outputs: zeros,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{problem_by_name, Scale};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn cfg(samples: usize) -> EstimatorConfig<f64> {
        EstimatorConfig::new(samples, SampleStream::new(42)).unwrap()
    }

    fn get(name: &str, m: Option<usize>) -> Box<dyn Problem<f64>> {
        problem_by_name(name, m).unwrap()
    }

    #[test]
    fn spectral_norm_examples() {
        assert_eq!(spectral_norm(&Matrix::<f64>::identity(3)).unwrap(), 1.0);
        assert_relative_eq!(
            spectral_norm(&Matrix::diagonal(&[2.0, 1.0])).unwrap(),
            2.0,
            max_relative = 1e-15
        );
        let row = Matrix::from_row_major(1, 2, vec![5.0, 2.0]).unwrap();
        assert_relative_eq!(
            spectral_norm(&row).unwrap(),
            29f64.sqrt(),
            max_relative = 1e-15
        );
        assert_eq!(spectral_norm(&Matrix::<f64>::zeros(4, 4)).unwrap(), 0.0);
    }

    #[test]
    fn spectral_norm_power_iteration_matches_diagonal() {
        let d = Matrix::diagonal(&[0.5, -3.0, 2.9, 1.0, 1e-3]);
        assert_relative_eq!(spectral_norm(&d).unwrap(), 3.0, max_relative = 1e-11);
        // Rank one: σ₁ = ‖a‖‖b‖.
        let a = [1.0, -2.0, 0.5, 3.0];
        let b = [0.25, 1.0, -1.0, 2.0, 0.5];
        let mut data = Vec::new();
        for ai in a {
            data.extend(b.iter().map(|bj| ai * bj));
        }
        let m = Matrix::from_row_major(4, 5, data).unwrap();
        assert_relative_eq!(
            spectral_norm(&m).unwrap(),
            norm2(&a) * norm2(&b),
            max_relative = 1e-12
        );
    }

    #[test]
    fn spectral_norm_rejects_non_finite() {
        let m = Matrix::from_row_major(1, 1, vec![f64::NAN]).unwrap();
        assert!(spectral_norm(&m).is_err());
    }

    #[test]
    fn wnc_examples() {
        assert_relative_eq!(
            wnc(get("identity", Some(3)).as_ref(), &[1.0, -2.0, 7.0]).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            wnc(get("product", Some(2)).as_ref(), &[1.0, 1.0]).unwrap(),
            2.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            wnc(get("matvec", None).as_ref(), &[1.0, 0.0]).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_eq!(
            wnc(get("sum", Some(2)).as_ref(), &[1.0, -1.0]),
            Err(Error::InfiniteCondition { output: None })
        );
    }

    #[test]
    fn ill_conditioned_solve_at_documented_point() {
        let w = wnc(get("solve_ill", None).as_ref(), &[1.0, 1.0]).unwrap();
        assert!(w > 1e3);
        assert_relative_eq!(w, 1e4, max_relative = 1e-8);
    }

    #[test]
    fn wcc_examples() {
        let p = get("product", Some(2));
        for x in [[1.0, 1.0], [2.0, -5.0], [1e-3, 7.0]] {
            assert_relative_eq!(wcc(p.as_ref(), &x, 0).unwrap(), 2.0, max_relative = 1e-15);
        }
        assert_eq!(
            wcc(get("sum", Some(2)).as_ref(), &[1.0, 1.0], 0).unwrap(),
            1.0
        );
        assert_eq!(
            wcc(get("sum", Some(2)).as_ref(), &[1.0, -1.0], 0),
            Err(Error::InfiniteCondition { output: Some(0) })
        );
        // A zero input coordinate contributes nothing.
        assert_eq!(
            wcc(get("dot", Some(3)).as_ref(), &[0.0, 1.0, 1.0], 0).unwrap(),
            1.0
        );
        assert!(wcc(get("sum", Some(2)).as_ref(), &[1.0, 1.0], 1).is_err());
    }

    #[test]
    fn config_validation() {
        let s = SampleStream::new(1);
        assert!(EstimatorConfig::<f64>::new(99, s.clone()).is_err());
        let c = EstimatorConfig::<f64>::new(100, s).unwrap();
        assert!(c.clone().with_deltas(vec![]).is_err());
        assert!(c.clone().with_deltas(vec![1e-2, 1e-2]).is_err());
        assert!(c.clone().with_deltas(vec![1e-3, 1e-2]).is_err());
        assert!(c.clone().with_deltas(vec![1e-2, -1.0]).is_err());
        assert!(c.clone().with_deltas(vec![1e-2, 1e-3]).is_ok());
        assert!(c.clone().with_confidence(1.0).is_err());
        assert!(c.with_confidence(0.5).is_ok());
    }

    #[test]
    fn snc_product_exact_value() {
        let r = snc(get("product", Some(2)).as_ref(), &[1.0, 1.0], &cfg(100_000)).unwrap();
        assert_relative_eq!(r.exact.unwrap(), 8.0 / (3.0 * PI), max_relative = 1e-14);
        let e = &r.estimate;
        assert!((e.mean - r.exact.unwrap()).abs() <= 4.0 * e.half_width);
        assert!(
            (e.log_mean.unwrap() - r.exact_log.unwrap()).abs() <= 4.0 * e.log_half_width.unwrap()
        );
    }

    #[test]
    fn snc_identity_within_theorem_bounds() {
        let m = 5;
        let r = snc(
            get("identity", Some(m)).as_ref(),
            &[1.0, 2.0, -1.0, 0.5, 3.0],
            &cfg(20_000),
        )
        .unwrap();
        let ratio = r.estimate.mean / r.wnc;
        let hw = r.estimate.half_width / r.wnc;
        let mf = m as f64;
        assert!(ratio + hw >= 1.0 / (std::f64::consts::E * mf.sqrt()));
        assert!(ratio - hw <= (mf / (mf + 2.0)).sqrt());
        // For G = I the amplification is ‖u‖, whose mean is m/(m+1).
        assert!((ratio - mf / (mf + 1.0)).abs() <= 4.0 * hw);
        assert!(r.exact.is_none());
    }

    #[test]
    fn snc_scale_invariance() {
        let x = [0.3, -1.2, 2.0];
        let c = cfg(5000);
        let base = snc(get("identity", Some(3)).as_ref(), &x, &c).unwrap();
        let pow2 = snc(&Scale::new(3, 4.0), &x, &c).unwrap();
        assert_eq!(base.estimate, pow2.estimate);
        let three = snc(&Scale::new(3, 3.0), &x, &c).unwrap();
        assert_relative_eq!(
            base.estimate.mean,
            three.estimate.mean,
            max_relative = 1e-12
        );
        assert_relative_eq!(base.wnc, three.wnc, max_relative = 1e-15);
    }

    #[test]
    fn expected_abs_projection_small_cases() {
        assert_eq!(expected_abs_projection::<f64>(&[]), Some(0.0));
        assert_eq!(expected_abs_projection(&[0.0, -3.0, 0.0]), Some(1.5));
        assert_relative_eq!(
            expected_abs_projection(&[1.0, 1.0]).unwrap(),
            2.0 / 3.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            expected_abs_projection(&[1.0, -1.0, 1.0]).unwrap(),
            13.0 / 16.0,
            max_relative = 1e-15
        );
        assert!(expected_abs_projection(&[1.0, 1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn scc_examples() {
        // Dot problem at e_1: g = (1, 0, 0), SCC/WCC = 1/2.
        let r = scc(
            get("dot", Some(3)).as_ref(),
            &[1.0, 0.0, 0.0],
            0,
            &cfg(10_000),
        )
        .unwrap();
        assert_eq!(r.exact.unwrap() / r.wcc, 0.5);
        // Sum at (1, 1): g = (1, 1), SCC/WCC = 1/3.
        let r = scc(get("sum", Some(2)).as_ref(), &[1.0, 1.0], 0, &cfg(100_000)).unwrap();
        assert_relative_eq!(r.exact.unwrap() / r.wcc, 1.0 / 3.0, max_relative = 1e-15);
        assert!((r.estimate.mean - r.exact.unwrap()).abs() <= 4.0 * r.estimate.half_width);
        assert!(r.estimate.mean <= r.wcc / 2.0 + r.estimate.half_width);
        assert!(
            r.estimate.log_mean.unwrap()
                <= r.wcc.log2() - 1.0 + 4.0 * r.estimate.log_half_width.unwrap()
        );
    }

    #[test]
    fn zero_sensitivity_gives_zero_estimates() {
        let z = Matrix::<f64>::zeros(2, 2);
        let e = snc_linearized(1.0, 1.0, &z, 1000, &SampleStream::new(3), 0.99).unwrap();
        assert_eq!(e.mean, 0.0);
        assert!(e.log_mean.is_none());
        let e = scc_linearized(&[0.0, 0.0], 1.0, 1000, &SampleStream::new(3), 0.99).unwrap();
        assert_eq!(e.mean, 0.0);
    }

    #[test]
    fn report_examples() {
        let r = report(get("identity", Some(2)).as_ref(), &[1.0, 1.0], &cfg(1000)).unwrap();
        assert_relative_eq!(r.wnc().unwrap(), 1.0, max_relative = 1e-15);
        assert_eq!((r.wcc(0), r.wcc(1)), (Some(1.0), Some(1.0)));
        assert!(!r.any_flagged());

        let r = report(get("product", Some(2)).as_ref(), &[1.0, 1.0], &cfg(1000)).unwrap();
        assert_relative_eq!(r.wnc().unwrap(), 2.0, max_relative = 1e-15);
        assert_eq!(r.wcc(0), Some(2.0));
        assert_relative_eq!(
            r.snc.unwrap().exact.unwrap(),
            8.0 / (3.0 * PI),
            max_relative = 1e-14
        );

        let r = report(get("sum", Some(2)).as_ref(), &[1.0, -1.0], &cfg(1000)).unwrap();
        assert!(r.any_flagged() && r.norm_flagged() && r.output_flagged(0));
        assert_eq!(r.zero_outputs, vec![0]);

        let r = report(get("matvec", None).as_ref(), &[1.0, 0.0], &cfg(1000)).unwrap();
        assert!(!r.norm_flagged());
        assert!(r.output_flagged(1) && !r.output_flagged(0));

        assert!(report(get("identity", Some(2)).as_ref(), &[1.0], &cfg(1000)).is_err());
    }

    #[test]
    fn linear_trend_matches_linearized() {
        let c = cfg(2000).with_deltas(vec![1e-2, 1e-4]).unwrap();
        let p = get("matvec_tall", None);
        let x = [0.4, -1.1];
        let r = snc(p.as_ref(), &x, &c).unwrap();
        for row in &r.trend {
            assert_relative_eq!(row.estimate.mean, r.estimate.mean, max_relative = 1e-10);
            assert!(!row.underflowed());
        }
        let s = scc(p.as_ref(), &x, 2, &c).unwrap();
        for row in &s.trend {
            assert_relative_eq!(row.estimate.mean, s.estimate.mean, max_relative = 1e-10);
        }
    }

    #[test]
    fn tiny_delta_underflows() {
        let c = cfg(200).with_deltas(vec![1e-300]).unwrap();
        let r = snc(get("product", Some(2)).as_ref(), &[1.0, 1.0], &c).unwrap();
        assert!(r.trend[0].underflowed());
    }

    #[test]
    fn chunking_covers_all_samples() {
        assert_eq!(chunk_sizes(100), vec![100]);
        assert_eq!(chunk_sizes(CHUNK_SIZE), vec![CHUNK_SIZE]);
        assert_eq!(
            chunk_sizes(2 * CHUNK_SIZE + 1).iter().sum::<usize>(),
            2 * CHUNK_SIZE + 1
        );
    }

    #[test]
    fn thread_count_does_not_change_estimates() {
        let p = get("polar", None);
        let c = cfg(3 * CHUNK_SIZE + 17);
        let a = snc(p.as_ref(), &[1.5, 0.3], &c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| snc(p.as_ref(), &[1.5, 0.3], &c).unwrap());
        assert_eq!(a, b);
    }
}
