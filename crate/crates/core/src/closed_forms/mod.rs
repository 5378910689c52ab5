//! Closed-form integrals, moments, ratios and bounds.
//!
//! Products and series are evaluated as running products of ratios or running
//! sums, never through factorials, so every routine is safe for dimensions in
//! the millions.

mod uniform_sum;

pub use uniform_sum::{
    berry_esseen_sup, entropy_term_expectation, expected_log_uniform_sum, irwin_hall_density,
    lemma5_rhs, normal_tail_log_ratio, uniform_sum_cdf, uniform_sum_expectation, BerryEsseenSup,
    MAX_CDF_TERMS, MAX_QUADRATURE_TERMS,
};

use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::special::{xlogx, CompensatedSum};

/// `∫_0^{π/2} sin^m t dt` via `I_m = (m-1)/m · I_{m-2}`, `I_0 = π/2`, `I_1 = 1`.
pub fn wallis_integral<T: Real>(m: usize) -> T {
    let (mut value, start) = if m % 2 == 0 {
        (T::FRAC_PI_2(), 0)
    } else {
        (T::one(), 1)
    };
    for k in (start + 2..=m).step_by(2) {
        value *= T::count(k - 1) / T::count(k);
    }
    value
}

/// `J_m / I_m` where `J_m = ∫_0^{π/2} sin^m t · ln cos t dt`.
///
/// Recurrence `J_m/I_m = J_{m-2}/I_{m-2} - 1/m`, seeded with
/// `J_0/I_0 = -ln 2` and `J_1/I_1 = -1`.
pub fn log_cos_ratio<T: Real>(m: usize) -> T {
    let (seed, start) = if m % 2 == 0 {
        (-T::LN_2(), 0)
    } else {
        (-T::one(), 1)
    };
    let mut acc = CompensatedSum::new();
    acc.add(seed);
    for k in (start + 2..=m).step_by(2) {
        acc.add(-T::count(k).recip());
    }
    acc.value()
}

/// `(E||u||, E||u||², E ln||u||)` for `u` uniform in the unit `m`-ball.
pub fn ball_moments<T: Real>(m: usize) -> Result<(T, T, T)> {
    if m == 0 {
        return Err(domain("ball dimension", "m = 0"));
    }
    let mf = T::count(m);
    Ok((mf / (mf + T::one()), mf / (mf + T::lit(2.0)), -mf.recip()))
}

/// `(E|cos ϑ|, E cos²ϑ, E ln|cos ϑ|)` for the angle between a fixed vector and
/// a uniformly random direction in `R^m`, `m >= 3`.
pub fn cos_moments<T: Real>(m: usize) -> Result<(T, T, T)> {
    if m < 3 {
        return Err(domain("cosine-moment dimension", format!("m = {m} < 3")));
    }
    // Odd m: (m-2)(m-4)…1 / (m-1)(m-3)…2; even m: (m-2)(m-4)…2 / (m-1)(m-3)…1 · 2/π.
    let abs_cos = alternating_ratio_product::<T>(m - 2);
    Ok((abs_cos, T::count(m).recip(), log_cos_ratio(m - 2)))
}

/// `∏ k/(k+1)` over `k = top, top-2, …` down to 1 (odd) or 2 (even), times 2/π
/// when `top` is even. Equals `1 / ((top+1) · I_top)`.
fn alternating_ratio_product<T: Real>(top: usize) -> T {
    let (mut value, start) = if top % 2 == 0 {
        (T::FRAC_2_PI(), 2)
    } else {
        (T::one(), 1)
    };
    for k in (start..=top).step_by(2) {
        value *= T::count(k) / T::count(k + 1);
    }
    value
}

/// Exact `(SNC/WNC, SNLP - log₂ WNC)` for a single-output problem with input
/// dimension `m`. The second entry is in bits.
pub fn snc_wnc_exact<T: Real>(m: usize) -> Result<(T, T)> {
    if m == 0 {
        return Err(domain("input dimension", "m = 0"));
    }
    let ratio = alternating_ratio_product::<T>(m);
    Ok((ratio, log_cos_ratio::<T>(m) * T::LOG2_E()))
}

/// `∫_{-1}^{1} ln|a + u| du = (a+1)ln|a+1| - (a-1)ln|a-1| - 2`.
pub fn log_abs_integral<T: Real>(a: T) -> T {
    xlogx(a + T::one()) - xlogx(a - T::one()) - T::lit(2.0)
}

/// `ε_m = (2 + 2 ln m) / √(m-1)`, defined for `m > 1`.
pub fn epsilon_m<T: Real>(m: usize) -> Result<T> {
    if m <= 1 {
        return Err(domain("epsilon_m", format!("m = {m} <= 1")));
    }
    let mf = T::count(m);
    Ok((T::lit(2.0) + T::lit(2.0) * mf.ln()) / (mf - T::one()).sqrt())
}

/// Closed-form moment tabulation for one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable<T> {
    pub m: usize,
    /// `I_m(π/2)`
    pub wallis: T,
    /// `J_m(π/2) / I_m(π/2)`
    pub log_cos_ratio: T,
    pub e_norm: T,
    pub e_norm_sq: T,
    pub e_log_norm: T,
    /// Cosine moments exist for `m >= 3` only.
    pub e_abs_cos: Option<T>,
    pub e_cos_sq: Option<T>,
    pub e_log_abs_cos: Option<T>,
}

impl<T: Real> MomentTable<T> {
    pub fn new(m: usize) -> Result<Self> {
        let (e_norm, e_norm_sq, e_log_norm) = ball_moments(m)?;
        let cos = cos_moments::<T>(m).ok();
        Ok(Self {
            m,
            wallis: wallis_integral(m),
            log_cos_ratio: log_cos_ratio(m),
            e_norm,
            e_norm_sq,
            e_log_norm,
            e_abs_cos: cos.map(|c| c.0),
            e_cos_sq: cos.map(|c| c.1),
            e_log_abs_cos: cos.map(|c| c.2),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Norm-wise bounds: `1/(e√m) <= SNC/WNC <= √(k/(m+2))` and the matching
/// loss-of-precision gap in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormwiseBounds<T> {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub ratio: Interval<T>,
    pub gap_bits: Interval<T>,
}

/// Componentwise bounds for `m > 1`. The lower ends are strict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentwiseBounds<T> {
    pub m: usize,
    pub epsilon_m: T,
    pub ratio: Interval<T>,
    pub gap_bits: Interval<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremBounds<T> {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub normwise: NormwiseBounds<T>,
    /// `None` for `m = 1`, where the exact values `1/2` and `-log₂ e` apply.
    pub componentwise: Option<ComponentwiseBounds<T>>,
}

pub fn theorem1_bounds<T: Real>(m: usize, n: usize) -> Result<NormwiseBounds<T>> {
    if m == 0 || n == 0 {
        return Err(domain("dimensions", format!("m = {m}, n = {n}")));
    }
    let k = m.min(n);
    let (mf, kf) = (T::count(m), T::count(k));
    let two = T::lit(2.0);
    Ok(NormwiseBounds {
        m,
        n,
        k,
        ratio: Interval {
            lo: (T::E() * mf.sqrt()).recip(),
            hi: (kf / (mf + two)).sqrt(),
        },
        gap_bits: Interval {
            lo: -mf.log2() / two - T::LOG2_E(),
            hi: (kf.log2() - (mf + two).log2()) / two,
        },
    })
}

pub fn theorem2_bounds<T: Real>(m: usize) -> Result<ComponentwiseBounds<T>> {
    let eps = epsilon_m::<T>(m)?;
    let mf = T::count(m);
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    Ok(ComponentwiseBounds {
        m,
        epsilon_m: eps,
        ratio: Interval {
            lo: (-(T::one() + eps)).exp() / (three * (mf - T::one())).sqrt(),
            hi: T::lit(0.5),
        },
        gap_bits: Interval {
            lo: -(mf - T::one()).log2() / two - three.log2() / two - (T::one() + eps) * T::LOG2_E(),
            hi: -T::one(),
        },
    })
}

pub fn theorem_bounds<T: Real>(m: usize, n: usize) -> Result<TheoremBounds<T>> {
    let normwise = theorem1_bounds(m, n)?;
    Ok(TheoremBounds {
        m,
        n,
        k: normwise.k,
        normwise,
        componentwise: if m > 1 {
            Some(theorem2_bounds(m)?)
        } else {
            None
        },
    })
}

/// Right-hand side of the lower bound `E[(W+δ) ln|W+δ|] > -(2δ/√m)(ln(1+√(3m)/δ)+1)`.
pub fn lemma4_lower_bound<T: Real>(m: usize, delta: T) -> T {
    let mf = T::count(m);
    -(T::lit(2.0) * delta / mf.sqrt())
        * ((T::one() + (T::lit(3.0) * mf).sqrt() / delta).ln() + T::one())
}

/// `ln m/2 - ln 3/2 - 1 - ε_{m+1}`, lower bound on `E ln|u_1 + … + u_{m+1}|`.
pub fn corollary2_lower_bound<T: Real>(m: usize) -> Result<T> {
    if m == 0 {
        return Err(domain("corollary bound", "m = 0"));
    }
    let two = T::lit(2.0);
    Ok(T::count(m).ln() / two - T::lit(3.0).ln() / two - T::one() - epsilon_m::<T>(m + 1)?)
}
