//! Sums of i.i.d. uniforms on `[-1, 1]`: exact Irwin–Hall CDF and density, and
//! quadrature expectations against that density.
//!
//! The Irwin–Hall formulas are alternating sums whose terms grow like
//! `C(m, k) (m/2)^m / m!`; the CDF stays accurate to about 1e-12 up to 30
//! summands, while the density-times-log integrals are kept to 16 summands.

use crate::error::{domain, Result};
use crate::quadrature::Integrator;
use crate::scalar::Real;
use crate::special::{normal_cdf, normal_sf, xlogx, CompensatedSum};

pub const MAX_CDF_TERMS: usize = 30;
pub const MAX_QUADRATURE_TERMS: usize = 16;

fn oracle_integrator<T: Real>() -> Integrator<T> {
    Integrator {
        abs_tol: T::lit(1e-11),
        rel_tol: T::lit(1e-12),
        max_intervals: 20_000,
    }
}

/// `1 / (k! (m-k)!)` for `k = 0..=m`, by running products.
fn inverse_factorial_pairs<T: Real>(m: usize) -> Vec<T> {
    let mut inv_fact = vec![T::one(); m + 1];
    for k in 1..=m {
        inv_fact[k] = inv_fact[k - 1] / T::count(k);
    }
    (0..=m).map(|k| inv_fact[k] * inv_fact[m - k]).collect()
}

/// `Σ_{k <= x} (-1)^k x_k^p / (k! (m-k)!)`, with `x_k = x - k`.
fn truncated_power_sum<T: Real>(m: usize, power: i32, x: T, coeffs: &[T]) -> T {
    let mut acc = CompensatedSum::new();
    let mut k = 0usize;
    while k <= m && T::count(k) < x {
        let term = coeffs[k] * (x - T::count(k)).powi(power);
        acc.add(if k % 2 == 0 { term } else { -term });
        k += 1;
    }
    acc.value()
}

/// Irwin–Hall CDF of `V = v_1 + … + v_m`, `v_i` uniform on `[0, 1]`.
fn irwin_hall_cdf<T: Real>(m: usize, x: T) -> T {
    let mf = T::count(m);
    if x <= T::zero() {
        return T::zero();
    }
    if x >= mf {
        return T::one();
    }
    let half = mf / T::lit(2.0);
    if x == half {
        return T::lit(0.5);
    }
    if x > half {
        return T::one() - irwin_hall_cdf(m, mf - x);
    }
    // Σ (-1)^k C(m,k) (x-k)^m / m!  =  Σ (-1)^k (x-k)^m / (k!(m-k)!)
    let coeffs = inverse_factorial_pairs::<T>(m);
    truncated_power_sum(m, m as i32, x, &coeffs)
}

/// Density of `S = u_1 + … + u_m`, `u_i` uniform on `[-1, 1]`, `m >= 1`.
pub fn irwin_hall_density<T: Real>(m: usize, s: T) -> T {
    let mf = T::count(m);
    // S = 2V - m
    let mut x = (s + mf) / T::lit(2.0);
    if x <= T::zero() || x >= mf {
        return T::zero();
    }
    if x > mf / T::lit(2.0) {
        x = mf - x;
    }
    // f_V(x) = Σ (-1)^k C(m,k) (x-k)^{m-1} / (m-1)!  =  m · Σ (-1)^k (x-k)^{m-1} / (k!(m-k)!)
    let coeffs = inverse_factorial_pairs::<T>(m);
    mf * truncated_power_sum(m, m as i32 - 1, x, &coeffs) / T::lit(2.0)
}

/// `P((u_1 + … + u_m) / √(m/3) <= t)` for `u_i` i.i.d. uniform on `[-1, 1]`.
pub fn uniform_sum_cdf<T: Real>(m: usize, t: T) -> Result<T> {
    if m == 0 || m > MAX_CDF_TERMS {
        return Err(domain(
            "uniform-sum CDF terms",
            format!("m = {m} not in 1..={MAX_CDF_TERMS}"),
        ));
    }
    let mf = T::count(m);
    let s = t * (mf / T::lit(3.0)).sqrt();
    Ok(irwin_hall_cdf(m, (s + mf) / T::lit(2.0)))
}

/// `E g(u_1 + … + u_m)` by quadrature against the exact density.
///
/// Panels break at every knot `-m + 2k` of the piecewise polynomial density and
/// at each of `extra_breaks` (singularities of `g`). For `m = 0` the sum is
/// identically zero and the result is `g(0)`.
pub fn uniform_sum_expectation<T: Real, G: Fn(T) -> T>(m: usize, g: G, extra_breaks: &[T]) -> T {
    if m == 0 {
        return g(T::zero());
    }
    let mf = T::count(m);
    let mut points: Vec<T> = (0..=m).map(|k| -mf + T::lit(2.0) * T::count(k)).collect();
    points.extend(extra_breaks.iter().copied().filter(|&b| b > -mf && b < mf));
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    oracle_integrator::<T>()
        .integrate_with_breaks(|s| irwin_hall_density(m, s) * g(s), &points)
        .value
}

/// `E ln|u_1 + … + u_p|` for `p = m_plus_1` uniforms, `1 <= p <= 16`.
pub fn expected_log_uniform_sum<T: Real>(m_plus_1: usize) -> Result<T> {
    if m_plus_1 == 0 || m_plus_1 > MAX_QUADRATURE_TERMS {
        return Err(domain(
            "log-moment terms",
            format!("{m_plus_1} not in 1..={MAX_QUADRATURE_TERMS}"),
        ));
    }
    Ok(uniform_sum_expectation(
        m_plus_1,
        |s: T| s.abs().ln(),
        &[T::zero()],
    ))
}

/// `E[(S_m + 1) ln|S_m + 1|] - 1` with `S_m` the raw sum of `m` uniforms.
///
/// Equals [`expected_log_uniform_sum`]`(m + 1)`; the two are evaluated by
/// different integrands, so agreement is a check of the identity.
pub fn lemma5_rhs<T: Real>(m: usize) -> Result<T> {
    if m >= MAX_QUADRATURE_TERMS {
        return Err(domain("log-moment terms", format!("m = {m}")));
    }
    Ok(uniform_sum_expectation(m, |s: T| xlogx(s + T::one()), &[-T::one()]) - T::one())
}

/// `E[(W + δ) ln|W + δ|]` for `W = (u_1 + … + u_m)/√(m/3)`, `0 < δ <= √(3m)`.
pub fn entropy_term_expectation<T: Real>(m: usize, delta: T) -> Result<T> {
    if m == 0 || m > MAX_QUADRATURE_TERMS {
        return Err(domain("entropy-term terms", format!("m = {m}")));
    }
    let mf = T::count(m);
    if !(delta > T::zero() && delta <= (T::lit(3.0) * mf).sqrt()) {
        return Err(domain("entropy-term delta", format!("{delta}")));
    }
    let scale = (mf / T::lit(3.0)).sqrt();
    Ok(uniform_sum_expectation(
        m,
        |s: T| xlogx(s / scale + delta),
        &[-delta * scale],
    ))
}

/// `δ ln δ + ∫_0^b P(Z > z) ln|(z+δ)/(z-δ)| dz` for standard normal `Z`.
pub fn normal_tail_log_ratio<T: Real>(delta: T, b: T) -> Result<T> {
    if !(delta > T::zero()) || !(b > T::zero()) {
        return Err(domain(
            "normal tail integral",
            format!("delta = {delta}, b = {b}"),
        ));
    }
    let mut points = vec![T::zero(), b];
    if delta < b {
        points.insert(1, delta);
    }
    let q = oracle_integrator::<T>().integrate_with_breaks(
        |z: T| normal_sf(z) * ((z + delta) / (z - delta)).abs().ln(),
        &points,
    );
    Ok(xlogx(delta) + q.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerryEsseenSup<T> {
    pub sup: T,
    pub argmax: T,
}

/// Supremum over an even grid on `[-√(3m) - 1, √(3m) + 1]` of the distance
/// between the standardized uniform-sum CDF and the normal CDF.
pub fn berry_esseen_sup<T: Real>(m: usize, grid_points: usize) -> Result<BerryEsseenSup<T>> {
    let edge = (T::lit(3.0) * T::count(m)).sqrt() + T::one();
    let mut best = BerryEsseenSup {
        sup: T::zero(),
        argmax: T::zero(),
    };
    let steps = grid_points.max(2) - 1;
    for i in 0..=steps {
        let a = -edge + T::lit(2.0) * edge * T::count(i) / T::count(steps);
        let gap = (uniform_sum_cdf(m, a)? - normal_cdf(a)).abs();
        if gap > best.sup {
            best = BerryEsseenSup {
                sup: gap,
                argmax: a,
            };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::LN_2;

    #[test]
    fn cdf_symmetry_and_support() {
        for m in 1..=MAX_CDF_TERMS {
            assert_eq!(uniform_sum_cdf(m, 0.0_f64).unwrap(), 0.5);
            let edge = (3.0 * m as f64).sqrt();
            assert_abs_diff_eq!(uniform_sum_cdf(m, edge).unwrap(), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(uniform_sum_cdf(m, -edge).unwrap(), 0.0, epsilon = 1e-14);
            assert_eq!(uniform_sum_cdf(m, edge + 0.1).unwrap(), 1.0);
            assert_eq!(uniform_sum_cdf(m, -edge - 0.1).unwrap(), 0.0);
        }
        assert!(uniform_sum_cdf(0, 0.0_f64).is_err());
        assert!(uniform_sum_cdf(31, 0.0_f64).is_err());
    }

    #[test]
    fn cdf_two_terms_at_raw_one() {
        // P(u1 + u2 <= 1) = 1 - (1/2)(1)(1/2) = 7/8 for the triangular density on [-2, 2].
        let t = 1.0 / (2.0_f64 / 3.0).sqrt();
        assert_relative_eq!(
            uniform_sum_cdf(2, t).unwrap(),
            7.0 / 8.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn cdf_one_term_linear() {
        let t = 0.3 * 3.0_f64.sqrt();
        assert_relative_eq!(uniform_sum_cdf(1, t).unwrap(), 0.65, max_relative = 1e-14);
    }

    #[test]
    fn density_integrates_to_one() {
        for m in 1..=MAX_QUADRATURE_TERMS {
            let total = uniform_sum_expectation(m, |_| 1.0_f64, &[]);
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn density_variance() {
        for m in 1..=8 {
            let var = uniform_sum_expectation(m, |s: f64| s * s, &[]);
            assert_abs_diff_eq!(var, m as f64 / 3.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn log_moment_values() {
        assert_abs_diff_eq!(
            expected_log_uniform_sum::<f64>(1).unwrap(),
            -1.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            expected_log_uniform_sum::<f64>(2).unwrap(),
            LN_2 - 1.5,
            epsilon = 1e-10
        );
        assert!(expected_log_uniform_sum::<f64>(17).is_err());
        assert!(expected_log_uniform_sum::<f64>(0).is_err());
    }

    #[test]
    fn lemma5_closed_case() {
        assert_eq!(lemma5_rhs::<f64>(0).unwrap(), -1.0);
    }

    #[test]
    fn entropy_term_domain() {
        assert!(entropy_term_expectation(2, 0.0_f64).is_err());
        assert!(entropy_term_expectation(2, 3.0_f64).is_err());
        assert!(entropy_term_expectation(17, 1.0_f64).is_err());
        assert!(entropy_term_expectation(2, 6.0_f64.sqrt()).is_ok());
    }

    #[test]
    fn entropy_term_small_delta_tends_to_zero() {
        let v = entropy_term_expectation(2, 1e-6_f64).unwrap();
        assert!(v.abs() < 1e-5, "{v}");
    }

    #[test]
    fn berry_esseen_single_term() {
        let s = berry_esseen_sup::<f64>(1, 10_000).unwrap();
        // Interior extremum where the uniform density 1/(2√3) equals φ(a).
        let r3 = 3.0_f64.sqrt();
        let a = (-2.0 * ((2.0 * std::f64::consts::PI).sqrt() / (2.0 * r3)).ln()).sqrt();
        let exact = (a + r3) / (2.0 * r3) - normal_cdf(a);
        assert_abs_diff_eq!(s.sup, exact.abs(), epsilon = 1e-6);
        assert_abs_diff_eq!(s.argmax.abs(), a, epsilon = 1e-3);
        // The endpoint gap 1 - Φ(√3) is smaller than the supremum.
        assert!(1.0 - normal_cdf(r3) < s.sup);
    }
}
