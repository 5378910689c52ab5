//! Streaming sample moments with an order-stable merge.

use crate::scalar::Real;
use crate::special::two_sided_z;

/// Running count, mean and second/third central moment sums.
///
/// Merging is associative only up to rounding, so callers that need
/// bit-reproducible results must merge partial accumulators in a fixed order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments<T> {
    n: u64,
    mean: T,
    m2: T,
    m3: T,
}

impl<T: Real> Default for Moments<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Moments<T> {
    pub fn new() -> Self {
        Self {
            n: 0,
            mean: T::zero(),
            m2: T::zero(),
            m3: T::zero(),
        }
    }

    pub fn push(&mut self, x: T) {
        let n1 = T::from_u64(self.n).unwrap();
        self.n += 1;
        let n = T::from_u64(self.n).unwrap();
        let delta = x - self.mean;
        let delta_n = delta / n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m3 += term1 * delta_n * (n - T::lit(2.0)) - T::lit(3.0) * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let na = T::from_u64(self.n).unwrap();
        let nb = T::from_u64(other.n).unwrap();
        let n = na + nb;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * nb / n;
        let m2 = self.m2 + other.m2 + delta * delta * na * nb / n;
        let m3 = self.m3
            + other.m3
            + delta * delta * delta * na * nb * (na - nb) / (n * n)
            + T::lit(3.0) * delta * (na * other.m2 - nb * self.m2) / n;
        self.n += other.n;
        self.mean = mean;
        self.m2 = m2;
        self.m3 = m3;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> T {
        if self.n < 2 {
            return T::zero();
        }
        self.m2 / T::from_u64(self.n - 1).unwrap()
    }

    pub fn std_error(&self) -> T {
        if self.n == 0 {
            return T::zero();
        }
        (self.variance() / T::from_u64(self.n).unwrap()).sqrt()
    }

    /// Normal-approximation confidence half-width of the mean.
    pub fn half_width(&self, confidence: f64) -> T {
        T::lit(two_sided_z(confidence)) * self.std_error()
    }

    /// Sample skewness `g1 = sqrt(n) M3 / M2^{3/2}`; zero for degenerate samples.
    pub fn skewness(&self) -> T {
        if self.n < 3 || self.m2 <= T::zero() {
            return T::zero();
        }
        let n = T::from_u64(self.n).unwrap();
        n.sqrt() * self.m3 / self.m2.powf(T::lit(1.5))
    }
}

impl<T: Real> FromIterator<T> for Moments<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut m = Self::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}
