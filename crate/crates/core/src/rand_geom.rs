//! Deterministic sampling of the two perturbation regions: the Euclidean ball
//! `{x' : ||x' - x|| <= delta ||x||}` and the box `{x' : |x'_i - x_i| <= delta |x_i|}`.
//!
//! Every random quantity in the crate is drawn from a [`SampleStream`]. A
//! stream is identified by `(seed, stream_index)`; its generator is
//! xoshiro256++ seeded with a SplitMix64-style mix of the pair, so equal
//! identities always replay the same sequence. Parallel work is expressed by
//! [`SampleStream::split`], which derives child identities from the parent
//! identity alone (not from how far the parent has advanced).
//!
//! Uniform variates use the top 53 bits of each 64-bit output shifted to the
//! open interval `(0, 1)`; standard normals are the inverse normal CDF
//! ([`normal_quantile`]) of such a uniform, which keeps sequences identical
//! across platforms.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::special::normal_quantile;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_key(seed: u64, stream_index: u64) -> u64 {
    mix64(
        seed ^ mix64(
            stream_index
                .wrapping_mul(GOLDEN_GAMMA)
                .wrapping_add(GOLDEN_GAMMA),
        ),
    )
}

/// Seedable, splittable source of uniforms and normals.
///
/// Streams are plain values: cloning one forks an independent copy at the
/// same position. A single instance must not be advanced from two threads.
#[derive(Debug, Clone)]
pub struct SampleStream {
    seed: u64,
    stream_index: u64,
    rng: Xoshiro256PlusPlus,
}

impl SampleStream {
    pub fn new(seed: u64) -> Self {
        Self::with_index(seed, 0)
    }

    pub fn with_index(seed: u64, stream_index: u64) -> Self {
        Self {
            seed,
            stream_index,
            rng: Xoshiro256PlusPlus::seed_from_u64(stream_key(seed, stream_index)),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// `k` child streams `(key(seed, index), 0..k)`.
    ///
    /// For `SampleStream::new(42)` the first child begins
    /// `168143769495548294, 4900434344702557092, 7022618404771040900, …`.
    ///
    /// Children depend only on the parent's identity, so re-splitting with the
    /// same arguments is bit-identical and `split(1)[0] == split(2)[0]`.
    pub fn split(&self, k: usize) -> Vec<SampleStream> {
        (0..k as u64).map(|i| self.substream(i)).collect()
    }

    /// The `i`-th child of [`split`](Self::split) without materializing the rest.
    pub fn substream(&self, i: u64) -> SampleStream {
        SampleStream::with_index(stream_key(self.seed, self.stream_index), i)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(-1, 1)`.
    pub fn next_symmetric(&mut self) -> f64 {
        2.0 * self.next_uniform() - 1.0
    }

    pub fn next_normal(&mut self) -> f64 {
        normal_quantile(self.next_uniform())
    }

    /// Uniform integer in `lo..=hi`.
    pub fn next_range(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi);
        let span = (hi - lo + 1) as f64;
        lo + ((self.next_uniform() * span) as usize).min(hi - lo)
    }
}

/// Closed Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallRegion<T> {
    center: Vec<T>,
    radius: T,
}

impl<T: Real> BallRegion<T> {
    /// A zero radius is accepted and yields the center on every draw.
    pub fn new(center: Vec<T>, radius: T) -> Result<Self> {
        if !(radius >= T::zero()) || !radius.is_finite() {
            return Err(domain("ball radius", format!("{radius}")));
        }
        if center.is_empty() {
            return Err(domain("ball dimension", "0"));
        }
        Ok(Self { center, radius })
    }

    /// The relative perturbation ball of `x` at level `delta`: radius `delta ||x||`.
    pub fn perturbation(x: &[T], delta: T) -> Result<Self> {
        let norm = x.iter().map(|&v| v * v).sum::<T>().sqrt();
        Self::new(x.to_vec(), delta * norm)
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

/// Axis-aligned box `center ± half_widths`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeRegion<T> {
    center: Vec<T>,
    half_widths: Vec<T>,
}

impl<T: Real> CubeRegion<T> {
    pub fn new(center: Vec<T>, half_widths: Vec<T>) -> Result<Self> {
        if center.len() != half_widths.len() {
            return Err(crate::Error::Dimension {
                expected: center.len(),
                got: half_widths.len(),
            });
        }
        if let Some(h) = half_widths
            .iter()
            .find(|h| !(**h >= T::zero()) || !h.is_finite())
        {
            return Err(domain("box half-width", format!("{h}")));
        }
        Ok(Self {
            center,
            half_widths,
        })
    }

    /// The componentwise perturbation box of `x`: half-widths `delta |x_i|`.
    pub fn perturbation(x: &[T], delta: T) -> Result<Self> {
        Self::new(x.to_vec(), x.iter().map(|v| delta * v.abs()).collect())
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn half_widths(&self) -> &[T] {
        &self.half_widths
    }
}

/// Fills `out` with a point uniform in the unit ball of dimension `out.len()`.
///
/// Direction: normalized vector of independent standard normals (redrawn in
/// the probability-zero event of an all-zero draw). Radius: `U^(1/m)`.
pub fn sample_unit_ball_into<T: Real>(stream: &mut SampleStream, out: &mut [T]) {
    let m = out.len();
    loop {
        let mut norm_sq = 0.0;
        for slot in out.iter_mut() {
            let z = stream.next_normal();
            norm_sq += z * z;
            *slot = T::lit(z);
        }
        if norm_sq > 0.0 {
            let radius = stream.next_uniform().powf(1.0 / m as f64);
            let scale = T::lit(radius / norm_sq.sqrt());
            for slot in out.iter_mut() {
                *slot *= scale;
            }
            return;
        }
    }
}

/// Fills `out` with a point uniform in `[-1, 1]^m`.
pub fn sample_unit_cube_into<T: Real>(stream: &mut SampleStream, out: &mut [T]) {
    for slot in out.iter_mut() {
        *slot = T::lit(stream.next_symmetric());
    }
}

pub fn sample_ball<T: Real>(region: &BallRegion<T>, stream: &mut SampleStream) -> Vec<T> {
    let mut v = vec![T::zero(); region.dim()];
    if region.radius == T::zero() {
        return region.center.clone();
    }
    sample_unit_ball_into(stream, &mut v);
    for (vi, &ci) in v.iter_mut().zip(&region.center) {
        *vi = ci + region.radius * *vi;
    }
    v
}

pub fn sample_cube<T: Real>(region: &CubeRegion<T>, stream: &mut SampleStream) -> Vec<T> {
    region
        .center
        .iter()
        .zip(&region.half_widths)
        .map(|(&c, &h)| {
            let u = T::lit(stream.next_symmetric());
            if h == T::zero() {
                c
            } else {
                c + h * u
            }
        })
        .collect()
}
