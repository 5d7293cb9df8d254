//! Stochastic-policy families parameterized by disc points, and the seeded
//! generator they draw from.
//!
//! * [`WrappedCauchy`]: laws on the circle, defined as the Möbius pushforward
//!   of the uniform law.
//! * [`ConformalNatural`]: laws on the disc whose density is taken with
//!   respect to the hyperbolic area element `dA / (1 − |ζ|²)²`.
//! * [`GaussianParams`]: one-variate normals, reached from the disc through
//!   the inverse Cayley transform.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geom::{reduce_angle, DiscPoint, GaussianParams, MobiusTransform, MIN_VARIANCE};

/// Seeded, platform-independent random stream.
///
/// Handles are derived rather than shared: [`RngHandle::substream`] depends
/// only on the handle's identity `(seed, stream)`, never on how many numbers
/// were already drawn, so work fanned out by index stays reproducible.
#[derive(Debug, Clone)]
pub struct RngHandle {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngHandle {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngHandle {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Child generator keyed by `index`.
    pub fn substream(&self, index: u64) -> RngHandle {
        let child_seed = splitmix64(self.seed ^ splitmix64(self.stream.wrapping_add(0x5EED)));
        RngHandle::with_stream(child_seed, index)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn angle(&mut self) -> f64 {
        self.uniform() * TAU
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }
}

impl RngCore for RngHandle {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Wrapped Cauchy law `WC(a)` on the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrappedCauchy {
    pub a: DiscPoint,
}

impl WrappedCauchy {
    pub fn new(a: DiscPoint) -> Self {
        WrappedCauchy { a }
    }

    /// Pushes a uniform angle through `z ↦ (a − z)/(1 − ā z)`.
    pub fn sample(&self, rng: &mut RngHandle) -> f64 {
        let w = Complex64::from_polar(1.0, rng.angle());
        let z = MobiusTransform::swapping_origin(self.a).apply_complex(w);
        reduce_angle(z.arg())
    }

    /// Density of [`WrappedCauchy::sample`]'s output,
    /// `(1/2π) (1 − r²)/(1 − 2r cos(φ − Φ) + r²)` with `a = r e^{iΦ}`.
    ///
    /// The pushforward map is an involution, so the density is `|g'(e^{iφ})|/2π`
    /// with `|g'(z)| = (1 − r²)/|1 − ā z|²`; its mode sits at `Φ`.
    pub fn density(&self, phi: f64) -> f64 {
        let r = self.a.norm();
        let big_phi = self.a.to_complex().arg();
        (1.0 - r * r) / (TAU * (1.0 - 2.0 * r * (phi - big_phi).cos() + r * r))
    }
}

pub fn wc_sample(d: &WrappedCauchy, rng: &mut RngHandle) -> f64 {
    d.sample(rng)
}

pub fn wc_density(d: &WrappedCauchy, phi: f64) -> f64 {
    d.density(phi)
}

/// Conformally natural law `CN(a, s)` on the disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalNatural {
    a: DiscPoint,
    s: f64,
}

impl ConformalNatural {
    pub fn new(a: DiscPoint, s: f64) -> Result<Self> {
        if !(s > 1.0) || !s.is_finite() {
            return Err(Error::param(format!("conformal-natural shape must exceed 1, got {s}")));
        }
        Ok(ConformalNatural { a, s })
    }

    pub fn a(&self) -> DiscPoint {
        self.a
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Inverse-CDF radius at `a = 0`, then transport by the automorphism
    /// exchanging `0` and `a`. At `a = 0` the radial law is
    /// `F(r) = 1 − (1 − r²)^{s−1}`.
    pub fn sample(&self, rng: &mut RngHandle) -> DiscPoint {
        let theta = rng.angle();
        let u = rng.uniform_open();
        let r = (1.0 - (1.0 - u).powf(1.0 / (self.s - 1.0))).sqrt();
        let centred = Complex64::from_polar(r, theta);
        let z = MobiusTransform::swapping_origin(self.a).apply_complex(centred);
        DiscPoint::clamped(z).expect("finite sample")
    }

    /// `((s − 1)/π) · ((1 − |a|²)(1 − |ζ|²)/|1 − ā ζ|²)^s`, a density with
    /// respect to the hyperbolic area element `dA/(1 − |ζ|²)²`.
    pub fn density(&self, zeta: DiscPoint) -> f64 {
        let a = self.a.to_complex();
        let z = zeta.to_complex();
        let one = Complex64::new(1.0, 0.0);
        let ratio = (1.0 - a.norm_sqr()) * (1.0 - z.norm_sqr()) / (one - a.conj() * z).norm_sqr();
        (self.s - 1.0) / PI * ratio.powf(self.s)
    }
}

pub fn cn_sample(d: &ConformalNatural, rng: &mut RngHandle) -> DiscPoint {
    d.sample(rng)
}

pub fn cn_density(d: &ConformalNatural, zeta: DiscPoint) -> f64 {
    d.density(zeta)
}

/// `m + √var · n` with `n` standard normal; the variance is floored at
/// [`MIN_VARIANCE`].
pub fn gaussian_sample(p: &GaussianParams, rng: &mut RngHandle) -> Result<f64> {
    if !(p.var > 0.0) {
        return Err(Error::param(format!("gaussian variance must be positive, got {}", p.var)));
    }
    Ok(p.m + p.var.max(MIN_VARIANCE).sqrt() * rng.standard_normal())
}
