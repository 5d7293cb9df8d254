//! Poincaré-disc primitives.
//!
//! Points of the open unit disc, the orientation-preserving isometry group
//! `G₊` written as `g(z) = e^{iφ} (a − z) / (1 − ā z)`, the hyperbolic
//! distance of curvature −1 and the disc ↔ Gaussian-parameter map obtained
//! from the inverse Cayley transform.
//!
//! With this parameterization the identity element is `(a = 0, φ = π)`,
//! not `(0, 0)`: the map `(0, 0)` is the point reflection `z ↦ −z`.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus a computed point may take before it is pulled back inside.
pub const BOUNDARY_GUARD: f64 = 1.0 - 1e-12;

/// Smallest variance produced by [`disc_to_gaussian`].
pub const MIN_VARIANCE: f64 = 1e-12;

/// A complex number strictly inside the unit disc.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct DiscPoint(Complex64);

#[derive(Serialize, Deserialize)]
struct RawPoint {
    re: f64,
    im: f64,
}

impl TryFrom<RawPoint> for DiscPoint {
    type Error = Error;

    fn try_from(raw: RawPoint) -> Result<Self> {
        DiscPoint::new(raw.re, raw.im)
    }
}

impl From<DiscPoint> for RawPoint {
    fn from(p: DiscPoint) -> Self {
        RawPoint {
            re: p.0.re,
            im: p.0.im,
        }
    }
}

impl DiscPoint {
    pub const ORIGIN: DiscPoint = DiscPoint(Complex64::new(0.0, 0.0));

    pub fn new(re: f64, im: f64) -> Result<Self> {
        Self::from_complex(Complex64::new(re, im))
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        if z.re.is_finite() && z.im.is_finite() && z.norm_sqr() < 1.0 {
            Ok(DiscPoint(z))
        } else {
            Err(Error::OutsideDisc { re: z.re, im: z.im })
        }
    }

    pub fn from_polar(r: f64, theta: f64) -> Result<Self> {
        Self::from_complex(Complex64::from_polar(r, theta))
    }

    /// Radially pulls `z` back to modulus [`BOUNDARY_GUARD`] when round-off has
    /// pushed it onto or past the circle. Non-finite input is rejected.
    pub fn clamped(z: Complex64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::OutsideDisc { re: z.re, im: z.im });
        }
        let r = z.norm();
        if r >= BOUNDARY_GUARD {
            Ok(DiscPoint(z * (BOUNDARY_GUARD / r)))
        } else {
            Ok(DiscPoint(z))
        }
    }

    #[inline]
    pub fn re(self) -> f64 {
        self.0.re
    }

    #[inline]
    pub fn im(self) -> f64 {
        self.0.im
    }

    #[inline]
    pub fn to_complex(self) -> Complex64 {
        self.0
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.0.norm()
    }

    /// Argument reduced to `[0, 2π)`.
    pub fn arg(self) -> f64 {
        reduce_angle(self.0.arg())
    }
}

impl fmt::Debug for DiscPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiscPoint({} {:+}i)", self.0.re, self.0.im)
    }
}

impl From<DiscPoint> for Complex64 {
    fn from(p: DiscPoint) -> Self {
        p.0
    }
}

/// Reduces an angle to `[0, 2π)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Orientation-preserving disc automorphism `z ↦ e^{iφ} (a − z) / (1 − ā z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusTransform {
    a: DiscPoint,
    phi: f64,
}

impl MobiusTransform {
    pub fn new(a: DiscPoint, phi: f64) -> Self {
        MobiusTransform {
            a,
            phi: reduce_angle(phi),
        }
    }

    pub fn identity() -> Self {
        MobiusTransform {
            a: DiscPoint::ORIGIN,
            phi: PI,
        }
    }

    /// The map sending the origin to `a` (and `a` to the origin).
    pub fn swapping_origin(a: DiscPoint) -> Self {
        MobiusTransform::new(a, 0.0)
    }

    #[inline]
    pub fn a(&self) -> DiscPoint {
        self.a
    }

    #[inline]
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Applies the transform to an unchecked complex number. Points of the
    /// open disc land in the open disc.
    #[inline]
    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        let a = self.a.0;
        Complex64::from_polar(1.0, self.phi) * (a - z) / (Complex64::new(1.0, 0.0) - a.conj() * z)
    }

    pub fn apply(&self, z: DiscPoint) -> DiscPoint {
        DiscPoint::clamped(self.apply_complex(z.0)).expect("finite input maps to a finite point")
    }

    /// `self ∘ other`, i.e. `other` is applied first.
    pub fn compose(&self, other: &MobiusTransform) -> MobiusTransform {
        Self::from_matrix(mat_mul(self.matrix(), other.matrix()))
    }

    pub fn inverse(&self) -> MobiusTransform {
        let [p, q, r, s] = self.matrix();
        Self::from_matrix([s, -q, -r, p])
    }

    /// Coefficients `[α, β, γ, δ]` of `z ↦ (αz + β)/(γz + δ)`.
    fn matrix(&self) -> [Complex64; 4] {
        let rot = Complex64::from_polar(1.0, self.phi);
        let a = self.a.0;
        [-rot, rot * a, -a.conj(), Complex64::new(1.0, 0.0)]
    }

    /// Reads `(a, φ)` back from a disc-preserving coefficient matrix: after
    /// dividing by `δ` the matrix is `[−e^{iφ}, e^{iφ} a, −ā, 1]`.
    fn from_matrix(m: [Complex64; 4]) -> MobiusTransform {
        let [p, _, r, s] = m;
        let a = -(r / s).conj();
        let phi = (-p / s).arg();
        MobiusTransform::new(
            DiscPoint::clamped(a).expect("composition of disc automorphisms is finite"),
            phi,
        )
    }
}

fn mat_mul(x: [Complex64; 4], y: [Complex64; 4]) -> [Complex64; 4] {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

/// Free-function form of [`MobiusTransform::apply`].
pub fn mobius_apply(g: &MobiusTransform, z: DiscPoint) -> DiscPoint {
    g.apply(z)
}

pub fn mobius_compose(g1: &MobiusTransform, g2: &MobiusTransform) -> MobiusTransform {
    g1.compose(g2)
}

pub fn mobius_inverse(g: &MobiusTransform) -> MobiusTransform {
    g.inverse()
}

/// Hyperbolic distance of curvature −1: `2 artanh(|z − w| / |1 − w̄ z|)`.
pub fn hyp_distance(z: DiscPoint, w: DiscPoint) -> f64 {
    hyp_distance_complex(z.0, w.0)
}

pub(crate) fn hyp_distance_complex(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm();
    if num == 0.0 {
        return 0.0;
    }
    let den = (Complex64::new(1.0, 0.0) - w.conj() * z).norm();
    let ratio = (num / den).min(BOUNDARY_GUARD);
    2.0 * ratio.atanh()
}

/// Mean and variance of a one-variate normal law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub m: f64,
    pub var: f64,
}

impl GaussianParams {
    pub fn new(m: f64, var: f64) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::param(format!("gaussian mean must be finite, got {m}")));
        }
        if !(var > 0.0) || !var.is_finite() {
            return Err(Error::param(format!("gaussian variance must be positive, got {var}")));
        }
        Ok(GaussianParams { m, var })
    }
}

/// Maps a disc point to Gaussian parameters through the inverse Cayley
/// transform `ξ = i(1 − ζ)/(1 + ζ)`, with `m = Re ξ` and `var = Im ξ / √2`.
///
/// The variance is floored at [`MIN_VARIANCE`] so points that have collapsed
/// onto the boundary still describe a (nearly deterministic) law.
pub fn disc_to_gaussian(zeta: DiscPoint) -> GaussianParams {
    let one = Complex64::new(1.0, 0.0);
    let xi = Complex64::i() * (one - zeta.0) / (one + zeta.0);
    GaussianParams {
        m: xi.re,
        var: (xi.im / SQRT_2).max(MIN_VARIANCE),
    }
}

/// Inverse of [`disc_to_gaussian`]: `ζ = (i − ξ)/(i + ξ)` with `ξ = m + i√2·var`.
pub fn gaussian_to_disc(p: GaussianParams) -> Result<DiscPoint> {
    if !(p.var > 0.0) {
        return Err(Error::param(format!("gaussian variance must be positive, got {}", p.var)));
    }
    let xi = Complex64::new(p.m, SQRT_2 * p.var);
    let i = Complex64::i();
    DiscPoint::clamped((i - xi) / (i + xi))
}
