//! Wendland compactly supported radial profiles and their `δ`-scaled
//! translates `Φ_δ(x, y) = δ^{-2} φ(‖x − y‖ / δ)` in two dimensions.
//!
//! The profiles are unnormalized:
//!
//! | family | `φ(r)` on `[0, 1]`                     | `φ(0)` | `σ`  |
//! |--------|-----------------------------------------|--------|------|
//! | C2     | `(1−r)^4 (4r+1)`                        | 1      | 2.5  |
//! | C4     | `(1−r)^6 (35r²+18r+3)`                  | 3      | 3.5  |
//! | C6     | `(1−r)^8 (32r³+25r²+8r+1)`              | 1      | 4.5  |
//!
//! Second derivatives of a translate are assembled from the radial
//! quantities `φ'(r)/r` and `(φ''(r) − φ'(r)/r)/r²`, which for these
//! polynomials reduce to closed forms without a division by `r` (C2 keeps a
//! bounded `1/r` factor in the second one that is multiplied by `z zᵀ`).

use std::fmt;
use std::str::FromStr;

use nalgebra::{Point2, Vector2};

use crate::error::{Error, Result};
use crate::operator::HessianSample;

pub type Point = Point2<f64>;

/// Spatial dimension of every domain handled by this crate.
pub const DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    C2,
    C4,
    C6,
}

/// Profile value and its first two radial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileJet {
    pub phi: f64,
    pub dphi: f64,
    pub ddphi: f64,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [KernelFamily::C2, KernelFamily::C4, KernelFamily::C6];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::C2 => "C2",
            KernelFamily::C4 => "C4",
            KernelFamily::C6 => "C6",
        }
    }

    /// `k` such that the profile is `C^{2k}`.
    pub fn smoothness(self) -> u32 {
        match self {
            KernelFamily::C2 => 1,
            KernelFamily::C4 => 2,
            KernelFamily::C6 => 3,
        }
    }

    /// Sobolev order `σ = k + d/2 + 1/2` of the native space.
    pub fn sobolev_order(self) -> f64 {
        self.smoothness() as f64 + DIM as f64 / 2.0 + 0.5
    }

    pub fn value_at_origin(self) -> f64 {
        self.profile(0.0).phi
    }

    /// Checked variant of [`KernelFamily::profile`].
    pub fn radial_profile(self, r: f64) -> Result<ProfileJet> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!(
                "radial profile needs r >= 0, got {r}"
            )));
        }
        Ok(self.profile(r))
    }

    /// Profile value and derivatives. Callers guarantee `r >= 0`.
    #[inline]
    pub fn profile(self, r: f64) -> ProfileJet {
        if r >= 1.0 {
            return ProfileJet {
                phi: 0.0,
                dphi: 0.0,
                ddphi: 0.0,
            };
        }
        let s = 1.0 - r;
        match self {
            KernelFamily::C2 => {
                let s2 = s * s;
                let s3 = s2 * s;
                ProfileJet {
                    phi: s3 * s * (4.0 * r + 1.0),
                    dphi: -20.0 * r * s3,
                    ddphi: 20.0 * s2 * (4.0 * r - 1.0),
                }
            }
            KernelFamily::C4 => {
                let s4 = (s * s) * (s * s);
                let s5 = s4 * s;
                ProfileJet {
                    phi: s5 * s * (35.0 * r * r + 18.0 * r + 3.0),
                    dphi: -56.0 * r * s5 * (5.0 * r + 1.0),
                    ddphi: 56.0 * s4 * (35.0 * r * r - 4.0 * r - 1.0),
                }
            }
            KernelFamily::C6 => {
                let s6 = (s * s) * (s * s) * (s * s);
                let s7 = s6 * s;
                ProfileJet {
                    phi: s7 * s * (((32.0 * r + 25.0) * r + 8.0) * r + 1.0),
                    dphi: -22.0 * r * s7 * ((16.0 * r + 7.0) * r + 1.0),
                    ddphi: 22.0 * s6 * (((160.0 * r + 15.0) * r - 6.0) * r - 1.0),
                }
            }
        }
    }

    /// `(φ'(r)/r, (φ''(r) − φ'(r)/r)/r²)` in closed form.
    ///
    /// For C2 the second term is `60(1−r)²/r`; it only ever multiplies
    /// `z zᵀ` with `|z| = r`, so its value at `r = 0` is irrelevant and is
    /// returned as 0.
    #[inline]
    pub fn hessian_terms(self, r: f64) -> (f64, f64) {
        if r >= 1.0 {
            return (0.0, 0.0);
        }
        let s = 1.0 - r;
        match self {
            KernelFamily::C2 => {
                let s2 = s * s;
                let g2 = if r > 0.0 { 60.0 * s2 / r } else { 0.0 };
                (-20.0 * s2 * s, g2)
            }
            KernelFamily::C4 => {
                let s4 = (s * s) * (s * s);
                (-56.0 * s4 * s * (5.0 * r + 1.0), 1680.0 * s4)
            }
            KernelFamily::C6 => {
                let s6 = (s * s) * (s * s) * (s * s);
                (
                    -22.0 * s6 * s * ((16.0 * r + 7.0) * r + 1.0),
                    528.0 * s6 * (6.0 * r + 1.0),
                )
            }
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "C2" => Ok(KernelFamily::C2),
            "C4" => Ok(KernelFamily::C4),
            "C6" => Ok(KernelFamily::C6),
            other => Err(Error::Domain(format!("unknown kernel family {other:?}"))),
        }
    }
}

/// Value, gradient and Hessian of a function at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub grad: Vector2<f64>,
    pub hess: HessianSample,
}

impl Jet {
    pub const ZERO: Jet = Jet {
        value: 0.0,
        grad: Vector2::new(0.0, 0.0),
        hess: HessianSample {
            uxx: 0.0,
            uxy: 0.0,
            uyy: 0.0,
        },
    };

    #[inline]
    pub fn scaled_add(&mut self, alpha: f64, other: &Jet) {
        self.value += alpha * other.value;
        self.grad += alpha * other.grad;
        self.hess.uxx += alpha * other.hess.uxx;
        self.hess.uxy += alpha * other.hess.uxy;
        self.hess.uyy += alpha * other.hess.uyy;
    }
}

/// A Wendland profile with support radius `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledKernel {
    family: KernelFamily,
    delta: f64,
}

impl ScaledKernel {
    pub fn new(family: KernelFamily, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Domain(format!(
                "kernel scale must lie in (0, 1], got {delta}"
            )));
        }
        Ok(ScaledKernel { family, delta })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Support radius.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        let dist = (x - y).norm();
        if dist >= self.delta {
            return 0.0;
        }
        self.family.profile(dist / self.delta).phi / (self.delta * self.delta)
    }

    /// Value, gradient and Hessian with respect to `x`.
    #[inline]
    pub fn jet(&self, x: &Point, y: &Point) -> Jet {
        let d = self.delta;
        let dist = (x - y).norm();
        if dist >= d {
            return Jet::ZERO;
        }
        let z = (x - y) / d;
        let r = dist / d;
        let inv_d2 = 1.0 / (d * d);
        let phi = self.family.profile(r).phi;
        let (g1, g2) = self.family.hessian_terms(r);
        let inv_d3 = inv_d2 / d;
        let inv_d4 = inv_d2 * inv_d2;
        Jet {
            value: inv_d2 * phi,
            grad: z * (inv_d3 * g1),
            hess: HessianSample {
                uxx: inv_d4 * (g1 + g2 * z.x * z.x),
                uxy: inv_d4 * (g2 * z.x * z.y),
                uyy: inv_d4 * (g1 + g2 * z.y * z.y),
            },
        }
    }
}
