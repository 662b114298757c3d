//! Manufactured solutions with closed-form data and derivatives.
//!
//! | name | `u*`                   | `f = det D²u*`              |
//! |------|------------------------|-----------------------------|
//! | MA1  | `exp((x²+y²)/2)`       | `(1+x²+y²) exp(x²+y²)`      |
//! | MA2  | `(x²+y²)/2`            | `1`                         |
//! | MA3  | `x² + y² + exp(x)`     | `2(2 + exp(x))`             |
//!
//! In every case `g = u*` on the boundary.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::kernel::{Jet, Point};
use crate::operator::{HessianSample, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Manufactured {
    Ma1,
    Ma2,
    Ma3,
}

impl Manufactured {
    pub const ALL: [Manufactured; 3] = [Manufactured::Ma1, Manufactured::Ma2, Manufactured::Ma3];

    pub fn name(self) -> &'static str {
        match self {
            Manufactured::Ma1 => "MA1",
            Manufactured::Ma2 => "MA2",
            Manufactured::Ma3 => "MA3",
        }
    }

    pub fn exact(self, p: &Point) -> f64 {
        let r2 = p.x * p.x + p.y * p.y;
        match self {
            Manufactured::Ma1 => (0.5 * r2).exp(),
            Manufactured::Ma2 => 0.5 * r2,
            Manufactured::Ma3 => r2 + p.x.exp(),
        }
    }

    pub fn exact_jet(self, p: &Point) -> Jet {
        let (x, y) = (p.x, p.y);
        match self {
            Manufactured::Ma1 => {
                let u = (0.5 * (x * x + y * y)).exp();
                Jet {
                    value: u,
                    grad: Vector2::new(x * u, y * u),
                    hess: HessianSample::new((1.0 + x * x) * u, x * y * u, (1.0 + y * y) * u),
                }
            }
            Manufactured::Ma2 => Jet {
                value: 0.5 * (x * x + y * y),
                grad: Vector2::new(x, y),
                hess: HessianSample::new(1.0, 0.0, 1.0),
            },
            Manufactured::Ma3 => {
                let e = x.exp();
                Jet {
                    value: x * x + y * y + e,
                    grad: Vector2::new(2.0 * x + e, 2.0 * y),
                    hess: HessianSample::new(2.0 + e, 0.0, 2.0),
                }
            }
        }
    }

    pub fn source(self, p: &Point) -> f64 {
        let r2 = p.x * p.x + p.y * p.y;
        match self {
            Manufactured::Ma1 => (1.0 + r2) * r2.exp(),
            Manufactured::Ma2 => 1.0,
            Manufactured::Ma3 => 2.0 * (2.0 + p.x.exp()),
        }
    }

    pub fn problem(self, domain: Domain) -> Problem {
        Problem::new(
            self.name(),
            domain,
            move |p| self.source(p),
            move |p| self.exact(p),
        )
        .with_exact(move |p| self.exact(p))
    }
}

impl fmt::Display for Manufactured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Manufactured {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MA1" => Ok(Manufactured::Ma1),
            "MA2" => Ok(Manufactured::Ma2),
            "MA3" => Ok(Manufactured::Ma3),
            other => Err(Error::Domain(format!("unknown catalog problem {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::ma_det;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Independent check of the closed forms: finite differences of the
    // value give the Hessian, whose determinant must equal the source.
    #[test]
    fn source_is_det_of_fd_hessian() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = 1e-4;
        for m in Manufactured::ALL {
            for _ in 0..50 {
                let p = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let u = |dx: f64, dy: f64| m.exact(&Point::new(p.x + dx, p.y + dy));
                let uxx = (u(e, 0.0) - 2.0 * u(0.0, 0.0) + u(-e, 0.0)) / (e * e);
                let uyy = (u(0.0, e) - 2.0 * u(0.0, 0.0) + u(0.0, -e)) / (e * e);
                let uxy = (u(e, e) - u(e, -e) - u(-e, e) + u(-e, -e)) / (4.0 * e * e);
                let fd = HessianSample::new(uxx, uxy, uyy);
                let f = m.source(&p);
                assert!((ma_det(&fd) - f).abs() <= 1e-5 * f, "{m} at {p}");
                let jet = m.exact_jet(&p);
                assert!((ma_det(&jet.hess) - f).abs() <= 1e-12 * f);
                assert!((jet.hess.uxx - uxx).abs() <= 1e-5 * (1.0 + uxx.abs()));
                assert!((jet.value - m.exact(&p)).abs() == 0.0);
                assert!(f > 0.0);
            }
        }
    }
}
