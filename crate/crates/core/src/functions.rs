//! Benchmark functions on the sphere.
//!
//! `f1` is a sum of four Gaussian-type bumps, `fcone` a cone of height 2 that
//! is continuous but not differentiable on its rim, and `f2 = f1 + fcone`.
//! The second term of `f1` deliberately uses linear (not squared) `y` and `z`
//! arguments.

use core::f64::consts::FRAC_1_SQRT_2;

use crate::geometry::{geodesic_distance, SpherePoint};

/// Cone radius in radians.
pub const CONE_RADIUS: f64 = 0.5;

/// A circle `{x : d(center, x) = radius}` along which a function is not smooth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularCircle {
    pub center: SpherePoint,
    pub radius: f64,
}

/// Apex of the cone, `(1/2, 1/2, 1/√2)`.
pub fn cone_center() -> SpherePoint {
    SpherePoint::new(0.5, 0.5, FRAC_1_SQRT_2).expect("nonzero constant")
}

pub fn fcone_circle() -> SingularCircle {
    SingularCircle {
        center: cone_center(),
        radius: CONE_RADIUS,
    }
}

pub fn f1(p: &SpherePoint) -> f64 {
    let (x, y, z) = (9.0 * p.x(), 9.0 * p.y(), 9.0 * p.z());
    let sq = |t: f64| t * t;
    0.75 * libm::exp(-sq(x - 2.0) / 4.0 - sq(y - 2.0) / 4.0 - sq(z - 2.0) / 4.0)
        + 0.75 * libm::exp(-sq(x + 1.0) / 49.0 - (y + 1.0) / 10.0 - (z + 1.0) / 10.0)
        + 0.5 * libm::exp(-sq(x - 7.0) / 4.0 - sq(y - 3.0) / 4.0 - sq(z - 5.0) / 4.0)
        - 0.2 * libm::exp(-sq(x - 4.0) - sq(y - 7.0) - sq(z - 5.0))
}

pub fn fcone(p: &SpherePoint) -> f64 {
    let d = geodesic_distance(&cone_center(), p);
    if d <= CONE_RADIUS {
        2.0 * (1.0 - d / CONE_RADIUS)
    } else {
        0.0
    }
}

pub fn f2(p: &SpherePoint) -> f64 {
    f1(p) + fcone(p)
}

fn one(_: &SpherePoint) -> f64 {
    1.0
}

fn expx(p: &SpherePoint) -> f64 {
    libm::exp(p.x())
}

/// A named function with an optional singular circle for error masking.
#[derive(Clone, Copy, Debug)]
pub struct TestFunction {
    pub name: &'static str,
    pub eval: fn(&SpherePoint) -> f64,
    pub singular_circle: Option<SingularCircle>,
}

impl TestFunction {
    #[inline]
    pub fn eval(&self, p: &SpherePoint) -> f64 {
        (self.eval)(p)
    }
}

/// Names accepted by [`test_function`].
pub const TEST_FUNCTION_NAMES: [&str; 5] = ["f1", "fcone", "f2", "one", "expx"];

pub fn test_function(name: &str) -> Option<TestFunction> {
    let (name, eval, singular): (&'static str, fn(&SpherePoint) -> f64, bool) = match name {
        "f1" => ("f1", f1, false),
        "fcone" => ("fcone", fcone, true),
        "f2" => ("f2", f2, true),
        "one" => ("one", one, false),
        "expx" => ("expx", expx, false),
        _ => return None,
    };
    Some(TestFunction {
        name,
        eval,
        singular_circle: singular.then(fcone_circle),
    })
}
