//! Points on the unit sphere, geodesic distances, spiral point sets and
//! covering/separation metrics.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Tolerance on `|‖p‖ − 1|` for constructed points.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// A unit vector in R³.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint {
    x: f64,
    y: f64,
    z: f64,
}

impl SpherePoint {
    /// Normalizes `(x, y, z)` onto the sphere. Rejects the zero vector and
    /// non-finite input.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = libm::sqrt(x * x + y * y + z * z);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "({x}, {y}, {z}) cannot be normalized onto the sphere"
            )));
        }
        if libm::fabs(norm - 1.0) <= f64::EPSILON {
            return Ok(Self { x, y, z });
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Point at colatitude `theta` and longitude `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let st = libm::sin(theta);
        Self {
            x: st * libm::cos(phi),
            y: st * libm::sin(phi),
            z: libm::cos(theta),
        }
    }

    pub const NORTH: SpherePoint = SpherePoint { x: 0.0, y: 0.0, z: 1.0 };
    pub const SOUTH: SpherePoint = SpherePoint { x: 0.0, y: 0.0, z: -1.0 };

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }
    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }
    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }

    #[inline]
    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(&self, other: &SpherePoint) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn antipode(&self) -> SpherePoint {
        SpherePoint {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// Geodesic distance in `[0, π]`.
///
/// Computed as `atan2(|a×b|, a·b)`, which unlike `arccos(a·b)` stays accurate
/// for nearly coincident and nearly antipodal points.
#[inline]
pub fn geodesic_distance(a: &SpherePoint, b: &SpherePoint) -> f64 {
    let c = [
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    ];
    libm::atan2(libm::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]), a.dot(b))
}

/// Ordered, nonempty list of sphere points with provenance metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Vec<SpherePoint>,
    pub label: String,
    /// Exactness degree claimed by the producer of the set (e.g. a file header).
    pub claimed_exactness: Option<usize>,
}

impl PointSet {
    pub fn new(points: Vec<SpherePoint>, label: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("point set must be nonempty".into()));
        }
        Ok(Self {
            points,
            label: label.into(),
            claimed_exactness: None,
        })
    }

    pub fn with_claimed_exactness(mut self, mu: Option<usize>) -> Self {
        self.claimed_exactness = mu;
        self
    }

    /// The six vertices `±e₁, ±e₂, ±e₃`.
    pub fn octahedron() -> Self {
        let p = |x, y, z| SpherePoint { x, y, z };
        Self {
            points: alloc::vec![
                p(1.0, 0.0, 0.0),
                p(-1.0, 0.0, 0.0),
                p(0.0, 1.0, 0.0),
                p(0.0, -1.0, 0.0),
                p(0.0, 0.0, 1.0),
                p(0.0, 0.0, -1.0),
            ],
            label: "octahedron".into(),
            claimed_exactness: Some(3),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn iter(&self) -> core::slice::Iter<'_, SpherePoint> {
        self.points.iter()
    }
}

impl core::ops::Index<usize> for PointSet {
    type Output = SpherePoint;
    fn index(&self, i: usize) -> &SpherePoint {
        &self.points[i]
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a SpherePoint;
    type IntoIter = core::slice::Iter<'a, SpherePoint>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// Generalized spiral points.
///
/// For `k = 1..N`: `h_k = −1 + 2(k−1)/(N−1)`, colatitude `arccos(h_k)`,
/// `φ_1 = φ_N = 0` and `φ_k = φ_{k−1} + 3.6/√(N(1−h_k²)) mod 2π` in between.
/// A single point is the north pole.
pub fn generate_spiral(count: usize) -> Result<PointSet> {
    if count == 0 {
        return Err(Error::InvalidArgument("spiral needs at least one point".into()));
    }
    let label = format!("spiral-{count}");
    if count == 1 {
        return PointSet::new(alloc::vec![SpherePoint::NORTH], label);
    }
    let n = count as f64;
    let mut points = Vec::with_capacity(count);
    let mut phi = 0.0_f64;
    for k in 1..=count {
        let h = -1.0 + 2.0 * (k - 1) as f64 / (n - 1.0);
        let p = if k == 1 {
            SpherePoint::SOUTH
        } else if k == count {
            SpherePoint::NORTH
        } else {
            let s2 = 1.0 - h * h;
            phi = libm::fmod(phi + 3.6 / libm::sqrt(n * s2), 2.0 * PI);
            let s = libm::sqrt(s2);
            SpherePoint::new(s * libm::cos(phi), s * libm::sin(phi), h)?
        };
        points.push(p);
    }
    PointSet::new(points, label)
}

/// `min_{i≠j} d(ξ_i, ξ_j)` by exhaustive scan.
pub fn separation_distance(ps: &PointSet) -> Result<f64> {
    if ps.len() < 2 {
        return Err(Error::InvalidArgument(
            "separation distance needs at least two points".into(),
        ));
    }
    let pts = ps.points();
    // the closest pair maximises the dot product; only its distance needs the
    // accurate formula
    let mut best = (f64::NEG_INFINITY, 0, 1);
    for (i, a) in pts.iter().enumerate() {
        for (j, b) in pts.iter().enumerate().skip(i + 1) {
            let d = a.dot(b);
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    Ok(geodesic_distance(&pts[best.1], &pts[best.2]))
}

/// Largest distance from an evaluation point to its nearest node; a lower
/// bound for the true mesh norm that tightens as `eval` gets denser.
pub fn mesh_norm(ps: &PointSet, eval: &PointSet) -> f64 {
    let mut worst = 0.0_f64;
    for x in eval {
        let nearest = ps
            .iter()
            .max_by(|p, q| p.dot(x).total_cmp(&q.dot(x)))
            .expect("point sets are nonempty");
        worst = worst.max(geodesic_distance(nearest, x));
    }
    worst
}

/// Separation, mesh-norm estimate and their ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshReport {
    pub separation: f64,
    pub mesh_norm_estimate: f64,
    pub mesh_ratio: f64,
    pub eval_count: usize,
}

pub fn mesh_report(ps: &PointSet, eval: &PointSet) -> Result<MeshReport> {
    let separation = separation_distance(ps)?;
    let mesh_norm_estimate = mesh_norm(ps, eval);
    let mesh_ratio = if separation > 0.0 {
        mesh_norm_estimate / separation
    } else {
        f64::INFINITY
    };
    Ok(MeshReport {
        separation,
        mesh_norm_estimate,
        mesh_ratio,
        eval_count: eval.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        let p = SpherePoint::new(0.3, -0.2, 0.9).unwrap();
        assert_eq!(geodesic_distance(&p, &p), 0.0);
        assert_eq!(geodesic_distance(&SpherePoint::NORTH, &SpherePoint::SOUTH), PI);
        let e1 = SpherePoint::new(1.0, 0.0, 0.0).unwrap();
        let e2 = SpherePoint::new(0.0, 1.0, 0.0).unwrap();
        assert_eq!(geodesic_distance(&e1, &e2), FRAC_PI_2);
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(SpherePoint::new(0.0, 0.0, 0.0).is_err());
        assert!(SpherePoint::new(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn spiral_small_cases() {
        assert!(generate_spiral(0).is_err());
        let one = generate_spiral(1).unwrap();
        assert_eq!(one.points(), &[SpherePoint::NORTH]);
        let two = generate_spiral(2).unwrap();
        assert_eq!(two.points(), &[SpherePoint::SOUTH, SpherePoint::NORTH]);
    }

    #[test]
    fn spiral_points_distinct_by_brute_force() {
        let ps = generate_spiral(100).unwrap();
        for i in 0..100 {
            for j in i + 1..100 {
                assert!(geodesic_distance(&ps[i], &ps[j]) > 0.0);
            }
        }
        assert!(separation_distance(&ps).unwrap() > 0.0);
    }

    #[test]
    fn spiral_is_deterministic_and_unit() {
        let a = generate_spiral(3844).unwrap();
        let b = generate_spiral(3844).unwrap();
        assert_eq!(a.len(), 3844);
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.coords().map(f64::to_bits), q.coords().map(f64::to_bits));
            assert!((p.norm() - 1.0).abs() <= UNIT_TOLERANCE);
        }
    }

    #[test]
    fn separation_examples() {
        let oct = PointSet::octahedron();
        assert!((separation_distance(&oct).unwrap() - FRAC_PI_2).abs() < 1e-15);
        let p = SpherePoint::new(0.1, 0.2, 0.3).unwrap();
        let dup = PointSet::new(alloc::vec![p, SpherePoint::NORTH, p], "dup").unwrap();
        assert_eq!(separation_distance(&dup).unwrap(), 0.0);
        let single = PointSet::new(alloc::vec![p], "one").unwrap();
        assert!(separation_distance(&single).is_err());
    }

    #[test]
    fn separation_of_spiral_961_matches_pairwise_minimum() {
        let ps = generate_spiral(961).unwrap();
        let mut brute = f64::INFINITY;
        for i in 0..ps.len() {
            for j in 0..ps.len() {
                if i != j {
                    brute = brute.min(geodesic_distance(&ps[i], &ps[j]));
                }
            }
        }
        let sep = separation_distance(&ps).unwrap();
        assert!((sep - brute).abs() < 1e-15);
        assert!((sep - SPIRAL_961_SEPARATION).abs() < 1e-12, "{sep:.17e}");
    }

    // pinned from the exhaustive scan above
    const SPIRAL_961_SEPARATION: f64 = 6.456_093_424_215_362e-2;

    #[test]
    fn mesh_norm_examples() {
        let oct = PointSet::octahedron();
        assert_eq!(mesh_norm(&oct, &oct), 0.0);
        let n = PointSet::new(alloc::vec![SpherePoint::NORTH], "n").unwrap();
        let s = PointSet::new(alloc::vec![SpherePoint::SOUTH], "s").unwrap();
        assert_eq!(mesh_norm(&n, &s), PI);
        // the covering radius of the octahedron is attained at face centers
        let dense = generate_spiral(100_000).unwrap();
        let est = mesh_norm(&oct, &dense);
        let exact = libm::acos(1.0 / libm::sqrt(3.0));
        assert!((est - exact).abs() < 2e-2);
        assert!(est <= exact + 1e-15);
    }

    fn unit() -> impl Strategy<Value = SpherePoint> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 1e-6)
            .prop_map(|(x, y, z)| SpherePoint::new(x, y, z).unwrap())
    }

    proptest! {
        #[test]
        fn constructed_points_are_unit(p in unit()) {
            prop_assert!((p.norm() - 1.0).abs() <= UNIT_TOLERANCE);
        }

        #[test]
        fn distance_is_a_metric(a in unit(), b in unit(), c in unit()) {
            let ab = geodesic_distance(&a, &b);
            prop_assert!((ab - geodesic_distance(&b, &a)).abs() <= 1e-12);
            prop_assert!((0.0..=PI).contains(&ab));
            prop_assert!(geodesic_distance(&a, &c) <= ab + geodesic_distance(&b, &c) + 1e-12);
        }

        #[test]
        fn mesh_norm_monotone_in_eval(count in 2usize..60, extra in 1usize..200) {
            let ps = generate_spiral(count).unwrap();
            let small = generate_spiral(extra).unwrap();
            let big_pts: Vec<SpherePoint> = small
                .iter()
                .chain(generate_spiral(3 * extra).unwrap().iter())
                .copied()
                .collect();
            let big = PointSet::new(big_pts, "union").unwrap();
            prop_assert!(mesh_norm(&ps, &small) <= mesh_norm(&ps, &big));
        }
    }
}
