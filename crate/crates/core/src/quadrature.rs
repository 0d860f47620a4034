//! Positive-weight quadrature rules on the sphere: solving for weights,
//! verifying exactness, and the node diagnostics that accompany them.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, mesh_norm, PointSet};
use crate::harmonics::{build_design_matrix, dim, HarmonicEvaluator};
use crate::linalg::{solve_upper, solve_upper_transposed, HouseholderQr, Matrix};

/// Surface area of the unit sphere.
pub const SPHERE_AREA: f64 = 4.0 * PI;

/// Residual below which a rule counts as exact.
pub const EXACTNESS_TOLERANCE: f64 = 1e-10 * SPHERE_AREA;

/// `∫ Y_1 dσ = 4π · (1/√(4π)) = 2√π`; every other harmonic integrates to zero.
pub fn constant_harmonic_integral() -> f64 {
    2.0 * libm::sqrt(PI)
}

/// A positive-weight rule exact on `P_μ`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    points: PointSet,
    weights: Vec<f64>,
    exactness: usize,
    residual: f64,
}

impl QuadratureRule {
    /// Validates externally supplied weights: positivity, exactness to degree
    /// `mu` and the cardinality bound for even `mu`.
    pub fn from_weights(points: PointSet, weights: Vec<f64>, mu: usize) -> Result<Self> {
        if weights.len() != points.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} weights for {} points",
                weights.len(),
                points.len()
            )));
        }
        let design = build_design_matrix(&points, mu).values;
        let residual = exactness_residual(&design, &weights);
        Self::checked(points, weights, mu, residual)
    }

    fn checked(points: PointSet, weights: Vec<f64>, mu: usize, residual: f64) -> Result<Self> {
        // NaN residuals come from singular solves and must fail too
        if !(residual <= EXACTNESS_TOLERANCE) {
            return Err(Error::ExactnessUnachievable {
                residual,
                tolerance: EXACTNESS_TOLERANCE,
            });
        }
        let (index, weight) = weights
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, w)| if w < best.1 { (i, w) } else { best });
        if !(weight > 0.0) {
            return Err(Error::NotPositive { index, weight });
        }
        if mu.is_multiple_of(2) {
            let half = mu / 2 + 1;
            if points.len() <= half * half {
                return Err(Error::Cardinality {
                    points: points.len(),
                    exactness: mu,
                });
            }
        }
        Ok(Self {
            points,
            weights,
            exactness: mu,
            residual,
        })
    }

    #[inline]
    pub fn points(&self) -> &PointSet {
        &self.points
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn exactness(&self) -> usize {
        self.exactness
    }

    /// Exactness defect measured when the rule was built.
    #[inline]
    pub fn residual(&self) -> f64 {
        self.residual
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Σ λ_i g(ξ_i)`.
    pub fn integrate(&self, mut g: impl FnMut(&crate::geometry::SpherePoint) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * g(p))
            .sum()
    }
}

/// `max_k |Σ_i λ_i Y_k(ξ_i) − ∫Y_k dσ|` over the columns of `design`.
fn exactness_residual(design: &Matrix, weights: &[f64]) -> f64 {
    let moments = design.tr_mul_vec(weights);
    let c0 = constant_harmonic_integral();
    moments
        .iter()
        .enumerate()
        .map(|(k, &v)| libm::fabs(if k == 0 { v - c0 } else { v }))
        .fold(0.0, |a: f64, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

/// Minimum-norm weights for exactness `mu`.
///
/// Solves `Aᵀλ = b` where `A` samples all harmonics of degree `≤ mu` at the
/// nodes and `b = (2√π, 0, …, 0)`. With at least `(mu+1)²` nodes the
/// minimum-norm solution is `λ = Q·R⁻ᵀ·b` from `A = QR`; with fewer nodes the
/// system is overdetermined and the least-squares solution is returned,
/// which will normally fail the exactness check.
pub fn solve_weights(ps: &PointSet, mu: usize) -> Result<QuadratureRule> {
    let design = build_design_matrix(ps, mu).values;
    let d = dim(mu);
    let n = ps.len();
    let mut b = vec![0.0; d];
    b[0] = constant_harmonic_integral();

    let weights = if n >= d {
        let qr = HouseholderQr::factor(&design);
        let y = solve_upper_transposed(&qr.r(), &b);
        qr.q_mul(&y)
    } else {
        let qr = HouseholderQr::factor(&design.transpose());
        let qtb = qr.qt_mul(&b);
        solve_upper(&qr.r(), &qtb)
    };
    let residual = exactness_residual(&design, &weights);
    QuadratureRule::checked(ps.clone(), weights, mu, residual)
}

/// Largest exactness defect of `rule` over all harmonics of degree `≤ mu`.
pub fn verify_exactness(rule: &QuadratureRule, mu: usize) -> f64 {
    let design = build_design_matrix(rule.points(), mu).values;
    exactness_residual(&design, rule.weights())
}

/// `[(1/n²) Σ_i |Q(ξ_i)|] / [∫|Q| dσ]` for the polynomial with harmonic
/// coefficients `coeffs`, the integral estimated by `reference` applied to
/// `|Q|`.
pub fn marcinkiewicz_quotient(
    ps: &PointSet,
    n: usize,
    coeffs: &[f64],
    reference: &QuadratureRule,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("degree must be positive".into()));
    }
    if coeffs.len() != dim(n) {
        return Err(Error::InvalidArgument(alloc::format!(
            "expected {} coefficients, got {}",
            dim(n),
            coeffs.len()
        )));
    }
    let eval = HarmonicEvaluator::new(n);
    let mut buf = vec![0.0; dim(n)];
    let mut abs_value = |p: &crate::geometry::SpherePoint| {
        eval.eval_into(p, &mut buf);
        libm::fabs(crate::linalg::dot(&buf, coeffs))
    };
    let discrete: f64 = ps.iter().map(&mut abs_value).sum::<f64>() / (n * n) as f64;
    let continuous = reference.integrate(&mut abs_value);
    Ok(discrete / continuous)
}

/// Empirical Marcinkiewicz constant: the largest quotient over `trials`
/// random unit-norm coefficient vectors in `P_n`. An estimate, never a bound.
pub fn marcinkiewicz_ratio(
    ps: &PointSet,
    n: usize,
    trials: usize,
    reference: &QuadratureRule,
    seed: u64,
) -> Result<f64> {
    if reference.exactness() < 2 * n {
        return Err(Error::InsufficientExactness {
            required: 2 * n,
            available: reference.exactness(),
        });
    }
    if trials == 0 {
        log::warn!("marcinkiewicz_ratio called with zero trials; returning 0");
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    for _ in 0..trials {
        let mut c: Vec<f64> = (0..dim(n)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = libm::sqrt(c.iter().map(|v| v * v).sum());
        c.iter_mut().for_each(|v| *v /= norm);
        best = best.max(marcinkiewicz_quotient(ps, n, &c, reference)?);
    }
    Ok(best)
}

/// Covering and local-density figures for the sufficient condition of
/// positive quadrature existence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HpDiagnostic {
    /// Smallest `δ` such that caps of radius `δ/n` around the nodes cover the
    /// evaluation grid.
    pub delta_cover: f64,
    /// Whether the supplied `δ` reaches `delta_cover`.
    pub covers: bool,
    /// `max_i |{ξ_j : d(ξ_j, ξ_i) ≤ δ/n}|` (each node counts itself).
    pub local_count_max: usize,
}

// slack for neighbours sitting exactly on the cap boundary
const CAP_SLACK: f64 = 1e-12;

pub fn hp_diagnostic(ps: &PointSet, n: usize, delta: f64, eval: &PointSet) -> Result<HpDiagnostic> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("degree must be positive".into()));
    }
    let radius = delta / n as f64;
    let delta_cover = n as f64 * mesh_norm(ps, eval);
    let pts = ps.points();
    let local_count_max = pts
        .iter()
        .map(|a| {
            pts.iter()
                .filter(|b| geodesic_distance(a, b) <= radius + CAP_SLACK)
                .count()
        })
        .max()
        .unwrap_or(0);
    Ok(HpDiagnostic {
        delta_cover,
        covers: delta_cover <= delta,
        local_count_max,
    })
}
