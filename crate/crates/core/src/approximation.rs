//! The four approximation operators: discrete least squares, de la Vallée
//! Poussin means of least squares, hyperinterpolation and filtered
//! hyperinterpolation.
//!
//! Every operator returns an [`Approximant`] in the harmonic basis. Least
//! squares goes through a [`DiscreteOrthonormalBasis`]: the Householder QR
//! `A = Q·R` of the design matrix gives the node values `Q` of a basis
//! `I_1, I_2, …` orthonormal for `<f, g>_N = Σ f(ξ_i)g(ξ_i)`, and `R` maps
//! harmonic coefficients to `I`-coefficients. Because `R` is upper triangular
//! and the harmonics are ordered by degree, the first `(r+1)²` functions `I_k`
//! span `P_r` for every `r`, so the mean of the projections of degree
//! `n−m..n+m` is a per-degree scaling of the `I`-coefficients.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{PointSet, SpherePoint};
use crate::harmonics::{build_design_matrix, degree_of, dim, HarmonicEvaluator};
use crate::linalg::{dot, solve_upper, solve_upper_transposed, HouseholderQr, Matrix};
use crate::quadrature::QuadratureRule;

/// Relative threshold on the diagonal of `R` below which the nodes are
/// treated as not unisolvent.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

/// `m = ⌊θn⌋` for `θ ∈ [0, 1]`.
pub fn ray(n: usize, theta: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(alloc::format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    // nudge so that e.g. 0.3·10 = 3.0000000000000004 and 0.29·100 = 28.999999999999996 floor as intended
    Ok(libm::floor(theta * n as f64 + 1e-9) as usize)
}

/// Which operator produced an approximant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorTag {
    Ls,
    VpLs,
    Hyper,
    FHyper,
}

impl OperatorTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            OperatorTag::Ls => "LS",
            OperatorTag::VpLs => "VP_LS",
            OperatorTag::Hyper => "HYPER",
            OperatorTag::FHyper => "FHYPER",
        }
    }
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperatorTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LS" => Ok(OperatorTag::Ls),
            "VP_LS" => Ok(OperatorTag::VpLs),
            "HYPER" => Ok(OperatorTag::Hyper),
            "FHYPER" => Ok(OperatorTag::FHyper),
            other => Err(Error::InvalidArgument(alloc::format!("unknown operator {other}"))),
        }
    }
}

/// Per-degree weights of the de la Vallée Poussin mean: degree `ℓ` survives in
/// `min(n+m−ℓ+1, 2m+1)` of the `2m+1` averaged projections.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterWeights {
    n: usize,
    m: usize,
    weights: Vec<f64>,
}

impl FilterWeights {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if m > n {
            return Err(Error::InvalidArgument(alloc::format!(
                "ray {m} exceeds degree {n}"
            )));
        }
        let denom = (2 * m + 1) as f64;
        let weights = (0..=n + m)
            .map(|l| {
                if l + m <= n {
                    1.0
                } else {
                    (n + m - l + 1) as f64 / denom
                }
            })
            .collect();
        Ok(Self { n, m, weights })
    }

    /// The unfiltered projection onto `P_n`.
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            m: 0,
            weights: vec![1.0; n + 1],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Highest degree with a nonzero weight, `n + m`.
    pub fn max_degree(&self) -> usize {
        self.n + self.m
    }

    /// `w_ℓ` for `ℓ = 0..=n+m`.
    pub fn per_degree(&self) -> &[f64] {
        &self.weights
    }

    /// `w_ℓ`, zero beyond `n + m`.
    pub fn weight(&self, ell: usize) -> f64 {
        self.weights.get(ell).copied().unwrap_or(0.0)
    }

    /// Weights expanded to the `(n+m+1)²` flat harmonic slots.
    pub fn per_slot(&self) -> Vec<f64> {
        (0..dim(self.max_degree()))
            .map(|k| self.weights[degree_of(k)])
            .collect()
    }
}

/// Basis of `P_n` orthonormal with respect to the discrete inner product on
/// a point set.
#[derive(Clone, Debug)]
pub struct DiscreteOrthonormalBasis {
    node_values: Matrix,
    transform: Matrix,
    degree: usize,
    points: PointSet,
}

pub fn build_orthonormal_basis(ps: &PointSet, n: usize) -> Result<DiscreteOrthonormalBasis> {
    build_orthonormal_basis_with_tolerance(ps, n, DEFAULT_RANK_TOLERANCE)
}

pub fn build_orthonormal_basis_with_tolerance(
    ps: &PointSet,
    n: usize,
    rank_tolerance: f64,
) -> Result<DiscreteOrthonormalBasis> {
    let d = dim(n);
    if ps.len() < d {
        return Err(Error::TooFewPoints {
            degree: n,
            needed: d,
            got: ps.len(),
        });
    }
    let design = build_design_matrix(ps, n).values;
    let qr = HouseholderQr::factor(&design);
    let r = qr.r();
    let largest = (0..d).map(|k| libm::fabs(r[(k, k)])).fold(0.0, f64::max);
    if let Some(k) = (0..d).find(|&k| !(libm::fabs(r[(k, k)]) >= rank_tolerance * largest)) {
        return Err(Error::PointsNotUnisolvent { degree: degree_of(k) });
    }
    Ok(DiscreteOrthonormalBasis {
        node_values: qr.thin_q(),
        transform: r,
        degree: n,
        points: ps.clone(),
    })
}

impl DiscreteOrthonormalBasis {
    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn points(&self) -> &PointSet {
        &self.points
    }

    /// `N × (n+1)²` matrix with entries `I_r(ξ_j)`.
    #[inline]
    pub fn node_values(&self) -> &Matrix {
        &self.node_values
    }

    /// Upper-triangular map from harmonic coefficients to `I`-coefficients.
    #[inline]
    pub fn transform(&self) -> &Matrix {
        &self.transform
    }

    /// `‖QᵀQ − I‖_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        self.node_values.tr_matmul(&self.node_values).identity_defect()
    }

    /// Leading `(r+1)²` block of the transform.
    pub(crate) fn transform_block(&self, r: usize) -> Matrix {
        let d = dim(r);
        Matrix::from_fn(d, d, |i, j| self.transform[(i, j)])
    }

    /// `I_k(x)` for `k = 1..(n+1)²`, i.e. `R⁻ᵀ·Y(x)`.
    pub fn eval_basis(&self, x: &SpherePoint) -> Vec<f64> {
        let y = HarmonicEvaluator::new(self.degree).eval(x);
        solve_upper_transposed(&self.transform, &y)
    }

    /// Discrete reproducing kernel `H_n(x, y) = Σ_r I_r(x)·I_r(y)`.
    pub fn kernel(&self, x: &SpherePoint, y: &SpherePoint) -> f64 {
        dot(&self.eval_basis(x), &self.eval_basis(y))
    }

    /// `H_n(ξ_i, ξ_j)` from the stored node values.
    pub fn node_kernel(&self, i: usize, j: usize) -> f64 {
        let q = &self.node_values;
        (0..q.cols()).map(|k| q[(i, k)] * q[(j, k)]).sum()
    }

    /// `⟨f, I_k⟩_N` for `k` up to `(degree+1)²`.
    fn discrete_coefficients(&self, samples: &[f64], degree: usize) -> Result<Vec<f64>> {
        if samples.len() != self.points.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} samples for {} nodes",
                samples.len(),
                self.points.len()
            )));
        }
        Ok((0..dim(degree))
            .map(|k| dot(self.node_values.column(k), samples))
            .collect())
    }

    /// Harmonic coefficients of `Σ_k w_k ⟨f, I_k⟩_N I_k` truncated to `degree`.
    fn filtered_fit(&self, samples: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
        let degree = degree_of(weights.len() - 1);
        if degree > self.degree {
            return Err(Error::InvalidArgument(alloc::format!(
                "basis has degree {}, fit needs {}",
                self.degree,
                degree
            )));
        }
        let mut a = self.discrete_coefficients(samples, degree)?;
        a.iter_mut().zip(weights).for_each(|(v, w)| *v *= w);
        Ok(solve_upper(&self.transform_block(degree), &a))
    }
}

/// A spherical polynomial in the harmonic basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Approximant {
    pub coeffs: Vec<f64>,
    pub degree: usize,
    pub tag: OperatorTag,
    /// Nominal degree `n` of the operator.
    pub n: usize,
    /// Ray `m = ⌊θn⌋` (zero for LS and HYPER).
    pub m: usize,
    pub theta: f64,
}

impl Approximant {
    /// Wraps a coefficient vector whose length must be a perfect square.
    pub fn from_coeffs(coeffs: Vec<f64>, tag: OperatorTag, n: usize, m: usize, theta: f64) -> Result<Self> {
        let degree = degree_of(coeffs.len().max(1) - 1);
        if coeffs.len() != dim(degree) {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} coefficients is not a full degree block",
                coeffs.len()
            )));
        }
        Ok(Self {
            coeffs,
            degree,
            tag,
            n,
            m,
            theta,
        })
    }

    pub fn eval(&self, p: &SpherePoint) -> f64 {
        dot(&HarmonicEvaluator::new(self.degree).eval(p), &self.coeffs)
    }

    /// Label such as `LS` with its parameters.
    pub fn describe(&self) -> String {
        alloc::format!("{} n={} m={} theta={}", self.tag, self.n, self.m, self.theta)
    }
}

/// Values of `approx` at every point of `pts`.
pub fn evaluate(approx: &Approximant, pts: &PointSet) -> Vec<f64> {
    let eval = HarmonicEvaluator::new(approx.degree);
    let mut buf = vec![0.0; eval.len()];
    pts.iter()
        .map(|p| {
            eval.eval_into(p, &mut buf);
            dot(&buf, &approx.coeffs)
        })
        .collect()
}

/// Discrete least-squares fit `Ŝ_n f` at the basis degree.
pub fn ls_fit(basis: &DiscreteOrthonormalBasis, samples: &[f64]) -> Result<Approximant> {
    ls_fit_degree(basis, samples, basis.degree)
}

/// Least-squares fit of degree `r ≤ basis.degree()`, reusing the nested basis.
pub fn ls_fit_degree(basis: &DiscreteOrthonormalBasis, samples: &[f64], r: usize) -> Result<Approximant> {
    let coeffs = basis.filtered_fit(samples, &vec![1.0; dim(r)])?;
    Approximant::from_coeffs(coeffs, OperatorTag::Ls, r, 0, 0.0)
}

/// Mean `Ṽ_n^m f` of the least-squares fits of degrees `n−m..n+m`,
/// `m = ⌊θn⌋`. The basis must have degree at least `n + m`.
pub fn vp_mean_fit(
    basis: &DiscreteOrthonormalBasis,
    samples: &[f64],
    n: usize,
    theta: f64,
) -> Result<Approximant> {
    let m = ray(n, theta)?;
    let filter = FilterWeights::new(n, m)?;
    if basis.degree < filter.max_degree() {
        return Err(Error::InvalidArgument(alloc::format!(
            "basis has degree {}, the mean needs {}",
            basis.degree,
            filter.max_degree()
        )));
    }
    let coeffs = basis.filtered_fit(samples, &filter.per_slot())?;
    Approximant::from_coeffs(coeffs, OperatorTag::VpLs, n, m, theta)
}

fn check_samples(rule: &QuadratureRule, samples: &[f64]) -> Result<()> {
    if samples.len() != rule.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "{} samples for {} nodes",
            samples.len(),
            rule.len()
        )));
    }
    Ok(())
}

/// `Σ_i λ_i f(ξ_i) Y_k(ξ_i)` scaled per slot.
fn weighted_moments(rule: &QuadratureRule, samples: &[f64], slot_weights: &[f64]) -> Vec<f64> {
    let degree = degree_of(slot_weights.len() - 1);
    let eval = HarmonicEvaluator::new(degree);
    let mut coeffs = vec![0.0; slot_weights.len()];
    let mut buf = vec![0.0; slot_weights.len()];
    for ((p, &lambda), &f) in rule.points().iter().zip(rule.weights()).zip(samples) {
        eval.eval_into(p, &mut buf);
        let s = lambda * f;
        coeffs.iter_mut().zip(&buf).for_each(|(c, y)| *c += s * y);
    }
    coeffs.iter_mut().zip(slot_weights).for_each(|(c, w)| *c *= w);
    coeffs
}

/// Hyperinterpolation `L_n f`; needs a rule exact to degree `2n`.
pub fn hyper_fit(rule: &QuadratureRule, samples: &[f64], n: usize) -> Result<Approximant> {
    if rule.exactness() < 2 * n {
        return Err(Error::InsufficientExactness {
            required: 2 * n,
            available: rule.exactness(),
        });
    }
    check_samples(rule, samples)?;
    let coeffs = weighted_moments(rule, samples, &vec![1.0; dim(n)]);
    Approximant::from_coeffs(coeffs, OperatorTag::Hyper, n, 0, 0.0)
}

/// Filtered hyperinterpolation `V_n^m f`, `m = ⌊θn⌋`; needs a rule exact to
/// degree `4n`.
pub fn filtered_hyper_fit(
    rule: &QuadratureRule,
    samples: &[f64],
    n: usize,
    theta: f64,
) -> Result<Approximant> {
    if rule.exactness() < 4 * n {
        return Err(Error::InsufficientExactness {
            required: 4 * n,
            available: rule.exactness(),
        });
    }
    check_samples(rule, samples)?;
    let m = ray(n, theta)?;
    let filter = FilterWeights::new(n, m)?;
    let coeffs = weighted_moments(rule, samples, &filter.per_slot());
    Approximant::from_coeffs(coeffs, OperatorTag::FHyper, n, m, theta)
}
