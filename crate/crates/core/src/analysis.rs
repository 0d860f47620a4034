//! Lebesgue functions and constants, sup-norm errors and growth fits.
//!
//! All suprema are maxima over a finite evaluation grid, hence lower bounds
//! of the true values; reports carry the grid size.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::approximation::{evaluate, ray, Approximant, DiscreteOrthonormalBasis, FilterWeights, OperatorTag};
use crate::error::{Error, Result};
use crate::functions::SingularCircle;
use crate::geometry::{geodesic_distance, PointSet, SpherePoint};
use crate::harmonics::{dim, legendre_series, sample_rows, weighted_kernel_coeffs, HarmonicEvaluator};
use crate::linalg::{dot, gemm, invert_upper, solve_upper_transposed, Matrix};
use crate::quadrature::QuadratureRule;

/// Evaluation points handled per matrix product.
const CHUNK: usize = 256;

/// An operator together with the data it is built from.
#[derive(Clone, Copy, Debug)]
pub enum OperatorSpec<'a> {
    Ls { basis: &'a DiscreteOrthonormalBasis },
    VpLs { basis: &'a DiscreteOrthonormalBasis, n: usize, theta: f64 },
    Hyper { rule: &'a QuadratureRule, n: usize },
    FHyper { rule: &'a QuadratureRule, n: usize, theta: f64 },
}

impl OperatorSpec<'_> {
    pub fn tag(&self) -> OperatorTag {
        match self {
            OperatorSpec::Ls { .. } => OperatorTag::Ls,
            OperatorSpec::VpLs { .. } => OperatorTag::VpLs,
            OperatorSpec::Hyper { .. } => OperatorTag::Hyper,
            OperatorSpec::FHyper { .. } => OperatorTag::FHyper,
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            OperatorSpec::Ls { basis } => basis.degree(),
            OperatorSpec::VpLs { n, .. } | OperatorSpec::Hyper { n, .. } | OperatorSpec::FHyper { n, .. } => n,
        }
    }

    pub fn theta(&self) -> f64 {
        match *self {
            OperatorSpec::VpLs { theta, .. } | OperatorSpec::FHyper { theta, .. } => theta,
            _ => 0.0,
        }
    }

    pub fn points(&self) -> &PointSet {
        match self {
            OperatorSpec::Ls { basis } | OperatorSpec::VpLs { basis, .. } => basis.points(),
            OperatorSpec::Hyper { rule, .. } | OperatorSpec::FHyper { rule, .. } => rule.points(),
        }
    }

    /// Per-degree filter, after checking that the operator can be built.
    fn filter(&self) -> Result<FilterWeights> {
        let n = self.n();
        let filter = FilterWeights::new(n, ray(n, self.theta())?)?;
        match *self {
            OperatorSpec::Ls { .. } => Ok(FilterWeights::identity(n)),
            OperatorSpec::VpLs { basis, .. } => {
                if basis.degree() < filter.max_degree() {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "basis has degree {}, the mean needs {}",
                        basis.degree(),
                        filter.max_degree()
                    )));
                }
                Ok(filter)
            }
            OperatorSpec::Hyper { rule, n } => {
                if rule.exactness() < 2 * n {
                    return Err(Error::InsufficientExactness {
                        required: 2 * n,
                        available: rule.exactness(),
                    });
                }
                Ok(FilterWeights::identity(n))
            }
            OperatorSpec::FHyper { rule, n, .. } => {
                if rule.exactness() < 4 * n {
                    return Err(Error::InsufficientExactness {
                        required: 4 * n,
                        available: rule.exactness(),
                    });
                }
                Ok(filter)
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Kernel {
    /// `Zᵀ = R⁻¹·W·Qᵀ`, so that `H(x, ξ_k) = (Y(x)ᵀ Zᵀ)_k`.
    Discrete { eval: HarmonicEvaluator, zt: Matrix },
    /// Legendre coefficients of `(1/2π)·Σ_ℓ w_ℓ (2ℓ+1)/2 P_ℓ` and the rule.
    Quadrature { coeffs: Vec<f64>, nodes: Vec<SpherePoint>, weights: Vec<f64> },
}

/// The Lebesgue function `x ↦ Σ_k |ℓ_k(x)|` of an operator, prepared for
/// repeated evaluation.
#[derive(Clone, Debug)]
pub struct LebesgueFunction {
    kernel: Kernel,
}

impl LebesgueFunction {
    pub fn new(op: &OperatorSpec<'_>) -> Result<Self> {
        let filter = op.filter()?;
        let kernel = match *op {
            OperatorSpec::Ls { basis } | OperatorSpec::VpLs { basis, .. } => {
                let d = dim(filter.max_degree());
                let block = Matrix::from_fn(d, d, |i, j| basis.transform()[(i, j)]);
                let mut rinv_w = invert_upper(&block);
                for (k, w) in filter.per_slot().iter().enumerate() {
                    rinv_w.column_mut(k).iter_mut().for_each(|v| *v *= w);
                }
                let q = basis.node_values().leading_columns(d);
                let mut zt = Matrix::zeros(d, q.rows());
                gemm(1.0, &rinv_w, false, &q, true, 0.0, &mut zt);
                Kernel::Discrete {
                    eval: HarmonicEvaluator::new(filter.max_degree()),
                    zt,
                }
            }
            OperatorSpec::Hyper { rule, .. } | OperatorSpec::FHyper { rule, .. } => {
                let mut coeffs = weighted_kernel_coeffs(filter.per_degree());
                coeffs.iter_mut().for_each(|c| *c /= 2.0 * PI);
                Kernel::Quadrature {
                    coeffs,
                    nodes: rule.points().points().to_vec(),
                    weights: rule.weights().to_vec(),
                }
            }
        };
        Ok(Self { kernel })
    }

    pub fn value(&self, x: &SpherePoint) -> f64 {
        self.values(core::slice::from_ref(x))[0]
    }

    pub fn values(&self, xs: &[SpherePoint]) -> Vec<f64> {
        match &self.kernel {
            Kernel::Discrete { eval, zt } => {
                let mut out = Vec::with_capacity(xs.len());
                for chunk in xs.chunks(CHUNK) {
                    let e = sample_rows(eval, chunk);
                    let mut h = Matrix::zeros(chunk.len(), zt.cols());
                    gemm(1.0, &e, false, zt, false, 0.0, &mut h);
                    let mut sums = vec![0.0; chunk.len()];
                    for k in 0..h.cols() {
                        sums.iter_mut()
                            .zip(h.column(k))
                            .for_each(|(s, v)| *s += libm::fabs(*v));
                    }
                    out.extend(sums);
                }
                out
            }
            Kernel::Quadrature { coeffs, nodes, weights } => xs
                .iter()
                .map(|x| {
                    nodes
                        .iter()
                        .zip(weights)
                        .map(|(p, w)| w * libm::fabs(legendre_series(coeffs, p.dot(x))))
                        .sum()
                })
                .collect(),
        }
    }
}

/// `Σ_k |H_n(x, ξ_k)|` for the discrete least-squares projection, computed
/// directly from `I(x) = R⁻ᵀ·Y(x)` and the stored node values.
pub fn lebesgue_function_ls(basis: &DiscreteOrthonormalBasis, x: &SpherePoint) -> f64 {
    let y = HarmonicEvaluator::new(basis.degree()).eval(x);
    let ix = solve_upper_transposed(basis.transform(), &y);
    let q = basis.node_values();
    (0..q.rows())
        .map(|k| libm::fabs(dot(&q.row(k), &ix)))
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LebesgueReport {
    pub tag: OperatorTag,
    pub n: usize,
    pub theta: f64,
    pub label: String,
    pub eval_count: usize,
    pub lebesgue_constant: f64,
    pub argmax_point: SpherePoint,
}

/// Index and value of the largest entry; ties resolve to the first index.
fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

pub fn lebesgue_constant(op: &OperatorSpec<'_>, eval: &PointSet) -> Result<LebesgueReport> {
    let values = LebesgueFunction::new(op)?.values(eval.points());
    let (i, value) = argmax(&values);
    Ok(LebesgueReport {
        tag: op.tag(),
        n: op.n(),
        theta: op.theta(),
        label: op.points().label.clone(),
        eval_count: eval.len(),
        lebesgue_constant: value,
        argmax_point: eval[i],
    })
}

/// Points whose distance to `circle` is below `radius` are left out of the
/// masked error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorMask {
    pub circle: SingularCircle,
    pub radius: f64,
}

impl ErrorMask {
    pub fn excludes(&self, x: &SpherePoint) -> bool {
        libm::fabs(geodesic_distance(&self.circle.center, x) - self.circle.radius) < self.radius
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub tag: OperatorTag,
    pub n: usize,
    pub theta: f64,
    pub eval_count: usize,
    pub sup_error: f64,
    pub masked_sup_error: f64,
    /// Grid points dropped by the mask.
    pub masked_count: usize,
}

pub fn sup_error(
    approx: &Approximant,
    f: &dyn Fn(&SpherePoint) -> f64,
    eval: &PointSet,
    mask: Option<&ErrorMask>,
) -> ErrorReport {
    let values = evaluate(approx, eval);
    let mut sup = 0.0_f64;
    let mut masked = 0.0_f64;
    let mut masked_count = 0;
    for (x, v) in eval.iter().zip(values) {
        let e = libm::fabs(f(x) - v);
        sup = sup.max(e);
        if mask.is_some_and(|m| m.excludes(x)) {
            masked_count += 1;
        } else {
            masked = masked.max(e);
        }
    }
    ErrorReport {
        tag: approx.tag,
        n: approx.n,
        theta: approx.theta,
        eval_count: eval.len(),
        sup_error: sup,
        masked_sup_error: masked,
        masked_count,
    }
}

/// Power law `constant ≈ prefactor · n^exponent`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthFit {
    pub exponent: f64,
    pub prefactor: f64,
}

/// Least-squares line through `(log n, log constant)`.
pub fn growth_fit(series: &[(usize, f64)]) -> Result<GrowthFit> {
    if series.len() < 3 {
        return Err(Error::InvalidArgument(alloc::format!(
            "growth fit needs at least 3 entries, got {}",
            series.len()
        )));
    }
    if let Some(&(n, c)) = series.iter().find(|&&(n, c)| n == 0 || !(c > 0.0)) {
        return Err(Error::InvalidArgument(alloc::format!(
            "growth fit needs positive entries, got ({n}, {c})"
        )));
    }
    let len = series.len() as f64;
    let xs: Vec<f64> = series.iter().map(|&(n, _)| libm::log(n as f64)).collect();
    let ys: Vec<f64> = series.iter().map(|&(_, c)| libm::log(c)).collect();
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("growth fit needs at least two distinct degrees".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    Ok(GrowthFit {
        exponent,
        prefactor: libm::exp(my - exponent * mx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximation::{build_orthonormal_basis, filtered_hyper_fit, hyper_fit, ls_fit, vp_mean_fit};
    use crate::functions::{f2, fcone_circle};
    use crate::geometry::generate_spiral;
    use crate::quadrature::solve_weights;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rule(mu: usize) -> QuadratureRule {
        let count = (1.3 * dim(mu) as f64).ceil() as usize;
        solve_weights(&generate_spiral(count).unwrap(), mu).unwrap()
    }

    #[test]
    fn degree_zero_is_identically_one() {
        let ps = generate_spiral(37).unwrap();
        let basis = build_orthonormal_basis(&ps, 0).unwrap();
        let grid = generate_spiral(500).unwrap();
        let lf = LebesgueFunction::new(&OperatorSpec::Ls { basis: &basis }).unwrap();
        for (x, v) in grid.iter().zip(lf.values(grid.points())) {
            assert!((v - 1.0).abs() < 1e-12);
            assert!((lebesgue_function_ls(&basis, x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn chunked_and_direct_paths_agree() {
        let n = 7;
        let ps = generate_spiral(dim(2 * n)).unwrap();
        let basis = build_orthonormal_basis(&ps, n).unwrap();
        let grid = generate_spiral(4 * ps.len()).unwrap();
        let lf = LebesgueFunction::new(&OperatorSpec::Ls { basis: &basis }).unwrap();
        let chunked = lf.values(grid.points());
        for (x, v) in grid.iter().zip(&chunked).step_by(13) {
            assert!((lebesgue_function_ls(&basis, x) - v).abs() < 1e-10);
        }
        // at a node the single term H(ξ_i, ξ_i) is a lower bound
        for i in 0..ps.len() {
            assert!(lebesgue_function_ls(&basis, &ps[i]) >= basis.node_kernel(i, i) - 1e-12);
        }
    }

    #[test]
    fn theta_zero_vp_equals_ls() {
        let n = 6;
        let ps = generate_spiral(dim(2 * n)).unwrap();
        let basis = build_orthonormal_basis(&ps, n).unwrap();
        let grid = generate_spiral(4 * ps.len()).unwrap();
        let ls = lebesgue_constant(&OperatorSpec::Ls { basis: &basis }, &grid).unwrap();
        let vp = lebesgue_constant(&OperatorSpec::VpLs { basis: &basis, n, theta: 0.0 }, &grid).unwrap();
        assert!((ls.lebesgue_constant - vp.lebesgue_constant).abs() < 1e-12);
        assert_eq!(ls.argmax_point, vp.argmax_point);
        assert!(ls.lebesgue_constant >= 1.0 - 1e-9);
        assert_eq!(ls.eval_count, grid.len());
        assert!(lebesgue_constant(&OperatorSpec::VpLs { basis: &basis, n, theta: 0.5 }, &grid).is_err());
    }

    #[test]
    fn octahedron_degree_one_grid_refinement() {
        let basis = build_orthonormal_basis(&PointSet::octahedron(), 1).unwrap();
        let op = OperatorSpec::Ls { basis: &basis };
        let coarse = lebesgue_constant(&op, &generate_spiral(100_000).unwrap()).unwrap();
        let fine = lebesgue_constant(&op, &generate_spiral(1_000_000).unwrap()).unwrap();
        let rel = (fine.lebesgue_constant - coarse.lebesgue_constant).abs() / fine.lebesgue_constant;
        assert!(rel < 0.01);
        // ℓ_{±e_j}(x) = 1/6 ± x_j/2, so the function is Σ_j max(1/3, |x_j|),
        // largest at points like (1, 1, 0)/√2 where it equals √2 + 1/3
        let exact = libm::sqrt(2.0) + 1.0 / 3.0;
        assert!((fine.lebesgue_constant - exact).abs() < 1e-3);
        assert!(fine.lebesgue_constant <= exact + 1e-12);
    }

    #[test]
    fn refining_the_grid_never_decreases_the_constant() {
        let n = 5;
        let ps = generate_spiral(dim(2 * n)).unwrap();
        let basis = build_orthonormal_basis(&ps, n).unwrap();
        let coarse = generate_spiral(300).unwrap();
        let mut pts = coarse.points().to_vec();
        pts.extend(generate_spiral(1000).unwrap().iter().copied());
        let fine = PointSet::new(pts, "union").unwrap();
        let op = OperatorSpec::Ls { basis: &basis };
        let a = lebesgue_constant(&op, &coarse).unwrap();
        let b = lebesgue_constant(&op, &fine).unwrap();
        assert!(b.lebesgue_constant >= a.lebesgue_constant);
    }

    #[test]
    fn argmax_ties_take_first_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), (1, 3.0));
        let ps = generate_spiral(11).unwrap();
        let basis = build_orthonormal_basis(&ps, 0).unwrap();
        let grid = generate_spiral(40).unwrap();
        let report = lebesgue_constant(&OperatorSpec::Ls { basis: &basis }, &grid).unwrap();
        // the degree-0 function is constant up to rounding, so the argmax is an early grid point
        assert!((report.lebesgue_constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_lebesgue_matches_kernel_sum() {
        let n = 4;
        let r = rule(4 * n);
        let grid = generate_spiral(300).unwrap();
        let hyper = LebesgueFunction::new(&OperatorSpec::Hyper { rule: &r, n }).unwrap();
        let theta = 0.5;
        let m = ray(n, theta).unwrap();
        let fh = LebesgueFunction::new(&OperatorSpec::FHyper { rule: &r, n, theta }).unwrap();
        let hv = hyper.values(grid.points());
        let fv = fh.values(grid.points());
        for (i, x) in grid.iter().enumerate().step_by(7) {
            let direct_h: f64 = r
                .points()
                .iter()
                .zip(r.weights())
                .map(|(p, w)| w * crate::harmonics::darboux_kernel(n, p.dot(x)).abs() / (2.0 * PI))
                .sum();
            let direct_f: f64 = r
                .points()
                .iter()
                .zip(r.weights())
                .map(|(p, w)| w * crate::harmonics::vdvp_kernel(n, m, p.dot(x)).unwrap().abs() / (2.0 * PI))
                .sum();
            assert!((hv[i] - direct_h).abs() < 1e-9);
            assert!((fv[i] - direct_f).abs() < 1e-9);
            assert!(hv[i] >= 1.0 - 1e-9);
        }
        assert!(LebesgueFunction::new(&OperatorSpec::FHyper { rule: &rule(2 * n), n, theta }).is_err());
    }

    #[test]
    fn operator_norm_bounds_fits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 5;
        let ps = generate_spiral((1.3 * dim(4 * n) as f64).ceil() as usize).unwrap();
        let basis = build_orthonormal_basis(&ps, 2 * n).unwrap();
        let r = solve_weights(&ps, 4 * n).unwrap();
        let grid = generate_spiral(2000).unwrap();
        let theta = 0.5;
        let ops = [
            OperatorSpec::Ls { basis: &build_orthonormal_basis(&ps, n).unwrap() },
            OperatorSpec::VpLs { basis: &basis, n, theta },
            OperatorSpec::Hyper { rule: &r, n },
            OperatorSpec::FHyper { rule: &r, n, theta },
        ];
        let constants: Vec<f64> = ops
            .iter()
            .map(|op| lebesgue_constant(op, &grid).unwrap().lebesgue_constant)
            .collect();
        let ls_basis = build_orthonormal_basis(&ps, n).unwrap();
        for _ in 0..50 {
            let samples: Vec<f64> = (0..ps.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let bound = samples.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
            let fits = [
                ls_fit(&ls_basis, &samples).unwrap(),
                vp_mean_fit(&basis, &samples, n, theta).unwrap(),
                hyper_fit(&r, &samples, n).unwrap(),
                filtered_hyper_fit(&r, &samples, n, theta).unwrap(),
            ];
            for (fit, c) in fits.iter().zip(&constants) {
                let sup = evaluate(fit, &grid).iter().fold(0.0_f64, |a, b| a.max(b.abs()));
                assert!(sup <= (c + 1e-6) * bound);
            }
        }
    }

    #[test]
    fn sup_error_examples() {
        let grid = generate_spiral(20_000).unwrap();
        let zero = Approximant::from_coeffs(vec![0.0], OperatorTag::Ls, 0, 0, 0.0).unwrap();
        let report = sup_error(&zero, &f2, &grid, None);
        assert!(report.sup_error > 2.0 - 0.05);
        assert_eq!(report.sup_error, report.masked_sup_error);
        let no_mask = ErrorMask { circle: fcone_circle(), radius: 0.0 };
        let r0 = sup_error(&zero, &f2, &grid, Some(&no_mask));
        assert_eq!(r0.masked_sup_error, r0.sup_error);
        assert_eq!(r0.masked_count, 0);
        let mask = ErrorMask { circle: fcone_circle(), radius: 0.1 };
        let r1 = sup_error(&zero, &f2, &grid, Some(&mask));
        assert!(r1.masked_count > 0);
        assert!(r1.sup_error >= r1.masked_sup_error && r1.masked_sup_error >= 0.0);
    }

    #[test]
    fn growth_fit_examples() {
        let sqrt: Vec<(usize, f64)> = (1..8).map(|n| (n * 5, 1.7 * libm::sqrt((n * 5) as f64))).collect();
        let fit = growth_fit(&sqrt).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-12);
        assert!((fit.prefactor - 1.7).abs() < 1e-12);
        let flat = growth_fit(&[(2, 3.0), (4, 3.0), (8, 3.0)]).unwrap();
        assert!(flat.exponent.abs() < 1e-12);
        assert!(growth_fit(&[(2, 3.0), (4, 3.0)]).is_err());
        assert!(growth_fit(&[(2, 3.0), (4, -1.0), (8, 3.0)]).is_err());
        assert!(growth_fit(&[(2, 3.0), (2, 4.0), (2, 5.0)]).is_err());
    }
}
