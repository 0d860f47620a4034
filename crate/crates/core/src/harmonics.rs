//! Real orthonormal spherical harmonics, the Jacobi polynomials `P_n^{(1,0)}`
//! and the reproducing kernels built from them.
//!
//! Harmonics are ordered degree-major: degree `ℓ` occupies the flat
//! (0-based) slots `ℓ²..(ℓ+1)²`, with order `m = −ℓ..ℓ` inside the block.
//! Truncating a coefficient vector to its first `(r+1)²` entries therefore
//! truncates the polynomial to degree `r`.
//!
//! Normalization: `∫ Y_k² dσ = 1` with `σ(S²) = 4π`, so that
//! `Σ_k Y_k(x)Y_k(y) = K_n(x·y)/(2π)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{PointSet, SpherePoint};
use crate::linalg::Matrix;

/// Number of harmonics of degree at most `n`, i.e. `dim P_n = (n+1)²`.
#[inline]
pub const fn dim(n: usize) -> usize {
    (n + 1) * (n + 1)
}

/// Degree of the harmonic stored in 0-based flat slot `k`.
#[inline]
pub fn degree_of(k: usize) -> usize {
    let mut l = libm::sqrt(k as f64) as usize;
    while l * l > k {
        l -= 1;
    }
    while (l + 1) * (l + 1) <= k {
        l += 1;
    }
    l
}

/// `(ℓ, m)` label of a harmonic together with its 1-based flat index
/// `ℓ² + (m + ℓ) + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    pub ell: usize,
    pub m: isize,
    pub flat: usize,
}

impl HarmonicIndex {
    pub fn new(ell: usize, m: isize) -> Result<Self> {
        if m.unsigned_abs() > ell {
            return Err(Error::InvalidArgument(alloc::format!(
                "order {m} out of range for degree {ell}"
            )));
        }
        Ok(Self {
            ell,
            m,
            flat: ell * ell + (m + ell as isize) as usize + 1,
        })
    }

    pub fn from_flat(flat: usize) -> Result<Self> {
        if flat == 0 {
            return Err(Error::InvalidArgument("flat indices start at 1".into()));
        }
        let k = flat - 1;
        let ell = degree_of(k);
        let m = (k - ell * ell) as isize - ell as isize;
        Ok(Self { ell, m, flat })
    }
}

/// Evaluator for all real harmonics up to a fixed degree. Holds the
/// recurrence coefficients of the fully normalized associated Legendre
/// functions so repeated evaluation does no square roots beyond one per point.
#[derive(Clone, Debug)]
pub struct HarmonicEvaluator {
    degree: usize,
    // a_{ℓm}, b_{ℓm} for the ascending recurrence in ℓ, indexed like `lm_index`
    a: Vec<f64>,
    b: Vec<f64>,
    // sectoral factors √((2m+1)/(2m)) and √(2m+3)
    diag: Vec<f64>,
    sub: Vec<f64>,
}

#[inline]
fn lm_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

impl HarmonicEvaluator {
    pub fn new(degree: usize) -> Self {
        let tri = lm_index(degree, degree) + 1;
        let mut a = vec![0.0; tri];
        let mut b = vec![0.0; tri];
        for m in 0..=degree {
            for l in m + 2..=degree {
                let (lf, mf) = (l as f64, m as f64);
                a[lm_index(l, m)] = libm::sqrt((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf));
                let l1 = lf - 1.0;
                b[lm_index(l, m)] = libm::sqrt((l1 * l1 - mf * mf) / (4.0 * l1 * l1 - 1.0));
            }
        }
        let diag = (0..=degree)
            .map(|m| {
                if m == 0 {
                    1.0
                } else {
                    libm::sqrt((2 * m + 1) as f64 / (2 * m) as f64)
                }
            })
            .collect();
        let sub = (0..=degree).map(|m| libm::sqrt((2 * m + 3) as f64)).collect();
        Self {
            degree,
            a,
            b,
            diag,
            sub,
        }
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn len(&self) -> usize {
        dim(self.degree)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Writes `Y_k(p)` for all `(degree+1)²` flat slots into `out`.
    pub fn eval_into(&self, p: &SpherePoint, out: &mut [f64]) {
        let n = self.degree;
        assert_eq!(out.len(), dim(n));
        let ct = p.z().clamp(-1.0, 1.0);
        let st2 = p.x() * p.x() + p.y() * p.y();
        let st = libm::sqrt(st2);
        let (c1, s1) = if st > 0.0 {
            (p.x() / st, p.y() / st)
        } else {
            (1.0, 0.0)
        };

        let mut pmm = 1.0 / libm::sqrt(4.0 * PI);
        // cos(mφ), sin(mφ) by angle addition
        let (mut cm, mut sm) = (1.0, 0.0);
        for m in 0..=n {
            if m > 0 {
                pmm *= self.diag[m] * st;
                let c = cm * c1 - sm * s1;
                sm = sm * c1 + cm * s1;
                cm = c;
            }
            let (fc, fs) = if m == 0 {
                (1.0, 0.0)
            } else {
                (core::f64::consts::SQRT_2 * cm, core::f64::consts::SQRT_2 * sm)
            };
            let mut store = |l: usize, v: f64| {
                let base = l * l + l;
                if m == 0 {
                    out[base] = v;
                } else {
                    out[base + m] = v * fc;
                    out[base - m] = v * fs;
                }
            };
            store(m, pmm);
            if m == n {
                break;
            }
            let mut p_prev = pmm;
            let mut p_cur = self.sub[m] * ct * pmm;
            store(m + 1, p_cur);
            for l in m + 2..=n {
                let idx = lm_index(l, m);
                let next = self.a[idx] * (ct * p_cur - self.b[idx] * p_prev);
                p_prev = p_cur;
                p_cur = next;
                store(l, p_cur);
            }
        }
    }

    pub fn eval(&self, p: &SpherePoint) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(p, &mut out);
        out
    }
}

/// `Y_k(p)` for flat `k = 1..(n+1)²` (returned 0-based).
pub fn eval_harmonics(p: &SpherePoint, n: usize) -> Vec<f64> {
    HarmonicEvaluator::new(n).eval(p)
}

/// Jacobi polynomial `P_n^{(1,0)}(t)` with `P_n^{(1,0)}(1) = n + 1`, by the
/// three-term recurrence
/// `(n+1)(2n−1) P_n = [(2n+1)(2n−1)t + 1] P_{n−1} − (n−1)(2n+1) P_{n−2}`.
pub fn jacobi_p10(n: usize, t: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 0.5 * (3.0 * t + 1.0);
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * (2.0 * kf - 1.0) * t + 1.0) * cur
            - (kf - 1.0) * (2.0 * kf + 1.0) * prev;
        prev = cur;
        cur = next / ((kf + 1.0) * (2.0 * kf - 1.0));
    }
    cur
}

/// Reproducing kernel of `P_n` in the variable `t = x·y`:
/// `K_n(t) = (n+1)/2 · P_n^{(1,0)}(t)`.
pub fn darboux_kernel(n: usize, t: f64) -> f64 {
    0.5 * (n + 1) as f64 * jacobi_p10(n, t)
}

/// Mean of `K_r` over `r = n−m..n+m`.
pub fn vdvp_kernel(n: usize, m: usize, t: f64) -> Result<f64> {
    if m > n {
        return Err(Error::InvalidArgument(alloc::format!(
            "ray {m} exceeds degree {n}"
        )));
    }
    let sum: f64 = (n - m..=n + m).map(|r| darboux_kernel(r, t)).sum();
    Ok(sum / (2 * m + 1) as f64)
}

/// `Σ_ℓ c_ℓ P_ℓ(t)` (Legendre series) by Clenshaw's recurrence.
pub fn legendre_series(coeffs: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for l in (1..coeffs.len()).rev() {
        let lf = l as f64;
        // P_{ℓ+1} = α_ℓ t P_ℓ + β_{ℓ+1} P_{ℓ−1} with α_ℓ = (2ℓ+1)/(ℓ+1), β_ℓ = −ℓ/(ℓ+1)
        let alpha = (2.0 * lf + 1.0) / (lf + 1.0);
        let beta = -(lf + 1.0) / (lf + 2.0);
        let b0 = coeffs[l] + alpha * t * b1 + beta * b2;
        b2 = b1;
        b1 = b0;
    }
    match coeffs.first() {
        None => 0.0,
        Some(&c0) => c0 + t * b1 - 0.5 * b2,
    }
}

/// Legendre-series coefficients of the kernel `Σ_ℓ w_ℓ (2ℓ+1)/2 P_ℓ` for
/// per-degree weights `w`. With all weights one up to `n` this is `K_n`.
pub fn weighted_kernel_coeffs(weights: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .enumerate()
        .map(|(l, w)| w * (2 * l + 1) as f64 * 0.5)
        .collect()
}

/// Samples of all harmonics up to `degree` at the nodes of a point set;
/// entry `(j, k)` is `Y_k(ξ_j)`.
#[derive(Clone, Debug)]
pub struct DesignMatrix<'a> {
    pub values: Matrix,
    pub degree: usize,
    pub points: &'a PointSet,
}

pub fn build_design_matrix(ps: &PointSet, n: usize) -> DesignMatrix<'_> {
    let eval = HarmonicEvaluator::new(n);
    DesignMatrix {
        values: sample_rows(&eval, ps.points()),
        degree: n,
        points: ps,
    }
}

/// Row-per-point matrix of harmonic values.
pub(crate) fn sample_rows(eval: &HarmonicEvaluator, pts: &[SpherePoint]) -> Matrix {
    let d = eval.len();
    let rows = pts.len();
    let mut m = Matrix::zeros(rows, d);
    let mut buf = vec![0.0; d];
    for (j, p) in pts.iter().enumerate() {
        eval.eval_into(p, &mut buf);
        for (k, &v) in buf.iter().enumerate() {
            m[(j, k)] = v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_spiral;
    use crate::quadrature::solve_weights;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng) -> SpherePoint {
        loop {
            let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            if r2 > 1e-4 && r2 <= 1.0 {
                return SpherePoint::new(v[0], v[1], v[2]).unwrap();
            }
        }
    }

    // Gauss–Legendre nodes/weights by Newton iteration on P_n.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    }

    fn binom(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    // explicit sum P_n^{(1,0)}(t) = Σ_s C(n+1, n−s) C(n, s) ((t−1)/2)^s ((t+1)/2)^{n−s}
    fn jacobi_explicit(n: usize, t: f64) -> f64 {
        (0..=n)
            .map(|s| {
                binom(n + 1, n - s)
                    * binom(n, s)
                    * libm::pow((t - 1.0) / 2.0, s as f64)
                    * libm::pow((t + 1.0) / 2.0, (n - s) as f64)
            })
            .sum()
    }

    #[test]
    fn flat_index_roundtrip() {
        let mut flat = 1;
        for ell in 0..6 {
            for m in -(ell as isize)..=ell as isize {
                let h = HarmonicIndex::new(ell, m).unwrap();
                assert_eq!(h.flat, flat);
                assert_eq!(HarmonicIndex::from_flat(flat).unwrap(), h);
                flat += 1;
            }
        }
        assert!(HarmonicIndex::new(2, 3).is_err());
        for k in 0..500 {
            let l = degree_of(k);
            assert!(l * l <= k && k < (l + 1) * (l + 1));
        }
    }

    #[test]
    fn constant_harmonic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let y = eval_harmonics(&random_point(&mut rng), 4);
            assert!((y[0] - 0.2820947917738781).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_addition_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 7;
        for _ in 0..20 {
            let y = eval_harmonics(&random_point(&mut rng), n);
            let s: f64 = y.iter().map(|v| v * v).sum();
            let expect = dim(n) as f64 / (4.0 * PI);
            assert!((s - expect).abs() < 1e-12 * expect);
            assert!((s - darboux_kernel(n, 1.0) / (2.0 * PI)).abs() < 1e-12 * expect);
        }
        // poles
        let y = eval_harmonics(&SpherePoint::NORTH, n);
        let s: f64 = y.iter().map(|v| v * v).sum();
        assert!((s - dim(n) as f64 / (4.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn addition_formula_off_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &n in &[0usize, 1, 5, 17, 30] {
            let ev = HarmonicEvaluator::new(n);
            let scale = darboux_kernel(n, 1.0) / (2.0 * PI);
            for _ in 0..25 {
                let (x, y) = (random_point(&mut rng), random_point(&mut rng));
                let lhs: f64 = ev.eval(&x).iter().zip(ev.eval(&y)).map(|(a, b)| a * b).sum();
                let rhs = darboux_kernel(n, x.dot(&y)) / (2.0 * PI);
                assert!((lhs - rhs).abs() <= 1e-9 * scale, "n={n}");
            }
        }
    }

    #[test]
    fn finite_up_to_degree_200() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ev = HarmonicEvaluator::new(200);
        let mut pts: Vec<SpherePoint> = (0..5).map(|_| random_point(&mut rng)).collect();
        pts.push(SpherePoint::NORTH);
        pts.push(SpherePoint::new(1e-9, 0.0, 1.0).unwrap());
        for p in &pts {
            let y = ev.eval(p);
            assert!(y.iter().all(|v| v.is_finite()));
            let s: f64 = y.iter().map(|v| v * v).sum();
            let expect = dim(200) as f64 / (4.0 * PI);
            assert!((s - expect).abs() < 1e-9 * expect);
        }
    }

    #[test]
    fn jacobi_values() {
        for n in 0..=50 {
            let v = jacobi_p10(n, 1.0);
            assert!((v - (n + 1) as f64).abs() <= 1e-12 * (n + 1) as f64);
        }
        for &t in &[-1.0, -0.3, 0.0, 0.7] {
            assert_eq!(jacobi_p10(0, t), 1.0);
        }
        let expect = jacobi_explicit(5, 0.3);
        assert!((jacobi_p10(5, 0.3) - expect).abs() <= 1e-12 * expect.abs());
        for n in 0..12 {
            for &t in &[-0.9, -0.5, 0.1, 0.45, 0.99] {
                let e = jacobi_explicit(n, t);
                assert!((jacobi_p10(n, t) - e).abs() <= 1e-11 * e.abs().max(1.0));
            }
        }
    }

    #[test]
    fn darboux_kernel_properties() {
        let gl = gauss_legendre(80);
        for n in 0..=60 {
            let k1 = darboux_kernel(n, 1.0);
            assert!((k1 - dim(n) as f64 / 2.0).abs() <= 1e-12 * k1);
            let integral: f64 = gl.iter().map(|&(x, w)| w * darboux_kernel(n, x)).sum();
            assert!((integral - 1.0).abs() < 1e-10, "n={n}: {integral}");
        }
        for &n in &[3usize, 10, 25] {
            let k1 = darboux_kernel(n, 1.0);
            let peak = (0..10_000)
                .map(|i| darboux_kernel(n, -1.0 + 2.0 * i as f64 / 9_999.0).abs())
                .fold(0.0, f64::max);
            assert!((peak - k1).abs() <= 1e-12 * k1);
        }
    }

    #[test]
    fn vdvp_kernel_properties() {
        for &t in &[-0.8, 0.0, 0.4, 1.0] {
            assert_eq!(vdvp_kernel(9, 0, t).unwrap(), darboux_kernel(9, t));
        }
        let expect: f64 = (10..=30).map(|r: usize| ((r + 1) * (r + 1)) as f64 / 2.0).sum::<f64>() / 21.0;
        assert!((vdvp_kernel(20, 10, 1.0).unwrap() - expect).abs() < 1e-12 * expect);
        assert!(vdvp_kernel(3, 4, 0.0).is_err());
        let gl = gauss_legendre(80);
        for &(n, m) in &[(5, 2), (20, 10), (30, 30)] {
            let integral: f64 = gl.iter().map(|&(x, w)| w * vdvp_kernel(n, m, x).unwrap()).sum();
            assert!((integral - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn legendre_series_matches_kernels() {
        for &n in &[0usize, 1, 4, 13] {
            let c = weighted_kernel_coeffs(&vec![1.0; n + 1]);
            for &t in &[-1.0, -0.35, 0.2, 0.9, 1.0] {
                let a = legendre_series(&c, t);
                let b = darboux_kernel(n, t);
                assert!((a - b).abs() < 1e-12 * darboux_kernel(n, 1.0));
            }
        }
        assert_eq!(legendre_series(&[], 0.3), 0.0);
    }

    #[test]
    fn design_matrix_rows_and_gram() {
        let ps = generate_spiral(200).unwrap();
        let dm = build_design_matrix(&ps, 4);
        assert_eq!(dm.values.cols(), 25);
        for j in 0..ps.len() {
            assert!((dm.values[(j, 0)] - 0.2820947917738781).abs() < 1e-15);
            assert_eq!(dm.values.row(j), eval_harmonics(&ps[j], 4));
        }
        // continuous orthonormality through a rule exact to degree 8
        let rule_pts = generate_spiral(120).unwrap();
        let rule = solve_weights(&rule_pts, 8).unwrap();
        let a = build_design_matrix(rule.points(), 4).values;
        let mut weighted = a.clone();
        for j in 0..a.cols() {
            for (i, w) in rule.weights().iter().enumerate() {
                weighted[(i, j)] *= w;
            }
        }
        assert!(a.tr_matmul(&weighted).identity_defect() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn degree_block_sum_depends_only_on_dot(
            seed in 0u64..10_000, ell in 0usize..12, angle in 0.0f64..core::f64::consts::TAU
        ) {
            // rotate both points about a random axis and compare the block sums
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, y, axis) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
            let rot = |p: &SpherePoint| {
                let (c, s) = (libm::cos(angle), libm::sin(angle));
                let k = axis.coords();
                let v = p.coords();
                let kv = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
                let cross = [k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]];
                let r: [f64; 3] = core::array::from_fn(|i| v[i] * c + cross[i] * s + k[i] * kv * (1.0 - c));
                SpherePoint::new(r[0], r[1], r[2]).unwrap()
            };
            let ev = HarmonicEvaluator::new(ell);
            let block = |a: &SpherePoint, b: &SpherePoint| -> f64 {
                let (ya, yb) = (ev.eval(a), ev.eval(b));
                (ell * ell..dim(ell)).map(|k| ya[k] * yb[k]).sum()
            };
            let scale = (2 * ell + 1) as f64 / (4.0 * PI);
            prop_assert!((block(&x, &y) - block(&rot(&x), &rot(&y))).abs() <= 1e-9 * scale);
        }
    }
}
