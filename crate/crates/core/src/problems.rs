//! One-parameter eigenvalue problems: matrix polynomials `P(λ) = Σ λ^i A_i`
//! and general analytic `F(λ)` given by callbacks.
//!
//! Besides evaluation and derivatives, every problem exposes its divided
//! difference `F[λ, μ]`, the quantity that makes selection work: for a left
//! eigenvector `y_i` of `λ_i` and a right eigenvector `x_j` of a different
//! eigenvalue `λ_j`, `y_i^* F[λ_i, λ_j] x_j = 0`, while `y_i^* F[λ_i, λ_i] x_i`
//! is nonzero for a simple eigenvalue.

use std::sync::{Arc, OnceLock};

use faer::{Col, ColRef, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{c64, dot, norm1, norm2_estimate, random_mat, C64};
use crate::error::{Error, Result};
use crate::sparse::{CoeffMatrix, CsrMatrix};

/// Relative threshold below which `|y^* F'(λ) x|` is treated as zero.
pub const DEFECTIVE_THRESHOLD: f64 = 1e-12;

/// Common interface of the one-parameter problems used by selection and the
/// subspace solver.
pub trait NonlinearProblem: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, lambda: C64) -> Mat<C64>;

    fn derivative(&self, lambda: C64) -> Mat<C64>;

    /// `F[λ, μ]`, continuously extended by `F'(λ)` on the diagonal.
    fn divided_difference(&self, lambda: C64, mu: C64) -> Mat<C64>;

    fn eval_apply(&self, lambda: C64, x: ColRef<'_, C64>) -> Col<C64> {
        self.eval(lambda) * x
    }

    fn eval_apply_adjoint(&self, lambda: C64, x: ColRef<'_, C64>) -> Col<C64> {
        self.eval(lambda).adjoint() * x
    }

    fn derivative_apply(&self, lambda: C64, x: ColRef<'_, C64>) -> Col<C64> {
        self.derivative(lambda) * x
    }

    fn divided_difference_apply(&self, lambda: C64, mu: C64, x: ColRef<'_, C64>) -> Col<C64> {
        self.divided_difference(lambda, mu) * x
    }

    /// Spectral norm estimate of `F'(λ)`.
    fn derivative_norm2(&self, lambda: C64) -> f64 {
        let d = self.derivative(lambda);
        crate::dense::norm2_estimate_mat(d.as_ref())
    }

    /// Scale used to make residual norms relative.
    fn residual_scale(&self, lambda: C64) -> f64 {
        norm1(self.eval(lambda).as_ref())
    }

    /// Absolute eigenvalue condition number for unit `x`, `y`.
    fn condition_number(&self, lambda: C64, x: ColRef<'_, C64>, y: ColRef<'_, C64>) -> Result<f64>;

    fn as_polynomial(&self) -> Option<&PolyProblem> {
        None
    }
}

/// Matrix polynomial `P(λ) = λ^m A_m + … + λ A_1 + A_0`.
#[derive(Clone, Debug)]
pub struct PolyProblem {
    coeffs: Vec<CoeffMatrix>,
    norms1: Vec<f64>,
    norms2: OnceLock<Vec<f64>>,
}

impl PolyProblem {
    /// Coefficients are given in increasing degree: `coeffs[i]` multiplies `λ^i`.
    pub fn new(coeffs: Vec<CoeffMatrix>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidArgument("a matrix polynomial needs degree m >= 1".into()));
        }
        let n = coeffs[0].nrows();
        for (i, a) in coeffs.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::Dimension(format!(
                    "coefficient A_{i} is {}x{}, expected {n}x{n}",
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        let norms1 = coeffs.iter().map(CoeffMatrix::norm1).collect();
        Ok(Self { coeffs, norms1, norms2: OnceLock::new() })
    }

    pub fn from_dense(coeffs: Vec<Mat<C64>>) -> Result<Self> {
        Self::new(coeffs.into_iter().map(CoeffMatrix::Dense).collect())
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[CoeffMatrix] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &CoeffMatrix {
        &self.coeffs[i]
    }

    /// Cached `‖A_i‖_1`.
    pub fn norms1(&self) -> &[f64] {
        &self.norms1
    }

    /// Estimated `‖A_i‖_2`, computed on first use.
    pub fn norms2(&self) -> &[f64] {
        self.norms2.get_or_init(|| {
            self.coeffs
                .iter()
                .map(|a| norm2_estimate(a.ncols(), |x| a.apply(x), |x| a.apply_adjoint(x), 1e-3))
                .collect()
        })
    }

    /// `Σ w_i A_i` as a dense matrix.
    pub fn combination(&self, weights: &[C64]) -> Mat<C64> {
        let n = self.dim();
        let mut out = Mat::zeros(n, n);
        for (a, &w) in self.coeffs.iter().zip(weights) {
            if w != C64::from(0.0) {
                a.add_scaled_to(w, &mut out);
            }
        }
        out
    }

    /// `Σ w_i A_i x` without forming the matrix.
    pub fn combination_apply(&self, weights: &[C64], x: ColRef<'_, C64>) -> Col<C64> {
        let mut y = Col::<C64>::zeros(self.dim());
        for (a, &w) in self.coeffs.iter().zip(weights) {
            if w != C64::from(0.0) {
                let ax = a.apply(x);
                crate::dense::axpy(&mut y, w, ax.as_ref());
            }
        }
        y
    }

    pub fn combination_apply_adjoint(&self, weights: &[C64], x: ColRef<'_, C64>) -> Col<C64> {
        let mut y = Col::<C64>::zeros(self.dim());
        for (a, &w) in self.coeffs.iter().zip(weights) {
            if w != C64::from(0.0) {
                let ax = a.apply_adjoint(x);
                crate::dense::axpy(&mut y, w.conj(), ax.as_ref());
            }
        }
        y
    }

    /// Weights `λ^i`.
    pub fn eval_weights(&self, lambda: C64) -> Vec<C64> {
        let mut w = Vec::with_capacity(self.coeffs.len());
        let mut p = C64::from(1.0);
        for _ in 0..self.coeffs.len() {
            w.push(p);
            p *= lambda;
        }
        w
    }

    /// Weights `i λ^(i-1)`.
    pub fn derivative_weights(&self, lambda: C64) -> Vec<C64> {
        let mut w = vec![C64::from(0.0); self.coeffs.len()];
        let mut p = C64::from(1.0);
        for (i, wi) in w.iter_mut().enumerate().skip(1) {
            *wi = p * i as f64;
            p *= lambda;
        }
        w
    }

    /// Weights of the divided difference: `s_j = Σ_{i<j} λ^i θ^(j-1-i)`.
    ///
    /// The recurrence `s_{j+1} = θ s_j + λ^j` is symmetric in exact arithmetic
    /// and reduces to `j λ^(j-1)` at `λ = θ`, so no case split is needed.
    /// The arguments are put in a fixed order first so that the result is
    /// symmetric in floating point too.
    pub fn divided_difference_weights(&self, lambda: C64, theta: C64) -> Vec<C64> {
        let (lambda, theta) =
            if (lambda.re, lambda.im) <= (theta.re, theta.im) { (lambda, theta) } else { (theta, lambda) };
        let m = self.degree();
        let mut w = vec![C64::from(0.0); m + 1];
        let mut s = C64::from(1.0);
        let mut lp = lambda;
        for wj in w.iter_mut().skip(1) {
            *wj = s;
            s = theta * s + lp;
            lp *= lambda;
        }
        w
    }

    /// Horner evaluation of `P(λ)`.
    pub fn eval(&self, lambda: C64) -> Mat<C64> {
        let n = self.dim();
        let m = self.degree();
        let mut acc = self.coeffs[m].to_dense();
        for i in (0..m).rev() {
            for j in 0..n {
                for r in 0..n {
                    acc[(r, j)] *= lambda;
                }
            }
            self.coeffs[i].add_scaled_to(C64::from(1.0), &mut acc);
        }
        acc
    }

    /// Horner evaluation of `P(λ) x`.
    pub fn eval_apply(&self, lambda: C64, x: ColRef<'_, C64>) -> Col<C64> {
        let m = self.degree();
        let mut y = self.coeffs[m].apply(x);
        for i in (0..m).rev() {
            crate::dense::scale(&mut y, lambda);
            let ax = self.coeffs[i].apply(x);
            y += &ax;
        }
        y
    }

    pub fn derivative(&self, lambda: C64) -> Mat<C64> {
        self.combination(&self.derivative_weights(lambda))
    }

    pub fn divided_difference(&self, lambda: C64, theta: C64) -> Mat<C64> {
        self.combination(&self.divided_difference_weights(lambda, theta))
    }

    /// `Σ |λ|^i ‖A_i‖_1`, the relative-residual scale.
    pub fn residual_scale(&self, lambda: C64) -> f64 {
        let a = lambda.norm();
        let mut p = 1.0;
        let mut s = 0.0;
        for nrm in &self.norms1 {
            s += p * nrm;
            p *= a;
        }
        s
    }

    /// Absolute condition number `Σ |λ|^i ‖A_i‖_2 / |y^* P'(λ) x|` for unit
    /// `x` and `y`.
    pub fn condition_number(&self, lambda: C64, x: ColRef<'_, C64>, y: ColRef<'_, C64>) -> Result<f64> {
        let dx = self.combination_apply(&self.derivative_weights(lambda), x);
        let denom = dot(y, dx.as_ref()).norm();
        let norms2 = self.norms2();
        let a = lambda.norm();
        let mut num = 0.0;
        let mut dscale = 0.0;
        let mut p = 1.0;
        for (i, nrm) in norms2.iter().enumerate() {
            num += p * nrm;
            if i + 1 < norms2.len() {
                dscale += (i + 1) as f64 * p * norms2[i + 1];
            }
            p *= a;
        }
        let threshold = DEFECTIVE_THRESHOLD * dscale;
        if denom <= threshold || denom == 0.0 {
            return Err(Error::Defective { denom, threshold });
        }
        Ok(num / denom)
    }

    /// `true` when every coefficient is sparse.
    pub fn is_sparse(&self) -> bool {
        self.coeffs.iter().all(CoeffMatrix::is_sparse)
    }

    /// Common bandwidth of all coefficients, if all are sparse.
    pub fn bandwidth(&self) -> Option<(usize, usize)> {
        let mut bw = (0, 0);
        for a in &self.coeffs {
            let (l, u) = a.bandwidth()?;
            bw = (bw.0.max(l), bw.1.max(u));
        }
        Some(bw)
    }
}

impl NonlinearProblem for PolyProblem {
    fn dim(&self) -> usize {
        PolyProblem::dim(self)
    }

    fn eval(&self, lambda: C64) -> Mat<C64> {
        PolyProblem::eval(self, lambda)
    }

    fn derivative(&self, lambda: C64) -> Mat<C64> {
        PolyProblem::derivative(self, lambda)
    }

    fn divided_difference(&self, lambda: C64, mu: C64) -> Mat<C64> {
        PolyProblem::divided_difference(self, lambda, mu)
    }

    fn eval_apply(&self, lambda: C64, x: ColRef<'_, C64>) -> Col<C64> {
        PolyProblem::eval_apply(self, lambda, x)
    }

    fn eval_apply_adjoint(&self, lambda: C64, x: ColRef<'_, C64>) -> Col<C64> {
        self.combination_apply_adjoint(&self.eval_weights(lambda), x)
    }

    fn derivative_apply(&self, lambda: C64, x: ColRef<'_, C64>) -> Col<C64> {
        self.combination_apply(&self.derivative_weights(lambda), x)
    }

    fn divided_difference_apply(&self, lambda: C64, mu: C64, x: ColRef<'_, C64>) -> Col<C64> {
        self.combination_apply(&self.divided_difference_weights(lambda, mu), x)
    }

    fn derivative_norm2(&self, lambda: C64) -> f64 {
        let w = self.derivative_weights(lambda);
        norm2_estimate(
            self.dim(),
            |x| self.combination_apply(&w, x),
            |x| self.combination_apply_adjoint(&w, x),
            1e-3,
        )
    }

    fn residual_scale(&self, lambda: C64) -> f64 {
        PolyProblem::residual_scale(self, lambda)
    }

    fn condition_number(&self, lambda: C64, x: ColRef<'_, C64>, y: ColRef<'_, C64>) -> Result<f64> {
        PolyProblem::condition_number(self, lambda, x, y)
    }

    fn as_polynomial(&self) -> Option<&PolyProblem> {
        Some(self)
    }
}

type MatFn = Arc<dyn Fn(C64) -> Mat<C64> + Send + Sync>;

/// General nonlinear problem `F(λ) x = 0` given by callbacks for `F` and `F'`.
///
/// The callbacks must describe an analytic matrix function; nothing here can
/// check that.
#[derive(Clone)]
pub struct GeneralNep {
    n: usize,
    eval: MatFn,
    deriv: MatFn,
    coincidence_tol: f64,
}

impl std::fmt::Debug for GeneralNep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneralNep")
            .field("n", &self.n)
            .field("coincidence_tol", &self.coincidence_tol)
            .finish_non_exhaustive()
    }
}

impl GeneralNep {
    pub const DEFAULT_COINCIDENCE_TOL: f64 = 1e-8;

    pub fn new<F, G>(n: usize, eval: F, deriv: G) -> Self
    where
        F: Fn(C64) -> Mat<C64> + Send + Sync + 'static,
        G: Fn(C64) -> Mat<C64> + Send + Sync + 'static,
    {
        Self { n, eval: Arc::new(eval), deriv: Arc::new(deriv), coincidence_tol: Self::DEFAULT_COINCIDENCE_TOL }
    }

    pub fn with_coincidence_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("coincidence_tol must be positive".into()));
        }
        self.coincidence_tol = tol;
        Ok(self)
    }

    pub fn coincidence_tol(&self) -> f64 {
        self.coincidence_tol
    }
}

impl NonlinearProblem for GeneralNep {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, lambda: C64) -> Mat<C64> {
        (self.eval)(lambda)
    }

    fn derivative(&self, lambda: C64) -> Mat<C64> {
        (self.deriv)(lambda)
    }

    /// Difference quotient when `|λ - μ| > tol · max(1, |λ|)`, else `F'(λ)`.
    fn divided_difference(&self, lambda: C64, mu: C64) -> Mat<C64> {
        let gap = lambda - mu;
        if gap.norm() > self.coincidence_tol * lambda.norm().max(1.0) {
            let scale = C64::from(1.0) / gap;
            let fl = (self.eval)(lambda);
            let fm = (self.eval)(mu);
            Mat::from_fn(self.n, self.n, |i, j| (fl[(i, j)] - fm[(i, j)]) * scale)
        } else {
            (self.deriv)(lambda)
        }
    }

    /// `1 / |y^* F'(λ) x|`; without a coefficient structure there is no
    /// natural perturbation scale for the numerator.
    fn condition_number(&self, lambda: C64, x: ColRef<'_, C64>, y: ColRef<'_, C64>) -> Result<f64> {
        let d = self.derivative(lambda);
        let denom = dot(y, (&d * x).as_ref()).norm();
        let threshold = DEFECTIVE_THRESHOLD * crate::dense::norm2_estimate_mat(d.as_ref());
        if denom <= threshold || denom == 0.0 {
            return Err(Error::Defective { denom, threshold });
        }
        Ok(1.0 / denom)
    }
}

/// Gyroscopic test problem `λ^2 A + λ B + C`: `A` diagonal uniform on `[0, 1]`
/// with `a_11 = 0`, `B` tridiagonal with `-1` below and `+1` above the
/// diagonal, `C` diagonal uniform on `(-1, 0)`.
pub fn gen_gyroscopic(n: usize, seed: u64) -> Result<PolyProblem> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("gyroscopic problem needs n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a: Vec<C64> = (0..n).map(|_| c64(rng.random::<f64>(), 0.0)).collect();
    a[0] = c64(0.0, 0.0);
    let c: Vec<C64> = (0..n)
        .map(|_| loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break c64(-u, 0.0);
            }
        })
        .collect();
    let mut b = Vec::with_capacity(2 * (n - 1));
    for i in 0..n - 1 {
        b.push((i, i + 1, c64(1.0, 0.0)));
        b.push((i + 1, i, c64(-1.0, 0.0)));
    }
    PolyProblem::new(vec![
        CsrMatrix::from_diagonal(&c).into(),
        CsrMatrix::from_triplets(n, n, &b)?.into(),
        CsrMatrix::from_diagonal(&a).into(),
    ])
}

/// The pencil `A - λ I` with `A = [[0, ε], [0, δ]]`: eigenvalue 0 has right
/// vector `e_1` and left vector `∝ [δ, -ε]`, eigenvalue `δ` has right vector
/// `∝ [ε, δ]`.
pub fn gen_example_2x2(delta: f64, epsilon: f64) -> PolyProblem {
    let a0 = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => c64(epsilon, 0.0),
        (1, 1) => c64(delta, 0.0),
        _ => c64(0.0, 0.0),
    });
    let a1 = Mat::from_fn(2, 2, |i, j| if i == j { c64(-1.0, 0.0) } else { c64(0.0, 0.0) });
    PolyProblem::from_dense(vec![a0, a1]).expect("2x2 pencil is well formed")
}

/// Random dense polynomial of degree `m` with standard complex Gaussian
/// entries; with `symmetric`, each coefficient is replaced by `(A + A^T) / 2`.
pub fn gen_random_pep(n: usize, m: usize, seed: u64, symmetric: bool) -> Result<PolyProblem> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("random PEP needs n >= 1 and m >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..=m)
        .map(|_| {
            let a = random_mat(n, n, &mut rng);
            if symmetric {
                Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)]) * 0.5)
            } else {
                a
            }
        })
        .collect();
    PolyProblem::from_dense(coeffs)
}

/// Diagonal QEP `λ^2 I + λ diag(b) + diag(c)`; with `b = (-3, -7)` and
/// `c = (2, 12)` the eigenvalues are 1, 2 (vector `e_1`) and 3, 4 (`e_2`).
pub fn gen_diagonal_qep(b: &[f64], c: &[f64]) -> Result<PolyProblem> {
    if b.len() != c.len() || b.is_empty() {
        return Err(Error::Dimension("diagonal QEP needs equally long, nonempty b and c".into()));
    }
    let n = b.len();
    let diag = |v: &[f64]| CsrMatrix::from_diagonal(&v.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>());
    PolyProblem::new(vec![diag(c).into(), diag(b).into(), CsrMatrix::identity(n).into()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{normalized, random_col};

    fn rel(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
        (a - b).norm_l2() / b.norm_l2().max(1e-300)
    }

    fn naive_eval(p: &PolyProblem, lambda: C64) -> Mat<C64> {
        let n = p.dim();
        let mut out = Mat::<C64>::zeros(n, n);
        for (i, a) in p.coeffs().iter().enumerate() {
            let d = a.to_dense();
            let w = lambda.powi(i as i32);
            out += Mat::from_fn(n, n, |r, c| d[(r, c)] * w);
        }
        out
    }

    #[test]
    fn eval_examples() {
        let p = gen_diagonal_qep(&[0.0, 0.0], &[-1.0, -1.0]).unwrap();
        let q = p.eval(c64(2.0, 0.0));
        assert_eq!(q[(0, 0)], c64(3.0, 0.0));
        assert_eq!(q[(1, 1)], c64(3.0, 0.0));
        assert_eq!(q[(0, 1)], c64(0.0, 0.0));

        let r = gen_random_pep(4, 3, 11, false).unwrap();
        assert!(rel(&r.eval(c64(0.0, 0.0)), &r.coeff(0).to_dense()) == 0.0);
        let l = c64(1.0, 1.0);
        assert!(rel(&r.eval(l), &naive_eval(&r, l)) < 1e-13);
        let x = random_col(4, &mut ChaCha8Rng::seed_from_u64(2));
        let y1 = r.eval_apply(l, x.as_ref());
        let y2 = naive_eval(&r, l) * &x;
        assert!((&y1 - &y2).norm_l2() < 1e-12 * y2.norm_l2());
    }

    #[test]
    fn derivative_examples() {
        let p = gen_diagonal_qep(&[0.0, 0.0], &[-1.0, -1.0]).unwrap();
        let d = p.derivative(c64(3.0, 0.0));
        assert_eq!(d[(0, 0)], c64(6.0, 0.0));
        assert_eq!(d[(1, 1)], c64(6.0, 0.0));

        let q = gen_random_pep(3, 2, 5, false).unwrap();
        assert_eq!(rel(&q.derivative(c64(0.0, 0.0)), &q.coeff(1).to_dense()), 0.0);

        // central difference oracle
        let r = gen_random_pep(4, 3, 7, false).unwrap();
        let l = c64(0.5, 0.0);
        let h = 1e-6;
        let fd = Mat::from_fn(4, 4, |i, j| {
            (naive_eval(&r, l + h)[(i, j)] - naive_eval(&r, l - h)[(i, j)]) / (2.0 * h)
        });
        assert!(rel(&r.derivative(l), &fd) < 1e-7);
    }

    #[test]
    fn divided_difference_examples() {
        let q = gen_random_pep(3, 2, 9, false).unwrap();
        let a = q.coeff(2).to_dense();
        let b = q.coeff(1).to_dense();
        let expected = Mat::from_fn(3, 3, |i, j| a[(i, j)] * 3.0 + b[(i, j)]);
        assert!(rel(&q.divided_difference(c64(1.0, 0.0), c64(2.0, 0.0)), &expected) < 1e-15);
        assert!(rel(&q.divided_difference(c64(1.5, 0.0), c64(1.5, 0.0)), &expected) < 1e-15);
        assert!(rel(&q.derivative(c64(1.5, 0.0)), &expected) < 1e-15);

        let r = gen_random_pep(4, 3, 13, false).unwrap();
        let (l, t) = (c64(0.3, 0.0), c64(0.9, 0.0));
        let ratio = Mat::from_fn(4, 4, |i, j| (naive_eval(&r, l)[(i, j)] - naive_eval(&r, t)[(i, j)]) / (l - t));
        assert!(rel(&r.divided_difference(l, t), &ratio) < 1e-12);
    }

    #[test]
    fn general_nep_divided_difference() {
        let a = random_mat(3, 3, &mut ChaCha8Rng::seed_from_u64(4));
        let a2 = a.clone();
        let lin = GeneralNep::new(
            3,
            move |l| Mat::from_fn(3, 3, |i, j| a2[(i, j)] - if i == j { l } else { c64(0.0, 0.0) }),
            |_| Mat::from_fn(3, 3, |i, j| if i == j { c64(-1.0, 0.0) } else { c64(0.0, 0.0) }),
        );
        let minus_i = Mat::from_fn(3, 3, |i, j| if i == j { c64(-1.0, 0.0) } else { c64(0.0, 0.0) });
        assert!(rel(&lin.divided_difference(c64(0.3, 1.0), c64(-2.0, 0.5)), &minus_i) < 1e-14);
        assert!(rel(&lin.divided_difference(c64(0.3, 1.0), c64(0.3, 1.0)), &minus_i) == 0.0);

        let expo = GeneralNep::new(
            2,
            |l| Mat::from_fn(2, 2, |i, j| if i == j { l.exp() } else { c64(0.0, 0.0) }),
            |l| Mat::from_fn(2, 2, |i, j| if i == j { l.exp() } else { c64(0.0, 0.0) }),
        );
        let dd = expo.divided_difference(c64(1.0, 0.0), c64(0.0, 0.0));
        assert!((dd[(0, 0)] - (std::f64::consts::E - 1.0)).norm() < 1e-14);
        assert!(GeneralNep::new(1, |_| Mat::zeros(1, 1), |_| Mat::zeros(1, 1)).with_coincidence_tol(0.0).is_err());
    }

    #[test]
    fn condition_number_examples() {
        let p = gen_diagonal_qep(&[-3.0, -7.0], &[2.0, 12.0]).unwrap();
        let e1 = Col::from_fn(2, |i| if i == 0 { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        let k = p.condition_number(c64(1.0, 0.0), e1.as_ref(), e1.as_ref()).unwrap();
        assert!((k - 20.0).abs() < 20.0 * 2e-3, "{k}");

        let s = PolyProblem::from_dense(vec![
            Mat::from_fn(1, 1, |_, _| c64(-1.0, 0.0)),
            Mat::zeros(1, 1),
            Mat::from_fn(1, 1, |_, _| c64(1.0, 0.0)),
        ])
        .unwrap();
        let one = Col::from_fn(1, |_| c64(1.0, 0.0));
        assert!((s.condition_number(c64(1.0, 0.0), one.as_ref(), one.as_ref()).unwrap() - 1.0).abs() < 1e-12);

        // λ = 0 reduces to ‖C‖ / |y^* B x|
        let q = gen_random_pep(3, 2, 21, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = normalized(random_col(3, &mut rng));
        let y = normalized(random_col(3, &mut rng));
        let k0 = q.condition_number(c64(0.0, 0.0), x.as_ref(), y.as_ref()).unwrap();
        let expected = q.norms2()[0] / dot(y.as_ref(), q.coeff(1).apply(x.as_ref()).as_ref()).norm();
        assert!((k0 - expected).abs() <= 1e-14 * expected);

        // orthogonal x and y: the denominator vanishes
        let e2 = Col::from_fn(2, |i| if i == 1 { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        assert!(matches!(
            p.condition_number(c64(1.0, 0.0), e1.as_ref(), e2.as_ref()),
            Err(Error::Defective { .. })
        ));
    }

    #[test]
    fn gyroscopic_structure() {
        let p = gen_gyroscopic(2, 5).unwrap();
        let a = p.coeff(2).to_dense();
        let b = p.coeff(1).to_dense();
        let c = p.coeff(0).to_dense();
        assert_eq!(a[(0, 0)], c64(0.0, 0.0));
        assert!((0.0..=1.0).contains(&a[(1, 1)].re));
        assert_eq!(b[(0, 1)], c64(1.0, 0.0));
        assert_eq!(b[(1, 0)], c64(-1.0, 0.0));
        assert_eq!(b[(0, 0)], c64(0.0, 0.0));
        for i in 0..2 {
            assert!(c[(i, i)].re < 0.0 && c[(i, i)].re > -1.0);
        }
        let big = gen_gyroscopic(50, 1).unwrap();
        let b = big.coeff(1).to_dense();
        assert!((&b + b.transpose()).norm_l2() == 0.0);
        let again = gen_gyroscopic(50, 1).unwrap();
        assert_eq!(big.coeff(2).to_dense(), again.coeff(2).to_dense());
        assert!(gen_gyroscopic(1, 0).is_err());
    }

    #[test]
    fn random_pep_determinism_and_symmetry() {
        let a = gen_random_pep(5, 2, 3, false).unwrap();
        let b = gen_random_pep(5, 2, 3, false).unwrap();
        for i in 0..=2 {
            assert_eq!(a.coeff(i).to_dense(), b.coeff(i).to_dense());
        }
        let s = gen_random_pep(5, 2, 3, true).unwrap();
        for i in 0..=2 {
            let d = s.coeff(i).to_dense();
            assert_eq!((&d - d.transpose()).norm_l2(), 0.0);
        }
    }

    #[test]
    fn example_2x2_is_the_expected_pencil() {
        let p = gen_example_2x2(1.0, 0.0);
        let a = p.coeff(0).to_dense();
        assert_eq!(a[(1, 1)], c64(1.0, 0.0));
        assert_eq!(a[(0, 1)], c64(0.0, 0.0));
        // A - λ I is singular at λ = 0 and λ = δ
        let (d, e) = (1e-6, 1e-3);
        let p = gen_example_2x2(d, e);
        for l in [0.0, d] {
            let m = p.eval(c64(l, 0.0));
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            assert!(det.norm() < 1e-20);
        }
        let y = Col::from_fn(2, |i| if i == 0 { c64(d, 0.0) } else { c64(-e, 0.0) });
        assert!((p.eval(c64(0.0, 0.0)).adjoint() * &y).norm_l2() < 1e-20);
    }
}
