//! Small dense linear algebra helpers on top of `faer`.
//!
//! Everything in the crate works with complex double precision. Vectors are
//! `faer::Col<C64>`, matrices `faer::Mat<C64>`.

use faer::{Col, ColRef, Mat, MatRef};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `x^H y`.
pub fn dot(x: ColRef<'_, C64>, y: ColRef<'_, C64>) -> C64 {
    debug_assert_eq!(x.nrows(), y.nrows());
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: ColRef<'_, C64>) -> f64 {
    x.norm_l2()
}

pub fn scale(x: &mut Col<C64>, s: C64) {
    for v in x.iter_mut() {
        *v *= s;
    }
}

/// `y += a x`
pub fn axpy(y: &mut Col<C64>, a: C64, x: ColRef<'_, C64>) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += a * xi;
    }
}

/// Normalizes in place and returns the previous norm. A zero vector is left
/// untouched.
pub fn normalize(x: &mut Col<C64>) -> f64 {
    let nrm = norm(x.as_ref());
    if nrm > 0.0 {
        scale(x, C64::from(1.0 / nrm));
    }
    nrm
}

pub fn normalized(mut x: Col<C64>) -> Col<C64> {
    normalize(&mut x);
    x
}

/// Standard complex Gaussian vector (real and imaginary parts `N(0, 1/2)`).
pub fn random_col<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Col<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Col::from_fn(n, |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(h * re, h * im)
    })
}

pub fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Col<C64> {
    normalized(random_col(n, rng))
}

pub fn random_mat<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Mat<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut a = Mat::zeros(n, m);
    // column-major fill keeps the draw order independent of faer internals
    for j in 0..m {
        for i in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            a[(i, j)] = c64(h * re, h * im);
        }
    }
    a
}

/// Operator 1-norm (maximum absolute column sum).
pub fn norm1(a: MatRef<'_, C64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.col(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Frobenius norm.
pub fn norm_fro(a: MatRef<'_, C64>) -> f64 {
    a.norm_l2()
}

/// Estimates the spectral norm of an operator by power iteration on `A^H A`.
///
/// The start vector is fixed so repeated calls agree bit for bit. Iteration
/// stops when the estimate changes by less than `rel_tol`.
pub fn norm2_estimate<F, G>(n: usize, apply: F, apply_adjoint: G, rel_tol: f64) -> f64
where
    F: Fn(ColRef<'_, C64>) -> Col<C64>,
    G: Fn(ColRef<'_, C64>) -> Col<C64>,
{
    if n == 0 {
        return 0.0;
    }
    let mut x = normalized(Col::from_fn(n, |i| {
        c64(1.0 + (i as f64 * 0.618_033_988_7).fract(), 0.0)
    }));
    let mut est = 0.0;
    for _ in 0..100 {
        let ax = apply(x.as_ref());
        let nax = norm(ax.as_ref());
        if nax == 0.0 {
            return est;
        }
        let mut z = apply_adjoint(ax.as_ref());
        let nz = normalize(&mut z);
        if nz == 0.0 {
            return nax;
        }
        let prev = est;
        est = nax;
        x = z;
        if (est - prev).abs() <= rel_tol * est {
            break;
        }
    }
    est
}

pub fn norm2_estimate_mat(a: MatRef<'_, C64>) -> f64 {
    norm2_estimate(a.ncols(), |x| a * x, |x| a.adjoint() * x, 1e-3)
}

pub fn kron(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn kron_col(a: ColRef<'_, C64>, b: ColRef<'_, C64>) -> Col<C64> {
    let nb = b.nrows();
    Col::from_fn(a.nrows() * nb, |i| a[i / nb] * b[i % nb])
}

/// Multiplies `x` by the unit scalar that makes its largest entry real and
/// positive. Used to compare eigenvectors up to phase.
pub fn phase_normalize(x: &mut Col<C64>) {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (i, v) in x.iter().enumerate() {
        if v.norm() > best_abs {
            best_abs = v.norm();
            best = i;
        }
    }
    if best_abs > 0.0 {
        let ph = x[best].conj() / best_abs;
        scale(x, ph);
    }
}

/// Distance between the directions spanned by two unit vectors,
/// `sqrt(1 - |x^H y|^2)`.
pub fn subspace_angle_sin(x: ColRef<'_, C64>, y: ColRef<'_, C64>) -> f64 {
    let c = dot(x, y).norm() / (norm(x) * norm(y));
    (1.0 - (c * c).min(1.0)).sqrt()
}

/// Result of a dense generalized eigenvalue decomposition `A u = λ B u` in
/// homogeneous form: `β A u = α B u`.
pub struct GeneralizedEigen {
    pub alpha: Vec<C64>,
    pub beta: Vec<C64>,
    pub vectors: Mat<C64>,
}

/// Dense generalized eigendecomposition of the regular pencil `(A, B)`.
///
/// The pencil is reduced to the standard problem
/// `(A − σB)^{-1} B u = u / (λ − σ)` for a random shift `σ` of the size
/// `‖A‖/‖B‖`, which is both faster and more predictable than a direct QZ for
/// pencils with many infinite eigenvalues. Each `(α, β)` is then recomputed
/// from its eigenvector as the unit pair minimizing `‖β A u − α B u‖`. If no
/// shift gives a well-conditioned `A − σB` the QZ algorithm is used instead.
pub fn generalized_eigen(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Result<GeneralizedEigen> {
    use faer::linalg::solvers::Solve;
    use rand::SeedableRng;

    if a.nrows() != a.ncols() || b.nrows() != b.ncols() || a.nrows() != b.nrows() {
        return Err(Error::Dimension("generalized eigenproblem needs two square matrices of equal size".into()));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(GeneralizedEigen { alpha: vec![], beta: vec![], vectors: Mat::zeros(0, 0) });
    }
    let na = norm_fro(a);
    let nb = norm_fro(b);
    if !(na.is_finite() && nb.is_finite()) {
        return Err(Error::Eigensolver("pencil has non-finite entries".into()));
    }
    if nb > 0.0 && na > 0.0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        for attempt in 0..4 {
            let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let mag = (na / nb) * (0.5 + rng.random::<f64>()) * 10f64.powi(attempt % 2);
            let sigma = C64::from_polar(mag, phase);
            let shifted = Mat::from_fn(n, n, |i, j| a[(i, j)] - sigma * b[(i, j)]);
            let lu = shifted.partial_piv_lu();
            let u = lu.U();
            let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
            for i in 0..n {
                let d = u[(i, i)].norm();
                dmin = dmin.min(d);
                dmax = dmax.max(d);
            }
            if !(dmin > 1e-10 * dmax) {
                continue;
            }
            let m = lu.solve(b.to_owned());
            let (_, vectors) = eigen(m.as_ref())?;
            let mut alpha = Vec::with_capacity(n);
            let mut beta = Vec::with_capacity(n);
            for k in 0..n {
                let (al, be) = homogeneous_rayleigh(a, b, vectors.col(k));
                alpha.push(al);
                beta.push(be);
            }
            return Ok(GeneralizedEigen { alpha, beta, vectors });
        }
    }
    let gev = a.generalized_eigen(b).map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let alpha = (0..n).map(|i| gev.S_a()[i]).collect();
    let beta = (0..n).map(|i| gev.S_b()[i]).collect();
    Ok(GeneralizedEigen { alpha, beta, vectors: gev.U().to_owned() })
}

/// Unit `(α, β)` minimizing `‖β A u − α B u‖`.
fn homogeneous_rayleigh(a: MatRef<'_, C64>, b: MatRef<'_, C64>, u: ColRef<'_, C64>) -> (C64, C64) {
    let au = a * u;
    let bu = b * u;
    // Gram matrix of [Au, -Bu]; its smallest eigenvector is (β, α).
    let g11 = dot(au.as_ref(), au.as_ref()).re;
    let g22 = dot(bu.as_ref(), bu.as_ref()).re;
    let g12 = -dot(au.as_ref(), bu.as_ref());
    let tr = g11 + g22;
    let disc = ((g11 - g22) * (g11 - g22) / 4.0 + g12.norm_sqr()).sqrt();
    let lmin = tr / 2.0 - disc;
    // (G - lmin I) [β; α] = 0; pick the better conditioned row
    let (be, al) = if (g11 - lmin).abs() >= (g22 - lmin).abs() {
        (-g12, C64::from(g11 - lmin))
    } else {
        (C64::from(g22 - lmin), -g12.conj())
    };
    let nrm = (be.norm_sqr() + al.norm_sqr()).sqrt();
    if nrm == 0.0 || !nrm.is_finite() {
        return (C64::from(1.0), C64::from(0.0));
    }
    (al / nrm, be / nrm)
}

/// Standard eigendecomposition `A u = λ u`.
pub fn eigen(a: MatRef<'_, C64>) -> Result<(Vec<C64>, Mat<C64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((vec![], Mat::zeros(0, 0)));
    }
    let e = a.eigen().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    Ok(((0..n).map(|i| e.S()[i]).collect(), e.U().to_owned()))
}

/// Smallest singular triplet: returns `(right, left, sigma_min, sigma_max)`
/// with `A right ≈ sigma_min left`.
pub fn smallest_singular_triplet(a: MatRef<'_, C64>) -> Result<(Col<C64>, Col<C64>, f64, f64)> {
    let n = a.ncols();
    if n == 0 || a.nrows() != n {
        return Err(Error::Dimension("smallest singular triplet needs a nonempty square matrix".into()));
    }
    let svd = a.svd().map_err(|e| Error::Eigensolver(format!("svd: {e:?}")))?;
    let s = svd.S();
    let mut imin = 0;
    let mut imax = 0;
    for i in 0..n {
        if s[i].re < s[imin].re {
            imin = i;
        }
        if s[i].re > s[imax].re {
            imax = i;
        }
    }
    Ok((svd.V().col(imin).to_owned(), svd.U().col(imin).to_owned(), s[imin].re, s[imax].re))
}

/// Dominant left singular vector of a (possibly rectangular) matrix.
pub fn dominant_left_singular(a: MatRef<'_, C64>) -> Result<Col<C64>> {
    let svd = a.thin_svd().map_err(|e| Error::Eigensolver(format!("svd: {e:?}")))?;
    let s = svd.S();
    let k = a.nrows().min(a.ncols());
    let mut imax = 0;
    for i in 0..k {
        if s[i].re > s[imax].re {
            imax = i;
        }
    }
    Ok(svd.U().col(imax).to_owned())
}

/// Roots of the scalar polynomial `Σ coeffs[i] z^i`. Leading coefficients that
/// are negligible relative to the largest one are dropped first.
pub fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(vec![]);
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].norm() <= 1e-14 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Ok(vec![]);
    }
    let lead = coeffs[deg];
    // companion matrix with last column -c_i / c_deg
    let comp = Mat::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -coeffs[i] / lead
        } else if i == j + 1 {
            C64::from(1.0)
        } else {
            C64::from(0.0)
        }
    });
    Ok(eigen(comp.as_ref())?.0)
}

/// `max |M^H M - I|` entrywise, used for orthonormality checks.
pub fn orthonormality_error(v: MatRef<'_, C64>) -> f64 {
    let g = v.adjoint() * v;
    let mut err: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((g[(i, j)] - target).norm());
        }
    }
    err
}
