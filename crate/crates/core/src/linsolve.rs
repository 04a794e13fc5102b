//! Inner solvers: GMRES, LU preconditioners at a target, the projected
//! Jacobi–Davidson correction equation, and null vectors of nearly singular
//! operators.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Col, ColRef, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::{axpy, dot, norm, normalize, random_col, scale, smallest_singular_triplet, C64};
use crate::error::{Error, Result};
use crate::homogeneous::{hom_weights, ProjectivePoint};
use crate::problems::{NonlinearProblem, PolyProblem};
use crate::sparse::CsrMatrix;

/// A square linear map given by its action.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: ColRef<'_, C64>) -> Col<C64>;
}

/// Wraps a closure as a [`LinearOperator`].
pub struct FnOperator<F> {
    n: usize,
    f: F,
}

impl<F: Fn(ColRef<'_, C64>) -> Col<C64>> FnOperator<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(ColRef<'_, C64>) -> Col<C64>> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: ColRef<'_, C64>) -> Col<C64> {
        (self.f)(x)
    }
}

impl LinearOperator for Mat<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: ColRef<'_, C64>) -> Col<C64> {
        self * x
    }
}

/// Approximate inverse `M^{-1}` of some `M ≈ A`.
pub trait Preconditioner: Send + Sync {
    fn dim(&self) -> usize;
    fn solve(&self, b: ColRef<'_, C64>) -> Col<C64>;
    /// `M^{-H} b`.
    fn solve_adjoint(&self, b: ColRef<'_, C64>) -> Col<C64>;
}

pub struct IdentityPreconditioner(pub usize);

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.0
    }

    fn solve(&self, b: ColRef<'_, C64>) -> Col<C64> {
        b.to_owned()
    }

    fn solve_adjoint(&self, b: ColRef<'_, C64>) -> Col<C64> {
        b.to_owned()
    }
}

/// Swaps `solve` and `solve_adjoint` of another preconditioner, turning an
/// LU of `M` into one of `M^H`.
pub struct AdjointPreconditioner<'a>(pub &'a dyn Preconditioner);

impl Preconditioner for AdjointPreconditioner<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn solve(&self, b: ColRef<'_, C64>) -> Col<C64> {
        self.0.solve_adjoint(b)
    }

    fn solve_adjoint(&self, b: ColRef<'_, C64>) -> Col<C64> {
        self.0.solve(b)
    }
}

/// LU factorization with partial pivoting of a band matrix, stored row-wise
/// with room for the fill-in caused by pivoting.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    ab: Vec<C64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension("banded LU needs a square matrix".into()));
        }
        let (kl, ku) = a.bandwidth();
        let width = 2 * kl + ku + 1;
        let mut lu = Self { n, kl, ku, width, ab: vec![C64::from(0.0); n * width], pivots: vec![0; n] };
        for (i, j, v) in a.triplets() {
            let k = lu.idx(i, j);
            lu.ab[k] += v;
        }
        let mut max_pivot: f64 = 0.0;
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.ab[lu.idx(k, k)].norm();
            for r in k + 1..=last {
                let v = lu.ab[lu.idx(r, k)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            lu.pivots[k] = p;
            let jend = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jend {
                    let (a1, a2) = (lu.idx(k, j), lu.idx(p, j));
                    lu.ab.swap(a1, a2);
                }
            }
            let piv = lu.ab[lu.idx(k, k)];
            max_pivot = max_pivot.max(piv.norm());
            min_pivot = min_pivot.min(piv.norm());
            if piv.norm() == 0.0 {
                continue;
            }
            for r in k + 1..=last {
                let ir = lu.idx(r, k);
                let l = lu.ab[ir] / piv;
                lu.ab[ir] = l;
                if l == C64::from(0.0) {
                    continue;
                }
                for j in k + 1..=jend {
                    let u = lu.ab[lu.idx(k, j)];
                    let t = lu.idx(r, j);
                    lu.ab[t] -= l * u;
                }
            }
        }
        check_pivots(min_pivot, max_pivot)?;
        Ok(lu)
    }

    pub fn solve(&self, b: ColRef<'_, C64>) -> Col<C64> {
        let n = self.n;
        let mut x = b.to_owned();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                let t = x[k];
                x[k] = x[p];
                x[p] = t;
            }
            let xk = x[k];
            for r in k + 1..=(k + self.kl).min(n.saturating_sub(1)) {
                x[r] -= self.ab[self.idx(r, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + self.kl + self.ku).min(n - 1) {
                s -= self.ab[self.idx(k, j)] * x[j];
            }
            x[k] = s / self.ab[self.idx(k, k)];
        }
        x
    }

    pub fn solve_adjoint(&self, b: ColRef<'_, C64>) -> Col<C64> {
        let n = self.n;
        let mut z = b.to_owned();
        // U^H z = b
        for k in 0..n {
            let mut s = z[k];
            for j in k.saturating_sub(self.kl + self.ku)..k {
                s -= self.ab[self.idx(j, k)].conj() * z[j];
            }
            z[k] = s / self.ab[self.idx(k, k)].conj();
        }
        // undo the eliminations and interchanges in reverse order
        for k in (0..n).rev() {
            let mut s = C64::from(0.0);
            for r in k + 1..=(k + self.kl).min(n - 1) {
                s += self.ab[self.idx(r, k)].conj() * z[r];
            }
            z[k] -= s;
            let p = self.pivots[k];
            if p != k {
                let t = z[k];
                z[k] = z[p];
                z[p] = t;
            }
        }
        z
    }
}

fn check_pivots(min_pivot: f64, max_pivot: f64) -> Result<()> {
    if !(min_pivot > 1e-14 * max_pivot) || !min_pivot.is_finite() {
        return Err(Error::Singular(format!("LU pivot ratio {:.1e}", min_pivot / max_pivot)));
    }
    Ok(())
}

/// Exact LU factorization of `F(τ)` used as a preconditioner.
pub enum LuPreconditioner {
    Dense(Box<PartialPivLu<C64>>),
    Banded(BandedLu),
}

impl LuPreconditioner {
    /// Dense LU with partial pivoting; fails if a pivot is tiny relative to
    /// the largest one.
    pub fn dense(a: &Mat<C64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension("LU needs a square matrix".into()));
        }
        let lu = a.partial_piv_lu();
        let u = lu.U();
        let mut mx: f64 = 0.0;
        let mut mn = f64::INFINITY;
        for i in 0..a.nrows() {
            mx = mx.max(u[(i, i)].norm());
            mn = mn.min(u[(i, i)].norm());
        }
        check_pivots(mn, mx)?;
        Ok(Self::Dense(Box::new(lu)))
    }

    pub fn banded(a: &CsrMatrix) -> Result<Self> {
        Ok(Self::Banded(BandedLu::factor(a)?))
    }
}

impl Preconditioner for LuPreconditioner {
    fn dim(&self) -> usize {
        match self {
            Self::Dense(lu) => lu.U().nrows(),
            Self::Banded(lu) => lu.n,
        }
    }

    fn solve(&self, b: ColRef<'_, C64>) -> Col<C64> {
        match self {
            Self::Dense(lu) => lu.solve(b),
            Self::Banded(lu) => lu.solve(b),
        }
    }

    fn solve_adjoint(&self, b: ColRef<'_, C64>) -> Col<C64> {
        match self {
            Self::Dense(lu) => {
                let mut x = b.to_owned();
                lu.solve_adjoint_in_place(x.as_mat_mut());
                x
            }
            Self::Banded(lu) => lu.solve_adjoint(b),
        }
    }
}

/// `Σ w_i A_i` in sparse form when every coefficient is sparse.
fn sparse_combination(poly: &PolyProblem, w: &[C64]) -> Option<CsrMatrix> {
    if !poly.is_sparse() {
        return None;
    }
    let mut t = Vec::new();
    for (a, &wi) in poly.coeffs().iter().zip(w) {
        if let crate::sparse::CoeffMatrix::Sparse(s) = a {
            t.extend(s.triplets().map(|(i, j, v)| (i, j, wi * v)));
        }
    }
    CsrMatrix::from_triplets(poly.dim(), poly.dim(), &t).ok()
}

/// LU of `Σ w_i A_i`, banded when the coefficients are sparse with a narrow
/// band, dense otherwise.
pub fn lu_of_combination(poly: &PolyProblem, w: &[C64]) -> Result<LuPreconditioner> {
    let n = poly.dim();
    if let (Some((kl, ku)), Some(s)) = (poly.bandwidth(), sparse_combination(poly, w)) {
        if 4 * (kl + ku + 1) <= n {
            return LuPreconditioner::banded(&s);
        }
    }
    LuPreconditioner::dense(&poly.combination(w))
}

/// Factorizes `F(τ)` once. Errors if `F(τ)` is singular to working
/// precision; pick a shifted target in that case.
pub fn lu_preconditioner(problem: &dyn NonlinearProblem, tau: C64) -> Result<LuPreconditioner> {
    match problem.as_polynomial() {
        Some(poly) => lu_of_combination(poly, &poly.eval_weights(tau)),
        None => LuPreconditioner::dense(&problem.eval(tau)),
    }
}

/// LU of `P(α, β)` for a projective target.
pub fn lu_preconditioner_projective(poly: &PolyProblem, tau: &ProjectivePoint) -> Result<LuPreconditioner> {
    lu_of_combination(poly, &hom_weights(poly.degree(), tau))
}

#[derive(Clone, Debug)]
pub struct GmresResult {
    pub x: Col<C64>,
    /// Final residual norm relative to `‖b‖`.
    pub residual: f64,
    pub iterations: usize,
    /// Relative residual after each iteration, starting with the initial one.
    pub history: Vec<f64>,
}

/// Right-preconditioned GMRES without restarts.
///
/// Stops once the relative residual drops to `tol` or after `maxit`
/// iterations. A breakdown of the Arnoldi process means the Krylov space is
/// invariant and the current iterate is exact, so it is treated as
/// convergence.
pub fn gmres(
    a: &dyn LinearOperator,
    b: ColRef<'_, C64>,
    x0: Option<ColRef<'_, C64>>,
    tol: f64,
    maxit: usize,
    m: Option<&dyn Preconditioner>,
) -> GmresResult {
    let n = a.dim();
    let precond = |v: ColRef<'_, C64>| match m {
        Some(m) => m.solve(v),
        None => v.to_owned(),
    };
    let mut x = match x0 {
        Some(x0) => x0.to_owned(),
        None => Col::zeros(n),
    };
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return GmresResult { x: Col::zeros(n), residual: 0.0, iterations: 0, history: vec![0.0] };
    }
    let mut r = b.to_owned();
    if x0.is_some() {
        r -= a.apply(x.as_ref());
    }
    let beta = norm(r.as_ref());
    let mut history = vec![beta / bnorm];
    if beta / bnorm <= tol || maxit == 0 {
        return GmresResult { x, residual: beta / bnorm, iterations: 0, history };
    }

    let mut basis: Vec<Col<C64>> = Vec::with_capacity(maxit + 1);
    let mut r0 = r;
    scale(&mut r0, C64::from(1.0 / beta));
    basis.push(r0);
    // Hessenberg columns after Givens rotations, i.e. the R factor
    let mut hcols: Vec<Vec<C64>> = Vec::with_capacity(maxit);
    let mut cs: Vec<(f64, C64)> = Vec::with_capacity(maxit);
    let mut g = vec![C64::from(beta)];
    let mut k = 0;
    while k < maxit {
        let z = precond(basis[k].as_ref());
        let mut w = a.apply(z.as_ref());
        let mut h = vec![C64::from(0.0); k + 2];
        for _pass in 0..2 {
            for (i, vi) in basis.iter().enumerate() {
                let c = dot(vi.as_ref(), w.as_ref());
                h[i] += c;
                axpy(&mut w, -c, vi.as_ref());
            }
        }
        let hn = norm(w.as_ref());
        h[k + 1] = C64::from(hn);
        for (i, &(c, s)) in cs.iter().enumerate() {
            let t = c * h[i] + s * h[i + 1];
            h[i + 1] = -s.conj() * h[i] + c * h[i + 1];
            h[i] = t;
        }
        let (c, s, rr) = givens(h[k], h[k + 1]);
        h[k] = rr;
        h[k + 1] = C64::from(0.0);
        cs.push((c, s));
        let gk = g[k];
        g.push(-s.conj() * gk);
        g[k] = c * gk;
        hcols.push(h);
        k += 1;
        let res = g[k].norm() / bnorm;
        history.push(res);
        let breakdown = hn <= 1e-14 * bnorm.max(1e-300);
        if res <= tol || breakdown {
            break;
        }
        let mut v = w;
        scale(&mut v, C64::from(1.0 / hn));
        basis.push(v);
    }
    // back substitution R y = g
    let mut y = vec![C64::from(0.0); k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= hcols[j][i] * y[j];
        }
        y[i] = if hcols[i][i].norm() > 0.0 { s / hcols[i][i] } else { C64::from(0.0) };
    }
    let mut u = Col::<C64>::zeros(n);
    for (j, yj) in y.iter().enumerate() {
        axpy(&mut u, *yj, basis[j].as_ref());
    }
    let du = precond(u.as_ref());
    x += &du;
    let residual = *history.last().expect("nonempty");
    GmresResult { x, residual, iterations: k, history }
}

/// Complex Givens rotation with real cosine: `[c s; -s̄ c] [a; b] = [r; 0]`.
fn givens(a: C64, b: C64) -> (f64, C64, C64) {
    if b.norm() == 0.0 {
        return (1.0, C64::from(0.0), a);
    }
    if a.norm() == 0.0 {
        return (0.0, b.conj() / b.norm(), C64::from(b.norm()));
    }
    let an = a.norm();
    let t = (an * an + b.norm_sqr()).sqrt();
    let c = an / t;
    let ph = a / an;
    let s = ph * b.conj() / t;
    (c, s, ph * t)
}

/// Orthogonalizes `t` against the unit vector `v`, twice.
fn project_out(t: &mut Col<C64>, v: ColRef<'_, C64>) {
    for _ in 0..2 {
        let c = dot(v, t.as_ref());
        axpy(t, -c, v);
    }
}

/// Approximately solves the Jacobi–Davidson correction equation
///
/// ```text
/// (I − p v^*/(v^* p)) F(θ) (I − v v^*) t = −r,   t ⊥ v,   p = F'(θ) v
/// ```
///
/// with `steps` GMRES iterations. The preconditioner is projected the usual
/// way, `K̃^{-1} z = K^{-1} z − K^{-1} p (v^* K^{-1} z)/(v^* K^{-1} p)`, and
/// applied from the left so the Krylov space stays orthogonal to `v`.
pub fn projected_correction_solve(
    apply_f: &dyn Fn(ColRef<'_, C64>) -> Col<C64>,
    p: ColRef<'_, C64>,
    v: ColRef<'_, C64>,
    r: ColRef<'_, C64>,
    steps: usize,
    m: Option<&dyn Preconditioner>,
) -> Col<C64> {
    let n = v.nrows();
    let ident = IdentityPreconditioner(n);
    let m: &dyn Preconditioner = m.unwrap_or(&ident);
    if norm(r) == 0.0 {
        return Col::zeros(n);
    }
    let kp = m.solve(p);
    let vkp = dot(v, kp.as_ref());
    let vp = dot(v, p);
    let scale_ref = norm(v) * norm(kp.as_ref());
    if vkp.norm() <= 1e-12 * scale_ref || vp.norm() <= 1e-14 * norm(p) {
        let mut t = m.solve(r);
        scale(&mut t, C64::from(-1.0));
        project_out(&mut t, v);
        return t;
    }
    let kinv_proj = |z: ColRef<'_, C64>| {
        let mut kz = m.solve(z);
        let c = dot(v, kz.as_ref()) / vkp;
        axpy(&mut kz, -c, kp.as_ref());
        kz
    };
    let op = FnOperator::new(n, |z: ColRef<'_, C64>| {
        let mut zp = z.to_owned();
        project_out(&mut zp, v);
        let fz = apply_f(zp.as_ref());
        kinv_proj(fz.as_ref())
    });
    let mut rhs = kinv_proj(r);
    scale(&mut rhs, C64::from(-1.0));
    let res = gmres(&op, rhs.as_ref(), None, 1e-14, steps.max(1), None);
    let mut t = res.x;
    project_out(&mut t, v);
    t
}

/// Correction equation for a polynomial or nonlinear problem at `θ`.
pub fn correction_for_problem(
    problem: &dyn NonlinearProblem,
    theta: C64,
    v: ColRef<'_, C64>,
    r: ColRef<'_, C64>,
    steps: usize,
    m: Option<&dyn Preconditioner>,
) -> Col<C64> {
    let p = problem.derivative_apply(theta, v);
    projected_correction_solve(&|z| problem.eval_apply(theta, z), p.as_ref(), v, r, steps, m)
}

/// Algorithm for a null vector of a (nearly) singular `Z`:
///
/// 1. `b = Z y₀ / ‖Z y₀‖`
/// 2. solve `Z x = b` approximately (GMRES, optionally preconditioned)
/// 3. `y = (x − y₀) / ‖x − y₀‖`
///
/// `y₀` is first rescaled by `1/‖Z y₀‖` so that `x = y₀` solves step 2
/// exactly in the nonsingular directions; the difference `x − y₀` is then
/// dominated by the null direction. The steps are repeated from the new `y`
/// until `‖Z y‖ ≤ eps` (for unit `y`). When an iteration makes no progress a
/// fresh random start is tried, at most three times.
pub fn null_vector(
    z: &dyn LinearOperator,
    y0: ColRef<'_, C64>,
    eps: f64,
    m: Option<&dyn Preconditioner>,
    seed: u64,
) -> Result<Col<C64>> {
    let n = z.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = y0.to_owned();
    if normalize(&mut y) == 0.0 {
        return Err(Error::InvalidArgument("null_vector needs a nonzero start".into()));
    }
    let mut best = y.clone();
    let mut best_res = f64::INFINITY;
    let mut restarts = 0;
    let mut sweeps = 0;
    loop {
        let zy = z.apply(y.as_ref());
        let nzy = norm(zy.as_ref());
        if nzy < best_res {
            best_res = nzy;
            best = y.clone();
        }
        if nzy == 0.0 || nzy <= eps {
            return Ok(y);
        }
        let mut y0s = y.clone();
        scale(&mut y0s, C64::from(1.0 / nzy));
        let mut b = zy;
        scale(&mut b, C64::from(1.0 / nzy));
        let sol = gmres(z, b.as_ref(), None, eps.max(1e-15), n.clamp(1, 50), m);
        let mut d = sol.x;
        d -= &y0s;
        let nd = norm(d.as_ref());
        let no_progress = !(nd > 1e-12 * norm(y0s.as_ref())) || !nd.is_finite();
        sweeps += 1;
        if no_progress || sweeps > 8 {
            if best_res <= eps {
                return Ok(best);
            }
            restarts += 1;
            if restarts > 3 {
                return Err(Error::NoProgress(restarts));
            }
            sweeps = 0;
            y = random_col(n, &mut rng);
            normalize(&mut y);
            continue;
        }
        scale(&mut d, C64::from(1.0 / nd));
        y = d;
    }
}

/// Sizes up to which a dense SVD is used as a last resort for left vectors.
const DENSE_FALLBACK_CAP: usize = 2000;

fn left_null(
    n: usize,
    apply_adjoint: &dyn Fn(ColRef<'_, C64>) -> Col<C64>,
    dense: &dyn Fn() -> Mat<C64>,
    lu: Result<LuPreconditioner>,
    eps: f64,
    seed: u64,
) -> Result<Col<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y0 = random_col(n, &mut rng);
    let op = FnOperator::new(n, apply_adjoint);
    let attempt = match &lu {
        Ok(lu) => null_vector(&op, y0.as_ref(), eps, Some(&AdjointPreconditioner(lu)), seed ^ 0x9e37),
        Err(_) => null_vector(&op, y0.as_ref(), eps, None, seed ^ 0x9e37),
    };
    if attempt.is_ok() {
        return attempt;
    }
    if let Ok(lu) = &lu {
        // plain inverse iteration with the same factorization
        let mut y = y0;
        for _ in 0..5 {
            y = lu.solve_adjoint(y.as_ref());
            if normalize(&mut y) == 0.0 || !norm(y.as_ref()).is_finite() {
                break;
            }
            if norm(apply_adjoint(y.as_ref()).as_ref()) <= eps {
                return Ok(y);
            }
        }
    }
    match attempt {
        Ok(y) => Ok(y),
        Err(e) if n <= DENSE_FALLBACK_CAP => {
            let (_, left, _, _) = smallest_singular_triplet(dense().as_ref())?;
            let res = norm(apply_adjoint(left.as_ref()).as_ref());
            if res <= eps {
                Ok(left)
            } else {
                Err(e)
            }
        }
        Err(e) => Err(e),
    }
}

/// Left eigenvector `y` with `F(λ)^* y ≈ 0` for a converged `λ`, via
/// [`null_vector`] on `F(λ)^H`. `tol` is relative to `Σ |λ|^i ‖A_i‖_1`.
///
/// Without a preconditioner one LU of `F(λ)` is computed and reused for the
/// adjoint solves.
pub fn left_eigenvector(
    problem: &dyn NonlinearProblem,
    lambda: C64,
    tol: f64,
    m: Option<&dyn Preconditioner>,
    seed: u64,
) -> Result<Col<C64>> {
    let n = problem.dim();
    let eps = tol * problem.residual_scale(lambda);
    let apply_adj = |x: ColRef<'_, C64>| problem.eval_apply_adjoint(lambda, x);
    if let Some(m) = m {
        let op = FnOperator::new(n, apply_adj);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y0 = random_col(n, &mut rng);
        if let Ok(y) = null_vector(&op, y0.as_ref(), eps, Some(&AdjointPreconditioner(m)), seed) {
            return Ok(y);
        }
    }
    let lu = lu_for_singular(problem, lambda);
    left_null(n, &apply_adj, &|| problem.eval(lambda), lu, eps, seed)
}

/// LU of a matrix expected to be nearly singular: if the pivots signal exact
/// singularity the evaluation point is nudged by a relative `1e-13`.
fn lu_for_singular(problem: &dyn NonlinearProblem, lambda: C64) -> Result<LuPreconditioner> {
    lu_preconditioner(problem, lambda)
        .or_else(|_| lu_preconditioner(problem, lambda + C64::from(1e-13 * lambda.norm().max(1.0))))
}

/// Left eigenvector for a projective eigenvalue: null vector of
/// `P(α, β)^H`. `tol` is relative to `Σ |α|^i |β|^(m-i) ‖A_i‖_1`.
pub fn left_eigenvector_projective(
    poly: &PolyProblem,
    p: &ProjectivePoint,
    tol: f64,
    seed: u64,
) -> Result<Col<C64>> {
    let n = poly.dim();
    let w = hom_weights(poly.degree(), p);
    let scale_: f64 = poly.norms1().iter().zip(&w).map(|(a, wi)| a * wi.norm()).sum();
    let eps = tol * scale_;
    let apply_adj = |x: ColRef<'_, C64>| poly.combination_apply_adjoint(&w, x);
    let lu = lu_of_combination(poly, &w).or_else(|_| {
        let nudged = ProjectivePoint::new(p.alpha() + C64::from(1e-13), p.beta() - C64::from(1e-13))?;
        lu_of_combination(poly, &hom_weights(poly.degree(), &nudged))
    });
    left_null(n, &apply_adj, &|| poly.combination(&w), lu, eps, seed)
}
