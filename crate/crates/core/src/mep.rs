//! Linear two- and three-parameter eigenvalue problems
//!
//! ```text
//! (A_i − λ_1 B_i1 − … − λ_k B_ik) x_i = 0,   i = 1, …, k,   k ∈ {2, 3}
//! ```
//!
//! with decomposable eigenvectors `x_1 ⊗ … ⊗ x_k`. In the two-parameter
//! notation `B_i1 = B_i`, `B_i2 = C_i`; the third parameter is called `ν`
//! and its matrices `D_i`.
//!
//! The operator determinants `Δ_0 = det[B_ij]_⊗` and `Δ_j` (column `j`
//! replaced by the `A_i`) turn the problem into the commuting generalized
//! eigenproblems `Δ_j z = λ_j Δ_0 z`. They are only formed for small
//! problems; selection and the subspace solver work factor by factor.

use std::fmt::Write as _;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Col, ColRef, Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{c64, dot, eigen, kron, norm, norm1, normalize, phase_normalize, random_col, C64};
use crate::error::{Error, Result};
use crate::jdsolver::Event;
use crate::linsolve::{projected_correction_solve, LuPreconditioner, Preconditioner};
use crate::oracle::check_size;

/// Relative rank-one residual above which a Kronecker eigenvector is treated
/// as belonging to a non-simple eigenvalue.
pub const RANK1_TOL: f64 = 1e-6;

/// One equation `T(p) = A − Σ_j p_j B_j`.
#[derive(Clone, Debug)]
pub struct MepEquation {
    a: Mat<C64>,
    params: Vec<Mat<C64>>,
    norms: Vec<f64>,
}

impl MepEquation {
    pub fn new(a: Mat<C64>, params: Vec<Mat<C64>>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}, expected square", n, a.ncols())));
        }
        for (j, b) in params.iter().enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::Dimension(format!(
                    "parameter matrix {} is {}x{}, expected {n}x{n}",
                    j + 1,
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        let norms = std::iter::once(&a).chain(&params).map(|m| norm1(m.as_ref())).collect();
        Ok(Self { a, params, norms })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Mat<C64> {
        &self.a
    }

    /// Matrix multiplying the `j`-th parameter (0-based).
    pub fn param(&self, j: usize) -> &Mat<C64> {
        &self.params[j]
    }

    pub fn params(&self) -> &[Mat<C64>] {
        &self.params
    }

    pub fn eval(&self, p: &[C64]) -> Mat<C64> {
        let mut t = self.a.clone();
        for (pj, b) in p.iter().zip(&self.params) {
            t -= faer::Scale(*pj) * b;
        }
        t
    }

    pub fn apply(&self, p: &[C64], x: ColRef<'_, C64>) -> Col<C64> {
        let mut y = &self.a * x;
        for (pj, b) in p.iter().zip(&self.params) {
            let bx = b * x;
            crate::dense::axpy(&mut y, -*pj, bx.as_ref());
        }
        y
    }

    /// `‖A‖_1 + Σ |p_j| ‖B_j‖_1`, the scale for relative residuals.
    pub fn scale(&self, p: &[C64]) -> f64 {
        let s = self.norms[0] + p.iter().zip(&self.norms[1..]).map(|(pj, nb)| pj.norm() * nb).sum::<f64>();
        s.max(f64::MIN_POSITIVE)
    }

    fn project(&self, v: MatRef<'_, C64>) -> Self {
        let pr = |m: &Mat<C64>| v.adjoint() * m * v;
        Self::new(pr(&self.a), self.params.iter().map(pr).collect()).expect("projection keeps shapes")
    }
}

/// A linear two- or three-parameter eigenvalue problem.
#[derive(Clone, Debug)]
pub struct LinearMep {
    eqs: Vec<MepEquation>,
}

impl LinearMep {
    /// Builds the problem and, when `Π n_i` is within the oracle cap, checks
    /// that `Δ_0` is nonsingular.
    pub fn new(eqs: Vec<MepEquation>) -> Result<Self> {
        let mep = Self::unchecked(eqs)?;
        let size: usize = mep.dims().iter().product();
        if check_size(size).is_ok() {
            let d0 = operator_determinant(&mep.param_blocks());
            delta0_lu(&d0)?;
        }
        Ok(mep)
    }

    fn unchecked(eqs: Vec<MepEquation>) -> Result<Self> {
        let k = eqs.len();
        if !(2..=3).contains(&k) {
            return Err(Error::InvalidArgument(format!("only 2 or 3 parameters are supported, got {k}")));
        }
        for (i, e) in eqs.iter().enumerate() {
            if e.params.len() != k {
                return Err(Error::Dimension(format!(
                    "equation {} has {} parameter matrices, expected {k}",
                    i + 1,
                    e.params.len()
                )));
            }
        }
        Ok(Self { eqs })
    }

    /// `(A_1 − λB_1 − μC_1) x_1 = 0, (A_2 − λB_2 − μC_2) x_2 = 0`.
    #[allow(clippy::too_many_arguments)]
    pub fn two(a1: Mat<C64>, b1: Mat<C64>, c1: Mat<C64>, a2: Mat<C64>, b2: Mat<C64>, c2: Mat<C64>) -> Result<Self> {
        Self::new(vec![MepEquation::new(a1, vec![b1, c1])?, MepEquation::new(a2, vec![b2, c2])?])
    }

    /// Three equations `(A_i − λB_i − μC_i − νD_i) x_i = 0`, each given as
    /// `[A_i, B_i, C_i, D_i]`.
    pub fn three(eqs: [[Mat<C64>; 4]; 3]) -> Result<Self> {
        let eqs = eqs
            .into_iter()
            .map(|[a, b, c, d]| MepEquation::new(a, vec![b, c, d]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(eqs)
    }

    pub fn nparams(&self) -> usize {
        self.eqs.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.eqs.iter().map(|e| e.dim()).collect()
    }

    pub fn equations(&self) -> &[MepEquation] {
        &self.eqs
    }

    pub fn equation(&self, i: usize) -> &MepEquation {
        &self.eqs[i]
    }

    fn param_blocks(&self) -> Vec<Vec<MatRef<'_, C64>>> {
        self.eqs.iter().map(|e| e.params.iter().map(|m| m.as_ref()).collect()).collect()
    }

    /// Relative residual `max_i ‖T_i(p) x_i‖ / scale_i(p)` for unit factors.
    pub fn residual(&self, p: &[C64], x: &[Col<C64>]) -> f64 {
        self.eqs
            .iter()
            .zip(x)
            .map(|(e, xi)| norm(e.apply(p, xi.as_ref()).as_ref()) / (e.scale(p) * norm(xi.as_ref())))
            .fold(0.0, f64::max)
    }

    /// Galerkin projection onto the bases `V_i`.
    pub fn project(&self, v: &[Mat<C64>]) -> Self {
        Self { eqs: self.eqs.iter().zip(v).map(|(e, vi)| e.project(vi.as_ref())).collect() }
    }

    /// `(y_1 ⊗ … )^* Δ_0 (v_1 ⊗ …)` computed as the determinant of the
    /// scalar matrix `[y_i^* B_ij v_i]`, without forming Kronecker vectors.
    pub fn delta0_form(&self, y: &[Col<C64>], v: &[Col<C64>]) -> C64 {
        let k = self.nparams();
        let s: Vec<Vec<C64>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| dot(y[i].as_ref(), (self.eqs[i].param(j) * &v[i]).as_ref()))
                    .collect()
            })
            .collect();
        scalar_det(&s)
    }

    /// Product over equations of the largest parameter-matrix norm; the
    /// natural size of `Δ_0`-forms with unit factors.
    pub fn delta0_scale(&self) -> f64 {
        self.eqs.iter().map(|e| e.norms[1..].iter().cloned().fold(0.0, f64::max)).product::<f64>().max(f64::MIN_POSITIVE)
    }
}

/// Signed permutations of `0..k` for `k ≤ 3`.
fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    match k {
        1 => vec![(vec![0], 1.0)],
        2 => vec![(vec![0, 1], 1.0), (vec![1, 0], -1.0)],
        3 => vec![
            (vec![0, 1, 2], 1.0),
            (vec![1, 2, 0], 1.0),
            (vec![2, 0, 1], 1.0),
            (vec![0, 2, 1], -1.0),
            (vec![2, 1, 0], -1.0),
            (vec![1, 0, 2], -1.0),
        ],
        _ => unreachable!("only up to three parameters"),
    }
}

fn scalar_det(s: &[Vec<C64>]) -> C64 {
    permutations(s.len())
        .into_iter()
        .map(|(p, sign)| p.iter().enumerate().fold(C64::from(sign), |acc, (i, &j)| acc * s[i][j]))
        .sum()
}

/// `Σ_σ sign(σ) M_{1σ(1)} ⊗ … ⊗ M_{kσ(k)}` for a `k × k` array of blocks.
fn operator_determinant(blocks: &[Vec<MatRef<'_, C64>>]) -> Mat<C64> {
    let k = blocks.len();
    let size: usize = blocks.iter().map(|row| row[0].nrows()).product();
    let mut out = Mat::<C64>::zeros(size, size);
    for (p, sign) in permutations(k) {
        let mut term = blocks[0][p[0]].to_owned();
        for i in 1..k {
            term = kron(term.as_ref(), blocks[i][p[i]]);
        }
        out += faer::Scale(C64::from(sign)) * &term;
    }
    out
}

fn delta0_lu(d0: &Mat<C64>) -> Result<PartialPivLu<C64>> {
    let lu = d0.partial_piv_lu();
    let u = lu.U();
    let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows() {
        dmin = dmin.min(u[(i, i)].norm());
        dmax = dmax.max(u[(i, i)].norm());
    }
    if !(dmin > 1e-12 * dmax) {
        return Err(Error::Singular(format!("Δ0 has pivot ratio {:e}", dmin / dmax)));
    }
    Ok(lu)
}

/// `[Δ_0, Δ_1, …, Δ_k]`, where `Δ_j` is `Δ_0` with its `j`-th block column
/// replaced by the `A_i`. For two parameters
/// `Δ_0 = B_1⊗C_2 − C_1⊗B_2`, `Δ_1 = A_1⊗C_2 − C_1⊗A_2`,
/// `Δ_2 = B_1⊗A_2 − A_1⊗B_2`.
pub fn delta_operators(mep: &LinearMep) -> Result<Vec<Mat<C64>>> {
    let size: usize = mep.dims().iter().product();
    check_size(size)?;
    let k = mep.nparams();
    let base = mep.param_blocks();
    let mut out = vec![operator_determinant(&base)];
    for j in 0..k {
        let mut blocks = base.clone();
        for (i, row) in blocks.iter_mut().enumerate() {
            row[j] = mep.eqs[i].a.as_ref();
        }
        out.push(operator_determinant(&blocks));
    }
    Ok(out)
}

/// An eigenvalue with unit right and left factors.
#[derive(Clone, Debug)]
pub struct MepTriplet {
    /// `(λ, μ)` or `(λ, μ, ν)`.
    pub value: Vec<C64>,
    pub right: Vec<Col<C64>>,
    pub left: Vec<Col<C64>>,
    /// `(y_1 ⊗ …)^* Δ_0 (x_1 ⊗ …)`.
    pub denom: C64,
    /// Relative residual of each equation.
    pub residuals: Vec<f64>,
    /// Relative distance of the Kronecker eigenvector from rank one
    /// (zero for triplets found by the subspace solver).
    pub rank1_residual: f64,
    pub simple: bool,
    pub iteration: usize,
}

#[derive(Serialize, Deserialize)]
struct MepTripletRepr {
    value: Vec<[f64; 2]>,
    right_re: Vec<Vec<f64>>,
    right_im: Vec<Vec<f64>>,
    left_re: Vec<Vec<f64>>,
    left_im: Vec<Vec<f64>>,
    denom: [f64; 2],
    residuals: Vec<f64>,
    rank1_residual: f64,
    simple: bool,
    iteration: usize,
}

fn split(v: &[Col<C64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    (v.iter().map(|c| c.iter().map(|z| z.re).collect()).collect(), v.iter().map(|c| c.iter().map(|z| z.im).collect()).collect())
}

fn join(re: &[Vec<f64>], im: &[Vec<f64>]) -> std::result::Result<Vec<Col<C64>>, String> {
    if re.len() != im.len() {
        return Err("factor count mismatch".into());
    }
    re.iter()
        .zip(im)
        .map(|(r, i)| {
            if r.len() != i.len() {
                return Err("factor length mismatch".to_string());
            }
            Ok(Col::from_fn(r.len(), |k| c64(r[k], i[k])))
        })
        .collect()
}

impl Serialize for MepTriplet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (right_re, right_im) = split(&self.right);
        let (left_re, left_im) = split(&self.left);
        MepTripletRepr {
            value: self.value.iter().map(|z| [z.re, z.im]).collect(),
            right_re,
            right_im,
            left_re,
            left_im,
            denom: [self.denom.re, self.denom.im],
            residuals: self.residuals.clone(),
            rank1_residual: self.rank1_residual,
            simple: self.simple,
            iteration: self.iteration,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MepTriplet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MepTripletRepr::deserialize(d)?;
        Ok(Self {
            value: r.value.iter().map(|[a, b]| c64(*a, *b)).collect(),
            right: join(&r.right_re, &r.right_im).map_err(serde::de::Error::custom)?,
            left: join(&r.left_re, &r.left_im).map_err(serde::de::Error::custom)?,
            denom: c64(r.denom[0], r.denom[1]),
            residuals: r.residuals,
            rank1_residual: r.rank1_residual,
            simple: r.simple,
            iteration: r.iteration,
        })
    }
}

/// Best rank-one approximation `c · x_1 ⊗ … ⊗ x_k` of a Kronecker vector,
/// factor `i` being the dominant left singular vector of the mode-`i`
/// unfolding. Returns unit factors and the relative residual.
pub fn rank1_factors(z: ColRef<'_, C64>, dims: &[usize]) -> Result<(Vec<Col<C64>>, f64)> {
    let total: usize = dims.iter().product();
    if z.nrows() != total {
        return Err(Error::Dimension(format!("vector of length {} does not match dims {dims:?}", z.nrows())));
    }
    let k = dims.len();
    let mut factors = Vec::with_capacity(k);
    for i in 0..k {
        let inner: usize = dims[i + 1..].iter().product();
        let ni = dims[i];
        let rest = total / ni;
        // index = (outer * ni + a) * inner + b
        let unf = Mat::from_fn(ni, rest, |a, c| {
            let outer = c / inner;
            let b = c % inner;
            z[(outer * ni + a) * inner + b]
        });
        let mut f = crate::dense::dominant_left_singular(unf.as_ref())?;
        normalize(&mut f);
        factors.push(f);
    }
    let mut prod = factors[0].clone();
    for f in &factors[1..] {
        prod = crate::dense::kron_col(prod.as_ref(), f.as_ref());
    }
    let c = dot(prod.as_ref(), z);
    let mut r = z.to_owned();
    crate::dense::axpy(&mut r, -c, prod.as_ref());
    let nz = norm(z);
    Ok((factors, if nz > 0.0 { norm(r.as_ref()) / nz } else { 0.0 }))
}

/// Smallest singular triplet of `T` plus the second smallest singular value.
fn null_factors(t: &Mat<C64>) -> Result<(Col<C64>, Col<C64>, f64, f64)> {
    let n = t.nrows();
    let svd = t.svd().map_err(|e| Error::Eigensolver(format!("svd: {e:?}")))?;
    let s = svd.S();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| s[a].re.total_cmp(&s[b].re));
    let second = if n > 1 { s[idx[1]].re } else { f64::INFINITY };
    Ok((svd.V().col(idx[0]).to_owned(), svd.U().col(idx[0]).to_owned(), s[idx[0]].re, second))
}

/// Eigenvalues and rank-one factors from the Kronecker eigenvectors, before
/// any refinement.
struct RawPair {
    value: Vec<C64>,
    factors: Vec<Col<C64>>,
    rank1: f64,
}

fn kronecker_solve(mep: &LinearMep) -> Result<Vec<RawPair>> {
    let d = delta_operators(mep)?;
    let lu0 = delta0_lu(&d[0])?;
    let size = d[0].nrows();
    // A random combination separates eigenvalues that share a coordinate.
    let mut rng = ChaCha8Rng::seed_from_u64(0x3e9);
    let coeffs: Vec<C64> = random_col(mep.nparams(), &mut rng).iter().copied().collect();
    let mut comb = Mat::<C64>::zeros(size, size);
    for (c, dj) in coeffs.iter().zip(&d[1..]) {
        comb += faer::Scale(*c) * dj;
    }
    let m = lu0.solve(&comb);
    let (_, z) = eigen(m.as_ref())?;
    let dims = mep.dims();
    let mut out = Vec::with_capacity(size);
    for col in 0..size {
        let zc = z.col(col);
        let d0z = &d[0] * zc;
        let nn = dot(d0z.as_ref(), d0z.as_ref()).re;
        let value: Vec<C64> = d[1..].iter().map(|dj| dot(d0z.as_ref(), (dj * zc).as_ref()) / nn).collect();
        let (factors, rank1) = rank1_factors(zc, &dims)?;
        out.push(RawPair { value, factors, rank1 });
    }
    Ok(out)
}

/// All eigenvalues of a small linear MEP with right and left factors.
///
/// Factors come from the null vectors of `T_i(λ)` when these are unique, and
/// from the best rank-one approximation of the Kronecker eigenvector
/// otherwise. Triplets whose Kronecker eigenvector is not rank one (relative
/// residual above [`RANK1_TOL`]) or whose `Δ_0`-form vanishes are returned
/// with `simple = false`; registries should skip them.
pub fn dense_solve(mep: &LinearMep) -> Result<Vec<MepTriplet>> {
    let raw = kronecker_solve(mep)?;
    let mut out = Vec::with_capacity(raw.len());
    let dscale = mep.delta0_scale();
    for rp in raw {
        let mut right = Vec::with_capacity(mep.nparams());
        let mut left = Vec::with_capacity(mep.nparams());
        for (i, e) in mep.eqs.iter().enumerate() {
            let t = e.eval(&rp.value);
            let (r, l, smin, second) = null_factors(&t)?;
            let sc = e.scale(&rp.value);
            if second > 1e-8 * sc {
                right.push(r);
            } else {
                right.push(rp.factors[i].clone());
            }
            let _ = smin;
            left.push(l);
        }
        let residuals =
            mep.eqs.iter().zip(&right).map(|(e, x)| norm(e.apply(&rp.value, x.as_ref()).as_ref()) / e.scale(&rp.value)).collect();
        let denom = mep.delta0_form(&left, &right);
        let simple = rp.rank1 <= RANK1_TOL && denom.norm() > 1e-12 * dscale;
        out.push(MepTriplet { value: rp.value, right, left, denom, residuals, rank1_residual: rp.rank1, simple, iteration: 0 });
    }
    Ok(out)
}

pub fn dense_solve_2p(mep: &LinearMep) -> Result<Vec<MepTriplet>> {
    expect_params(mep, 2)?;
    dense_solve(mep)
}

pub fn dense_solve_3p(mep: &LinearMep) -> Result<Vec<MepTriplet>> {
    expect_params(mep, 3)?;
    dense_solve(mep)
}

fn expect_params(mep: &LinearMep, k: usize) -> Result<()> {
    if mep.nparams() != k {
        return Err(Error::InvalidArgument(format!("expected a {k}-parameter problem, got {}", mep.nparams())));
    }
    Ok(())
}

/// Which selection test the subspace solver applies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MepCriterion {
    /// `max_i |(y^(i))^* Δ_0 v| / |(y^(i))^* Δ_0 x^(i)| < η`.
    #[default]
    Relative,
    /// The older test `max_i |(y^(i))^* Δ_0 v| < ½ min_i |(y^(i))^* Δ_0 x^(i)|`.
    Strict,
}

impl std::str::FromStr for MepCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relative" => Ok(Self::Relative),
            "strict" => Ok(Self::Strict),
            _ => Err(Error::InvalidArgument(format!("unknown MEP criterion '{s}' (expected relative or strict)"))),
        }
    }
}

fn unit_factors(v: &[Col<C64>]) -> Vec<Col<C64>> {
    v.iter()
        .map(|x| {
            let mut x = x.clone();
            normalize(&mut x);
            x
        })
        .collect()
}

/// Selection value `max_i |(y^(i))^* Δ_0 v| / |denom_i|`; 0 for an empty
/// registry. Factors of `v` are normalized first.
pub fn mep_criterion(registry: &[MepTriplet], mep: &LinearMep, v: &[Col<C64>]) -> f64 {
    let v = unit_factors(v);
    registry.iter().map(|t| mep.delta0_form(&t.left, &v).norm() / t.denom.norm()).fold(0.0, f64::max)
}

pub fn mep_passes(registry: &[MepTriplet], mep: &LinearMep, v: &[Col<C64>], eta: f64, kind: MepCriterion) -> bool {
    match kind {
        MepCriterion::Relative => mep_criterion(registry, mep, v) < eta,
        MepCriterion::Strict => {
            if registry.is_empty() {
                return true;
            }
            let v = unit_factors(v);
            let num = registry.iter().map(|t| mep.delta0_form(&t.left, &v).norm()).fold(0.0, f64::max);
            let den = registry.iter().map(|t| t.denom.norm()).fold(f64::INFINITY, f64::min);
            num < 0.5 * den
        }
    }
}

/// A (possibly nonlinear) multiparameter equation `T(p) x = 0` with partial
/// derivatives, used to form generalized divided differences.
pub trait MultiParamEquation {
    fn dim(&self) -> usize;
    fn nparams(&self) -> usize;
    fn eval(&self, p: &[C64]) -> Mat<C64>;
    /// `∂T/∂p_j` at `p`.
    fn partial(&self, j: usize, p: &[C64]) -> Mat<C64>;
}

impl MultiParamEquation for MepEquation {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn nparams(&self) -> usize {
        self.params.len()
    }

    fn eval(&self, p: &[C64]) -> Mat<C64> {
        MepEquation::eval(self, p)
    }

    fn partial(&self, j: usize, _p: &[C64]) -> Mat<C64> {
        -&self.params[j]
    }
}

/// Equation given by closures.
pub struct FnMultiParamEquation<F, G> {
    n: usize,
    k: usize,
    eval: F,
    partial: G,
}

impl<F, G> FnMultiParamEquation<F, G>
where
    F: Fn(&[C64]) -> Mat<C64>,
    G: Fn(usize, &[C64]) -> Mat<C64>,
{
    pub fn new(n: usize, k: usize, eval: F, partial: G) -> Self {
        Self { n, k, eval, partial }
    }
}

impl<F, G> MultiParamEquation for FnMultiParamEquation<F, G>
where
    F: Fn(&[C64]) -> Mat<C64>,
    G: Fn(usize, &[C64]) -> Mat<C64>,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn nparams(&self) -> usize {
        self.k
    }

    fn eval(&self, p: &[C64]) -> Mat<C64> {
        (self.eval)(p)
    }

    fn partial(&self, j: usize, p: &[C64]) -> Mat<C64> {
        (self.partial)(j, p)
    }
}

/// Operator determinant of one-variable divided differences; see
/// [`dd_operator`].
#[derive(Clone, Debug)]
pub struct DdOperator {
    blocks: Vec<Vec<Mat<C64>>>,
}

impl DdOperator {
    /// Block `(i, j)`: divided difference of `T_i` in parameter `j`.
    pub fn block(&self, i: usize, j: usize) -> &Mat<C64> {
        &self.blocks[i][j]
    }

    /// `(y_1 ⊗ …)^* T[p, q] (v_1 ⊗ …)` in factorized form.
    pub fn bilinear(&self, y: &[Col<C64>], v: &[Col<C64>]) -> C64 {
        let k = self.blocks.len();
        let s: Vec<Vec<C64>> =
            (0..k).map(|i| (0..k).map(|j| dot(y[i].as_ref(), (&self.blocks[i][j] * &v[i]).as_ref())).collect()).collect();
        scalar_det(&s)
    }

    /// The explicit `Π n_i × Π n_i` operator (small problems only).
    pub fn to_dense(&self) -> Result<Mat<C64>> {
        let size: usize = self.blocks.iter().map(|r| r[0].nrows()).product();
        check_size(size)?;
        let refs: Vec<Vec<MatRef<'_, C64>>> = self.blocks.iter().map(|r| r.iter().map(|m| m.as_ref()).collect()).collect();
        Ok(operator_determinant(&refs))
    }
}

/// Generalized divided difference `T[p, q]`: the operator determinant whose
/// block `(i, j)` is the difference quotient of `T_i` in parameter `j`
/// between `p_j` and `q_j`, with parameters before `j` at `q` and after `j`
/// at `p`. Coinciding coordinates use the partial derivative.
///
/// For linear equations every block is the constant `−B_ij`, so the result
/// is `(−1)^k Δ_0`.
pub fn dd_operator(eqs: &[&dyn MultiParamEquation], p: &[C64], q: &[C64]) -> Result<DdOperator> {
    let k = eqs.len();
    if p.len() != k || q.len() != k || eqs.iter().any(|e| e.nparams() != k) {
        return Err(Error::Dimension(format!("need {k} equations in {k} parameters and two {k}-points")));
    }
    let mut blocks = Vec::with_capacity(k);
    for e in eqs {
        let mut row = Vec::with_capacity(k);
        for j in 0..k {
            let mut at: Vec<C64> = (0..k).map(|l| if l < j { q[l] } else { p[l] }).collect();
            let diff = q[j] - p[j];
            if diff.norm() <= 1e-8 * p[j].norm().max(1.0) {
                row.push(e.partial(j, &at));
            } else {
                let t1 = e.eval(&at);
                at[j] = q[j];
                let t2 = e.eval(&at);
                row.push(faer::Scale(C64::from(1.0) / diff) * (&t2 - &t1));
            }
        }
        blocks.push(row);
    }
    Ok(DdOperator { blocks })
}

pub fn dd_operator_2p(
    t1: &dyn MultiParamEquation,
    t2: &dyn MultiParamEquation,
    p: [C64; 2],
    q: [C64; 2],
) -> Result<DdOperator> {
    dd_operator(&[t1, t2], &p, &q)
}

pub fn dd_operator_3p(
    t1: &dyn MultiParamEquation,
    t2: &dyn MultiParamEquation,
    t3: &dyn MultiParamEquation,
    p: [C64; 3],
    q: [C64; 3],
) -> Result<DdOperator> {
    dd_operator(&[t1, t2, t3], &p, &q)
}

/// Options for [`mep_subspace_solve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MepOptions {
    pub target: Vec<[f64; 2]>,
    pub num_pairs: usize,
    /// Relative residual tolerance per equation.
    pub tol: f64,
    pub mindim: usize,
    pub maxdim: usize,
    pub max_outer: usize,
    pub inner_steps: usize,
    pub eta_sel: f64,
    pub criterion: MepCriterion,
    pub seed: u64,
    /// LU of `T_i(target)` as preconditioner for each factor.
    pub precondition: bool,
}

impl Default for MepOptions {
    fn default() -> Self {
        Self {
            target: Vec::new(),
            num_pairs: 1,
            tol: 1e-10,
            mindim: 3,
            maxdim: 6,
            max_outer: 300,
            inner_steps: 10,
            eta_sel: 0.1,
            criterion: MepCriterion::Relative,
            seed: 0,
            precondition: true,
        }
    }
}

impl MepOptions {
    pub fn target_point(&self, k: usize) -> Vec<C64> {
        (0..k).map(|j| self.target.get(j).map(|t| c64(t[0], t[1])).unwrap_or_default()).collect()
    }

    pub fn validate(&self, mep: &LinearMep) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        let nmin = mep.dims().into_iter().min().unwrap_or(0);
        if !(1 <= self.mindim && self.mindim < self.maxdim && self.maxdim <= nmin) {
            return bad(format!(
                "need 1 <= mindim < maxdim <= min n_i, got mindim={} maxdim={} min n_i={nmin}",
                self.mindim, self.maxdim
            ));
        }
        if !self.target.is_empty() && self.target.len() != mep.nparams() {
            return bad(format!("target has {} coordinates, expected {}", self.target.len(), mep.nparams()));
        }
        if !(self.tol > 0.0) || self.num_pairs == 0 {
            return bad("tol must be positive and num_pairs at least 1".into());
        }
        if !(self.eta_sel > 0.0 && self.eta_sel < 1.0) {
            return bad(format!("eta_sel must lie in (0, 1), got {}", self.eta_sel));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MepRecord {
    pub iteration: usize,
    pub value: Vec<[f64; 2]>,
    pub residual: f64,
    pub criterion: f64,
    pub event: Event,
}

/// CSV with columns `iteration,p1_re,p1_im,…,residual,criterion,event`.
pub fn mep_records_to_csv(records: &[MepRecord]) -> String {
    let k = records.first().map(|r| r.value.len()).unwrap_or(0);
    let mut s = String::from("iteration");
    for j in 1..=k {
        let _ = write!(s, ",p{j}_re,p{j}_im");
    }
    s.push_str(",residual,criterion,event\n");
    for r in records {
        let _ = write!(s, "{}", r.iteration);
        for v in &r.value {
            let _ = write!(s, ",{:e},{:e}", v[0], v[1]);
        }
        let _ = writeln!(s, ",{:e},{:e},{}", r.residual, r.criterion, r.event.as_str());
    }
    s
}

#[derive(Clone, Debug)]
pub struct MepOutcome {
    pub triplets: Vec<MepTriplet>,
    pub records: Vec<MepRecord>,
    pub truncated: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

struct MepCandidate {
    value: Vec<C64>,
    coeffs: Vec<Col<C64>>,
    factors: Vec<Col<C64>>,
    residual: f64,
    criterion: f64,
    passed: bool,
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Tensor Jacobi–Davidson with selection for a linear MEP.
///
/// Each factor space has its own orthonormal basis. The projected problem
/// is solved densely, Ritz pairs are ordered by distance to the target and
/// filtered with the `Δ_0` criterion, and every factor is expanded with the
/// solution of its own correction equation
/// `(I − v_i v_i^*) T_i(θ) (I − v_i v_i^*) t_i = −T_i(θ) v_i`.
pub fn mep_subspace_solve(mep: &LinearMep, opts: &MepOptions) -> Result<MepOutcome> {
    opts.validate(mep)?;
    let k = mep.nparams();
    let dims = mep.dims();
    let target = opts.target_point(k);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut warnings = Vec::new();
    let mut records = Vec::new();
    let mut registry: Vec<MepTriplet> = Vec::new();
    let mut rejected: Vec<Vec<C64>> = Vec::new();

    let precond: Vec<Option<LuPreconditioner>> = mep
        .eqs
        .iter()
        .enumerate()
        .map(|(i, e)| {
            if !opts.precondition {
                return None;
            }
            match LuPreconditioner::dense(&e.eval(&target)) {
                Ok(lu) => Some(lu),
                Err(_) => {
                    warnings.push(format!("T_{}(target) is singular; factor {} runs unpreconditioned", i + 1, i + 1));
                    None
                }
            }
        })
        .collect();

    let mut bases: Vec<Mat<C64>> = dims
        .iter()
        .map(|&n| {
            let v = random_col(n, &mut rng);
            crate::jdsolver::rgs(Mat::<C64>::zeros(n, 0).as_ref(), v.as_ref(), rng_seed(&mut rng))
        })
        .collect();
    // The projected problem needs as many directions as there are
    // parameters to be regular in general.
    while bases[0].ncols() < opts.mindim {
        for (i, &n) in dims.iter().enumerate() {
            let v = random_col(n, &mut rng);
            bases[i] = crate::jdsolver::rgs(bases[i].as_ref(), v.as_ref(), rng_seed(&mut rng));
        }
    }

    let mut iterations = 0;
    'outer: for iter in 1..=opts.max_outer {
        iterations = iter;
        let proj = mep.project(&bases);
        let raw = match kronecker_solve(&proj) {
            Ok(r) => r,
            Err(e) => {
                warnings.push(format!("iteration {iter}: projected problem failed ({e}); expanding randomly"));
                expand_random(&mut bases, &dims, opts, &mut rng);
                continue;
            }
        };
        let mut cands: Vec<(f64, RawPair)> = raw
            .into_iter()
            .filter(|r| r.value.iter().all(|z| z.is_finite()))
            .map(|r| (dist(&r.value, &target), r))
            .collect();
        cands.sort_by(|a, b| a.0.total_cmp(&b.0));
        let cands: Vec<RawPair> = cands.into_iter().map(|c| c.1).collect();

        let evaluate = |rp: &RawPair, registry: &[MepTriplet]| -> MepCandidate {
            let factors: Vec<Col<C64>> = bases
                .iter()
                .zip(&rp.factors)
                .map(|(v, c)| {
                    let mut x = v * c;
                    normalize(&mut x);
                    x
                })
                .collect();
            let residual = mep.residual(&rp.value, &factors);
            let criterion = mep_criterion(registry, mep, &factors);
            let passed = mep_passes(registry, mep, &factors, opts.eta_sel, opts.criterion);
            MepCandidate { value: rp.value.clone(), coeffs: rp.factors.clone(), factors, residual, criterion, passed }
        };

        let mut taken = vec![false; cands.len()];
        let chosen = loop {
            let mut first_pass = None;
            let mut fallback = None;
            for (idx, rp) in cands.iter().enumerate() {
                if taken[idx] || rejected.iter().any(|r| dist(r, &rp.value) <= 1e-6 * (1.0 + norm_c(r))) {
                    continue;
                }
                let c = evaluate(rp, &registry);
                if c.passed {
                    first_pass = Some((idx, c));
                    break;
                }
                if fallback.is_none() && c.residual > opts.tol {
                    fallback = Some((idx, c));
                }
            }
            let Some((idx, c)) = first_pass.or(fallback) else { break None };
            if c.passed && c.residual <= opts.tol {
                taken[idx] = true;
                match register_mep(mep, &c, iter) {
                    Ok(t) => {
                        records.push(mep_record(iter, &c, Event::Converged));
                        registry.push(t);
                        if registry.len() >= opts.num_pairs {
                            break 'outer;
                        }
                    }
                    Err(e) => {
                        warnings.push(format!("iteration {iter}: rejected {:?}: {e}", c.value));
                        records.push(mep_record(iter, &c, Event::Rejected));
                        rejected.push(c.value.clone());
                    }
                }
                continue;
            }
            break Some(c);
        };
        let Some(c) = chosen else {
            restart(&mut bases, &cands, &registry, mep, opts);
            expand_random(&mut bases, &dims, opts, &mut rng);
            continue;
        };
        records.push(mep_record(iter, &c, if c.passed { Event::Expanded } else { Event::NoPass }));

        let corrections: Vec<Col<C64>> = mep
            .eqs
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let v = c.factors[i].as_ref();
                let r = e.apply(&c.value, v);
                let m = precond[i].as_ref().map(|p| p as &dyn Preconditioner);
                projected_correction_solve(&|z| e.apply(&c.value, z), v, v, r.as_ref(), opts.inner_steps, m)
            })
            .collect();

        if bases[0].ncols() >= opts.maxdim {
            restart(&mut bases, &cands, &registry, mep, opts);
            // keep the selected pair in the restarted space
            for (i, v) in bases.iter_mut().enumerate() {
                let x = &c.factors[i];
                let proj = v.adjoint() * x;
                let lost = (1.0 - norm(proj.as_ref()).powi(2)).max(0.0).sqrt();
                if lost > 1e-8 && v.ncols() < opts.maxdim - 1 {
                    *v = crate::jdsolver::rgs(v.as_ref(), x.as_ref(), rng_seed(&mut rng));
                }
            }
            equalize(&mut bases, &dims, &mut rng);
        }
        let _ = &c.coeffs;
        for (i, t) in corrections.iter().enumerate() {
            bases[i] = crate::jdsolver::rgs(bases[i].as_ref(), t.as_ref(), rng_seed(&mut rng));
        }
    }

    let truncated = registry.len() < opts.num_pairs;
    Ok(MepOutcome { triplets: registry, records, truncated, iterations, warnings })
}

fn norm_c(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn rng_seed(rng: &mut ChaCha8Rng) -> u64 {
    use rand::Rng;
    rng.random()
}

fn mep_record(iter: usize, c: &MepCandidate, event: Event) -> MepRecord {
    MepRecord {
        iteration: iter,
        value: c.value.iter().map(|z| [z.re, z.im]).collect(),
        residual: c.residual,
        criterion: c.criterion,
        event,
    }
}

fn register_mep(mep: &LinearMep, c: &MepCandidate, iter: usize) -> Result<MepTriplet> {
    let mut left = Vec::with_capacity(mep.nparams());
    for e in &mep.eqs {
        check_size(e.dim())?;
        let (_, l, _, _) = null_factors(&e.eval(&c.value))?;
        left.push(l);
    }
    let denom = mep.delta0_form(&left, &c.factors);
    let threshold = 1e-12 * mep.delta0_scale();
    if denom.norm() <= threshold {
        return Err(Error::Defective { denom: denom.norm(), threshold });
    }
    let residuals =
        mep.eqs.iter().zip(&c.factors).map(|(e, x)| norm(e.apply(&c.value, x.as_ref()).as_ref()) / e.scale(&c.value)).collect();
    Ok(MepTriplet {
        value: c.value.clone(),
        right: c.factors.clone(),
        left,
        denom,
        residuals,
        rank1_residual: 0.0,
        simple: true,
        iteration: iter,
    })
}

/// Shrinks every basis to `mindim` directions taken from the Ritz factors,
/// passing candidates first.
fn restart(bases: &mut [Mat<C64>], cands: &[RawPair], registry: &[MepTriplet], mep: &LinearMep, opts: &MepOptions) {
    let passing: Vec<bool> = cands
        .iter()
        .map(|rp| {
            let f: Vec<Col<C64>> = bases.iter().zip(&rp.factors).map(|(v, c)| v * c).collect();
            mep_passes(registry, mep, &f, opts.eta_sel, opts.criterion)
        })
        .collect();
    let order: Vec<usize> =
        (0..cands.len()).filter(|&i| passing[i]).chain((0..cands.len()).filter(|&i| !passing[i])).collect();
    for (i, v) in bases.iter_mut().enumerate() {
        let kdim = v.ncols();
        let mut y = Mat::<C64>::zeros(kdim, 0);
        let try_add = |y: &mut Mat<C64>, c: &Col<C64>| {
            let mut c = c.clone();
            for _ in 0..2 {
                let p = y.adjoint() * &c;
                c -= &*y * &p;
            }
            if normalize(&mut c) > 1e-8 {
                *y = Mat::from_fn(kdim, y.ncols() + 1, |r, col| if col < y.ncols() { y[(r, col)] } else { c[r] });
            }
        };
        for &idx in &order {
            if y.ncols() >= opts.mindim {
                break;
            }
            try_add(&mut y, &cands[idx].factors[i]);
        }
        let mut e = 0;
        while y.ncols() < opts.mindim && e < kdim {
            let unit = Col::from_fn(kdim, |r| if r == e { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
            try_add(&mut y, &unit);
            e += 1;
        }
        *v = &*v * &y;
    }
}

/// Pads bases with random directions so that all have the same dimension.
fn equalize(bases: &mut [Mat<C64>], dims: &[usize], rng: &mut ChaCha8Rng) {
    let target = bases.iter().map(|b| b.ncols()).max().unwrap_or(0);
    for (i, b) in bases.iter_mut().enumerate() {
        while b.ncols() < target {
            let v = random_col(dims[i], rng);
            *b = crate::jdsolver::rgs(b.as_ref(), v.as_ref(), rng_seed(rng));
        }
    }
}

fn expand_random(bases: &mut [Mat<C64>], dims: &[usize], opts: &MepOptions, rng: &mut ChaCha8Rng) {
    for (i, b) in bases.iter_mut().enumerate() {
        if b.ncols() >= opts.maxdim {
            *b = b.subcols(0, opts.maxdim - 1).to_owned();
        }
        let v = random_col(dims[i], rng);
        *b = crate::jdsolver::rgs(b.as_ref(), v.as_ref(), rng_seed(rng));
    }
}

/// Chebyshev points `cos(πj/N)`, `j = 0..N`, and the first-derivative
/// collocation matrix on them.
pub fn chebyshev_differentiation(n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let x: Vec<f64> = (0..=n).map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos()).collect();
    let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 };
    let sgn = |j: usize| if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut d = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[i][j] = c(i) / c(j) * sgn(i + j) / (x[i] - x[j]);
            }
        }
        d[i][i] = -(0..=n).filter(|&j| j != i).map(|j| d[i][j]).sum::<f64>();
    }
    (x, d)
}

/// Interior collocation nodes of `[i−1, i]`, ascending, for `i = 1, 2, 3`.
pub fn fourpoint_grid(n: usize) -> [Vec<f64>; 3] {
    let (t, _) = chebyshev_differentiation(n);
    let interior: Vec<f64> = (1..n).rev().map(|j| (1.0 + t[j]) / 2.0).collect();
    std::array::from_fn(|i| interior.iter().map(|s| i as f64 + s).collect())
}

/// Three-parameter problem from the four-point boundary value problem
/// `y'' + (λ + 2μ cos x + 2ν cos 2x) y = 0` on `[0, 3]` with
/// `y(0) = y(1) = y(2) = y(3) = 0`, split into the intervals `[i−1, i]` and
/// discretized by Chebyshev collocation with `N + 1` points per interval.
///
/// For interval `i`: `A_i = −D²` (Dirichlet rows and columns removed),
/// `B_i = I`, `C_i = 2 diag(cos x)`, `D_i = 2 diag(cos 2x)`, on the `N − 1`
/// interior nodes in ascending order (see [`fourpoint_grid`]).
pub fn gen_fourpoint_bvp(n: usize) -> Result<LinearMep> {
    if n < 8 {
        return Err(Error::InvalidArgument(format!("need N >= 8 collocation intervals, got {n}")));
    }
    let (_, d) = chebyshev_differentiation(n);
    let m = n + 1;
    let mut d2 = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            d2[i][j] = (0..m).map(|l| d[i][l] * d[l][j]).sum();
        }
    }
    // nodes ascending in x: interior j = n-1, …, 1; the interval has length 1,
    // so d²/dx² = 4 d²/dt²
    let idx: Vec<usize> = (1..n).rev().collect();
    let ni = idx.len();
    let a = Mat::from_fn(ni, ni, |r, c| c64(-4.0 * d2[idx[r]][idx[c]], 0.0));
    let grid = fourpoint_grid(n);
    let eqs = grid
        .iter()
        .map(|xs| {
            let diag = |f: &dyn Fn(f64) -> f64| Mat::from_fn(ni, ni, |r, c| if r == c { c64(f(xs[r]), 0.0) } else { c64(0.0, 0.0) });
            MepEquation::new(
                a.clone(),
                vec![diag(&|_| 1.0), diag(&|x: f64| 2.0 * x.cos()), diag(&|x: f64| 2.0 * (2.0 * x).cos())],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    LinearMep::new(eqs)
}

/// Number of sign changes in `x`, ignoring entries below `1e-8 ‖x‖_∞`.
pub fn oscillation_index(x: &[f64]) -> usize {
    let floor = 1e-8 * x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut count = 0;
    let mut last = 0.0f64;
    for &v in x {
        if v.abs() <= floor {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

/// Real profile of a complex factor after removing its global phase.
pub fn real_profile(x: ColRef<'_, C64>) -> Vec<f64> {
    let mut x = x.to_owned();
    phase_normalize(&mut x);
    x.iter().map(|z| z.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::random_mat;

    fn diag(v: &[f64]) -> Mat<C64> {
        Mat::from_fn(v.len(), v.len(), |i, j| if i == j { c64(v[i], 0.0) } else { c64(0.0, 0.0) })
    }

    fn random_mep(dims: &[usize], seed: u64) -> LinearMep {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = dims.len();
        let eqs = dims
            .iter()
            .map(|&n| MepEquation::new(random_mat(n, n, &mut rng), (0..k).map(|_| random_mat(n, n, &mut rng)).collect()).unwrap())
            .collect();
        LinearMep::new(eqs).unwrap()
    }

    #[test]
    fn scalar_delta_operators() {
        let s = |v: f64| diag(&[v]);
        let mep = LinearMep::two(s(1.0), s(2.0), s(3.0), s(4.0), s(5.0), s(7.0)).unwrap();
        let d = delta_operators(&mep).unwrap();
        assert!((d[0][(0, 0)] - c64(2.0 * 7.0 - 3.0 * 5.0, 0.0)).norm() < 1e-15);
        let sol = dense_solve_2p(&mep).unwrap();
        assert_eq!(sol.len(), 1);
        let (l, m) = (sol[0].value[0], sol[0].value[1]);
        // 1 = 2λ + 3μ, 4 = 5λ + 7μ
        assert!((c64(2.0, 0.0) * l + c64(3.0, 0.0) * m - c64(1.0, 0.0)).norm() < 1e-12);
        assert!((c64(5.0, 0.0) * l + c64(7.0, 0.0) * m - c64(4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn identity_delta0() {
        let z = Mat::<C64>::zeros(2, 2);
        let i = diag(&[1.0, 1.0]);
        let mep = LinearMep::two(diag(&[1.0, 2.0]), i.clone(), z.clone(), diag(&[3.0, 4.0]), z, i).unwrap();
        let d = delta_operators(&mep).unwrap();
        assert!((&d[0] - &diag(&[1.0; 4])).norm_l2() < 1e-15);
    }

    #[test]
    fn decoupled_problem_gives_all_combinations() {
        let z = Mat::<C64>::zeros(3, 3);
        let i = diag(&[1.0; 3]);
        let mep = LinearMep::two(diag(&[1.0, 2.0, 3.0]), i.clone(), z.clone(), diag(&[5.0, 7.0, 11.0]), z, i).unwrap();
        let sol = dense_solve_2p(&mep).unwrap();
        assert_eq!(sol.len(), 9);
        for l in [1.0, 2.0, 3.0] {
            for m in [5.0, 7.0, 11.0] {
                assert!(sol.iter().any(|t| (t.value[0] - c64(l, 0.0)).norm() < 1e-10 && (t.value[1] - c64(m, 0.0)).norm() < 1e-10));
            }
        }
        assert!(sol.iter().all(|t| t.simple));
    }

    #[test]
    fn random_two_parameter_residuals_and_delta_identities() {
        let mep = random_mep(&[3, 3], 1);
        let d = delta_operators(&mep).unwrap();
        let sol = dense_solve_2p(&mep).unwrap();
        assert_eq!(sol.len(), 9);
        for t in &sol {
            assert!(t.residuals.iter().all(|&r| r <= 1e-8), "{:?}", t.residuals);
            let z = crate::dense::kron_col(t.right[0].as_ref(), t.right[1].as_ref());
            let d0z = &d[0] * &z;
            for j in 0..2 {
                let lhs = &d[j + 1] * &z;
                let rhs = faer::Scale(t.value[j]) * &d0z;
                assert!((&lhs - &rhs).norm_l2() <= 1e-8 * d[j + 1].norm_l2());
            }
        }
    }

    #[test]
    fn criterion_is_factorized_delta0() {
        let mep = random_mep(&[3, 2], 2);
        let d = delta_operators(&mep).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = vec![random_col(3, &mut rng), random_col(2, &mut rng)];
        let v = vec![random_col(3, &mut rng), random_col(2, &mut rng)];
        let explicit = dot(
            crate::dense::kron_col(y[0].as_ref(), y[1].as_ref()).as_ref(),
            (&d[0] * crate::dense::kron_col(v[0].as_ref(), v[1].as_ref())).as_ref(),
        );
        let fact = mep.delta0_form(&y, &v);
        assert!((explicit - fact).norm() <= 1e-12 * explicit.norm().max(1.0));

        let sol = dense_solve_2p(&mep).unwrap();
        assert!(mep_criterion(&[], &mep, &sol[0].right) == 0.0);
        let own = mep_criterion(&sol[..1], &mep, &sol[0].right);
        assert!((own - 1.0).abs() < 1e-10);
        assert!(!mep_passes(&sol[..1], &mep, &sol[0].right, 0.1, MepCriterion::Relative));
        assert!(mep_criterion(&sol[..1], &mep, &sol[1].right) <= 1e-8);
        assert!(mep_passes(&sol[..1], &mep, &sol[1].right, 0.1, MepCriterion::Strict));
    }

    #[test]
    fn three_parameter_dense_solve() {
        let mep = random_mep(&[2, 2, 2], 4);
        let d = delta_operators(&mep).unwrap();
        let sol = dense_solve_3p(&mep).unwrap();
        assert_eq!(sol.len(), 8);
        for t in &sol {
            assert!(t.residuals.iter().all(|&r| r <= 1e-8), "{:?}", t.residuals);
            let z = crate::dense::kron_col(
                crate::dense::kron_col(t.right[0].as_ref(), t.right[1].as_ref()).as_ref(),
                t.right[2].as_ref(),
            );
            for j in 0..3 {
                let lhs = &d[j + 1] * &z;
                let rhs = faer::Scale(t.value[j]) * (&d[0] * &z);
                assert!((&lhs - &rhs).norm_l2() <= 1e-8 * d[j + 1].norm_l2());
            }
        }
    }

    #[test]
    fn decoupled_three_parameter_problem() {
        let z = Mat::<C64>::zeros(2, 2);
        let i = diag(&[1.0, 1.0]);
        let mep = LinearMep::three([
            [diag(&[1.0, 2.0]), i.clone(), z.clone(), z.clone()],
            [diag(&[3.0, 4.0]), z.clone(), i.clone(), z.clone()],
            [diag(&[5.0, 6.0]), z.clone(), z.clone(), i.clone()],
        ])
        .unwrap();
        let sol = dense_solve_3p(&mep).unwrap();
        for a in [1.0, 2.0] {
            for b in [3.0, 4.0] {
                for c in [5.0, 6.0] {
                    assert!(sol.iter().any(|t| dist(&t.value, &[c64(a, 0.0), c64(b, 0.0), c64(c, 0.0)]) < 1e-10));
                }
            }
        }
    }

    #[test]
    fn dd_operator_linear_is_constant() {
        let mep = random_mep(&[2, 3], 5);
        let d = delta_operators(&mep).unwrap();
        let eqs: Vec<&dyn MultiParamEquation> = mep.equations().iter().map(|e| e as &dyn MultiParamEquation).collect();
        for (p, q) in [
            ([c64(0.3, 1.0), c64(2.0, 0.0)], [c64(-1.0, 0.5), c64(0.1, 0.1)]),
            ([c64(1.0, 0.0), c64(2.0, 0.0)], [c64(1.0, 0.0), c64(2.0, 0.0)]),
        ] {
            let dd = dd_operator(&eqs, &p, &q).unwrap().to_dense().unwrap();
            assert!((&dd - &d[0]).norm_l2() <= 1e-12 * d[0].norm_l2());
        }
        let mep3 = random_mep(&[2, 2, 2], 6);
        let d3 = delta_operators(&mep3).unwrap();
        let eqs3: Vec<&dyn MultiParamEquation> = mep3.equations().iter().map(|e| e as &dyn MultiParamEquation).collect();
        let p = [c64(0.1, 0.0), c64(0.2, 0.0), c64(0.3, 0.0)];
        let q = [c64(1.1, 0.0), c64(-0.2, 0.0), c64(0.0, 2.0)];
        let dd = dd_operator(&eqs3, &p, &q).unwrap().to_dense().unwrap();
        assert!((&dd + &d3[0]).norm_l2() <= 1e-12 * d3[0].norm_l2());
    }

    #[test]
    fn dd_operator_quadratic_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 2;
        let (a, b, c, e) = (random_mat(n, n, &mut rng), random_mat(n, n, &mut rng), random_mat(n, n, &mut rng), random_mat(n, n, &mut rng));
        let (b0, e0) = (b.clone(), e.clone());
        let (b2, c2, e2) = (b.clone(), c.clone(), e.clone());
        let t = FnMultiParamEquation::new(
            n,
            2,
            move |p: &[C64]| &a - faer::Scale(p[0]) * &b - faer::Scale(p[1]) * &c - faer::Scale(p[0] * p[0]) * &e,
            move |j: usize, p: &[C64]| {
                if j == 0 {
                    -&b2 - faer::Scale(C64::from(2.0) * p[0]) * &e2
                } else {
                    -&c2
                }
            },
        );
        let p = [c64(0.3, 0.1), c64(1.0, 0.0)];
        let q = [c64(-0.7, 0.2), c64(0.5, 0.5)];
        let dd = dd_operator_2p(&t, &t, p, q).unwrap();
        let expected = -&b0 - faer::Scale(p[0] + q[0]) * &e0;
        assert!((dd.block(0, 0) - &expected).norm_l2() <= 1e-10 * expected.norm_l2());
        // coincident points give partial derivatives
        let dd = dd_operator_2p(&t, &t, p, p).unwrap();
        let expected = -&b0 - faer::Scale(C64::from(2.0) * p[0]) * &e0;
        assert!((dd.block(1, 0) - &expected).norm_l2() <= 1e-12 * expected.norm_l2());
    }

    #[test]
    fn oscillation_examples() {
        let t: Vec<f64> = (1..50).map(|i| i as f64 / 50.0).collect();
        let s1: Vec<f64> = t.iter().map(|x| (std::f64::consts::PI * x).sin()).collect();
        let s2: Vec<f64> = t.iter().map(|x| (2.0 * std::f64::consts::PI * x).sin()).collect();
        assert_eq!(oscillation_index(&s1), 0);
        assert_eq!(oscillation_index(&s2), 1);
        assert_eq!(oscillation_index(&[1.0, 1e-12, -1e-12, 1.0]), 0);
    }

    #[test]
    fn chebyshev_second_derivative_is_accurate() {
        let (x, d) = chebyshev_differentiation(16);
        let f: Vec<f64> = x.iter().map(|t| (2.0 * t).sin()).collect();
        for i in 0..=16 {
            let df: f64 = (0..=16).map(|j| d[i][j] * f[j]).sum();
            assert!((df - 2.0 * (2.0 * x[i]).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn subspace_solver_on_decoupled_problem() {
        let n = 8;
        let z = Mat::<C64>::zeros(n, n);
        let i = diag(&vec![1.0; n]);
        let l: Vec<f64> = (1..=n).map(|k| k as f64).collect();
        let m: Vec<f64> = (1..=n).map(|k| 0.5 + 1.5 * k as f64).collect();
        let mep = LinearMep::two(diag(&l), i.clone(), z.clone(), diag(&m), z, i).unwrap();
        let opts = MepOptions { num_pairs: 4, mindim: 2, maxdim: 5, target: vec![[0.0, 0.0], [0.0, 0.0]], ..Default::default() };
        let out = mep_subspace_solve(&mep, &opts).unwrap();
        assert!(!out.truncated, "{:?}", out.warnings);
        // Products of converged factors can converge before nearer pairs,
        // so only the nearest one is guaranteed.
        let oracle = dense_solve_2p(&mep).unwrap();
        for t in &out.triplets {
            assert!(oracle.iter().any(|o| dist(&o.value, &t.value) < 1e-8), "{:?}", t.value);
        }
        assert!(out.triplets.iter().any(|t| dist(&t.value, &[c64(1.0, 0.0), c64(2.0, 0.0)]) < 1e-8));
        for (a, t) in out.triplets.iter().enumerate() {
            for s in &out.triplets[..a] {
                assert!(dist(&s.value, &t.value) > 1e-6);
            }
        }
    }
}
