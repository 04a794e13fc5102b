//! Jacobi–Davidson for polynomial eigenvalue problems with selection.
//!
//! Every outer iteration extracts Ritz pairs from the projected problem
//! `Σ θ^i (V^* A_i V) c = 0`, picks the one closest to the target that passes
//! the selection test against all eigentriplets found so far, and expands the
//! search space with an approximate solution of the correction equation.
//! Converged pairs are registered together with a left eigenvector; nothing
//! is locked or deflated.

use std::fmt::Write as _;

use faer::{Col, ColRef, Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{c64, dot, generalized_eigen, norm, normalize, polynomial_roots, random_col, C64};
use crate::error::{Error, Result};
use crate::homogeneous::{hom_d_weights, hom_weights, ExtendedScalar, ProjectivePoint};
use crate::linsolve::{
    left_eigenvector, left_eigenvector_projective, lu_of_combination, projected_correction_solve, Preconditioner,
};
use crate::oracle::companion_pencil;
use crate::problems::PolyProblem;
use crate::selection::{CandidatePair, EigenTriplet, EigenValue, Registry, SelectionConfig, SelectionMode};

/// Converged values this close to a registered one (relative, or chordal in
/// homogeneous mode) are rejected as duplicates. Near a defective eigenvalue
/// the criterion denominators are only `O(sqrt(ε))`, so selection alone
/// cannot tell the perturbed copies apart.
pub const DUPLICATE_TOL: f64 = 1e-6;

/// How the Ritz value is finalized once a Ritz vector is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extraction {
    /// Standard Rayleigh–Ritz value of the projected problem.
    #[default]
    Ritz,
    /// Root of the one-dimensional Galerkin polynomial `Σ θ^i v^* A_i v` with
    /// the smallest residual.
    Gal1,
}

impl std::str::FromStr for Extraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ritz" => Ok(Self::Ritz),
            "gal1" | "gal1_refined" => Ok(Self::Gal1),
            _ => Err(Error::InvalidArgument(format!("unknown extraction '{s}' (expected ritz or gal1)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JDOptions {
    #[serde(with = "complex_pair")]
    pub target: C64,
    pub num_pairs: usize,
    /// Relative residual tolerance: `‖P(θ)v‖ ≤ tol · Σ |θ|^i ‖A_i‖_1`.
    pub tol: f64,
    pub mindim: usize,
    pub maxdim: usize,
    pub max_outer: usize,
    pub inner_steps: usize,
    pub eta_sel: f64,
    pub mode: SelectionMode,
    pub extraction: Extraction,
    pub seed: u64,
    /// Use an exact LU factorization of `P(τ)` in the correction equation.
    pub precondition: bool,
    /// Optional start vector; a seeded random vector otherwise.
    #[serde(skip)]
    pub start: Option<Col<C64>>,
}

impl Default for JDOptions {
    fn default() -> Self {
        Self {
            target: c64(0.0, 0.0),
            num_pairs: 1,
            tol: 1e-8,
            mindim: 10,
            maxdim: 20,
            max_outer: 500,
            inner_steps: 10,
            eta_sel: 0.1,
            mode: SelectionMode::Standard,
            extraction: Extraction::Ritz,
            seed: 0,
            precondition: true,
            start: None,
        }
    }
}

impl JDOptions {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(1 <= self.mindim && self.mindim < self.maxdim && self.maxdim <= n) {
            return bad(format!(
                "need 1 <= mindim < maxdim <= n, got mindim={} maxdim={} n={n}",
                self.mindim, self.maxdim
            ));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.num_pairs == 0 {
            return bad("num_pairs must be at least 1".into());
        }
        if let Some(s) = &self.start {
            if s.nrows() != n {
                return bad(format!("start vector has length {}, expected {n}", s.nrows()));
            }
        }
        SelectionConfig::new(self.eta_sel, self.mode).map(|_| ())
    }
}

pub(crate) mod complex_pair {
    use crate::dense::{c64, C64};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq([z.re, z.im])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(c64(re, im))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Event {
    Expanded,
    Converged,
    Restarted,
    NoPass,
    Rejected,
}

impl Event {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Expanded => "expanded",
            Self::Converged => "converged",
            Self::Restarted => "restarted",
            Self::NoPass => "no-pass",
            Self::Rejected => "rejected",
        }
    }
}

/// One line of the convergence history.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub iteration: usize,
    pub theta: ExtendedScalar,
    /// Relative residual.
    pub residual: f64,
    pub criterion: f64,
    pub event: Event,
}

/// Writes records as CSV with header `iteration,re,im,residual,criterion,event`.
/// Infinite values are written as `inf,0`.
pub fn records_to_csv(records: &[ConvergenceRecord]) -> String {
    let mut s = String::from("iteration,re,im,residual,criterion,event\n");
    for r in records {
        let (re, im) = match r.theta {
            ExtendedScalar::Finite(z) => (format!("{:e}", z.re), format!("{:e}", z.im)),
            ExtendedScalar::Infinite => ("inf".to_string(), "0".to_string()),
        };
        let _ = writeln!(s, "{},{},{},{:e},{:e},{}", r.iteration, re, im, r.residual, r.criterion, r.event.as_str());
    }
    s
}

/// Result of [`jd_solve`].
#[derive(Clone, Debug)]
pub struct JdOutcome {
    pub triplets: Vec<EigenTriplet>,
    pub records: Vec<ConvergenceRecord>,
    /// Fewer than `num_pairs` triplets were found within `max_outer`.
    pub truncated: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// Orthonormal basis `V` with cached `W_i = A_i V` and `H_i = V^* A_i V`.
#[derive(Clone, Debug)]
pub struct SearchSpace {
    v: Mat<C64>,
    w: Vec<Mat<C64>>,
    h: Vec<Mat<C64>>,
}

impl SearchSpace {
    pub fn new(n: usize, degree: usize) -> Self {
        Self {
            v: Mat::zeros(n, 0),
            w: (0..=degree).map(|_| Mat::zeros(n, 0)).collect(),
            h: (0..=degree).map(|_| Mat::zeros(0, 0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    pub fn basis(&self) -> MatRef<'_, C64> {
        self.v.as_ref()
    }

    pub fn projections(&self) -> &[Mat<C64>] {
        &self.h
    }

    pub fn products(&self) -> &[Mat<C64>] {
        &self.w
    }

    /// Orthogonalizes `t` against the basis (see [`rgs`]) and appends it,
    /// updating the cached products.
    pub fn expand(&mut self, problem: &PolyProblem, t: ColRef<'_, C64>, rng: &mut ChaCha8Rng) {
        let q = rgs_vector(self.v.as_ref(), t, rng);
        let n = self.v.nrows();
        let k = self.dim();
        self.v = append_col(self.v.as_ref(), q.as_ref());
        for (i, a) in problem.coeffs().iter().enumerate() {
            let aq = a.apply(q.as_ref());
            let old_w = std::mem::replace(&mut self.w[i], Mat::zeros(n, 0));
            let w = append_col(old_w.as_ref(), aq.as_ref());
            let mut h = Mat::<C64>::zeros(k + 1, k + 1);
            for c in 0..k {
                for r in 0..k {
                    h[(r, c)] = self.h[i][(r, c)];
                }
            }
            // new column V^* A q and new row q^* A V
            let col = self.v.adjoint() * &aq;
            for r in 0..=k {
                h[(r, k)] = col[r];
            }
            for c in 0..k {
                h[(k, c)] = dot(q.as_ref(), w.col(c));
            }
            self.w[i] = w;
            self.h[i] = h;
        }
    }

    /// Replaces `V` by `V Y` for `Y` with orthonormal columns.
    pub fn restart(&mut self, y: MatRef<'_, C64>) {
        self.v = &self.v * y;
        for i in 0..self.w.len() {
            self.w[i] = &self.w[i] * y;
            self.h[i] = y.adjoint() * &self.h[i] * y;
        }
    }

    /// `‖V^*V − I‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        crate::dense::orthonormality_error(self.v.as_ref())
    }
}

fn append_col(a: MatRef<'_, C64>, c: ColRef<'_, C64>) -> Mat<C64> {
    let k = a.ncols();
    Mat::from_fn(a.nrows(), k + 1, |i, j| if j < k { a[(i, j)] } else { c[i] })
}

/// Repeated Gram–Schmidt: two classical passes against `V`, then
/// normalization. If `t` collapses (norm below `1e-12 ‖t‖`, or zero) a seeded
/// random vector is orthogonalized instead.
fn rgs_vector(v: MatRef<'_, C64>, t: ColRef<'_, C64>, rng: &mut ChaCha8Rng) -> Col<C64> {
    let n = v.nrows();
    let orth = |x: &mut Col<C64>| {
        for _ in 0..2 {
            let c = v.adjoint() * &*x;
            *x -= v * &c;
        }
    };
    let t0 = norm(t);
    if t0.is_finite() && t0 > 0.0 {
        let mut x = t.to_owned();
        orth(&mut x);
        let nx = norm(x.as_ref());
        if nx > 1e-12 * t0 {
            normalize(&mut x);
            return x;
        }
    }
    for _ in 0..10 {
        let mut x = random_col(n, rng);
        let r0 = norm(x.as_ref());
        orth(&mut x);
        if norm(x.as_ref()) > 1e-6 * r0 {
            // one more pass for safety after the large cancellation
            orth(&mut x);
            normalize(&mut x);
            return x;
        }
    }
    panic!("cannot extend a basis that already spans the whole space");
}

/// Extends an orthonormal basis `V` by the normalized component of `t`
/// orthogonal to it.
pub fn rgs(v: MatRef<'_, C64>, t: ColRef<'_, C64>, seed: u64) -> Mat<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = rgs_vector(v, t, &mut rng);
    append_col(v, q.as_ref())
}

/// A Ritz pair of the projected problem: value and coefficient vector `c`
/// (unit norm) so that the Ritz vector is `V c`.
#[derive(Clone, Debug)]
pub struct RitzCandidate {
    pub theta: EigenValue,
    pub c: Col<C64>,
}

/// Solves the projected problem `Σ θ^i H_i c = 0` through its companion
/// linearization and orders the Ritz pairs by distance to the target.
///
/// In standard mode infinite values are dropped and the order is `|θ − τ|`;
/// in homogeneous mode everything is kept and ordered by chordal distance to
/// `τ`.
pub fn extract_candidates(h: &[Mat<C64>], target: C64, mode: SelectionMode) -> Result<Vec<RitzCandidate>> {
    let k = h[0].nrows();
    if k == 0 {
        return Ok(Vec::new());
    }
    let m = h.len() - 1;
    let proj = PolyProblem::from_dense(h.to_vec())?;
    let (x, y) = companion_pencil(&proj);
    let minus_y = Mat::from_fn(y.nrows(), y.ncols(), |i, j| -y[(i, j)]);
    let gev = generalized_eigen(minus_y.as_ref(), x.as_ref())?;
    let tp = ProjectivePoint::from_scalar(target);
    let mut out: Vec<(f64, RitzCandidate)> = Vec::with_capacity(gev.alpha.len());
    for (idx, (&a, &b)) in gev.alpha.iter().zip(&gev.beta).enumerate() {
        let Ok(p) = ProjectivePoint::new(a, b) else { continue };
        let p = p.scale_canonical();
        let z = gev.vectors.col(idx);
        let blk = (0..m)
            .max_by(|&i, &j| z.subrows(i * k, k).norm_l2().total_cmp(&z.subrows(j * k, k).norm_l2()))
            .unwrap_or(0);
        let mut c = z.subrows(blk * k, k).to_owned();
        if normalize(&mut c) == 0.0 || !norm(c.as_ref()).is_finite() {
            continue;
        }
        match mode {
            SelectionMode::Standard => {
                if let ExtendedScalar::Finite(th) = p.to_scalar() {
                    if th.is_finite() && p.beta().norm() > 1e-14 {
                        out.push(((th - target).norm(), RitzCandidate { theta: EigenValue::Scalar(th), c }));
                    }
                }
            }
            SelectionMode::Homogeneous => {
                out.push((p.chordal_distance(&tp), RitzCandidate { theta: EigenValue::Projective(p), c }));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out.into_iter().map(|(_, c)| c).collect())
}

/// One-dimensional Galerkin value: the root of `Σ θ^i (v^* A_i v)` with the
/// smallest residual `‖P(θ) v‖`, ties broken by distance to `τ`. Returns
/// `None` when the scalar polynomial vanishes.
pub fn gal1_refine(problem: &PolyProblem, v: ColRef<'_, C64>, tau: C64) -> Option<C64> {
    let av: Vec<Col<C64>> = problem.coeffs().iter().map(|a| a.apply(v)).collect();
    gal1_from_products(&av, v, tau)
}

fn gal1_from_products(av: &[Col<C64>], v: ColRef<'_, C64>, tau: C64) -> Option<C64> {
    let coeffs: Vec<C64> = av.iter().map(|a| dot(v, a.as_ref())).collect();
    let roots = polynomial_roots(&coeffs).ok()?;
    let residual = |th: C64| {
        let mut r = Col::<C64>::zeros(v.nrows());
        let mut p = C64::from(1.0);
        for a in av {
            crate::dense::axpy(&mut r, p, a.as_ref());
            p *= th;
        }
        norm(r.as_ref())
    };
    roots
        .into_iter()
        .filter(|z| z.is_finite())
        .map(|z| (residual(z), (z - tau).norm(), z))
        .min_by(|a, b| {
            let scale = a.0.max(b.0).max(f64::MIN_POSITIVE);
            if (a.0 - b.0).abs() <= 1e-12 * scale {
                a.1.total_cmp(&b.1)
            } else {
                a.0.total_cmp(&b.0)
            }
        })
        .map(|t| t.2)
}

/// Weights `w_i` with `P(θ) = Σ w_i A_i` in the given representation.
fn value_weights(problem: &PolyProblem, theta: &EigenValue) -> Vec<C64> {
    match theta {
        EigenValue::Scalar(z) => problem.eval_weights(*z),
        EigenValue::Projective(p) => hom_weights(problem.degree(), p),
    }
}

fn residual_scale(problem: &PolyProblem, w: &[C64]) -> f64 {
    problem.norms1().iter().zip(w).map(|(a, wi)| a * wi.norm()).sum::<f64>().max(f64::MIN_POSITIVE)
}

struct Evaluated {
    cand: CandidatePair,
    c: Col<C64>,
    r: Col<C64>,
    rel_res: f64,
    criterion: f64,
    passed: bool,
}

/// Jacobi–Davidson with selection for `P(λ) x = 0`.
///
/// Returns the detected triplets (at most `num_pairs`) and the convergence
/// history. Running out of outer iterations is not an error; the outcome is
/// flagged as truncated instead.
pub fn jd_solve(problem: &PolyProblem, opts: &JDOptions) -> Result<JdOutcome> {
    let n = problem.dim();
    opts.validate(n)?;
    let cfg = SelectionConfig::new(opts.eta_sel, opts.mode)?;
    let mut registry = Registry::new(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut rejected: Vec<EigenValue> = Vec::new();

    let precond = if opts.precondition { target_preconditioner(problem, opts.target, &mut warnings) } else { None };
    let m_ref: Option<&dyn Preconditioner> = precond.as_ref().map(|p| p as &dyn Preconditioner);

    let mut space = SearchSpace::new(n, problem.degree());
    let start = opts.start.clone().unwrap_or_else(|| random_col(n, &mut rng));
    space.expand(problem, start.as_ref(), &mut rng);

    let mut iterations = 0;
    'outer: for iter in 1..=opts.max_outer {
        iterations = iter;
        let cands = extract_candidates(space.projections(), opts.target, opts.mode)?;
        if cands.is_empty() {
            let t = random_col(n, &mut rng);
            if space.dim() >= opts.maxdim {
                let keep = Mat::<C64>::identity(space.dim(), opts.mindim);
                space.restart(keep.as_ref());
            }
            space.expand(problem, t.as_ref(), &mut rng);
            continue;
        }

        // Selection, with possibly several convergences in one iteration.
        let mut taken = vec![false; cands.len()];
        let chosen = loop {
            let mut first_pass: Option<(usize, Evaluated)> = None;
            let mut best: Option<(usize, Evaluated)> = None;
            for (idx, rc) in cands.iter().enumerate() {
                if taken[idx] || rejected.iter().any(|r| r.same_as(&rc.theta, 1e-6)) {
                    continue;
                }
                let ev = evaluate(problem, &space, &registry, rc, opts);
                // A converged duplicate yields a zero correction, so the
                // fallback skips it.
                if best.is_none() && ev.rel_res > opts.tol {
                    best = Some((idx, ev.clone_shallow()));
                }
                if ev.passed {
                    first_pass = Some((idx, ev));
                    break;
                }
            }
            let Some((idx, ev)) = first_pass.or(best) else {
                break None;
            };
            if ev.passed && ev.rel_res <= opts.tol && fresh_residual_ok(problem, &ev, opts.tol) {
                taken[idx] = true;
                let duplicate = registry.triplets().iter().any(|t| t.value.same_as(&ev.cand.theta, DUPLICATE_TOL));
                let outcome = if duplicate {
                    Err("coincides with a registered eigenvalue (multiple or defective)".to_string())
                } else {
                    register_pair(problem, &mut registry, &ev, opts, iter).map_err(|e| e.to_string())
                };
                match outcome {
                    Ok(()) => {
                        records.push(record(iter, &ev, Event::Converged));
                        if registry.len() >= opts.num_pairs {
                            break 'outer;
                        }
                    }
                    Err(e) => {
                        warnings.push(format!("iteration {iter}: rejected {:?}: {e}", ev.cand.theta.to_extended()));
                        records.push(record(iter, &ev, Event::Rejected));
                        rejected.push(ev.cand.theta);
                    }
                }
                continue;
            }
            break Some(ev);
        };
        let Some(ev) = chosen else {
            // everything converged or rejected; enrich the space
            let t = random_col(n, &mut rng);
            restart_if_full(&mut space, &cands, &taken, opts, &[], &mut records, iter);
            space.expand(problem, t.as_ref(), &mut rng);
            continue;
        };
        records.push(record(iter, &ev, if ev.passed { Event::Expanded } else { Event::NoPass }));

        let v = ev.cand.v.clone();
        let t = correction(problem, &ev, m_ref, opts.inner_steps);

        if space.dim() >= opts.maxdim {
            let passing = passing_flags(problem, &space, &registry, &cands);
            restart_if_full(&mut space, &cands, &taken, opts, &passing, &mut records, iter);
            // the selected vector must survive the restart
            let vc = space.basis().adjoint() * &v;
            let lost = (norm(v.as_ref()).powi(2) - norm(vc.as_ref()).powi(2)).max(0.0).sqrt();
            if lost > 1e-8 {
                space.expand(problem, v.as_ref(), &mut rng);
            }
        }
        if space.dim() >= opts.maxdim {
            let keep = Mat::<C64>::identity(space.dim(), opts.maxdim - 1);
            space.restart(keep.as_ref());
        }
        space.expand(problem, t.as_ref(), &mut rng);
    }

    let triplets = registry.into_triplets();
    Ok(JdOutcome { truncated: triplets.len() < opts.num_pairs, triplets, records, iterations, warnings })
}

impl Evaluated {
    fn clone_shallow(&self) -> Self {
        Self {
            cand: self.cand.clone(),
            c: self.c.clone(),
            r: self.r.clone(),
            rel_res: self.rel_res,
            criterion: self.criterion,
            passed: self.passed,
        }
    }
}

fn record(iter: usize, ev: &Evaluated, event: Event) -> ConvergenceRecord {
    ConvergenceRecord {
        iteration: iter,
        theta: ev.cand.theta.to_extended(),
        residual: ev.rel_res,
        criterion: ev.criterion,
        event,
    }
}

fn target_preconditioner(
    problem: &PolyProblem,
    tau: C64,
    warnings: &mut Vec<String>,
) -> Option<crate::linsolve::LuPreconditioner> {
    for shift in [0.0, 1e-8, 1e-6] {
        let t = tau + C64::from(shift * tau.norm().max(1.0));
        match lu_of_combination(problem, &problem.eval_weights(t)) {
            Ok(lu) => {
                if shift > 0.0 {
                    warnings.push(format!("P(τ) is singular; preconditioning at τ shifted by {shift:e}"));
                }
                return Some(lu);
            }
            Err(_) => continue,
        }
    }
    warnings.push("P(τ) is singular; running without preconditioner".into());
    None
}

fn evaluate(
    problem: &PolyProblem,
    space: &SearchSpace,
    registry: &Registry,
    rc: &RitzCandidate,
    opts: &JDOptions,
) -> Evaluated {
    let v = space.basis() * &rc.c;
    let mut theta = rc.theta;
    if opts.extraction == Extraction::Gal1 {
        if let Some(th) = theta.scalar() {
            let av: Vec<Col<C64>> = space.products().iter().map(|w| w * &rc.c).collect();
            if let Some(z) = gal1_from_products(&av, v.as_ref(), th) {
                theta = match opts.mode {
                    SelectionMode::Standard => EigenValue::Scalar(z),
                    SelectionMode::Homogeneous => EigenValue::Projective(ProjectivePoint::from_scalar(z)),
                };
            }
        }
    }
    let w = value_weights(problem, &theta);
    let mut r = Col::<C64>::zeros(problem.dim());
    for (wi, wmat) in w.iter().zip(space.products()) {
        let col = wmat * &rc.c;
        crate::dense::axpy(&mut r, *wi, col.as_ref());
    }
    let rel_res = norm(r.as_ref()) / residual_scale(problem, &w);
    let cand = CandidatePair::new(theta, v);
    let criterion = registry.criterion_value(problem, &cand);
    let passed = criterion < registry.config().eta_sel;
    Evaluated { cand, c: rc.c.clone(), r, rel_res, criterion, passed }
}

fn fresh_residual_ok(problem: &PolyProblem, ev: &Evaluated, tol: f64) -> bool {
    let w = value_weights(problem, &ev.cand.theta);
    let r = problem.combination_apply(&w, ev.cand.v.as_ref());
    norm(r.as_ref()) <= tol * residual_scale(problem, &w)
}

fn register_pair(
    problem: &PolyProblem,
    registry: &mut Registry,
    ev: &Evaluated,
    opts: &JDOptions,
    iter: usize,
) -> Result<()> {
    // The left residual can only be as small as the right one allows.
    let left_tol = 10.0 * opts.tol;
    let seed = opts.seed.wrapping_add(iter as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let y = match ev.cand.theta {
        EigenValue::Scalar(z) => left_eigenvector(problem, z, left_tol, None, seed)?,
        EigenValue::Projective(p) => left_eigenvector_projective(problem, &p, left_tol, seed)?,
    };
    registry.register(problem, ev.cand.theta, ev.cand.v.clone(), y, ev.rel_res, iter)?;
    Ok(())
}

fn correction(problem: &PolyProblem, ev: &Evaluated, m: Option<&dyn Preconditioner>, steps: usize) -> Col<C64> {
    let v = ev.cand.v.as_ref();
    let (w, dw) = match ev.cand.theta {
        EigenValue::Scalar(z) => (problem.eval_weights(z), problem.derivative_weights(z)),
        EigenValue::Projective(p) => (hom_weights(problem.degree(), &p), hom_d_weights(problem.degree(), &p)),
    };
    let p = problem.combination_apply(&dw, v);
    projected_correction_solve(&|z| problem.combination_apply(&w, z), p.as_ref(), v, ev.r.as_ref(), steps, m)
}

fn passing_flags(problem: &PolyProblem, space: &SearchSpace, registry: &Registry, cands: &[RitzCandidate]) -> Vec<bool> {
    cands
        .iter()
        .map(|rc| {
            let v = space.basis() * &rc.c;
            registry.passes(problem, &CandidatePair::new(rc.theta, v))
        })
        .collect()
}

/// Restarts a full search space with `mindim` Ritz vectors: passing
/// candidates first (in target order), then non-passing ones.
fn restart_if_full(
    space: &mut SearchSpace,
    cands: &[RitzCandidate],
    taken: &[bool],
    opts: &JDOptions,
    passing: &[bool],
    records: &mut Vec<ConvergenceRecord>,
    iter: usize,
) {
    if space.dim() < opts.maxdim {
        return;
    }
    let k = space.dim();
    let is_passing = |i: usize| passing.get(i).copied().unwrap_or(false) && !taken[i];
    let order: Vec<usize> = (0..cands.len()).filter(|&i| is_passing(i)).chain((0..cands.len()).filter(|&i| !is_passing(i))).collect();
    let mut y = Mat::<C64>::zeros(k, 0);
    for &i in &order {
        if y.ncols() >= opts.mindim {
            break;
        }
        let mut c = cands[i].c.clone();
        for _ in 0..2 {
            let proj = y.adjoint() * &c;
            c -= &y * &proj;
        }
        if normalize(&mut c) > 1e-8 {
            y = append_col(y.as_ref(), c.as_ref());
        }
    }
    // top up with coordinate directions if the Ritz vectors were dependent
    let mut e = 0;
    while y.ncols() < opts.mindim && e < k {
        let mut c = Col::from_fn(k, |i| if i == e { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        for _ in 0..2 {
            let proj = y.adjoint() * &c;
            c -= &y * &proj;
        }
        if normalize(&mut c) > 1e-8 {
            y = append_col(y.as_ref(), c.as_ref());
        }
        e += 1;
    }
    space.restart(y.as_ref());
    records.push(ConvergenceRecord {
        iteration: iter,
        theta: cands.first().map(|c| c.theta.to_extended()).unwrap_or(ExtendedScalar::Infinite),
        residual: f64::NAN,
        criterion: f64::NAN,
        event: Event::Restarted,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{random_mat, random_unit};
    use crate::problems::{gen_diagonal_qep, gen_random_pep};

    #[test]
    fn rgs_examples() {
        let e1 = Col::from_fn(3, |i| if i == 0 { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        let v = rgs(Mat::<C64>::zeros(3, 0).as_ref(), e1.as_ref(), 0);
        assert_eq!(v.ncols(), 1);
        assert!((v[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
        let t = Col::from_fn(3, |i| if i < 2 { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        let v2 = rgs(v.as_ref(), t.as_ref(), 0);
        assert!((v2[(1, 1)] - c64(1.0, 0.0)).norm() < 1e-15);
        // collapse: t already in span → random replacement, still orthonormal
        let v3 = rgs(v2.as_ref(), t.as_ref(), 0);
        assert!(crate::dense::orthonormality_error(v3.as_ref()) < 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = random_mat(30, 10, &mut rng).qr().compute_thin_Q();
        let t = random_col(30, &mut rng);
        let vn = rgs(q.as_ref(), t.as_ref(), 1);
        assert!(crate::dense::orthonormality_error(vn.as_ref()) <= 1e-13);
    }

    #[test]
    fn full_space_extraction_is_exact() {
        let q = gen_diagonal_qep(&[-3.0, -7.0], &[2.0, 12.0]).unwrap();
        let mut space = SearchSpace::new(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        space.expand(&q, random_col(2, &mut rng).as_ref(), &mut rng);
        space.expand(&q, random_col(2, &mut rng).as_ref(), &mut rng);
        let c = extract_candidates(space.projections(), c64(0.0, 0.0), SelectionMode::Standard).unwrap();
        let vals: Vec<f64> = c.iter().map(|r| r.theta.scalar().unwrap().re).collect();
        for (v, e) in vals.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((v - e).abs() < 1e-12, "{vals:?}");
        }
    }

    #[test]
    fn one_dimensional_projection_gives_scalar_roots() {
        let q = gen_random_pep(6, 2, 2, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_unit(6, &mut rng);
        let mut space = SearchSpace::new(6, 2);
        space.expand(&q, v.as_ref(), &mut rng);
        let c = extract_candidates(space.projections(), c64(0.0, 0.0), SelectionMode::Standard).unwrap();
        let coeffs: Vec<C64> = q.coeffs().iter().map(|a| dot(v.as_ref(), a.apply(v.as_ref()).as_ref())).collect();
        for rc in &c {
            let th = rc.theta.scalar().unwrap();
            let val = coeffs[0] + th * coeffs[1] + th * th * coeffs[2];
            assert!(val.norm() < 1e-10 * (1.0 + th.norm_sqr()));
        }
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn cached_products_stay_consistent() {
        let q = gen_random_pep(15, 3, 3, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut space = SearchSpace::new(15, 3);
        for _ in 0..6 {
            space.expand(&q, random_col(15, &mut rng).as_ref(), &mut rng);
        }
        let y = random_mat(6, 3, &mut rng).qr().compute_thin_Q();
        space.restart(y.as_ref());
        assert!(space.orthonormality_error() < 1e-12);
        for (i, a) in q.coeffs().iter().enumerate() {
            let v = space.basis();
            let w = a.to_dense() * v;
            assert!((&w - &space.products()[i]).norm_l2() < 1e-12);
            assert!((v.adjoint() * &w - &space.projections()[i]).norm_l2() < 1e-12);
        }
    }

    #[test]
    fn gal1_examples() {
        let q = gen_diagonal_qep(&[-3.0, -7.0], &[2.0, 12.0]).unwrap();
        let e1 = Col::from_fn(2, |i| if i == 0 { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        let th = gal1_refine(&q, e1.as_ref(), c64(0.0, 0.0)).unwrap();
        assert!((th - c64(1.0, 0.0)).norm() < 1e-12);
        let th = gal1_refine(&q, e1.as_ref(), c64(5.0, 0.0)).unwrap();
        assert!((th - c64(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_qep_finds_all_four() {
        let q = gen_diagonal_qep(&[-3.0, -7.0], &[2.0, 12.0]).unwrap();
        let opts = JDOptions { num_pairs: 4, tol: 1e-10, mindim: 1, maxdim: 2, max_outer: 50, ..Default::default() };
        let out = jd_solve(&q, &opts).unwrap();
        assert!(!out.truncated, "{:?}", out.warnings);
        let mut vals: Vec<f64> = out.triplets.iter().map(|t| t.value.scalar().unwrap().re).collect();
        vals.sort_by(f64::total_cmp);
        for (v, e) in vals.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((v - e).abs() < 1e-8);
        }
    }

    #[test]
    fn options_are_validated() {
        let q = gen_diagonal_qep(&[-3.0, -7.0], &[2.0, 12.0]).unwrap();
        let bad = JDOptions { mindim: 2, maxdim: 2, ..Default::default() };
        assert!(jd_solve(&q, &bad).is_err());
        let bad = JDOptions { mindim: 1, maxdim: 2, eta_sel: 1.5, ..Default::default() };
        assert!(jd_solve(&q, &bad).is_err());
        assert_eq!("gal1".parse::<Extraction>().unwrap(), Extraction::Gal1);
        let csv = records_to_csv(&[ConvergenceRecord {
            iteration: 3,
            theta: ExtendedScalar::Infinite,
            residual: 1e-3,
            criterion: 0.0,
            event: Event::NoPass,
        }]);
        assert_eq!(csv.lines().nth(1).unwrap(), "3,inf,0,1e-3,0e0,no-pass");
    }
}
