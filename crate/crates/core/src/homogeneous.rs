//! Eigenvalues as projective points `(α, β)` with `λ = α / β`.
//!
//! Working projectively lets finite and infinite eigenvalues share one
//! selection criterion. The divided difference becomes
//!
//! ```text
//! P[(α₁,β₁),(α₂,β₂)] = (P(α₁,β₁) - P(α₂,β₂)) / (α₁β₂ - α₂β₁)
//! ```
//!
//! whose denominator is, up to phase, the chordal distance of the two points.
//! For this quotient to tend to `DP(α₁, β₁)` the second point has to be scaled
//! consistently with the first one, which is what [`ProjectivePoint::align`]
//! does.

use faer::{Col, ColRef, Mat};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dense::{c64, C64};
use crate::error::{Error, Result};
use crate::problems::PolyProblem;

/// Chordal distance below which the homogeneous divided difference switches
/// to `DP`.
pub const SWITCH_TOL: f64 = 1e-8;

/// `|β|` below which a point is reported as the infinite eigenvalue.
pub const INFINITY_TOL: f64 = 1e-14;

/// A scalar eigenvalue that may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedScalar {
    Finite(C64),
    Infinite,
}

impl ExtendedScalar {
    pub fn finite(self) -> Option<C64> {
        match self {
            Self::Finite(z) => Some(z),
            Self::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Self::Infinite)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExtendedRepr {
    Finite([f64; 2]),
    Infinite { inf: bool },
}

impl Serialize for ExtendedScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(z) => ExtendedRepr::Finite([z.re, z.im]),
            Self::Infinite => ExtendedRepr::Infinite { inf: true },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExtendedScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ExtendedRepr::deserialize(d)? {
            ExtendedRepr::Finite([re, im]) => Ok(Self::Finite(c64(re, im))),
            ExtendedRepr::Infinite { inf: true } => Ok(Self::Infinite),
            ExtendedRepr::Infinite { inf: false } => {
                Err(serde::de::Error::custom("{\"inf\": false} is not a valid eigenvalue"))
            }
        }
    }
}

/// Normalized homogeneous coordinates, `|α|² + |β|² = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectivePoint {
    alpha: C64,
    beta: C64,
}

#[derive(Serialize, Deserialize)]
struct PointRepr {
    alpha: [f64; 2],
    beta: [f64; 2],
}

impl Serialize for ProjectivePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PointRepr { alpha: [self.alpha.re, self.alpha.im], beta: [self.beta.re, self.beta.im] }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProjectivePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PointRepr::deserialize(d)?;
        Self::new(c64(r.alpha[0], r.alpha[1]), c64(r.beta[0], r.beta[1])).map_err(serde::de::Error::custom)
    }
}

impl ProjectivePoint {
    /// Normalizes `(α, β)` to unit length without changing its phase.
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let nrm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::Degenerate("(0, 0) is not a projective point".into()));
        }
        Ok(Self { alpha: alpha / nrm, beta: beta / nrm })
    }

    /// `(λ, 1)/sqrt(1+|λ|²)`, canonically scaled.
    pub fn from_scalar(lambda: C64) -> Self {
        if !lambda.is_finite() {
            return Self::infinity();
        }
        let p = if lambda.norm() <= 1.0 {
            Self::new(lambda, C64::from(1.0))
        } else {
            // Same point, but avoids overflow in 1 + |λ|² for huge λ.
            Self::new(C64::from(1.0), lambda.inv())
        };
        p.expect("(λ, 1) is never zero").scale_canonical()
    }

    pub fn from_extended(z: ExtendedScalar) -> Self {
        match z {
            ExtendedScalar::Finite(l) => Self::from_scalar(l),
            ExtendedScalar::Infinite => Self::infinity(),
        }
    }

    pub fn infinity() -> Self {
        Self { alpha: C64::from(1.0), beta: C64::from(0.0) }
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    fn rotate(&self, u: C64) -> Self {
        Self { alpha: self.alpha * u, beta: self.beta * u }
    }

    /// `true` when `α` is the coordinate of maximal modulus (ties go to `β`).
    fn alpha_dominates(&self) -> bool {
        self.alpha.norm() > self.beta.norm()
    }

    /// Rotates by a unit scalar so that the coordinate of maximal modulus is
    /// real and nonnegative.
    pub fn scale_canonical(&self) -> Self {
        let d = if self.alpha_dominates() { self.alpha } else { self.beta };
        self.rotate(d.conj() / d.norm())
    }

    /// Rotates by a unit scalar so that the representative is as close as
    /// possible to `reference`, i.e. `⟨reference, self⟩` is real and
    /// nonnegative. Points orthogonal to `reference` fall back to making the
    /// coordinate that dominates in `reference` real.
    ///
    /// Any other phase choice leaves a term proportional to `P(reference)`
    /// in the divided difference, which then does not tend to `DP`.
    pub fn align(&self, reference: &ProjectivePoint) -> Self {
        let ip = reference.alpha.conj() * self.alpha + reference.beta.conj() * self.beta;
        let d = if ip.norm() > 1e-14 {
            ip
        } else if reference.alpha_dominates() {
            self.alpha
        } else {
            self.beta
        };
        if d.norm() == 0.0 {
            return *self;
        }
        self.rotate(d.conj() / d.norm())
    }

    /// `|α₁β₂ − α₂β₁|`, the sine of the angle between the two points.
    pub fn chordal_distance(&self, other: &ProjectivePoint) -> f64 {
        (self.alpha * other.beta - other.alpha * self.beta).norm()
    }

    pub fn is_infinite(&self) -> bool {
        self.beta.norm() < INFINITY_TOL
    }

    pub fn to_scalar(&self) -> ExtendedScalar {
        if self.is_infinite() {
            ExtendedScalar::Infinite
        } else {
            ExtendedScalar::Finite(self.alpha / self.beta)
        }
    }
}

/// Integer power with `z^0 = 1` also for `z = 0`.
fn ipow(z: C64, k: usize) -> C64 {
    let mut p = C64::from(1.0);
    for _ in 0..k {
        p *= z;
    }
    p
}

/// Weights `α^i β^(m-i)` of `P(α, β) = Σ α^i β^(m-i) A_i`.
pub fn hom_weights(m: usize, p: &ProjectivePoint) -> Vec<C64> {
    (0..=m).map(|i| ipow(p.alpha, i) * ipow(p.beta, m - i)).collect()
}

/// Weights of `DP(α, β) = conj(β) D_α P − conj(α) D_β P`.
pub fn hom_d_weights(m: usize, p: &ProjectivePoint) -> Vec<C64> {
    let (a, b) = (p.alpha, p.beta);
    (0..=m)
        .map(|i| {
            let da = if i > 0 { ipow(a, i - 1) * ipow(b, m - i) * i as f64 } else { C64::from(0.0) };
            let db = if i < m { ipow(a, i) * ipow(b, m - i - 1) * (m - i) as f64 } else { C64::from(0.0) };
            b.conj() * da - a.conj() * db
        })
        .collect()
}

/// Weights of the homogeneous divided difference. `q` is aligned to `p`
/// before use; coincident points (chordal distance at most `switch_tol`) give
/// the weights of `DP(p)`.
pub fn hom_divided_difference_weights(
    m: usize,
    p: &ProjectivePoint,
    q: &ProjectivePoint,
    switch_tol: f64,
) -> Vec<C64> {
    let p = p.scale_canonical();
    let q = q.align(&p);
    let det = p.alpha * q.beta - q.alpha * p.beta;
    if det.norm() <= switch_tol {
        return hom_d_weights(m, &p);
    }
    hom_weights(m, &p)
        .into_iter()
        .zip(hom_weights(m, &q))
        .map(|(wp, wq)| (wp - wq) / det)
        .collect()
}

pub fn hom_eval(problem: &PolyProblem, p: &ProjectivePoint) -> Mat<C64> {
    problem.combination(&hom_weights(problem.degree(), p))
}

pub fn hom_eval_apply(problem: &PolyProblem, p: &ProjectivePoint, x: ColRef<'_, C64>) -> Col<C64> {
    problem.combination_apply(&hom_weights(problem.degree(), p), x)
}

pub fn hom_d(problem: &PolyProblem, p: &ProjectivePoint) -> Mat<C64> {
    problem.combination(&hom_d_weights(problem.degree(), p))
}

pub fn hom_d_apply(problem: &PolyProblem, p: &ProjectivePoint, x: ColRef<'_, C64>) -> Col<C64> {
    problem.combination_apply(&hom_d_weights(problem.degree(), p), x)
}

/// `P[p, q]` in homogeneous coordinates with the default switch tolerance.
pub fn hom_divided_difference(problem: &PolyProblem, p: &ProjectivePoint, q: &ProjectivePoint) -> Mat<C64> {
    problem.combination(&hom_divided_difference_weights(problem.degree(), p, q, SWITCH_TOL))
}

pub fn hom_divided_difference_apply(
    problem: &PolyProblem,
    p: &ProjectivePoint,
    q: &ProjectivePoint,
    x: ColRef<'_, C64>,
) -> Col<C64> {
    problem.combination_apply(&hom_divided_difference_weights(problem.degree(), p, q, SWITCH_TOL), x)
}

/// Coefficients `(c₁, c₂)` with `Q(p) − Q(q) = c₁ D₁ + c₂ D₂` for a QEP,
/// where `D₁ = (α₁β₂+α₂β₁)A + β₁β₂B` is the standard-form piece and
/// `D₂ = α₁α₂B + (α₁β₂+α₂β₁)C` the reversed-form piece.
///
/// The points are used exactly as given (no rescaling).
pub fn mediator_decompose(p: &ProjectivePoint, q: &ProjectivePoint) -> Result<(C64, C64)> {
    let (a1, b1, a2, b2) = (p.alpha, p.beta, q.alpha, q.beta);
    let s = a1 * b2 + a2 * b1;
    if s.norm() <= 1e-14 {
        return Err(Error::Degenerate("α₁β₂ + α₂β₁ vanishes".into()));
    }
    Ok(((a1 * a1 - a2 * a2) / s, (b1 * b1 - b2 * b2) / s))
}

/// The matrices `(D₁, D₂)` of [`mediator_decompose`] for a QEP with
/// coefficients `[C, B, A]` (increasing degree).
pub fn mediator_parts(problem: &PolyProblem, p: &ProjectivePoint, q: &ProjectivePoint) -> Result<(Mat<C64>, Mat<C64>)> {
    if problem.degree() != 2 {
        return Err(Error::InvalidArgument("the mediator identity is stated for quadratic problems".into()));
    }
    let (a1, b1, a2, b2) = (p.alpha, p.beta, q.alpha, q.beta);
    let s = a1 * b2 + a2 * b1;
    let zero = C64::from(0.0);
    let d1 = problem.combination(&[zero, b1 * b2, s]);
    let d2 = problem.combination(&[s, a1 * a2, zero]);
    Ok((d1, d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::norm_fro;
    use crate::problems::{gen_random_pep, NonlinearProblem};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn from_scalar_examples() {
        let p = ProjectivePoint::from_scalar(c64(0.0, 0.0));
        assert!(close(p.alpha(), c64(0.0, 0.0), 1e-15) && close(p.beta(), c64(1.0, 0.0), 1e-15));
        let p = ProjectivePoint::from_scalar(c64(f64::INFINITY, 0.0));
        assert_eq!(p, ProjectivePoint::infinity());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let p = ProjectivePoint::from_scalar(c64(1.0, 0.0));
        assert!(close(p.alpha(), c64(h, 0.0), 1e-15) && close(p.beta(), c64(h, 0.0), 1e-15));
        let big = ProjectivePoint::from_scalar(c64(0.0, 1e200));
        assert!((big.alpha().norm_sqr() + big.beta().norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn canonical_scaling_and_alignment() {
        let p = ProjectivePoint::new(c64(0.0, 0.6), c64(0.8, 0.0)).unwrap().scale_canonical();
        assert!(close(p.alpha(), c64(0.0, 0.6), 1e-15) && close(p.beta(), c64(0.8, 0.0), 1e-15));

        let p = ProjectivePoint::new(c64(0.0, 0.8), c64(0.6, 0.0)).unwrap().scale_canonical();
        assert!(close(p.alpha(), c64(0.8, 0.0), 1e-15) && close(p.beta(), c64(0.0, -0.6), 1e-15));

        let inf = ProjectivePoint::infinity();
        for eps in [1e-2, 1e-4, 1e-8] {
            let q = ProjectivePoint::new(c64(0.0, 1.0), c64(eps, 0.0)).unwrap().align(&inf);
            assert!((q.alpha() - inf.alpha()).norm() <= 2.0 * eps);
            assert!((q.beta() - inf.beta()).norm() <= 2.0 * eps);
            assert!(q.chordal_distance(&ProjectivePoint::new(c64(0.0, 1.0), c64(eps, 0.0)).unwrap()) < 1e-15);
        }
        assert!(ProjectivePoint::new(c64(0.0, 0.0), c64(0.0, 0.0)).is_err());
    }

    #[test]
    fn chordal_distance_examples() {
        let inf = ProjectivePoint::infinity();
        let zero = ProjectivePoint::from_scalar(c64(0.0, 0.0));
        assert!((inf.chordal_distance(&zero) - 1.0).abs() < 1e-15);
        assert_eq!(zero.chordal_distance(&zero), 0.0);
        let p1 = ProjectivePoint::from_scalar(c64(1.0, 0.0));
        let p2 = ProjectivePoint::from_scalar(c64(2.0, 0.0));
        assert!((p1.chordal_distance(&p2) - 1.0 / 10f64.sqrt()).abs() < 1e-15);
        let rotated = ProjectivePoint::new(p2.alpha() * c64(0.0, 1.0), p2.beta() * c64(0.0, 1.0)).unwrap();
        assert!((p1.chordal_distance(&rotated) - p1.chordal_distance(&p2)).abs() < 1e-15);
    }

    #[test]
    fn hom_eval_and_d_at_the_poles() {
        let q = gen_random_pep(4, 2, 3, false).unwrap();
        let a = q.coeff(2).to_dense();
        let b = q.coeff(1).to_dense();
        let c = q.coeff(0).to_dense();
        let inf = ProjectivePoint::infinity();
        let zero = ProjectivePoint::from_scalar(c64(0.0, 0.0));
        assert!(norm_fro((hom_eval(&q, &inf) - &a).as_ref()) < 1e-15);
        assert!(norm_fro((hom_eval(&q, &zero) - &c).as_ref()) < 1e-15);
        assert!(norm_fro((hom_d(&q, &zero) - &b).as_ref()) < 1e-15);
        assert!(norm_fro((hom_d(&q, &inf) + &b).as_ref()) < 1e-15);
    }

    #[test]
    fn hom_eval_matches_scaled_polynomial() {
        for m in 1..=4 {
            let p = gen_random_pep(5, m, 10 + m as u64, false).unwrap();
            for lambda in [c64(0.3, -0.2), c64(-2.5, 1.0), c64(7.0, 0.0)] {
                let pt = ProjectivePoint::new(lambda, C64::from(1.0)).unwrap();
                let expect = p.eval(lambda) * faer::Scale(c64((1.0 + lambda.norm_sqr()).powf(-(m as f64) / 2.0), 0.0));
                let got = hom_eval(&p, &pt);
                assert!(norm_fro((&got - &expect).as_ref()) <= 1e-12 * norm_fro(expect.as_ref()));
            }
        }
    }

    #[test]
    fn divided_difference_at_coincident_points_is_d() {
        let q = gen_random_pep(4, 2, 5, false).unwrap();
        let p = ProjectivePoint::from_scalar(c64(0.4, 0.1));
        let dd = hom_divided_difference(&q, &p, &p);
        assert!(norm_fro((dd - hom_d(&q, &p)).as_ref()) < 1e-15);
    }

    #[test]
    fn divided_difference_tends_to_d_along_scalar_paths() {
        let q = gen_random_pep(4, 2, 8, false).unwrap();
        let lambda = c64(0.4, -1.3);
        let p = ProjectivePoint::from_scalar(lambda);
        let d = hom_d(&q, &p);
        let errs: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
            .iter()
            .map(|&h| {
                let r = ProjectivePoint::from_scalar(lambda + c64(h, h));
                norm_fro((hom_divided_difference(&q, &p, &r) - &d).as_ref())
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[1] / w[0] - 0.5).abs() < 0.05, "{errs:?}");
        }
    }

    #[test]
    fn divided_difference_is_invariant_under_rescaling_of_q() {
        let q = gen_random_pep(4, 3, 6, false).unwrap();
        let p = ProjectivePoint::from_scalar(c64(0.4, 0.1));
        let r = ProjectivePoint::from_scalar(c64(-1.5, 2.0));
        let r_rot = ProjectivePoint::new(r.alpha() * c64(0.6, 0.8), r.beta() * c64(0.6, 0.8)).unwrap();
        let d1 = hom_divided_difference(&q, &p, &r);
        let d2 = hom_divided_difference(&q, &p, &r_rot);
        assert!(norm_fro((&d1 - &d2).as_ref()) <= 1e-13 * norm_fro(d1.as_ref()));
    }

    #[test]
    fn mediator_examples() {
        let p = ProjectivePoint::from_scalar(c64(1.0, 0.0));
        let (c1, c2) = mediator_decompose(&p, &p).unwrap();
        assert!(c1.norm() < 1e-15 && c2.norm() < 1e-15);

        let p = ProjectivePoint::new(c64(0.6, 0.0), c64(0.8, 0.0)).unwrap();
        let swapped = ProjectivePoint::new(c64(0.8, 0.0), c64(0.6, 0.0)).unwrap();
        let (c1, c2) = mediator_decompose(&p, &swapped).unwrap();
        assert!(close(c1, -c2, 1e-15));

        let inf = ProjectivePoint::infinity();
        let zero = ProjectivePoint::from_scalar(c64(0.0, 0.0));
        assert!(mediator_decompose(&inf, &ProjectivePoint::new(c64(0.0, 1.0), c64(0.0, 0.0)).unwrap()).is_err());
        assert!(mediator_decompose(&inf, &zero).is_ok());
    }

    #[test]
    fn serde_formats() {
        let p = ProjectivePoint::new(c64(0.6, 0.0), c64(0.0, 0.8)).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"alpha":[0.6,0.0],"beta":[0.0,0.8]}"#);
        let back: ProjectivePoint = serde_json::from_str(&s).unwrap();
        assert!(back.chordal_distance(&p) < 1e-15);
        assert_eq!(serde_json::to_string(&ExtendedScalar::Infinite).unwrap(), r#"{"inf":true}"#);
        let z: ExtendedScalar = serde_json::from_str("[1.5,-2.0]").unwrap();
        assert_eq!(z, ExtendedScalar::Finite(c64(1.5, -2.0)));
        assert!(ProjectivePoint::infinity().to_scalar().is_infinite());
    }

    #[test]
    fn lemma_identity_on_a_scalar_problem() {
        // n = 1 eigenvalues are roots, so the identity holds exactly there
        let p = PolyProblem::from_dense(vec![
            Mat::from_fn(1, 1, |_, _| c64(2.0, 0.0)),
            Mat::from_fn(1, 1, |_, _| c64(-3.0, 0.0)),
            Mat::from_fn(1, 1, |_, _| c64(1.0, 0.0)),
        ])
        .unwrap();
        let x = Col::from_fn(1, |_| c64(1.0, 0.0));
        for lambda in [c64(1.0, 0.0), c64(2.0, 0.0)] {
            let lhs = p.derivative_apply(lambda, x.as_ref());
            let rhs = hom_d_apply(&p, &ProjectivePoint::new(lambda, C64::from(1.0)).unwrap(), x.as_ref());
            assert!((lhs[0] - rhs[0]).norm() < 1e-14);
        }
    }
}
